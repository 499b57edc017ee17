#include "dff/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace dff {

void OptimConfig::validate() const {
    if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be > 0");
    if (weight_energy < 0.0 || weight_lr < 0.0 || weight_lo < 0.0)
        throw std::invalid_argument("term weights must be >= 0");
    if (repair_every < 1) throw std::invalid_argument("repair_every must be >= 1");
    dffield.validate();
}

std::pair<double, std::array<double, 45>> regularizer_lr(const HandPose& pose,
                                                         const HandDescription& desc) {
    if (!pose.finite()) throw std::invalid_argument("non-finite pose");
    double value = 0.0;
    std::array<double, 45> grad{};
    constexpr double limit = std::numbers::pi / 2.0;
    for (int j = 0; j < kNumJointParams; ++j) {
        Vec3 r = pose.joint(j);
        const Vec3& t = desc.bones[j + 1].twist_axis;
        double twist = r.dot(t);
        value += twist * twist;
        Vec3 g = 2.0 * twist * t;
        double n = r.norm();
        if (n > limit) {
            double excess = n - limit;
            value += excess * excess;
            g += 2.0 * excess * r / n;
        }
        for (int i = 0; i < 3; ++i) grad[3 * j + i] = g[i];
    }
    return {value, grad};
}

std::pair<double, std::array<double, kPoseDim>> deviation_lo(const HandPose& pose,
                                                             const HandPose& initial) {
    if (!pose.finite() || !initial.finite()) throw std::invalid_argument("non-finite pose");
    double value = 0.0;
    std::array<double, kPoseDim> grad{};
    for (int i = 0; i < kPoseDim; ++i) {
        double d = pose.theta[i] - initial.theta[i];
        value += d * d;
        grad[i] = 2.0 * d;
    }
    return {value, grad};
}

std::vector<PointPair> refresh_pairs(std::vector<PointPair> pairs, const HandPoints& hand,
                                     const SpatialIndex& object_index) {
    for (auto& p : pairs)
        p.distance =
            (object_index.points().points[p.object_vertex] - hand.positions[p.hand_point]).norm();
    return pairs;
}

ObjectiveResult objective(const HandPose& pose, const HandPose& initial, const OptimScene& scene,
                          const OptimConfig& cfg, const std::vector<PointPair>* frozen_pairs) {
    cfg.validate();
    if (!scene.desc || !scene.object_index) throw std::invalid_argument("incomplete scene");

    ObjectiveResult out;
    const bool want_energy =
        cfg.weight_energy > 0.0 && !(cfg.disable_barrier && cfg.disable_relative);

    std::vector<int> all_params(kPoseDim);
    for (int i = 0; i < kPoseDim; ++i) all_params[i] = i;
    HandDerivatives derivs = evaluate_with_derivatives(*scene.desc, pose, all_params);

    if (want_energy) {
        SensorPoints sensors;
        const SensorPoints* sensors_ptr = nullptr;
        if (cfg.dffield.pair_mode == PairMode::AllSurfacePoints && scene.layout) {
            sensors = sensor_world_points(*scene.layout, derivs.state);
            sensors_ptr = &sensors;
        }
        HandPoints hand = pairing_points(*scene.desc, derivs.state, cfg.dffield,
                                         cfg.surface_density, sensors_ptr);
        std::vector<PointPair> pairs =
            frozen_pairs ? refresh_pairs(*frozen_pairs, hand, *scene.object_index)
                         : establish_pairs(hand, *scene.object_index, scene.forces, cfg.dffield);
        out.energy = total_energy(pairs, cfg.dffield, !cfg.disable_relative, !cfg.disable_barrier);
        out.pair_count = pairs.size();
        std::vector<Vec3> point_grad =
            energy_gradient(pairs, hand, *scene.object_index, cfg.dffield, !cfg.disable_relative,
                            !cfg.disable_barrier);
        for (int p = 0; p < kPoseDim; ++p) {
            double acc = 0.0;
            for (std::size_t h = 0; h < hand.positions.size(); ++h) {
                if (point_grad[h].isZero()) continue;
                acc += point_grad[h].dot(
                    derivs.point_derivative(p, hand.anchors[h].first, hand.anchors[h].second));
            }
            out.gradient[p] = cfg.weight_energy * acc;
        }
    }

    if (!cfg.disable_lr && cfg.weight_lr > 0.0) {
        auto [lr_value, lr_grad] = regularizer_lr(pose, *scene.desc);
        out.lr_value = lr_value;
        for (int i = 0; i < 45; ++i) out.gradient[6 + i] += cfg.weight_lr * lr_grad[i];
    }
    if (!cfg.disable_lo && cfg.weight_lo > 0.0) {
        auto [lo_value, lo_grad] = deviation_lo(pose, initial);
        out.lo_value = lo_value;
        for (int i = 0; i < kPoseDim; ++i) out.gradient[i] += cfg.weight_lo * lo_grad[i];
    }

    out.value = cfg.weight_energy * out.energy.total + cfg.weight_lr * out.lr_value +
                cfg.weight_lo * out.lo_value;
    if (!std::isfinite(out.value)) {
        const char* term = !std::isfinite(out.energy.total) ? "energy"
                           : !std::isfinite(out.lr_value)   ? "L_r"
                                                            : "L_o";
        throw std::runtime_error(std::string("non-finite objective term: ") + term);
    }
    return out;
}

OptimResult optimize(const HandPose& initial, const OptimScene& scene, const OptimConfig& cfg) {
    cfg.validate();
    if (!initial.finite()) throw std::invalid_argument("non-finite initial pose");

    auto t0 = std::chrono::steady_clock::now();
    OptimResult result;
    result.initial = initial;
    result.final = initial;

    std::array<double, kPoseDim> m{}, v{};
    HandPose pose = initial;
    std::vector<PointPair> pairs;
    bool have_pairs = false;

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        ObjectiveResult obj;
        try {
            bool repair = iter % cfg.repair_every == 0;
            obj = objective(pose, initial, scene, cfg, (!repair && have_pairs) ? &pairs : nullptr);
            if (repair) {
                // Keep the freshly established topology for the frozen steps.
                HandDerivatives derivs;
                HandState state = forward_kinematics(*scene.desc, pose);
                SensorPoints sensors;
                const SensorPoints* sensors_ptr = nullptr;
                if (cfg.dffield.pair_mode == PairMode::AllSurfacePoints && scene.layout) {
                    sensors = sensor_world_points(*scene.layout, state);
                    sensors_ptr = &sensors;
                }
                HandPoints hand =
                    pairing_points(*scene.desc, state, cfg.dffield, cfg.surface_density, sensors_ptr);
                pairs = establish_pairs(hand, *scene.object_index, scene.forces, cfg.dffield);
                have_pairs = true;
            }
        } catch (const std::runtime_error&) {
            result.status = OptimStatus::AbortedNan;
            break;
        }
        bool grad_finite = true;
        for (double g : obj.gradient) grad_finite = grad_finite && std::isfinite(g);
        if (!grad_finite) {
            result.status = OptimStatus::AbortedNan;
            break;
        }

        result.trace.push_back({iter, obj.energy.relative, obj.energy.barrier, obj.lr_value,
                                obj.lo_value, obj.value});
        result.final = pose;  // last finite pose

        double b1t = 1.0 - std::pow(cfg.adam_beta1, iter + 1);
        double b2t = 1.0 - std::pow(cfg.adam_beta2, iter + 1);
        for (int i = 0; i < kPoseDim; ++i) {
            m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * obj.gradient[i];
            v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * obj.gradient[i] * obj.gradient[i];
            pose.theta[i] -=
                cfg.learning_rate * (m[i] / b1t) / (std::sqrt(v[i] / b2t) + cfg.adam_epsilon);
        }
        if (pose.finite()) result.final = pose;
    }

    result.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                         .count();
    return result;
}

std::string result_to_json(const OptimResult& result, bool emit_timing) {
    std::ostringstream out;
    char buf[256];
    auto theta = [&](const HandPose& p) {
        std::string s = "[";
        for (int i = 0; i < kPoseDim; ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", p.theta[i]);
            s += buf;
            if (i + 1 < kPoseDim) s += ", ";
        }
        return s + "]";
    };
    out << "{\n  \"theta_init\": " << theta(result.initial) << ",\n";
    out << "  \"theta_final\": " << theta(result.final) << ",\n";
    out << "  \"status\": \""
        << (result.status == OptimStatus::Completed ? "completed" : "aborted_nan") << "\",\n";
    if (emit_timing) {
        std::snprintf(buf, sizeof buf, "  \"wall_ms\": %.3f,\n", result.wall_ms);
        out << buf;
    }
    out << "  \"trace\": [\n";
    for (std::size_t i = 0; i < result.trace.size(); ++i) {
        const TraceEntry& t = result.trace[i];
        std::snprintf(buf, sizeof buf,
                      "    {\"iter\": %d, \"E_rel\": %.17g, \"E_bar\": %.17g, \"Lr\": %.17g, "
                      "\"Lo\": %.17g, \"total\": %.17g}%s\n",
                      t.iter, t.e_relative, t.e_barrier, t.lr, t.lo, t.total,
                      i + 1 < result.trace.size() ? "," : "");
        out << buf;
    }
    out << "  ]\n}\n";
    return out.str();
}

}  // namespace dff
