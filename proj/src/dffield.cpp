#include "dff/dffield.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dff {

void DfFieldConfig::validate() const {
    if (!(barrier_threshold > 0.0)) throw std::invalid_argument("barrier threshold must be > 0");
    if (!(query_radius > 0.0)) throw std::invalid_argument("query radius must be > 0");
    if (!(distance_floor > 0.0) || distance_floor >= barrier_threshold)
        throw std::invalid_argument("distance floor must be in (0, barrier threshold)");
}

double kappa(double force, double l, double floor) {
    if (force < 0.0) throw std::invalid_argument("kappa: force must be >= 0");
    if (!(floor > 0.0)) throw std::invalid_argument("kappa: floor must be > 0");
    return force / std::max(l, floor);
}

double relative_energy(double kappa, double l) { return kappa * l * l; }

double barrier_energy(double kappa, double l, double l_hat) {
    if (!(l > 0.0)) throw std::invalid_argument("barrier_energy: l must be > 0");
    if (!(l_hat > 0.0)) throw std::invalid_argument("barrier_energy: l_hat must be > 0");
    if (l >= l_hat) return 0.0;
    double gap = l - l_hat;
    return -std::exp(-kappa) * gap * gap * std::log(l / l_hat);
}

HandPoints pairing_points(const HandDescription& desc, const HandState& state,
                          const DfFieldConfig& cfg, int surface_density,
                          const SensorPoints* sensors) {
    HandPoints out;
    if (cfg.pair_mode == PairMode::Keypoints) {
        for (int r = 0; r < kNumRegions; ++r) {
            out.positions.push_back(state.region_keypoints[r]);
            out.regions.push_back(r);
            out.anchors.emplace_back(desc.regions[r].bone, desc.regions[r].offset_mm);
        }
        return out;
    }
    // All-surface mode: every capsule sample; the force region comes from
    // the nearest sensor, or the nearest region keypoint without a layout.
    out.anchors = surface_sample_anchors(desc, surface_density);
    std::optional<SpatialIndex> ref_index;
    std::vector<int> ref_regions;
    if (sensors && !sensors->positions.points.empty()) {
        ref_index.emplace(sensors->positions);
        ref_regions = sensors->regions;
    } else {
        PointCloud keypoints;
        for (int r = 0; r < kNumRegions; ++r) {
            keypoints.points.push_back(state.region_keypoints[r]);
            ref_regions.push_back(r);
        }
        ref_index.emplace(std::move(keypoints));
    }
    for (const auto& [bone, local] : out.anchors) {
        Vec3 p = state.world_point(bone, local);
        out.positions.push_back(p);
        out.regions.push_back(ref_regions[ref_index->nearest(p).first]);
    }
    return out;
}

std::vector<PointPair> establish_pairs(const HandPoints& hand, const SpatialIndex& object_index,
                                       const RegionForces& forces, const DfFieldConfig& cfg) {
    cfg.validate();
    if (object_index.size() == 0) throw std::invalid_argument("empty object index");
    std::vector<PointPair> pairs;
    for (std::size_t h = 0; h < hand.positions.size(); ++h) {
        int region = hand.regions[h];
        double force = forces.mean[region];
        for (int vi : object_index.ball_query(hand.positions[h], cfg.query_radius)) {
            double l = (object_index.points().points[vi] - hand.positions[h]).norm();
            pairs.push_back({region, vi, static_cast<int>(h), l,
                             kappa(force, l, cfg.distance_floor)});
        }
    }
    return pairs;
}

EnergyBreakdown total_energy(const std::vector<PointPair>& pairs, const DfFieldConfig& cfg,
                             bool include_relative, bool include_barrier) {
    cfg.validate();
    EnergyBreakdown out;
    out.per_pair.reserve(pairs.size());
    for (const auto& p : pairs) {
        double l = std::max(p.distance, cfg.distance_floor);
        double rel = include_relative ? relative_energy(p.kappa, l) : 0.0;
        double bar = include_barrier ? barrier_energy(p.kappa, l, cfg.barrier_threshold) : 0.0;
        out.relative += rel;
        out.barrier += bar;
        out.per_pair.emplace_back(rel, bar);
    }
    out.total = out.relative + out.barrier;
    return out;
}

std::vector<Vec3> energy_gradient(const std::vector<PointPair>& pairs, const HandPoints& hand,
                                  const SpatialIndex& object_index, const DfFieldConfig& cfg,
                                  bool include_relative, bool include_barrier) {
    cfg.validate();
    std::vector<Vec3> grad(hand.positions.size(), Vec3::Zero());
    const double l_hat = cfg.barrier_threshold;
    for (const auto& p : pairs) {
        const Vec3& k = hand.positions[p.hand_point];
        const Vec3& v = object_index.points().points[p.object_vertex];
        double l = (k - v).norm();
        if (l <= cfg.distance_floor) continue;  // clamped region is flat
        Vec3 dir = (k - v) / l;                 // dl/dK
        double dEdl = 0.0;
        if (include_relative) dEdl += 2.0 * p.kappa * l;
        if (include_barrier && l < l_hat) {
            double gap = l - l_hat;
            dEdl += -std::exp(-p.kappa) * (2.0 * gap * std::log(l / l_hat) + gap * gap / l);
        }
        grad[p.hand_point] += dir * dEdl;
    }
    return grad;
}

std::string energy_to_json(const EnergyBreakdown& e) {
    std::ostringstream out;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "{\"relative\": %.17g, \"barrier\": %.17g, \"total\": %.17g, \"pair_count\": %zu}",
                  e.relative, e.barrier, e.total, e.per_pair.size());
    out << buf;
    return out.str();
}

}  // namespace dff
