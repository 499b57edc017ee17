// Force-aware hand-pose optimization: Adam over the 51 pose parameters,
// minimizing w_E*E + w_r*L_r + w_o*L_o with per-term ablation switches.

#pragma once

#include "dff/dffield.hpp"
#include "dff/geometry.hpp"
#include "dff/hand_model.hpp"
#include "dff/tactile.hpp"

#include <array>
#include <string>
#include <vector>

namespace dff {

struct OptimConfig {
    int iterations = 100;
    double learning_rate = 2e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    double weight_energy = 1.0;
    double weight_lr = 1.0;
    double weight_lo = 1.0;
    bool disable_barrier = false;
    bool disable_relative = false;
    bool disable_lr = false;
    bool disable_lo = false;
    int repair_every = 1;  // pair re-establishment period, in iterations
    int surface_density = 32;
    DfFieldConfig dffield;

    void validate() const;
};

struct OptimScene {
    const HandDescription* desc = nullptr;
    const SpatialIndex* object_index = nullptr;
    RegionForces forces;
    const SensorLayout* layout = nullptr;  // optional, all-surface force lookup
};

enum class OptimStatus { Completed, AbortedNan };

struct TraceEntry {
    int iter = 0;
    double e_relative = 0.0;
    double e_barrier = 0.0;
    double lr = 0.0;
    double lo = 0.0;
    double total = 0.0;
};

struct OptimResult {
    HandPose initial;
    HandPose final;
    std::vector<TraceEntry> trace;
    double wall_ms = 0.0;
    OptimStatus status = OptimStatus::Completed;
};

// Twist-and-limit joint regularizer:
//   sum_j (r_j . t_j)^2 + sum_j max(|r_j| - pi/2, 0)^2
// Gradient covers the 45 joint parameters (pose indices 6..50).
std::pair<double, std::array<double, 45>> regularizer_lr(const HandPose& pose,
                                                         const HandDescription& desc);

// Squared deviation from the initial prediction over all 51 parameters.
std::pair<double, std::array<double, kPoseDim>> deviation_lo(const HandPose& pose,
                                                             const HandPose& initial);

struct ObjectiveResult {
    double value = 0.0;
    std::array<double, kPoseDim> gradient{};
    EnergyBreakdown energy;
    double lr_value = 0.0;
    double lo_value = 0.0;
    std::size_t pair_count = 0;
};

// Full objective and its gradient assembled through the kinematic chain.
// When `frozen_pairs` is given, its topology and kappa are reused and only
// distances are refreshed (finite-difference checks, repair_every > 1).
ObjectiveResult objective(const HandPose& pose, const HandPose& initial, const OptimScene& scene,
                          const OptimConfig& cfg,
                          const std::vector<PointPair>* frozen_pairs = nullptr);

// Re-derives pair distances and hand-point positions for a pose without
// touching topology or kappa.
std::vector<PointPair> refresh_pairs(std::vector<PointPair> pairs, const HandPoints& hand,
                                     const SpatialIndex& object_index);

OptimResult optimize(const HandPose& initial, const OptimScene& scene, const OptimConfig& cfg);

// {theta_init, theta_final, trace:[...], status[, wall_ms]}. Wall time is
// measurement metadata and breaks byte-level run determinism, so it is
// written only on request.
std::string result_to_json(const OptimResult& result, bool emit_timing = false);

}  // namespace dff
