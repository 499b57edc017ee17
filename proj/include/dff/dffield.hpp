// The force-aware contact representation: hand-object point pairs,
// stiffness estimation, relative potential and barrier energies, and
// their gradients with respect to the hand-side point positions.

#pragma once

#include "dff/geometry.hpp"
#include "dff/hand_model.hpp"
#include "dff/tactile.hpp"

#include <optional>
#include <string>
#include <vector>

namespace dff {

enum class PairMode { Keypoints, AllSurfacePoints };

struct DfFieldConfig {
    double barrier_threshold = 2.0;  // l_hat, mm
    double query_radius = 5.0;       // R, mm
    PairMode pair_mode = PairMode::Keypoints;
    double distance_floor = 0.1;     // mm, guards kappa and the barrier log

    void validate() const;
};

struct PointPair {
    int region = 0;       // j
    int object_vertex = 0;  // i
    int hand_point = 0;   // keypoint index, or surface-sample index in all-surface mode
    double distance = 0.0;  // l_ij, mm
    double kappa = 0.0;
};

struct EnergyBreakdown {
    double relative = 0.0;
    double barrier = 0.0;
    double total = 0.0;
    std::vector<std::pair<double, double>> per_pair;  // (relative, barrier)
};

// kappa = force / max(l, floor).
double kappa(double force, double l, double floor);

// E = kappa * l^2.
double relative_energy(double kappa, double l);

// B = -e^{-kappa} (l - l_hat)^2 log(l / l_hat) on 0 < l < l_hat, else 0.
double barrier_energy(double kappa, double l, double l_hat);

// Hand points used for pairing under the given mode: the 22 region
// keypoints, or the capsule surface samples.
struct HandPoints {
    std::vector<Vec3> positions;
    std::vector<int> regions;                    // force region per point
    std::vector<std::pair<int, Vec3>> anchors;   // (bone, local) per point
};

HandPoints pairing_points(const HandDescription& desc, const HandState& state,
                          const DfFieldConfig& cfg, int surface_density = 32,
                          const SensorPoints* sensors = nullptr);

// Closed-ball pairing at radius R; a vertex may pair with several hand
// points. kappa is attached from the region force and current distance.
std::vector<PointPair> establish_pairs(const HandPoints& hand, const SpatialIndex& object_index,
                                       const RegionForces& forces, const DfFieldConfig& cfg);

// Sum of relative and barrier terms over all pairs; distances below the
// floor are clamped to it.
EnergyBreakdown total_energy(const std::vector<PointPair>& pairs, const DfFieldConfig& cfg,
                             bool include_relative = true, bool include_barrier = true);

// d(total)/d(hand point), kappa and pair topology held fixed. Output is
// indexed like `hand.positions`.
std::vector<Vec3> energy_gradient(const std::vector<PointPair>& pairs, const HandPoints& hand,
                                  const SpatialIndex& object_index, const DfFieldConfig& cfg,
                                  bool include_relative = true, bool include_barrier = true);

std::string energy_to_json(const EnergyBreakdown& e);

}  // namespace dff
