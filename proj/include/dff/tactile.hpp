// Distributed tactile sensor layouts, per-frame readings, aggregation to
// the 22 region force means, and the tactile-independent fixed-force
// fallback.

#pragma once

#include "dff/geometry.hpp"
#include "dff/hand_model.hpp"

#include <array>
#include <string>
#include <vector>

namespace dff {

struct Sensor {
    int region = 0;  // 0..21
    int bone = 0;
    Vec3 offset_mm;  // local frame
};

struct SensorLayout {
    std::vector<Sensor> sensors;

    void validate(const HandDescription& desc) const;

    // Several sensors scattered around each region anchor.
    static SensorLayout default_layout(const HandDescription& desc, int per_region = 4);
};

struct TactileFrame {
    std::vector<double> readings;  // >= 0, normalized force units

    void validate() const;
};

struct RegionForces {
    std::array<double, kNumRegions> mean{};  // M_bar per region
};

// Mean reading per region; regions with no sensors average to 0.
RegionForces region_average(const TactileFrame& frame, const SensorLayout& layout);

// M_j = force_value for every region whose keypoint has an object point
// within `proximity` (closed threshold), 0 otherwise.
RegionForces fixed_force(const HandState& state, const SpatialIndex& object_index,
                         double force_value = 0.5, double proximity = 3.0);

// World positions of sensors with reading strictly above the threshold.
PointCloud active_sensor_positions(const TactileFrame& frame, const SensorLayout& layout,
                                   const HandState& state, double activation_threshold = 0.0);

// World positions + region ids of every sensor (all-surface pairing).
struct SensorPoints {
    PointCloud positions;
    std::vector<int> regions;
};
SensorPoints sensor_world_points(const SensorLayout& layout, const HandState& state);

// Layout JSON: {sensors:[{region, bone, offset_mm}]}.
// Frame JSON: {readings:[floats]}.
SensorLayout load_sensor_layout(const std::string& path);
void save_sensor_layout(const SensorLayout& layout, const std::string& path);
TactileFrame load_tactile_frame(const std::string& path);
void save_tactile_frame(const TactileFrame& frame, const std::string& path);

}  // namespace dff
