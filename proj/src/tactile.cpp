#include "dff/tactile.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace dff {

using json = nlohmann::ordered_json;

void SensorLayout::validate(const HandDescription& desc) const {
    if (sensors.empty()) throw std::invalid_argument("sensor layout must have >= 1 sensor");
    for (const auto& s : sensors) {
        if (s.region < 0 || s.region >= kNumRegions)
            throw std::invalid_argument("sensor region out of range");
        if (s.bone < 0 || s.bone >= static_cast<int>(desc.bones.size()))
            throw std::invalid_argument("sensor bone out of range");
    }
}

SensorLayout SensorLayout::default_layout(const HandDescription& desc, int per_region) {
    SensorLayout layout;
    // Fixed cross pattern in the anchor's tangent plane approximation.
    const Vec3 offsets[4] = {Vec3(1.5, 0, 0), Vec3(-1.5, 0, 0), Vec3(0, 1.5, 0), Vec3(0, -1.5, 0)};
    for (int r = 0; r < kNumRegions; ++r) {
        const RegionAnchor& a = desc.regions[r];
        for (int s = 0; s < per_region; ++s)
            layout.sensors.push_back({r, a.bone, a.offset_mm + offsets[s % 4]});
    }
    layout.validate(desc);
    return layout;
}

void TactileFrame::validate() const {
    for (double r : readings)
        if (!(r >= 0.0) || !std::isfinite(r))
            throw std::invalid_argument("tactile readings must be finite and >= 0");
}

RegionForces region_average(const TactileFrame& frame, const SensorLayout& layout) {
    if (frame.readings.size() != layout.sensors.size())
        throw std::invalid_argument("tactile frame length does not match sensor layout");
    frame.validate();
    RegionForces forces;
    std::array<int, kNumRegions> counts{};
    for (std::size_t i = 0; i < layout.sensors.size(); ++i) {
        forces.mean[layout.sensors[i].region] += frame.readings[i];
        counts[layout.sensors[i].region]++;
    }
    for (int r = 0; r < kNumRegions; ++r)
        if (counts[r] > 0) forces.mean[r] /= counts[r];
    return forces;
}

RegionForces fixed_force(const HandState& state, const SpatialIndex& object_index,
                         double force_value, double proximity) {
    if (force_value < 0.0) throw std::invalid_argument("fixed force must be >= 0");
    RegionForces forces;
    for (int r = 0; r < kNumRegions; ++r) {
        auto [idx, dist] = object_index.nearest(state.region_keypoints[r]);
        if (dist <= proximity) forces.mean[r] = force_value;
    }
    return forces;
}

PointCloud active_sensor_positions(const TactileFrame& frame, const SensorLayout& layout,
                                   const HandState& state, double activation_threshold) {
    if (frame.readings.size() != layout.sensors.size())
        throw std::invalid_argument("tactile frame length does not match sensor layout");
    if (activation_threshold < 0.0) throw std::invalid_argument("activation threshold must be >= 0");
    PointCloud out;
    for (std::size_t i = 0; i < layout.sensors.size(); ++i)
        if (frame.readings[i] > activation_threshold)
            out.points.push_back(state.world_point(layout.sensors[i].bone, layout.sensors[i].offset_mm));
    return out;
}

SensorPoints sensor_world_points(const SensorLayout& layout, const HandState& state) {
    SensorPoints out;
    for (const auto& s : layout.sensors) {
        out.positions.points.push_back(state.world_point(s.bone, s.offset_mm));
        out.regions.push_back(s.region);
    }
    return out;
}

// -------------------------------------------------------------------- io

void save_sensor_layout(const SensorLayout& layout, const std::string& path) {
    json j;
    j["sensors"] = json::array();
    for (const auto& s : layout.sensors)
        j["sensors"].push_back({{"region", s.region},
                                {"bone", s.bone},
                                {"offset_mm", {s.offset_mm.x(), s.offset_mm.y(), s.offset_mm.z()}}});
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write sensor layout: " + path);
    out << j.dump(2) << '\n';
}

SensorLayout load_sensor_layout(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open sensor layout: " + path);
    json j = json::parse(in);
    SensorLayout layout;
    for (const auto& sj : j.at("sensors")) {
        const auto& o = sj.at("offset_mm");
        layout.sensors.push_back({sj.at("region"), sj.at("bone"), Vec3(o.at(0), o.at(1), o.at(2))});
    }
    return layout;
}

void save_tactile_frame(const TactileFrame& frame, const std::string& path) {
    json j;
    j["readings"] = frame.readings;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write tactile frame: " + path);
    out << j.dump(2) << '\n';
}

TactileFrame load_tactile_frame(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open tactile frame: " + path);
    json j = json::parse(in);
    TactileFrame frame;
    frame.readings = j.at("readings").get<std::vector<double>>();
    frame.validate();
    return frame;
}

}  // namespace dff
