#include "dff/hand_model.hpp"

#include "dff/dual.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

namespace dff {

namespace {

using json = nlohmann::ordered_json;

template <typename S>
struct Frames {
    std::array<Mat3T<S>, kNumBones> R;
    std::array<Vec3T<S>, kNumBones> t;
};

template <typename S>
Frames<S> fk_frames(const HandDescription& desc, const std::array<S, kPoseDim>& theta) {
    Frames<S> f;
    f.R[0] = axis_angle_to_matrix<S>({theta[3], theta[4], theta[5]});
    const Vec3& root_off = desc.bones[0].offset_mm;
    Vec3T<S> off0{S(root_off.x()), S(root_off.y()), S(root_off.z())};
    f.t[0] = Vec3T<S>{theta[0], theta[1], theta[2]} + f.R[0] * off0;
    for (int b = 1; b < kNumBones; ++b) {
        const Bone& bone = desc.bones[b];
        int j = b - 1;
        Vec3T<S> off{S(bone.offset_mm.x()), S(bone.offset_mm.y()), S(bone.offset_mm.z())};
        Mat3T<S> local =
            axis_angle_to_matrix<S>({theta[6 + 3 * j], theta[7 + 3 * j], theta[8 + 3 * j]});
        f.t[b] = f.t[bone.parent] + f.R[bone.parent] * off;
        f.R[b] = f.R[bone.parent] * local;
    }
    return f;
}

Vec3 to_vec3(const Vec3T<double>& v) { return {v.x, v.y, v.z}; }

void orthonormal_basis(const Vec3& u, Vec3& n1, Vec3& n2) {
    Vec3 ref = std::abs(u.z()) > 0.9 ? Vec3(1, 0, 0) : Vec3(0, 0, 1);
    n1 = u.cross(ref).normalized();
    n2 = u.cross(n1);
}

void fill_state(const HandDescription& desc, const Frames<double>& f, HandState& state) {
    state.frame_R.resize(kNumBones);
    state.frame_t.resize(kNumBones);
    for (int b = 0; b < kNumBones; ++b) {
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) state.frame_R[b](i, j) = f.R[b].m[i * 3 + j];
        state.frame_t[b] = to_vec3(f.t[b]);
    }
    state.joints[0] = state.frame_t[0];
    int k = 1;
    for (const auto& chain : desc.digit_chains) {
        for (int b : chain) state.joints[k++] = state.frame_t[b];
        int distal = chain[2];
        state.joints[k++] = state.world_point(distal, desc.bones[distal].tip_mm);
    }
    for (int r = 0; r < kNumRegions; ++r) {
        const RegionAnchor& a = desc.regions[r];
        state.region_keypoints[r] = state.world_point(a.bone, a.offset_mm);
    }
}

}  // namespace

void HandDescription::validate() const {
    if (bones.size() != kNumBones) throw std::invalid_argument("hand must have 16 bones");
    if (regions.size() != kNumRegions) throw std::invalid_argument("hand must have 22 regions");
    if (bones[0].parent != -1) throw std::invalid_argument("bone 0 must be the wrist root");
    for (std::size_t b = 1; b < bones.size(); ++b)
        if (bones[b].parent < 0 || bones[b].parent >= static_cast<int>(b))
            throw std::invalid_argument("bone graph must be acyclic and rooted at the wrist");
    for (const auto& bone : bones)
        if (std::abs(bone.twist_axis.norm() - 1.0) > 1e-9)
            throw std::invalid_argument("twist axes must be unit-norm");
    // 2 thumb, 3 per other finger, 8 palm.
    std::array<int, 6> counts{};
    for (const auto& r : regions) counts[static_cast<int>(r.digit)]++;
    if (counts != std::array<int, 6>{8, 2, 3, 3, 3, 3})
        throw std::invalid_argument("region partition must be {palm:8, thumb:2, fingers:3 each}");
    for (const auto& r : regions)
        if (r.bone < 0 || r.bone >= kNumBones)
            throw std::invalid_argument("region anchor bone out of range");
}

int HandDescription::distal_region(Digit d) const {
    for (int r = kNumRegions - 1; r >= 0; --r)
        if (regions[r].digit == d) return r;
    throw std::invalid_argument("no region for digit");
}

HandDescription HandDescription::default_hand() {
    HandDescription h;
    h.name = "dff-capsule-hand-v1";
    h.reach_mm = 160.0;
    h.bones.resize(kNumBones);
    h.digit_chains = {{{1, 2, 3}, {4, 5, 6}, {7, 8, 9}, {10, 11, 12}, {13, 14, 15}}};

    // Palm capsule along +y; palm faces -z. The capsule covers just the
    // palm plate (world y 28..66): overhang beyond the region-keypoint
    // rows would be blind to contact.
    h.bones[0] = {-1, Vec3(0, 28, 0), Vec3(0, 38, 0), 14.0, Vec3(0, 1, 0)};

    struct DigitSpec {
        Vec3 base;         // MCP offset from the wrist
        Vec3 dir;          // rest direction (unit after normalize)
        double len[3];     // proximal, middle, distal
        double rad[3];
    };
    const DigitSpec specs[5] = {
        {Vec3(38, 2, -6), Vec3(0.78, 0.60, -0.19), {42, 32, 26}, {9.0, 8.0, 7.5}},    // thumb
        {Vec3(25, 62, 0), Vec3(0, 1, 0), {45, 26, 22}, {7.5, 7.0, 6.5}},              // index
        {Vec3(8, 67, 0), Vec3(0, 1, 0), {50, 30, 24}, {7.5, 7.0, 6.5}},               // middle
        {Vec3(-10, 62, 0), Vec3(0, 1, 0), {46, 28, 22}, {7.0, 6.5, 6.0}},             // ring
        {Vec3(-28, 54, 0), Vec3(0, 1, 0), {36, 20, 18}, {6.5, 6.0, 5.5}},             // pinky
    };
    for (int d = 0; d < 5; ++d) {
        const DigitSpec& s = specs[d];
        Vec3 dir = s.dir.normalized();
        int parent = 0;
        Vec3 offset = s.base;
        for (int seg = 0; seg < 3; ++seg) {
            int b = h.digit_chains[d][seg];
            h.bones[b] = {parent, offset, dir * s.len[seg], s.rad[seg], dir};
            parent = b;
            offset = dir * s.len[seg];
        }
        // Flexion curls the digit toward the palm side.
        h.flexion_axes[d] = dir.cross(Vec3(0, 0, -1)).normalized();
    }

    // Palm regions on the palmar surface of the wrist capsule.
    auto palm_anchor = [&](double x, double y) {
        double z = -std::sqrt(h.bones[0].radius_mm * h.bones[0].radius_mm - x * x);
        return RegionAnchor{0, Vec3(x, y, z), Digit::Palm};
    };
    h.regions = {
        palm_anchor(-4, 10), palm_anchor(0, 10), palm_anchor(4, 10),
        palm_anchor(-4, 19), palm_anchor(4, 19),
        palm_anchor(-4, 28), palm_anchor(0, 28), palm_anchor(4, 28),
    };
    // Digit regions: per bone a pad-side anchor; thumb skips the proximal one.
    auto pad_anchor = [&](int d, int seg, double frac) {
        int b = h.digit_chains[d][seg];
        const Bone& bone = h.bones[b];
        Vec3 dir = bone.tip_mm.normalized();
        Vec3 pad = h.flexion_axes[d].cross(dir).normalized();
        return RegionAnchor{b, bone.tip_mm * frac + pad * bone.radius_mm,
                            static_cast<Digit>(d + 1)};
    };
    for (int d = 0; d < 5; ++d) {
        if (d != 0) h.regions.push_back(pad_anchor(d, 0, 0.55));
        h.regions.push_back(pad_anchor(d, 1, 0.55));
        h.regions.push_back(pad_anchor(d, 2, 0.85));
    }
    h.validate();
    return h;
}

bool HandPose::finite() const {
    for (double v : theta)
        if (!std::isfinite(v)) return false;
    return true;
}

HandPose HandPose::canonicalized() const {
    HandPose out = *this;
    constexpr double two_pi = 2.0 * std::numbers::pi;
    for (int block = 0; block < 16; ++block) {
        double* w = &out.theta[3 + 3 * block];
        double n = std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
        if (n <= std::numbers::pi) continue;
        double wrapped = std::fmod(n + std::numbers::pi, two_pi) - std::numbers::pi;
        double scale = wrapped / n;
        for (int i = 0; i < 3; ++i) w[i] *= scale;
    }
    return out;
}

HandState forward_kinematics(const HandDescription& desc, const HandPose& pose) {
    if (!pose.finite()) throw std::invalid_argument("non-finite pose");
    HandState state;
    fill_state(desc, fk_frames<double>(desc, pose.theta), state);
    return state;
}

PointCloud surface_samples(const HandDescription& desc, const HandState& state, int density) {
    if (density < 8) throw std::invalid_argument("surface sample density must be >= 8");
    PointCloud cloud;
    cloud.points.reserve(desc.bones.size() * density);
    auto anchors = surface_sample_anchors(desc, density);
    for (const auto& [bone, local] : anchors) cloud.points.push_back(state.world_point(bone, local));
    return cloud;
}

std::vector<std::pair<int, Vec3>> surface_sample_anchors(const HandDescription& desc, int density) {
    if (density < 8) throw std::invalid_argument("surface sample density must be >= 8");
    constexpr double golden = 2.399963229728653;
    std::vector<std::pair<int, Vec3>> anchors;
    anchors.reserve(desc.bones.size() * density);
    for (int b = 0; b < static_cast<int>(desc.bones.size()); ++b) {
        const Bone& bone = desc.bones[b];
        double len = bone.tip_mm.norm();
        Vec3 u = bone.tip_mm / len;
        Vec3 n1, n2;
        orthonormal_basis(u, n1, n2);
        for (int s = 0; s < density; ++s) {
            double frac = (s + 0.5) / density;
            double phi = s * golden;
            Vec3 local = u * (frac * len) +
                         (n1 * std::cos(phi) + n2 * std::sin(phi)) * bone.radius_mm;
            anchors.emplace_back(b, local);
        }
    }
    return anchors;
}

HandDerivatives evaluate_with_derivatives(const HandDescription& desc, const HandPose& pose,
                                          const std::vector<int>& wrt) {
    if (!pose.finite()) throw std::invalid_argument("non-finite pose");
    for (int p : wrt)
        if (p < 0 || p >= kPoseDim) throw std::invalid_argument("parameter index out of range");

    HandDerivatives out;
    fill_state(desc, fk_frames<double>(desc, pose.theta), out.state);
    out.params = wrt;
    out.frame_dR.resize(wrt.size());
    out.frame_dt.resize(wrt.size());
    out.keypoint_d.resize(wrt.size());

    std::array<Dual, kPoseDim> dual_theta;
    for (int i = 0; i < kPoseDim; ++i) dual_theta[i] = Dual(pose.theta[i]);
    for (std::size_t k = 0; k < wrt.size(); ++k) {
        dual_theta[wrt[k]].d = 1.0;
        Frames<Dual> f = fk_frames<Dual>(desc, dual_theta);
        dual_theta[wrt[k]].d = 0.0;
        for (int b = 0; b < kNumBones; ++b) {
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) out.frame_dR[k][b](i, j) = f.R[b].m[i * 3 + j].d;
            out.frame_dt[k][b] = Vec3(f.t[b].x.d, f.t[b].y.d, f.t[b].z.d);
        }
        for (int r = 0; r < kNumRegions; ++r) {
            const RegionAnchor& a = desc.regions[r];
            out.keypoint_d[k][r] = out.point_derivative(static_cast<int>(k), a.bone, a.offset_mm);
        }
    }
    return out;
}

std::vector<std::pair<Vec3, Vec3>> joint_rotations(const HandPose& pose,
                                                   const HandDescription& desc) {
    std::vector<std::pair<Vec3, Vec3>> out;
    out.reserve(kNumJointParams);
    for (int j = 0; j < kNumJointParams; ++j)
        out.emplace_back(pose.joint(j), desc.bones[j + 1].twist_axis);
    return out;
}

// -------------------------------------------------------------------- io

namespace {
json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
Vec3 vec3_from_json(const json& j) {
    return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}
}  // namespace

std::string digit_label(Digit d) {
    switch (d) {
        case Digit::Palm: return "palm";
        case Digit::Thumb: return "thumb";
        case Digit::Index: return "index";
        case Digit::Middle: return "middle";
        case Digit::Ring: return "ring";
        case Digit::Pinky: return "pinky";
    }
    throw std::invalid_argument("bad digit");
}

Digit digit_from_label(const std::string& label) {
    for (int d = 0; d < 6; ++d)
        if (digit_label(static_cast<Digit>(d)) == label) return static_cast<Digit>(d);
    throw std::invalid_argument("unknown digit label: " + label);
}

void save_hand_description(const HandDescription& desc, const std::string& path) {
    json j;
    j["name"] = desc.name;
    j["reach_mm"] = desc.reach_mm;
    j["bones"] = json::array();
    for (const auto& b : desc.bones)
        j["bones"].push_back({{"parent", b.parent},
                              {"offset_mm", vec3_to_json(b.offset_mm)},
                              {"tip_mm", vec3_to_json(b.tip_mm)},
                              {"radius_mm", b.radius_mm},
                              {"twist_axis", vec3_to_json(b.twist_axis)}});
    j["regions"] = json::array();
    for (const auto& r : desc.regions)
        j["regions"].push_back({{"bone", r.bone},
                                {"offset_mm", vec3_to_json(r.offset_mm)},
                                {"digit_label", digit_label(r.digit)}});
    j["digit_chains"] = desc.digit_chains;
    j["flexion_axes"] = json::array();
    for (const auto& a : desc.flexion_axes) j["flexion_axes"].push_back(vec3_to_json(a));
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write hand description: " + path);
    out << j.dump(2) << '\n';
}

HandDescription load_hand_description(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open hand description: " + path);
    json j = json::parse(in);
    HandDescription desc;
    desc.name = j.value("name", "");
    desc.reach_mm = j.value("reach_mm", 160.0);
    for (const auto& bj : j.at("bones"))
        desc.bones.push_back({bj.at("parent"), vec3_from_json(bj.at("offset_mm")),
                              vec3_from_json(bj.at("tip_mm")), bj.at("radius_mm"),
                              vec3_from_json(bj.at("twist_axis"))});
    for (const auto& rj : j.at("regions"))
        desc.regions.push_back({rj.at("bone"), vec3_from_json(rj.at("offset_mm")),
                                digit_from_label(rj.at("digit_label"))});
    if (j.contains("digit_chains")) desc.digit_chains = j.at("digit_chains");
    if (j.contains("flexion_axes"))
        for (int d = 0; d < 5; ++d) desc.flexion_axes[d] = vec3_from_json(j.at("flexion_axes").at(d));
    desc.validate();
    return desc;
}

void save_pose(const HandPose& pose, const std::string& path) {
    json j;
    j["theta"] = pose.theta;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write pose: " + path);
    out << j.dump(2) << '\n';
}

HandPose load_pose(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open pose: " + path);
    json j = json::parse(in);
    const auto& arr = j.at("theta");
    if (arr.size() != kPoseDim) throw std::runtime_error("pose must have 51 parameters: " + path);
    HandPose pose;
    for (int i = 0; i < kPoseDim; ++i) pose.theta[i] = arr.at(i);
    if (!pose.finite()) throw std::runtime_error("non-finite pose: " + path);
    return pose;
}

}  // namespace dff
