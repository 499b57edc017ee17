// Fixed-geometry differentiable skeletal hand: 16 rigid frames (wrist +
// 15 finger joints), 21 joints, 22 region keypoints, capsule-sampled
// surface points. Pose is a 51-vector:
//   [ global translation (3, mm) | global rotation (3, axis-angle) |
//     15 joint axis-angle rotations (3 each) ].

#pragma once

#include "dff/geometry.hpp"

#include <array>
#include <string>
#include <vector>

namespace dff {

inline constexpr int kPoseDim = 51;
inline constexpr int kNumBones = 16;
inline constexpr int kNumJointParams = 15;  // articulated joints after the wrist
inline constexpr int kNumJoints = 21;
inline constexpr int kNumRegions = 22;

enum class Digit { Palm = 0, Thumb, Index, Middle, Ring, Pinky };

struct Bone {
    int parent = -1;          // -1 for the wrist root
    Vec3 offset_mm;           // rest offset in the parent frame
    Vec3 tip_mm;              // capsule segment end in the local frame
    double radius_mm = 0.0;   // capsule radius
    Vec3 twist_axis;          // unit, local frame; rest direction of the child bone
};

struct RegionAnchor {
    int bone = 0;
    Vec3 offset_mm;  // local frame
    Digit digit = Digit::Palm;
};

struct HandDescription {
    std::string name;  // data-file provenance id
    std::vector<Bone> bones;
    std::vector<RegionAnchor> regions;
    double reach_mm = 0.0;  // max graspable object extent from the palm
    // Per digit (thumb..pinky): chain of three bone ids and the local
    // flexion axis used by grasp synthesis.
    std::array<std::array<int, 3>, 5> digit_chains{};
    std::array<Vec3, 5> flexion_axes;

    void validate() const;
    int distal_region(Digit d) const;  // fingertip-pad region id of a digit

    static HandDescription default_hand();
};

struct HandPose {
    std::array<double, kPoseDim> theta{};

    Vec3 translation() const { return {theta[0], theta[1], theta[2]}; }
    Vec3 global_rotation() const { return {theta[3], theta[4], theta[5]}; }
    Vec3 joint(int j) const { return {theta[6 + 3 * j], theta[7 + 3 * j], theta[8 + 3 * j]}; }
    void set_joint(int j, const Vec3& r) {
        theta[6 + 3 * j] = r.x();
        theta[7 + 3 * j] = r.y();
        theta[8 + 3 * j] = r.z();
    }

    bool finite() const;
    // Wraps every axis-angle block to norm <= pi.
    HandPose canonicalized() const;
};

struct HandState {
    std::array<Vec3, kNumJoints> joints;              // J_h
    std::array<Vec3, kNumRegions> region_keypoints;   // K_h
    std::vector<Eigen::Matrix3d> frame_R;             // per bone
    std::vector<Vec3> frame_t;

    Vec3 world_point(int bone, const Vec3& local) const {
        return frame_R[bone] * local + frame_t[bone];
    }
};

HandState forward_kinematics(const HandDescription& desc, const HandPose& pose);

// Deterministic stratified capsule sampling; count = bones * density,
// every sample at distance radius from its bone segment axis.
PointCloud surface_samples(const HandDescription& desc, const HandState& state, int density);

// Local-frame sample anchors matching surface_samples point order.
std::vector<std::pair<int, Vec3>> surface_sample_anchors(const HandDescription& desc, int density);

// Forward-mode derivatives of the bone frames with respect to selected
// pose parameters; keypoint and anchor derivatives fall out of the
// frame derivatives.
struct HandDerivatives {
    HandState state;
    std::vector<int> params;
    // [param][bone]
    std::vector<std::array<Eigen::Matrix3d, kNumBones>> frame_dR;
    std::vector<std::array<Vec3, kNumBones>> frame_dt;
    // [param][region]
    std::vector<std::array<Vec3, kNumRegions>> keypoint_d;

    Vec3 point_derivative(int param_pos, int bone, const Vec3& local) const {
        return frame_dR[param_pos][bone] * local + frame_dt[param_pos][bone];
    }
};

HandDerivatives evaluate_with_derivatives(const HandDescription& desc, const HandPose& pose,
                                          const std::vector<int>& wrt);

// The 15 joint axis-angle vectors paired with their twist axes.
std::vector<std::pair<Vec3, Vec3>> joint_rotations(const HandPose& pose,
                                                   const HandDescription& desc);

// JSON io. Description schema:
//   {name, reach_mm, bones:[{parent, offset_mm, tip_mm, radius_mm, twist_axis}],
//    regions:[{bone, offset_mm, digit_label}]}
// Pose schema: {theta:[51]}.
HandDescription load_hand_description(const std::string& path);
void save_hand_description(const HandDescription& desc, const std::string& path);
HandPose load_pose(const std::string& path);
void save_pose(const HandPose& pose, const std::string& path);

std::string digit_label(Digit d);
Digit digit_from_label(const std::string& label);

}  // namespace dff
