// Deterministic synthetic grasp scenes: convex primitive objects, a
// procedural wrap grasp with verified region contacts, synthetic tactile
// readings and a seeded perturbed initial pose.

#pragma once

#include "dff/geometry.hpp"
#include "dff/hand_model.hpp"
#include "dff/metrics.hpp"
#include "dff/tactile.hpp"

#include <string>

namespace dff {

enum class ObjectKind { Sphere, Box, Cylinder, Superellipsoid };

struct SceneSpec {
    ObjectKind kind = ObjectKind::Sphere;
    Vec3 dims_mm = Vec3(56, 0, 0);  // sphere: radius; box/superellipsoid: extents; cylinder: radius, height
    int level = 3;                  // tessellation level
    Vec3 approach = Vec3(0, 0, -1); // direction hand -> object
    double sigma_trans_mm = 2.0;
    double sigma_rot_rad = 0.06;
    double sigma_joint_rad = 0.10;
    uint64_t seed = 0;
};

struct Scene {
    SceneSpec spec;
    TriMesh object;
    HandPose gt_pose;
    HandPose init_pose;
    TactileFrame tactile;
    ContactMask gt_contact_mask;
};

ObjectKind object_kind_from_string(const std::string& s);
std::string object_kind_to_string(ObjectKind k);

// Watertight convex primitive; vertex count grows with level.
TriMesh make_object(ObjectKind kind, const Vec3& dims_mm, int level);

// Palm placement plus per-digit flexion bisection until fingertip-region
// keypoints sit 0.5..2 mm off the surface. Throws "grasp synthesis
// failed" when fewer than 6 regions end up within 2 mm.
HandPose synthesize_grasp(const TriMesh& object, const HandDescription& desc,
                          const SceneSpec& spec);

// reading = f_max * clamp(1 - d / tau_f, 0, 1), d = sensor-to-surface distance.
TactileFrame synthesize_tactile(const HandPose& gt, const MeshQuery& object,
                                const HandDescription& desc, const SensorLayout& layout,
                                double f_max = 1.0, double tau_f = 3.0);

// Seeded Gaussian noise per parameter group.
HandPose perturb(const HandPose& gt, const SceneSpec& spec);

// Full deterministic pipeline for one spec.
Scene generate_scene(const SceneSpec& spec, const HandDescription& desc,
                     const SensorLayout& layout);

// One directory per scene; manifest.json points at the member files.
void save_scene(const Scene& scene, const std::string& dir);
Scene load_scene(const std::string& manifest_path);

}  // namespace dff
