#include "dff/scenegen.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

namespace dff {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr double kSuperellipsoidPower = 4.0;

// Subdivided cube with shared edge/corner vertices, mapped through
// `shape` (unit cube position -> surface point). Keeps the cube topology,
// so the result is watertight for any injective mapping.
template <typename F>
TriMesh mapped_cube(int n, F shape) {
    TriMesh mesh;
    std::unordered_map<int64_t, int> lattice;
    auto vertex = [&](int i, int j, int k) {
        int64_t key = (int64_t(i) * (n + 1) + j) * (n + 1) + k;
        auto it = lattice.find(key);
        if (it != lattice.end()) return it->second;
        Vec3 q(2.0 * i / n - 1.0, 2.0 * j / n - 1.0, 2.0 * k / n - 1.0);
        mesh.vertices.push_back(shape(q));
        lattice.emplace(key, static_cast<int>(mesh.vertices.size()) - 1);
        return static_cast<int>(mesh.vertices.size()) - 1;
    };
    // axis = face normal direction, sign = +-1; (u,v) span the face so
    // that du x dv points outward.
    for (int axis = 0; axis < 3; ++axis)
        for (int sign = -1; sign <= 1; sign += 2)
            for (int u = 0; u < n; ++u)
                for (int v = 0; v < n; ++v) {
                    auto at = [&](int uu, int vv) {
                        int c[3];
                        c[axis] = sign > 0 ? n : 0;
                        c[(axis + 1) % 3] = sign > 0 ? uu : vv;
                        c[(axis + 2) % 3] = sign > 0 ? vv : uu;
                        return vertex(c[0], c[1], c[2]);
                    };
                    int p00 = at(u, v), p10 = at(u + 1, v);
                    int p01 = at(u, v + 1), p11 = at(u + 1, v + 1);
                    mesh.triangles.push_back({p00, p10, p11});
                    mesh.triangles.push_back({p00, p11, p01});
                }
    return mesh;
}

TriMesh make_cylinder(double radius, double height, int n) {
    TriMesh mesh;
    int segments = 4 * n;
    int rows = n;
    auto ring_vertex = [&](int row, int s) {
        double phi = 2.0 * std::numbers::pi * s / segments;
        double z = -height / 2 + height * row / rows;
        return Vec3(radius * std::cos(phi), radius * std::sin(phi), z);
    };
    // side grid
    for (int row = 0; row <= rows; ++row)
        for (int s = 0; s < segments; ++s) mesh.vertices.push_back(ring_vertex(row, s));
    auto vid = [&](int row, int s) { return row * segments + (s % segments); };
    for (int row = 0; row < rows; ++row)
        for (int s = 0; s < segments; ++s) {
            int a = vid(row, s), b = vid(row, s + 1);
            int c = vid(row + 1, s + 1), d = vid(row + 1, s);
            mesh.triangles.push_back({a, b, c});
            mesh.triangles.push_back({a, c, d});
        }
    int bottom = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back(Vec3(0, 0, -height / 2));
    int top = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back(Vec3(0, 0, height / 2));
    for (int s = 0; s < segments; ++s) {
        mesh.triangles.push_back({bottom, vid(0, s + 1), vid(0, s)});
        mesh.triangles.push_back({top, vid(rows, s), vid(rows, s + 1)});
    }
    return mesh;
}

Eigen::Matrix3d approach_rotation(const Vec3& approach) {
    // Hand-frame palm normal (0,0,-1) maps to the approach direction;
    // the finger direction (0,1,0) maps to a deterministic perpendicular.
    Vec3 a = approach.normalized();
    Vec3 f = std::abs(a.y()) > 0.9 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
    Vec3 u = (f - f.dot(a) * a).normalized();
    Eigen::Matrix3d r;
    r.col(2) = -a;
    r.col(1) = u;
    r.col(0) = u.cross(-a);
    return r;
}

Vec3 rotation_to_axis_angle(const Eigen::Matrix3d& r) {
    Eigen::AngleAxisd aa(r);
    return aa.axis() * aa.angle();
}

void set_digit_flexion(HandPose& pose, const HandDescription& desc, int digit, double t) {
    constexpr double chain_scale[3] = {1.0, 0.8, 0.5};
    for (int seg = 0; seg < 3; ++seg) {
        int joint = desc.digit_chains[digit][seg] - 1;
        pose.set_joint(joint, desc.flexion_axes[digit] * (t * chain_scale[seg]));
    }
}

}  // namespace

ObjectKind object_kind_from_string(const std::string& s) {
    if (s == "sphere") return ObjectKind::Sphere;
    if (s == "box") return ObjectKind::Box;
    if (s == "cylinder") return ObjectKind::Cylinder;
    if (s == "superellipsoid") return ObjectKind::Superellipsoid;
    throw std::invalid_argument("unknown object kind: " + s);
}

std::string object_kind_to_string(ObjectKind k) {
    switch (k) {
        case ObjectKind::Sphere: return "sphere";
        case ObjectKind::Box: return "box";
        case ObjectKind::Cylinder: return "cylinder";
        case ObjectKind::Superellipsoid: return "superellipsoid";
    }
    throw std::invalid_argument("bad object kind");
}

TriMesh make_object(ObjectKind kind, const Vec3& dims_mm, int level) {
    if (level < 1) throw std::invalid_argument("tessellation level must be >= 1");
    int n = 8 * level;
    TriMesh mesh;
    switch (kind) {
        case ObjectKind::Sphere: {
            double r = dims_mm.x();
            if (!(r > 0.0)) throw std::invalid_argument("sphere radius must be > 0");
            mesh = mapped_cube(n, [&](const Vec3& q) { return Vec3(q.normalized() * r); });
            break;
        }
        case ObjectKind::Box: {
            if (!(dims_mm.minCoeff() > 0.0)) throw std::invalid_argument("box extents must be > 0");
            mesh = mapped_cube(n, [&](const Vec3& q) { return Vec3(q.cwiseProduct(dims_mm / 2)); });
            break;
        }
        case ObjectKind::Cylinder: {
            if (!(dims_mm.x() > 0.0) || !(dims_mm.y() > 0.0))
                throw std::invalid_argument("cylinder radius and height must be > 0");
            mesh = make_cylinder(dims_mm.x(), dims_mm.y(), n);
            break;
        }
        case ObjectKind::Superellipsoid: {
            if (!(dims_mm.minCoeff() > 0.0))
                throw std::invalid_argument("superellipsoid extents must be > 0");
            Vec3 semi = dims_mm / 2;
            mesh = mapped_cube(n, [&](const Vec3& q) {
                Vec3 d = q.normalized();
                double p = kSuperellipsoidPower;
                double s = std::pow(std::pow(std::abs(d.x() / semi.x()), p) +
                                        std::pow(std::abs(d.y() / semi.y()), p) +
                                        std::pow(std::abs(d.z() / semi.z()), p),
                                    -1.0 / p);
                return Vec3(d * s);
            });
            break;
        }
    }
    mesh.validate();
    return mesh;
}

HandPose synthesize_grasp(const TriMesh& object, const HandDescription& desc,
                          const SceneSpec& spec) {
    MeshQuery query(object);
    Vec3 center = Vec3::Zero();
    for (const auto& v : object.vertices) center += v;
    center /= double(object.vertices.size());
    double extent = 0.0;
    for (const auto& v : object.vertices) extent = std::max(extent, (v - center).norm());
    if (2.0 * extent > desc.reach_mm)
        throw std::runtime_error("grasp synthesis failed: object beyond hand reach");

    Eigen::Matrix3d rot = approach_rotation(spec.approach);
    Vec3 rot_aa = rotation_to_axis_angle(rot);
    Vec3 a = spec.approach.normalized();
    // Palm surface center in the hand frame (midpoint of the palm anchors,
    // which live in the root bone's frame).
    Vec3 palm_center = Vec3::Zero();
    int palm_count = 0;
    for (const auto& r : desc.regions)
        if (r.digit == Digit::Palm) {
            palm_center += r.offset_mm;
            palm_count++;
        }
    palm_center = palm_center / palm_count + desc.bones[0].offset_mm;

    auto pose_at = [&](double standoff) {
        HandPose pose;
        Vec3 t = center - standoff * a - rot * palm_center;
        pose.theta[0] = t.x();
        pose.theta[1] = t.y();
        pose.theta[2] = t.z();
        pose.theta[3] = rot_aa.x();
        pose.theta[4] = rot_aa.y();
        pose.theta[5] = rot_aa.z();
        return pose;
    };

    // Clearance is measured on the capsule surface (same sampling the
    // penetration-depth metric uses), not on keypoints: any phalanx, not
    // just the fingertip pad, must stay outside the object.
    auto anchors = surface_sample_anchors(desc, 32);
    auto min_clearance = [&](const HandPose& p, const std::array<bool, kNumBones>& bones) {
        HandState state = forward_kinematics(desc, p);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& [bone, local] : anchors)
            if (bones[bone]) best = std::min(best, query.signed_distance(state.world_point(bone, local)));
        return best;
    };

    std::array<bool, kNumBones> wrist_only{};
    wrist_only[0] = true;

    // Bring the palm to ~1.2 mm off the surface.
    double lo = 0.0, hi = desc.reach_mm;
    for (int it = 0; it < 48; ++it) {
        double mid = 0.5 * (lo + hi);
        double c = min_clearance(pose_at(mid), wrist_only);
        if (c >= 1.0 && c <= 1.4) {
            lo = hi = mid;
            break;
        }
        (c < 1.2 ? lo : hi) = mid;
    }
    HandPose pose = pose_at(0.5 * (lo + hi));

    // Per-digit flexion: deepest curl whose capsule surface stays at
    // least 1 mm clear of the object, found by a scan for the first
    // sub-1 mm step followed by a bisection into the 1..1.5 mm window.
    // pi/2 is the joint limit.
    constexpr double limit = std::numbers::pi / 2.0;
    for (int d = 0; d < 5; ++d) {
        std::array<bool, kNumBones> digit_bones{};
        for (int seg = 0; seg < 3; ++seg) digit_bones[desc.digit_chains[d][seg]] = true;
        auto digit_clearance = [&](double t) {
            HandPose p = pose;
            set_digit_flexion(p, desc, d, t);
            return min_clearance(p, digit_bones);
        };
        const int steps = 64;
        double chosen = limit;
        double prev_t = 0.0;
        for (int s = 1; s <= steps; ++s) {
            double t = limit * s / steps;
            if (digit_clearance(t) < 1.0) {
                double tl = prev_t, th = t;
                for (int it = 0; it < 40; ++it) {
                    double mid = 0.5 * (tl + th);
                    double c = digit_clearance(mid);
                    if (c >= 1.0 && c <= 1.5) {
                        tl = th = mid;
                        break;
                    }
                    (c > 1.25 ? tl : th) = mid;
                }
                chosen = 0.5 * (tl + th);
                break;
            }
            prev_t = t;
        }
        set_digit_flexion(pose, desc, d, chosen);
    }

    // Contact invariant: at least 6 regions within 2 mm of the surface.
    HandState state = forward_kinematics(desc, pose);
    int contacts = 0;
    for (int r = 0; r < kNumRegions; ++r)
        if (std::abs(query.signed_distance(state.region_keypoints[r])) <= 2.0) contacts++;
    if (contacts < 6)
        throw std::runtime_error("grasp synthesis failed: only " +
                                 std::to_string(contacts) + " regions in contact");
    return pose;
}

TactileFrame synthesize_tactile(const HandPose& gt, const MeshQuery& object,
                                const HandDescription& desc, const SensorLayout& layout,
                                double f_max, double tau_f) {
    HandState state = forward_kinematics(desc, gt);
    TactileFrame frame;
    frame.readings.reserve(layout.sensors.size());
    for (const auto& s : layout.sensors) {
        double d = object.unsigned_distance(state.world_point(s.bone, s.offset_mm));
        frame.readings.push_back(f_max * std::clamp(1.0 - d / tau_f, 0.0, 1.0));
    }
    return frame;
}

HandPose perturb(const HandPose& gt, const SceneSpec& spec) {
    if (spec.sigma_trans_mm < 0 || spec.sigma_rot_rad < 0 || spec.sigma_joint_rad < 0)
        throw std::invalid_argument("noise levels must be >= 0");
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    HandPose out = gt;
    for (int i = 0; i < 3; ++i) out.theta[i] += spec.sigma_trans_mm * unit(rng);
    for (int i = 3; i < 6; ++i) out.theta[i] += spec.sigma_rot_rad * unit(rng);
    for (int i = 6; i < kPoseDim; ++i) out.theta[i] += spec.sigma_joint_rad * unit(rng);
    return out;
}

Scene generate_scene(const SceneSpec& spec, const HandDescription& desc,
                     const SensorLayout& layout) {
    Scene scene;
    scene.spec = spec;
    scene.object = make_object(spec.kind, spec.dims_mm, spec.level);
    scene.gt_pose = synthesize_grasp(scene.object, desc, spec);
    MeshQuery query(scene.object);
    scene.tactile = synthesize_tactile(scene.gt_pose, query, desc, layout);
    scene.init_pose = perturb(scene.gt_pose, spec);
    HandState gt_state = forward_kinematics(desc, scene.gt_pose);
    scene.gt_contact_mask = contact_mask(scene.object, surface_samples(desc, gt_state, 32), 3.0);
    return scene;
}

// -------------------------------------------------------------------- io

namespace {

json spec_to_json(const SceneSpec& s) {
    return json{{"kind", object_kind_to_string(s.kind)},
                {"dims_mm", {s.dims_mm.x(), s.dims_mm.y(), s.dims_mm.z()}},
                {"level", s.level},
                {"approach", {s.approach.x(), s.approach.y(), s.approach.z()}},
                {"sigma_trans_mm", s.sigma_trans_mm},
                {"sigma_rot_rad", s.sigma_rot_rad},
                {"sigma_joint_rad", s.sigma_joint_rad},
                {"seed", s.seed}};
}

SceneSpec spec_from_json(const json& j) {
    SceneSpec s;
    s.kind = object_kind_from_string(j.at("kind"));
    const auto& d = j.at("dims_mm");
    s.dims_mm = Vec3(d.at(0), d.at(1), d.at(2));
    s.level = j.at("level");
    const auto& a = j.at("approach");
    s.approach = Vec3(a.at(0), a.at(1), a.at(2));
    s.sigma_trans_mm = j.at("sigma_trans_mm");
    s.sigma_rot_rad = j.at("sigma_rot_rad");
    s.sigma_joint_rad = j.at("sigma_joint_rad");
    s.seed = j.at("seed");
    return s;
}

}  // namespace

void save_scene(const Scene& scene, const std::string& dir) {
    fs::create_directories(dir);
    save_obj(scene.object, (fs::path(dir) / "mesh.obj").string());
    save_pose(scene.gt_pose, (fs::path(dir) / "gt.json").string());
    save_pose(scene.init_pose, (fs::path(dir) / "init.json").string());
    save_tactile_frame(scene.tactile, (fs::path(dir) / "tactile.json").string());

    json mask;
    mask["threshold_mm"] = scene.gt_contact_mask.threshold_mm;
    mask["flags"] = scene.gt_contact_mask.flags;
    std::ofstream mask_out(fs::path(dir) / "mask.json");
    if (!mask_out) throw std::runtime_error("cannot write contact mask in " + dir);
    mask_out << mask.dump() << '\n';

    json manifest;
    manifest["spec"] = spec_to_json(scene.spec);
    manifest["object"] = "mesh.obj";
    manifest["gt_pose"] = "gt.json";
    manifest["init_pose"] = "init.json";
    manifest["tactile"] = "tactile.json";
    manifest["contact_mask"] = "mask.json";
    std::ofstream man_out(fs::path(dir) / "manifest.json");
    if (!man_out) throw std::runtime_error("cannot write manifest in " + dir);
    man_out << manifest.dump(2) << '\n';
}

Scene load_scene(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw std::runtime_error("cannot open manifest: " + manifest_path);
    json manifest = json::parse(in);
    fs::path dir = fs::path(manifest_path).parent_path();

    Scene scene;
    scene.spec = spec_from_json(manifest.at("spec"));
    scene.object = load_obj((dir / manifest.at("object").get<std::string>()).string());
    scene.gt_pose = load_pose((dir / manifest.at("gt_pose").get<std::string>()).string());
    scene.init_pose = load_pose((dir / manifest.at("init_pose").get<std::string>()).string());
    // The tactile frame is optional: scenes may carry geometry only.
    if (manifest.contains("tactile")) {
        fs::path tactile_path = dir / manifest.at("tactile").get<std::string>();
        if (fs::exists(tactile_path)) scene.tactile = load_tactile_frame(tactile_path.string());
    }

    std::ifstream mask_in(dir / manifest.at("contact_mask").get<std::string>());
    if (!mask_in) throw std::runtime_error("cannot open contact mask for " + manifest_path);
    json mask = json::parse(mask_in);
    scene.gt_contact_mask.threshold_mm = mask.at("threshold_mm");
    scene.gt_contact_mask.flags = mask.at("flags").get<std::vector<uint8_t>>();
    return scene;
}

}  // namespace dff
