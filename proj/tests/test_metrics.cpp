#include "dff/metrics.hpp"

#include "dff/scenegen.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace dff;

namespace {

double mpjpe_scan(const std::array<Vec3, kNumJoints>& a, const std::array<Vec3, kNumJoints>& b) {
    double sum = 0.0;
    for (int j = 0; j < kNumJoints; ++j) sum += (a[j] - b[j]).norm();
    return sum / kNumJoints;
}

double pd_scan(const PointCloud& cloud, const TriMesh& mesh) {
    double worst = 0.0;
    for (const auto& p : cloud.points)
        worst = std::max(worst, std::max(0.0, -oracle::signed_distance_scan(mesh, p)));
    return worst;
}

ContactMask mask_scan(const TriMesh& object, const PointCloud& hand, double threshold) {
    ContactMask mask;
    mask.threshold_mm = threshold;
    for (const auto& v : object.vertices) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& p : hand.points) best = std::min(best, (v - p).norm());
        mask.flags.push_back(best < threshold ? 1 : 0);
    }
    return mask;
}

double iou_scan(const ContactMask& a, const ContactMask& b) {
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.flags.size(); ++i) {
        inter += a.flags[i] && b.flags[i];
        uni += a.flags[i] || b.flags[i];
    }
    return uni == 0 ? 1.0 : double(inter) / double(uni);
}

std::array<Vec3, kNumJoints> random_joints(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-80, 80);
    std::array<Vec3, kNumJoints> joints;
    for (auto& j : joints) j = Vec3(u(rng), u(rng), u(rng));
    return joints;
}

}  // namespace

TEST_CASE("mpjpe: identity, 3-4-5 offset, uniform shift") {
    std::mt19937_64 rng(61);
    auto joints = random_joints(rng);
    CHECK(mpjpe(joints, joints) == doctest::Approx(0.0));

    auto offset = joints;
    offset[7] += Vec3(3, 4, 0);
    CHECK(mpjpe(offset, joints) == doctest::Approx(5.0 / kNumJoints));

    auto shifted = joints;
    for (auto& j : shifted) j += Vec3(1, 0, 0);
    CHECK(mpjpe(shifted, joints) == doctest::Approx(1.0));
}

TEST_CASE("penetration depth: outside zero, known depth, sphere center") {
    TriMesh sphere = make_object(ObjectKind::Sphere, Vec3(30, 0, 0), 3);
    MeshQuery query(sphere);

    PointCloud outside;
    outside.points = {Vec3(100, 0, 0), Vec3(0, 100, 0)};
    CHECK(penetration_depth(outside, query) == doctest::Approx(0.0));

    PointCloud center;
    center.points = {Vec3::Zero(), Vec3(200, 0, 0)};
    CHECK(penetration_depth(center, query) == doctest::Approx(30.0).epsilon(0.01));
}

TEST_CASE("pd zero exactly when all samples have non-negative signed distance") {
    TriMesh box = make_object(ObjectKind::Box, Vec3(40, 40, 40), 1);
    MeshQuery query(box);
    std::mt19937_64 rng(67);
    std::uniform_real_distribution<double> u(-40, 40);
    for (int trial = 0; trial < 20; ++trial) {
        PointCloud cloud;
        for (int i = 0; i < 30; ++i) cloud.points.push_back(Vec3(u(rng), u(rng), u(rng)));
        bool any_inside = false;
        for (const auto& p : cloud.points) any_inside |= query.signed_distance(p) < 0.0;
        CHECK((penetration_depth(cloud, query) > 0.0) == any_inside);
    }
}

TEST_CASE("contact mask: far hand, near vertex, strict 3 mm boundary") {
    TriMesh box = make_object(ObjectKind::Box, Vec3(20, 20, 20), 1);

    PointCloud far;
    far.points = {Vec3(500, 0, 0)};
    for (uint8_t f : contact_mask(box, far).flags) CHECK(f == 0);

    // 2 mm outward from the +x face corner vertex (10,10,10).
    PointCloud near;
    near.points = {Vec3(12, 10, 10)};
    ContactMask m = contact_mask(box, near);
    int flagged = 0;
    for (std::size_t i = 0; i < box.vertices.size(); ++i)
        if (m.flags[i]) {
            flagged++;
            CHECK((box.vertices[i] - near.points[0]).norm() < 3.0);
        }
    CHECK(flagged >= 1);

    // Exactly at threshold: strict comparison leaves the vertex unflagged.
    PointCloud boundary;
    boundary.points = {Vec3(13, 10, 10)};
    ContactMask b = contact_mask(box, boundary);
    for (std::size_t i = 0; i < box.vertices.size(); ++i)
        if ((box.vertices[i] - boundary.points[0]).norm() == 3.0) CHECK(b.flags[i] == 0);
}

TEST_CASE("contact iou: identity, disjoint, half-subset, both-empty, mismatch") {
    ContactMask a, b;
    a.flags = {1, 1, 0, 0};
    CHECK(contact_iou(a, a) == doctest::Approx(1.0));

    b.flags = {0, 0, 1, 1};
    CHECK(contact_iou(a, b) == doctest::Approx(0.0));
    CHECK(contact_iou(b, a) == doctest::Approx(0.0));

    ContactMask half;
    half.flags = {1, 0, 0, 0};
    CHECK(contact_iou(half, a) == doctest::Approx(0.5));

    ContactMask empty1, empty2;
    empty1.flags = {0, 0};
    empty2.flags = {0, 0};
    CHECK(contact_iou(empty1, empty2) == doctest::Approx(1.0));

    ContactMask wrong;
    wrong.flags = {1};
    CHECK_THROWS_AS(contact_iou(a, wrong), std::invalid_argument);
}

TEST_CASE("contact constraint loss: absolute default, signed variant") {
    SdfSampleSet samples;
    samples.positions = {Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
    samples.signed_values = {0.5, -0.5, 7.0};
    samples.contact_states = {1, 1, 0};
    CHECK(contact_constraint_loss(samples) == doctest::Approx(1.0));
    CHECK(contact_constraint_loss(samples, true) == doctest::Approx(0.0));

    samples.contact_states = {0, 0, 0};
    CHECK(contact_constraint_loss(samples) == doctest::Approx(0.0));

    samples.signed_values = {0.0, -0.5, 7.0};
    samples.contact_states = {1, 0, 0};
    CHECK(contact_constraint_loss(samples) == doctest::Approx(0.0));
}

TEST_CASE("label contacts: empty sensors, strict threshold") {
    std::vector<Vec3> positions = {Vec3::Zero(), Vec3(2, 0, 0), Vec3(3, 0, 0), Vec3(10, 0, 0)};
    PointCloud none;
    CHECK(label_contacts(positions, none) == std::vector<uint8_t>{0, 0, 0, 0});

    PointCloud one;
    one.points = {Vec3::Zero()};
    // 0 mm -> 1, 2 mm -> 1, exactly 3 mm -> 0 (strict), 10 mm -> 0.
    CHECK(label_contacts(positions, one) == std::vector<uint8_t>{1, 1, 0, 0});
}

TEST_CASE("metrics invariant under a joint rigid transform") {
    std::mt19937_64 rng(71);
    auto pred = random_joints(rng);
    auto gt = random_joints(rng);
    TriMesh object = make_object(ObjectKind::Box, Vec3(50, 30, 40), 2);
    PointCloud hand = oracle::random_cloud(rng, 60, 40.0);

    double m0 = mpjpe(pred, gt);
    double p0 = penetration_depth(hand, MeshQuery(object));
    ContactMask c0 = contact_mask(object, hand);

    Eigen::Matrix3d g = Eigen::AngleAxisd(0.9, Vec3(1, -2, 2).normalized()).toRotationMatrix();
    Vec3 t(7, -11, 3);
    auto move = [&](Vec3 p) { return Vec3(g * p + t); };
    for (auto& j : pred) j = move(j);
    for (auto& j : gt) j = move(j);
    for (auto& v : object.vertices) v = move(v);
    for (auto& p : hand.points) p = move(p);

    CHECK(mpjpe(pred, gt) == doctest::Approx(m0).epsilon(1e-9));
    CHECK(penetration_depth(hand, MeshQuery(object)) == doctest::Approx(p0).epsilon(1e-9));
    ContactMask c1 = contact_mask(object, hand);
    CHECK(c1.flags == c0.flags);
}

TEST_CASE("metrics match brute-force references on random instances") {
    std::mt19937_64 rng(73);
    TriMesh object = make_object(ObjectKind::Cylinder, Vec3(25, 60, 0), 2);
    for (int trial = 0; trial < 20; ++trial) {
        auto pred = random_joints(rng);
        auto gt = random_joints(rng);
        CHECK(mpjpe(pred, gt) == doctest::Approx(mpjpe_scan(pred, gt)).epsilon(1e-9));

        PointCloud hand = oracle::random_cloud(rng, 40, 35.0);
        CHECK(penetration_depth(hand, MeshQuery(object)) ==
              doctest::Approx(pd_scan(hand, object)).epsilon(1e-9));

        ContactMask lib = contact_mask(object, hand, 6.0);
        ContactMask ref = mask_scan(object, hand, 6.0);
        CHECK(lib.flags == ref.flags);

        PointCloud other = oracle::random_cloud(rng, 40, 35.0);
        ContactMask lib2 = contact_mask(object, other, 6.0);
        CHECK(contact_iou(lib, lib2) == doctest::Approx(iou_scan(ref, lib2)).epsilon(1e-9));
    }
}
