// Evaluation suite: MPJPE, penetration depth, contact masks and contact
// IoU, plus the contact-constraint loss evaluator. Chamfer distance and
// voxel IoU live in geometry.

#pragma once

#include "dff/geometry.hpp"
#include "dff/hand_model.hpp"

#include <array>
#include <optional>
#include <vector>

namespace dff {

struct ContactMask {
    std::vector<uint8_t> flags;  // one per object vertex
    double threshold_mm = 3.0;
};

struct MetricsReport {
    double mpjpe_mm = 0.0;
    double pd_mm = 0.0;
    double ciou = 0.0;
    std::optional<double> cd_mm;
    std::optional<double> iou;
};

struct SdfSampleSet {
    std::vector<Vec3> positions;
    std::vector<double> signed_values;
    std::vector<uint8_t> contact_states;  // c_x in {0,1}
};

// Mean per-joint Euclidean error over the 21 joints.
double mpjpe(const std::array<Vec3, kNumJoints>& pred, const std::array<Vec3, kNumJoints>& gt);

// Maximum depth of hand surface samples inside the object.
double penetration_depth(const PointCloud& hand_surface, const MeshQuery& object);

// Object vertex flagged iff strictly closer than the threshold to some
// hand surface sample.
ContactMask contact_mask(const TriMesh& object, const PointCloud& hand_surface,
                         double threshold = 3.0);

// |a AND b| / |a OR b|; both empty counts as perfect agreement (1.0).
double contact_iou(const ContactMask& a, const ContactMask& b);

// L_C over contact-labeled samples. Absolute values by default; the
// signed variant sums raw s_x and can cancel across samples.
double contact_constraint_loss(const SdfSampleSet& samples, bool signed_sum = false);

// c_x = 1 iff strictly closer than l_c to an active sensor.
std::vector<uint8_t> label_contacts(const std::vector<Vec3>& positions,
                                    const PointCloud& active_sensors, double l_c = 3.0);

}  // namespace dff
