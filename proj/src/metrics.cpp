#include "dff/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace dff {

double mpjpe(const std::array<Vec3, kNumJoints>& pred, const std::array<Vec3, kNumJoints>& gt) {
    double sum = 0.0;
    for (int j = 0; j < kNumJoints; ++j) sum += (pred[j] - gt[j]).norm();
    return sum / kNumJoints;
}

double penetration_depth(const PointCloud& hand_surface, const MeshQuery& object) {
    if (hand_surface.points.empty())
        throw std::invalid_argument("penetration_depth: empty surface sample set");
    double depth = 0.0;
    for (const auto& p : hand_surface.points)
        depth = std::max(depth, -object.signed_distance(p));
    return depth;
}

ContactMask contact_mask(const TriMesh& object, const PointCloud& hand_surface, double threshold) {
    if (object.vertices.empty() || hand_surface.points.empty())
        throw std::invalid_argument("contact_mask: empty input");
    SpatialIndex index(hand_surface);
    ContactMask mask;
    mask.threshold_mm = threshold;
    mask.flags.reserve(object.vertices.size());
    for (const auto& v : object.vertices)
        mask.flags.push_back(index.nearest(v).second < threshold ? 1 : 0);
    return mask;
}

double contact_iou(const ContactMask& a, const ContactMask& b) {
    if (a.flags.size() != b.flags.size())
        throw std::invalid_argument("contact_iou: mask length mismatch");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.flags.size(); ++i) {
        inter += a.flags[i] & b.flags[i];
        uni += a.flags[i] | b.flags[i];
    }
    return uni == 0 ? 1.0 : double(inter) / double(uni);
}

double contact_constraint_loss(const SdfSampleSet& samples, bool signed_sum) {
    if (samples.positions.size() != samples.signed_values.size() ||
        samples.positions.size() != samples.contact_states.size())
        throw std::invalid_argument("contact_constraint_loss: mismatched sample set");
    double loss = 0.0;
    for (std::size_t i = 0; i < samples.signed_values.size(); ++i) {
        if (!std::isfinite(samples.signed_values[i]))
            throw std::invalid_argument("contact_constraint_loss: non-finite signed value");
        if (samples.contact_states[i])
            loss += signed_sum ? samples.signed_values[i] : std::abs(samples.signed_values[i]);
    }
    return loss;
}

std::vector<uint8_t> label_contacts(const std::vector<Vec3>& positions,
                                    const PointCloud& active_sensors, double l_c) {
    if (!(l_c > 0.0)) throw std::invalid_argument("label_contacts: l_c must be > 0");
    std::vector<uint8_t> states(positions.size(), 0);
    if (active_sensors.points.empty()) return states;
    SpatialIndex index(active_sensors);
    for (std::size_t i = 0; i < positions.size(); ++i)
        states[i] = index.nearest(positions[i]).second < l_c ? 1 : 0;
    return states;
}

}  // namespace dff
