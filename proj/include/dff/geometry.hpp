// Meshes, point clouds, spatial indexing, signed distance and the
// distance-based metrics shared by the rest of the library.
// All lengths are millimeters.

#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace dff {

using Vec3 = Eigen::Vector3d;

struct PointCloud {
    std::vector<Vec3> points;
};

struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;

    // Throws std::invalid_argument on bad indices, degenerate index
    // triples or non-finite coordinates.
    void validate() const;

    // Every edge shared by exactly two triangles, consistently oriented.
    bool is_watertight() const;

    Eigen::AlignedBox3d bounds() const;
};

// kd-tree over a fixed point set. Queries match a brute-force scan
// exactly; the ball query uses the closed-ball convention (<= radius).
class SpatialIndex {
  public:
    explicit SpatialIndex(PointCloud points);

    std::vector<int> ball_query(const Vec3& center, double radius) const;

    // Returns (index, distance). Ties broken toward the lowest index.
    std::pair<int, double> nearest(const Vec3& p) const;

    const PointCloud& points() const { return points_; }
    std::size_t size() const { return points_.points.size(); }

  private:
    struct Node {
        Eigen::AlignedBox3d box;
        int left = -1, right = -1;  // children, or -1 for leaves
        int begin = 0, end = 0;     // leaf range into order_
    };

    int build(int begin, int end);

    PointCloud points_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

SpatialIndex build_spatial_index(PointCloud points);

// Distance and inside/outside queries against one mesh. Unsigned
// distance runs on an AABB tree; the sign comes from the generalized
// winding number (solid-angle sum, threshold 0.5).
class MeshQuery {
  public:
    explicit MeshQuery(const TriMesh& mesh);

    double unsigned_distance(const Vec3& p) const;
    double winding_number(const Vec3& p) const;
    // Negative inside.
    double signed_distance(const Vec3& p) const;

    const TriMesh& mesh() const { return mesh_; }

  private:
    struct Node {
        Eigen::AlignedBox3d box;
        int left = -1, right = -1;
        int begin = 0, end = 0;
    };

    int build(int begin, int end);
    void nearest(int node, const Vec3& p, double& best) const;

    TriMesh mesh_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

// One-shot convenience; builds the acceleration structure per call.
double signed_distance(const TriMesh& mesh, const Vec3& p);

// Symmetric linear Chamfer distance:
// 0.5 * (mean_a min_b |a-b| + mean_b min_a |b-a|).
double chamfer_distance(const PointCloud& a, const PointCloud& b);

struct VoxelGrid {
    int resolution = 0;
    Eigen::AlignedBox3d bounds;
    std::vector<uint8_t> occupancy;  // resolution^3, x fastest

    bool occupied(int ix, int iy, int iz) const {
        return occupancy[(std::size_t(iz) * resolution + iy) * resolution + ix] != 0;
    }
};

// Rasterizes inside/outside at voxel centers over the given bounds.
VoxelGrid voxelize(const TriMesh& mesh, const Eigen::AlignedBox3d& bounds, int resolution);

// Shared bounds = union of both bounding boxes padded 5% per side.
double voxel_iou(const TriMesh& a, const TriMesh& b, int resolution);

// Closest point on a triangle to p.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

// ASCII OBJ with v/f records, 1-based indices.
TriMesh load_obj(const std::string& path);
void save_obj(const TriMesh& mesh, const std::string& path);

// Point clouds as OBJ v-records or CSV "x,y,z" (by extension).
PointCloud load_point_cloud(const std::string& path);
void save_point_cloud_csv(const PointCloud& cloud, const std::string& path);

}  // namespace dff
