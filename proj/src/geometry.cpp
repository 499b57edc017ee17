#include "dff/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace dff {

namespace {
constexpr int kLeafSize = 8;

bool finite(const Vec3& v) {
    return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z());
}
}  // namespace

void TriMesh::validate() const {
    const int n = static_cast<int>(vertices.size());
    for (const auto& v : vertices)
        if (!finite(v)) throw std::invalid_argument("non-finite vertex coordinate");
    for (const auto& t : triangles) {
        for (int idx : t)
            if (idx < 0 || idx >= n) throw std::invalid_argument("triangle index out of range");
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
            throw std::invalid_argument("degenerate triangle with repeated index");
    }
}

bool TriMesh::is_watertight() const {
    // Directed edge (a,b) must be matched by exactly one (b,a).
    std::vector<std::pair<int64_t, int>> edges;
    edges.reserve(triangles.size() * 3);
    const int64_t n = static_cast<int64_t>(vertices.size());
    for (const auto& t : triangles)
        for (int e = 0; e < 3; ++e) {
            int a = t[e], b = t[(e + 1) % 3];
            edges.emplace_back(int64_t(a) * n + b, 1);
        }
    std::sort(edges.begin(), edges.end());
    for (std::size_t i = 0; i + 1 < edges.size(); ++i)
        if (edges[i].first == edges[i + 1].first) return false;  // duplicated directed edge
    for (const auto& [key, c] : edges) {
        int64_t a = key / n, b = key % n;
        int64_t twin = b * n + a;
        auto it = std::lower_bound(edges.begin(), edges.end(), std::make_pair(twin, 0));
        if (it == edges.end() || it->first != twin) return false;
    }
    return true;
}

Eigen::AlignedBox3d TriMesh::bounds() const {
    Eigen::AlignedBox3d box;
    for (const auto& v : vertices) box.extend(v);
    return box;
}

// ---------------------------------------------------------------- kd-tree

SpatialIndex::SpatialIndex(PointCloud points) : points_(std::move(points)) {
    if (points_.points.empty()) throw std::invalid_argument("empty point set");
    for (const auto& p : points_.points)
        if (!finite(p)) throw std::invalid_argument("non-finite point");
    order_.resize(points_.points.size());
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.reserve(2 * points_.points.size() / kLeafSize + 4);
    root_ = build(0, static_cast<int>(order_.size()));
}

int SpatialIndex::build(int begin, int end) {
    Node node;
    node.begin = begin;
    node.end = end;
    for (int i = begin; i < end; ++i) node.box.extend(points_.points[order_[i]]);
    int id = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    if (end - begin > kLeafSize) {
        int axis;
        node.box.sizes().maxCoeff(&axis);
        int mid = (begin + end) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](int a, int b) { return points_.points[a][axis] < points_.points[b][axis]; });
        int l = build(begin, mid);
        int r = build(mid, end);
        nodes_[id].left = l;
        nodes_[id].right = r;
    }
    return id;
}

std::vector<int> SpatialIndex::ball_query(const Vec3& center, double radius) const {
    if (!(radius > 0.0)) throw std::invalid_argument("ball_query radius must be positive");
    std::vector<int> out;
    std::vector<int> stack{root_};
    const double r2 = radius * radius;
    while (!stack.empty()) {
        const Node& n = nodes_[stack.back()];
        stack.pop_back();
        if (n.box.squaredExteriorDistance(center) > r2) continue;
        if (n.left < 0) {
            for (int i = n.begin; i < n.end; ++i) {
                int idx = order_[i];
                if ((points_.points[idx] - center).squaredNorm() <= r2) out.push_back(idx);
            }
        } else {
            stack.push_back(n.left);
            stack.push_back(n.right);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::pair<int, double> SpatialIndex::nearest(const Vec3& p) const {
    int best = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    std::vector<int> stack{root_};
    while (!stack.empty()) {
        const Node& n = nodes_[stack.back()];
        stack.pop_back();
        if (n.box.squaredExteriorDistance(p) >= best_d2) continue;
        if (n.left < 0) {
            for (int i = n.begin; i < n.end; ++i) {
                int idx = order_[i];
                double d2 = (points_.points[idx] - p).squaredNorm();
                if (d2 < best_d2 || (d2 == best_d2 && idx < best)) {
                    best_d2 = d2;
                    best = idx;
                }
            }
        } else {
            // Visit the closer child first.
            int a = n.left, b = n.right;
            if (nodes_[a].box.squaredExteriorDistance(p) > nodes_[b].box.squaredExteriorDistance(p))
                std::swap(a, b);
            stack.push_back(b);
            stack.push_back(a);
        }
    }
    return {best, std::sqrt(best_d2)};
}

SpatialIndex build_spatial_index(PointCloud points) { return SpatialIndex(std::move(points)); }

// ------------------------------------------------------------- triangles

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    // Ericson, Real-Time Collision Detection, 5.1.5.
    Vec3 ab = b - a, ac = c - a, ap = p - a;
    double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return a;

    Vec3 bp = p - b;
    double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return b;

    double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + ab * (d1 / (d1 - d3));

    Vec3 cp = p - c;
    double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return c;

    double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + ac * (d2 / (d2 - d6));

    double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }

    double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

MeshQuery::MeshQuery(const TriMesh& mesh) : mesh_(mesh) {
    mesh_.validate();
    if (mesh_.triangles.empty()) throw std::invalid_argument("degenerate mesh: zero triangles");
    order_.resize(mesh_.triangles.size());
    std::iota(order_.begin(), order_.end(), 0);
    root_ = build(0, static_cast<int>(order_.size()));
}

int MeshQuery::build(int begin, int end) {
    Node node;
    node.begin = begin;
    node.end = end;
    for (int i = begin; i < end; ++i)
        for (int k = 0; k < 3; ++k) node.box.extend(mesh_.vertices[mesh_.triangles[order_[i]][k]]);
    int id = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    if (end - begin > 4) {
        int axis;
        node.box.sizes().maxCoeff(&axis);
        auto centroid = [&](int t) {
            const auto& tri = mesh_.triangles[t];
            return (mesh_.vertices[tri[0]][axis] + mesh_.vertices[tri[1]][axis] +
                    mesh_.vertices[tri[2]][axis]) / 3.0;
        };
        int mid = (begin + end) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](int a, int b) { return centroid(a) < centroid(b); });
        int l = build(begin, mid);
        int r = build(mid, end);
        nodes_[id].left = l;
        nodes_[id].right = r;
    }
    return id;
}

void MeshQuery::nearest(int node_id, const Vec3& p, double& best) const {
    const Node& n = nodes_[node_id];
    if (n.box.squaredExteriorDistance(p) >= best * best) return;
    if (n.left < 0) {
        for (int i = n.begin; i < n.end; ++i) {
            const auto& t = mesh_.triangles[order_[i]];
            Vec3 q = closest_point_on_triangle(p, mesh_.vertices[t[0]], mesh_.vertices[t[1]],
                                               mesh_.vertices[t[2]]);
            best = std::min(best, (q - p).norm());
        }
    } else {
        int a = n.left, b = n.right;
        if (nodes_[a].box.squaredExteriorDistance(p) > nodes_[b].box.squaredExteriorDistance(p))
            std::swap(a, b);
        nearest(a, p, best);
        nearest(b, p, best);
    }
}

double MeshQuery::unsigned_distance(const Vec3& p) const {
    double best = std::numeric_limits<double>::infinity();
    nearest(root_, p, best);
    return best;
}

double MeshQuery::winding_number(const Vec3& p) const {
    // Solid-angle sum (van Oosterom & Strackee).
    double total = 0.0;
    for (const auto& t : mesh_.triangles) {
        Vec3 a = mesh_.vertices[t[0]] - p;
        Vec3 b = mesh_.vertices[t[1]] - p;
        Vec3 c = mesh_.vertices[t[2]] - p;
        double la = a.norm(), lb = b.norm(), lc = c.norm();
        double det = a.dot(b.cross(c));
        double denom = la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
        total += 2.0 * std::atan2(det, denom);
    }
    return total / (4.0 * std::numbers::pi);
}

double MeshQuery::signed_distance(const Vec3& p) const {
    double d = unsigned_distance(p);
    return winding_number(p) > 0.5 ? -d : d;
}

double signed_distance(const TriMesh& mesh, const Vec3& p) {
    return MeshQuery(mesh).signed_distance(p);
}

// --------------------------------------------------------------- chamfer

double chamfer_distance(const PointCloud& a, const PointCloud& b) {
    if (a.points.empty() || b.points.empty())
        throw std::invalid_argument("chamfer_distance: empty point cloud");
    SpatialIndex ia(a), ib(b);
    double sum_ab = 0.0, sum_ba = 0.0;
    for (const auto& p : a.points) sum_ab += ib.nearest(p).second;
    for (const auto& p : b.points) sum_ba += ia.nearest(p).second;
    return 0.5 * (sum_ab / a.points.size() + sum_ba / b.points.size());
}

// ------------------------------------------------------------- voxel IoU

VoxelGrid voxelize(const TriMesh& mesh, const Eigen::AlignedBox3d& bounds, int resolution) {
    mesh.validate();
    if (mesh.triangles.empty()) throw std::invalid_argument("degenerate mesh: zero triangles");
    if (resolution < 2) throw std::invalid_argument("voxel resolution must be >= 2");
    if ((bounds.max().array() <= bounds.min().array()).any())
        throw std::invalid_argument("voxel bounds must be well-ordered");

    VoxelGrid grid;
    grid.resolution = resolution;
    grid.bounds = bounds;
    grid.occupancy.assign(std::size_t(resolution) * resolution * resolution, 0);

    const Vec3 cell = bounds.sizes() / resolution;
    // Tiny fixed offset keeps ray columns off exact edges/vertices of
    // axis-aligned input geometry. The two factors are deliberately
    // incommensurate so the offset cannot slide along a projected
    // diagonal edge (with square cells, equal offsets would).
    const double jx = 1e-7 * cell.x(), jy = 2.6180339887e-7 * cell.y();

    // Per (x,y) column: signed +z ray crossings. Winding at a center is
    // the signed count of crossings above it.
    std::vector<std::vector<std::pair<double, int>>> columns(std::size_t(resolution) * resolution);
    for (const auto& t : mesh.triangles) {
        const Vec3& a = mesh.vertices[t[0]];
        const Vec3& b = mesh.vertices[t[1]];
        const Vec3& c = mesh.vertices[t[2]];
        double minx = std::min({a.x(), b.x(), c.x()}), maxx = std::max({a.x(), b.x(), c.x()});
        double miny = std::min({a.y(), b.y(), c.y()}), maxy = std::max({a.y(), b.y(), c.y()});
        int ix0 = std::max(0, int(std::floor((minx - bounds.min().x()) / cell.x() - 0.5)));
        int ix1 = std::min(resolution - 1, int(std::ceil((maxx - bounds.min().x()) / cell.x())));
        int iy0 = std::max(0, int(std::floor((miny - bounds.min().y()) / cell.y() - 0.5)));
        int iy1 = std::min(resolution - 1, int(std::ceil((maxy - bounds.min().y()) / cell.y())));
        for (int iy = iy0; iy <= iy1; ++iy) {
            double cy = bounds.min().y() + (iy + 0.5) * cell.y() + jy;
            for (int ix = ix0; ix <= ix1; ++ix) {
                double cx = bounds.min().x() + (ix + 0.5) * cell.x() + jx;
                // 2D barycentric test in the xy projection.
                double d00x = b.x() - a.x(), d00y = b.y() - a.y();
                double d01x = c.x() - a.x(), d01y = c.y() - a.y();
                double area2 = d00x * d01y - d00y * d01x;
                if (area2 == 0.0) continue;
                double px = cx - a.x(), py = cy - a.y();
                double u = (px * d01y - py * d01x) / area2;
                double v = (d00x * py - d00y * px) / area2;
                if (u < 0.0 || v < 0.0 || u + v > 1.0) continue;
                double z = a.z() + u * (b.z() - a.z()) + v * (c.z() - a.z());
                columns[std::size_t(iy) * resolution + ix].emplace_back(z, area2 > 0.0 ? 1 : -1);
            }
        }
    }

    for (int iy = 0; iy < resolution; ++iy)
        for (int ix = 0; ix < resolution; ++ix) {
            auto& col = columns[std::size_t(iy) * resolution + ix];
            if (col.empty()) continue;
            std::sort(col.begin(), col.end());
            for (int iz = 0; iz < resolution; ++iz) {
                double cz = bounds.min().z() + (iz + 0.5) * cell.z();
                int winding = 0;
                for (auto it = col.rbegin(); it != col.rend() && it->first > cz; ++it)
                    winding += it->second;
                if (winding >= 1)
                    grid.occupancy[(std::size_t(iz) * resolution + iy) * resolution + ix] = 1;
            }
        }
    return grid;
}

double voxel_iou(const TriMesh& a, const TriMesh& b, int resolution) {
    Eigen::AlignedBox3d box = a.bounds();
    box.extend(b.bounds());
    Vec3 pad = box.sizes() * 0.05;
    box.min() -= pad;
    box.max() += pad;
    VoxelGrid ga = voxelize(a, box, resolution);
    VoxelGrid gb = voxelize(b, box, resolution);
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < ga.occupancy.size(); ++i) {
        inter += ga.occupancy[i] & gb.occupancy[i];
        uni += ga.occupancy[i] | gb.occupancy[i];
    }
    return uni == 0 ? 0.0 : double(inter) / double(uni);
}

// ------------------------------------------------------------------- io

TriMesh load_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open OBJ file: " + path);
    TriMesh mesh;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "v") {
            Vec3 v;
            ss >> v.x() >> v.y() >> v.z();
            mesh.vertices.push_back(v);
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string tok;
            while (ss >> tok) {
                // "i", "i/j", "i/j/k" forms; only the vertex index matters.
                idx.push_back(std::stoi(tok.substr(0, tok.find('/'))) - 1);
            }
            if (idx.size() < 3) throw std::runtime_error("OBJ face with < 3 vertices: " + path);
            for (std::size_t k = 1; k + 1 < idx.size(); ++k)
                mesh.triangles.push_back({idx[0], idx[k], idx[k + 1]});
        }
    }
    mesh.validate();
    return mesh;
}

void save_obj(const TriMesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write OBJ file: " + path);
    char buf[160];
    for (const auto& v : mesh.vertices) {
        std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", v.x(), v.y(), v.z());
        out << buf;
    }
    for (const auto& t : mesh.triangles)
        out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

PointCloud load_point_cloud(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open point cloud file: " + path);
    PointCloud cloud;
    std::string line;
    bool csv = path.size() >= 4 && path.substr(path.size() - 4) == ".csv";
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (csv) {
            std::replace(line.begin(), line.end(), ',', ' ');
            std::istringstream ss(line);
            Vec3 p;
            if (ss >> p.x() >> p.y() >> p.z()) cloud.points.push_back(p);
        } else {
            std::istringstream ss(line);
            std::string tag;
            ss >> tag;
            if (tag != "v") continue;
            Vec3 p;
            ss >> p.x() >> p.y() >> p.z();
            cloud.points.push_back(p);
        }
    }
    return cloud;
}

void save_point_cloud_csv(const PointCloud& cloud, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write point cloud file: " + path);
    char buf[160];
    for (const auto& p : cloud.points) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.x(), p.y(), p.z());
        out << buf;
    }
}

}  // namespace dff
