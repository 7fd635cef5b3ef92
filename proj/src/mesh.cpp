#include "rigidity/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <utility>

#include <Eigen/SparseCore>

#include "rigidity/errors.hpp"

namespace rigidity {

Eigen::VectorXd Mesh::x_coordinates() const {
  Eigen::VectorXd x(static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t i = 0; i < nodes.size(); ++i) x[static_cast<Eigen::Index>(i)] = nodes[i].x;
  return x;
}

Eigen::VectorXd Mesh::y_coordinates() const {
  Eigen::VectorXd y(static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t i = 0; i < nodes.size(); ++i) y[static_cast<Eigen::Index>(i)] = nodes[i].y;
  return y;
}

double Mesh::mesh_size() const {
  double h = 0.0;
  for (const auto& tri : triangles) {
    for (int e = 0; e < 3; ++e) {
      const Point& p = nodes[static_cast<std::size_t>(tri[e])];
      const Point& q = nodes[static_cast<std::size_t>(tri[(e + 1) % 3])];
      h = std::max(h, std::hypot(p.x - q.x, p.y - q.y));
    }
  }
  return h;
}

double signed_area(const Mesh& mesh, const std::array<int, 3>& tri) {
  const Point& p0 = mesh.nodes[static_cast<std::size_t>(tri[0])];
  const Point& p1 = mesh.nodes[static_cast<std::size_t>(tri[1])];
  const Point& p2 = mesh.nodes[static_cast<std::size_t>(tri[2])];
  return 0.5 * ((p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y));
}

void finalize_mesh(Mesh& mesh) {
  const int n = static_cast<int>(mesh.nodes.size());
  if (n < 3 || mesh.triangles.empty()) throw ValidationError("mesh needs at least one triangle");
  std::map<std::pair<int, int>, int> edge_use;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int v : tri) {
      if (v < 0 || v >= n) {
        throw ValidationError("triangle " + std::to_string(t) + " references node out of range");
      }
    }
    if (!(signed_area(mesh, tri) > 0.0)) {
      throw ValidationError("triangle " + std::to_string(t) + " is inverted or degenerate");
    }
    for (int e = 0; e < 3; ++e) {
      const int p = tri[e];
      const int q = tri[(e + 1) % 3];
      ++edge_use[{std::min(p, q), std::max(p, q)}];
    }
  }
  std::vector<char> on_boundary(static_cast<std::size_t>(n), 0);
  for (const auto& [edge, count] : edge_use) {
    if (count > 2) throw ValidationError("non-conforming mesh: edge shared by more than two triangles");
    if (count == 1) {
      on_boundary[static_cast<std::size_t>(edge.first)] = 1;
      on_boundary[static_cast<std::size_t>(edge.second)] = 1;
    }
  }
  mesh.boundary_nodes.clear();
  for (int i = 0; i < n; ++i) {
    if (on_boundary[static_cast<std::size_t>(i)]) mesh.boundary_nodes.push_back(i);
  }
}

Mesh build_rectangle_mesh(int nx, int ny, double lx, double ly) {
  if (nx < 2 || ny < 2) throw ValidationError("rectangle mesh needs nx, ny >= 2");
  if (!(lx > 0.0) || !(ly > 0.0)) throw ValidationError("rectangle side lengths must be positive");

  Mesh mesh;
  mesh.nodes.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      // Exact endpoints so reflections map nodes onto nodes bit-for-bit.
      const double x = (i == nx) ? lx : lx * i / nx;
      const double y = (j == ny) ? ly : ly * j / ny;
      mesh.nodes.push_back({x, y});
    }
  }
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  mesh.triangles.reserve(static_cast<std::size_t>(2 * nx * ny));
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int n00 = id(i, j), n10 = id(i + 1, j), n01 = id(i, j + 1), n11 = id(i + 1, j + 1);
      const bool left = 2 * i + 1 < nx;
      const bool bottom = 2 * j + 1 < ny;
      if (left != bottom) {
        mesh.triangles.push_back({n00, n10, n11});
        mesh.triangles.push_back({n00, n11, n01});
      } else {
        mesh.triangles.push_back({n00, n10, n01});
        mesh.triangles.push_back({n10, n11, n01});
      }
    }
  }
  finalize_mesh(mesh);
  return mesh;
}

Mesh build_disk_mesh(int refinement, double radius) {
  if (refinement < 1) throw ValidationError("disk refinement must be >= 1");
  if (!(radius > 0.0)) throw ValidationError("disk radius must be positive");

  const int rings = 4 * refinement;
  Mesh mesh;
  mesh.nodes.push_back({0.0, 0.0});
  std::vector<int> ring_start(static_cast<std::size_t>(rings + 1), 0);
  for (int k = 1; k <= rings; ++k) {
    ring_start[static_cast<std::size_t>(k)] = static_cast<int>(mesh.nodes.size());
    const int count = 6 * k;
    const double r = radius * k / rings;
    for (int j = 0; j < count; ++j) {
      const double theta = 2.0 * std::numbers::pi * j / count;
      mesh.nodes.push_back({r * std::cos(theta), r * std::sin(theta)});
    }
  }

  auto push_ccw = [&mesh](std::array<int, 3> tri) {
    if (signed_area(mesh, tri) < 0.0) std::swap(tri[1], tri[2]);
    mesh.triangles.push_back(tri);
  };

  for (int j = 0; j < 6; ++j) push_ccw({0, 1 + j, 1 + (j + 1) % 6});

  // Zip neighbouring rings together in order of increasing angle.
  for (int k = 2; k <= rings; ++k) {
    const int n_in = 6 * (k - 1);
    const int n_out = 6 * k;
    const int in0 = ring_start[static_cast<std::size_t>(k - 1)];
    const int out0 = ring_start[static_cast<std::size_t>(k)];
    int i = 0;
    int j = 0;
    while (i < n_in || j < n_out) {
      // Compare next angles as fractions (i+1)/n_in vs (j+1)/n_out exactly.
      const bool advance_inner =
          i < n_in && (j == n_out || static_cast<long>(i + 1) * n_out <= static_cast<long>(j + 1) * n_in);
      if (advance_inner) {
        push_ccw({in0 + i % n_in, out0 + j % n_out, in0 + (i + 1) % n_in});
        ++i;
      } else {
        push_ccw({in0 + i % n_in, out0 + j % n_out, out0 + (j + 1) % n_out});
        ++j;
      }
    }
  }
  finalize_mesh(mesh);
  return mesh;
}

namespace {

double cross(const Point& o, const Point& a, const Point& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

std::vector<Point> convex_hull(std::vector<Point> pts) {
  std::sort(pts.begin(), pts.end(),
            [](const Point& p, const Point& q) { return p.x < q.x || (p.x == q.x && p.y < q.y); });
  if (pts.size() < 3) return pts;
  std::vector<Point> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Point& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

}  // namespace

DomainMetrics domain_metrics(const Mesh& mesh) {
  double area = 0.0;
  for (const auto& tri : mesh.triangles) area += signed_area(mesh, tri);
  const std::vector<Point> hull = convex_hull(mesh.nodes);
  double diameter = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    for (std::size_t j = i + 1; j < hull.size(); ++j) {
      diameter = std::max(diameter, std::hypot(hull[i].x - hull[j].x, hull[i].y - hull[j].y));
    }
  }
  return {area, diameter};
}

Eigen::Matrix3d local_stiffness(const Point& p0, const Point& p1, const Point& p2) {
  const double twice_area = (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
  // Gradient of barycentric i is the rotated opposite edge over twice the area.
  const std::array<Point, 3> p = {p0, p1, p2};
  Eigen::Matrix<double, 3, 2> grad;
  for (int i = 0; i < 3; ++i) {
    const Point& pj = p[static_cast<std::size_t>((i + 1) % 3)];
    const Point& pk = p[static_cast<std::size_t>((i + 2) % 3)];
    grad(i, 0) = (pj.y - pk.y) / twice_area;
    grad(i, 1) = (pk.x - pj.x) / twice_area;
  }
  return 0.5 * twice_area * (grad * grad.transpose());
}

DiscreteOperator assemble(const Mesh& mesh) {
  const auto n = static_cast<Eigen::Index>(mesh.nodes.size());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(9 * mesh.triangles.size());
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(n);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const double tri_area = signed_area(mesh, tri);
    if (!(tri_area > 0.0)) {
      throw ValidationError("cannot assemble: triangle " + std::to_string(t) + " is inverted");
    }
    const Eigen::Matrix3d local =
        local_stiffness(mesh.nodes[static_cast<std::size_t>(tri[0])], mesh.nodes[static_cast<std::size_t>(tri[1])],
                        mesh.nodes[static_cast<std::size_t>(tri[2])]);
    for (int i = 0; i < 3; ++i) {
      mass[tri[i]] += tri_area / 3.0;
      for (int j = 0; j < 3; ++j) triplets.emplace_back(tri[i], tri[j], local(i, j));
    }
  }
  CsrMatrix stiffness(n, n);
  stiffness.setFromTriplets(triplets.begin(), triplets.end());
  stiffness.makeCompressed();

  DiscreteOperator op;
  op.mesh = mesh;
  op.stiffness = SparseSym(std::move(stiffness));
  op.lumped_mass = std::move(mass);
  op.area = op.lumped_mass.sum();
  op.diameter = domain_metrics(mesh).diameter;
  op.h = mesh.mesh_size();
  return op;
}

}  // namespace rigidity
