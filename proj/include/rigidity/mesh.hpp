#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "rigidity/linalg.hpp"

namespace rigidity {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Conforming triangulation with counterclockwise triangles.
struct Mesh {
  std::vector<Point> nodes;
  std::vector<std::array<int, 3>> triangles;
  std::vector<int> boundary_nodes;  // sorted

  std::size_t num_nodes() const noexcept { return nodes.size(); }
  Eigen::VectorXd x_coordinates() const;
  Eigen::VectorXd y_coordinates() const;
  /// Longest edge.
  double mesh_size() const;
};

double signed_area(const Mesh& mesh, const std::array<int, 3>& tri);

/// Structured grid on [0, lx] x [0, ly]. Each cell is cut along a diagonal
/// whose orientation flips across the midlines, so the triangulation is
/// invariant under x -> lx - x and y -> ly - y when nx, ny are even.
Mesh build_rectangle_mesh(int nx, int ny, double lx, double ly);

/// Concentric-ring triangulation of the polygon inscribed in the disk of the
/// given radius centred at the origin. Uses 4 * refinement rings; ring k
/// carries 6k nodes.
Mesh build_disk_mesh(int refinement, double radius);

/// Recomputes boundary_nodes as the endpoints of edges used by one triangle
/// and validates orientation and conformity. Throws ValidationError.
void finalize_mesh(Mesh& mesh);

struct DomainMetrics {
  double area;
  double diameter;
};

/// Area is the sum of triangle areas; diameter is the largest distance
/// between convex-hull vertices of the node set.
DomainMetrics domain_metrics(const Mesh& mesh);

/// P1 Neumann stiffness matrix and row-sum lumped mass. Immutable once built.
struct DiscreteOperator {
  Mesh mesh;
  SparseSym stiffness;
  Eigen::VectorXd lumped_mass;
  double area = 0.0;
  double diameter = 0.0;
  double h = 0.0;

  Eigen::Index size() const noexcept { return lumped_mass.size(); }
};

/// Local P1 stiffness of one triangle (rows ordered as the triangle's nodes).
Eigen::Matrix3d local_stiffness(const Point& p0, const Point& p1, const Point& p2);

DiscreteOperator assemble(const Mesh& mesh);

}  // namespace rigidity
