#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rigidity/mesh.hpp"

namespace rigidity {

enum class DomainKind { kRectangle, kDisk, kMeshFile };

/// Flat JSON experiment description. `a` and the domain have no defaults;
/// commands that need eps or eps_grid reject a config without them.
struct ExperimentConfig {
  DomainKind domain = DomainKind::kRectangle;
  double lx = 1.0, ly = 1.0;
  int nx = 0, ny = 0;
  double radius = 1.0;
  int refinement = 0;
  std::string mesh_file;

  double a = 0.0;
  double q = 4.0;
  std::optional<double> eps;
  std::vector<double> eps_grid;
  int n_starts = 50;
  unsigned long seed = 1;
  int threads = 1;

  std::optional<double> newton_tol;  // default 1e-10 (1 + |Omega|)
  double eig_tol = 1e-11;
  std::optional<double> diag_tol;    // representation tolerance; default 100 x newton tol

  std::vector<double> m_values = {2.0};
  std::string start = "const:xi";
  std::optional<double> eps_lo, eps_hi;
  double amplitude = 0.3;  // branch-switch amplitude relative to xi_a
  double delta = 0.05;
  int branch_steps = 10;
  int green_samples = 8;
  std::string output_dir = "out";

  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses and validates; throws ValidationError naming the violated constraint.
ExperimentConfig config_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::string& path);

/// Builds the mesh the config describes (reads the mesh file if needed).
Mesh build_mesh(const ExperimentConfig& config);

}  // namespace rigidity
