#include "rigidity/config.hpp"

#include <fstream>
#include <set>

#include "rigidity/errors.hpp"
#include "rigidity/io.hpp"
#include "rigidity/scalar_model.hpp"

namespace rigidity {

namespace {

using JsonIn = nlohmann::ordered_json;

const std::set<std::string> kKnownKeys = {
    "domain", "lx", "ly", "nx", "ny", "radius", "refinement", "mesh_file", "a", "q", "eps", "eps_grid",
    "n_starts", "seed", "threads", "newton_tol", "eig_tol", "diag_tol", "M_values", "start", "eps_lo",
    "eps_hi", "amplitude", "delta", "branch_steps", "green_samples", "output_dir"};

double get_number(const JsonIn& j, const std::string& key) {
  const auto& v = j.at(key);
  if (!v.is_number()) throw ValidationError("'" + key + "' must be a number");
  return v.get<double>();
}

int get_int(const JsonIn& j, const std::string& key) {
  const auto& v = j.at(key);
  if (!v.is_number_integer()) throw ValidationError("'" + key + "' must be an integer");
  return v.get<int>();
}

std::string get_string(const JsonIn& j, const std::string& key) {
  const auto& v = j.at(key);
  if (!v.is_string()) throw ValidationError("'" + key + "' must be a string");
  return v.get<std::string>();
}

std::vector<double> get_numbers(const JsonIn& j, const std::string& key) {
  const auto& v = j.at(key);
  if (!v.is_array()) throw ValidationError("'" + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ValidationError("'" + key + "' must be an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

}  // namespace

ExperimentConfig config_from_json(const JsonIn& j) {
  require(j.is_object(), "config must be a JSON object");
  for (const auto& [key, _] : j.items()) require(kKnownKeys.count(key) > 0, "unknown config key '" + key + "'");

  ExperimentConfig c;
  require(j.contains("domain"), "config must name a domain (rectangle, disk or mesh)");
  const std::string domain = get_string(j, "domain");
  if (domain == "rectangle") {
    c.domain = DomainKind::kRectangle;
    require(j.contains("nx") && j.contains("ny"), "rectangle domain needs nx and ny");
    c.nx = get_int(j, "nx");
    c.ny = get_int(j, "ny");
    if (j.contains("lx")) c.lx = get_number(j, "lx");
    if (j.contains("ly")) c.ly = get_number(j, "ly");
    require(c.nx >= 2 && c.ny >= 2, "nx and ny must be >= 2");
    require(c.lx > 0.0 && c.ly > 0.0, "lx and ly must be positive");
  } else if (domain == "disk") {
    c.domain = DomainKind::kDisk;
    require(j.contains("refinement"), "disk domain needs refinement");
    c.refinement = get_int(j, "refinement");
    if (j.contains("radius")) c.radius = get_number(j, "radius");
    require(c.refinement >= 1, "refinement must be >= 1");
    require(c.radius > 0.0, "radius must be positive");
  } else if (domain == "mesh") {
    c.domain = DomainKind::kMeshFile;
    require(j.contains("mesh_file"), "mesh domain needs mesh_file");
    c.mesh_file = get_string(j, "mesh_file");
  } else {
    throw ValidationError("domain must be rectangle, disk or mesh");
  }

  require(j.contains("a"), "config must set a");
  c.a = get_number(j, "a");
  require(c.a > 1.0, "a must exceed 1");
  if (j.contains("q")) c.q = get_number(j, "q");
  require(c.q > 2.0, "q must exceed 2");
  if (j.contains("eps")) {
    c.eps = get_number(j, "eps");
    require(*c.eps > 0.0, "eps must be positive");
  }
  if (j.contains("eps_grid")) {
    c.eps_grid = get_numbers(j, "eps_grid");
    require(!c.eps_grid.empty(), "eps_grid must not be empty");
    for (double e : c.eps_grid) require(e > 0.0, "eps_grid entries must be positive");
  }
  if (j.contains("n_starts")) c.n_starts = get_int(j, "n_starts");
  require(c.n_starts >= 1, "n_starts must be >= 1");
  if (j.contains("seed")) {
    require(j.at("seed").is_number_unsigned(), "'seed' must be a non-negative integer");
    c.seed = j.at("seed").get<unsigned long>();
  }
  if (j.contains("threads")) c.threads = get_int(j, "threads");
  require(c.threads >= 1, "threads must be >= 1");
  if (j.contains("newton_tol") && !j.at("newton_tol").is_null()) {
    c.newton_tol = get_number(j, "newton_tol");
    require(*c.newton_tol > 0.0, "newton_tol must be positive");
  }
  if (j.contains("eig_tol")) c.eig_tol = get_number(j, "eig_tol");
  require(c.eig_tol > 0.0, "eig_tol must be positive");
  if (j.contains("diag_tol") && !j.at("diag_tol").is_null()) {
    c.diag_tol = get_number(j, "diag_tol");
    require(*c.diag_tol > 0.0, "diag_tol must be positive");
  }
  if (j.contains("M_values")) {
    c.m_values = get_numbers(j, "M_values");
    for (double m : c.m_values) require(m > 0.0, "M_values entries must be positive");
  }
  if (j.contains("start")) c.start = get_string(j, "start");
  if (j.contains("eps_lo")) c.eps_lo = get_number(j, "eps_lo");
  if (j.contains("eps_hi")) c.eps_hi = get_number(j, "eps_hi");
  if (j.contains("amplitude")) c.amplitude = get_number(j, "amplitude");
  require(c.amplitude != 0.0, "amplitude must be nonzero");
  if (j.contains("delta")) c.delta = get_number(j, "delta");
  require(c.delta > 0.0 && c.delta < 1.0, "delta must lie in (0, 1)");
  if (j.contains("branch_steps")) c.branch_steps = get_int(j, "branch_steps");
  require(c.branch_steps >= 1, "branch_steps must be >= 1");
  if (j.contains("green_samples")) c.green_samples = get_int(j, "green_samples");
  require(c.green_samples >= 1, "green_samples must be >= 1");
  if (j.contains("output_dir")) c.output_dir = get_string(j, "output_dir");
  return c;
}

JsonIn config_to_json(const ExperimentConfig& c) {
  JsonIn j;
  switch (c.domain) {
    case DomainKind::kRectangle:
      j["domain"] = "rectangle";
      j["lx"] = c.lx;
      j["ly"] = c.ly;
      j["nx"] = c.nx;
      j["ny"] = c.ny;
      break;
    case DomainKind::kDisk:
      j["domain"] = "disk";
      j["radius"] = c.radius;
      j["refinement"] = c.refinement;
      break;
    case DomainKind::kMeshFile:
      j["domain"] = "mesh";
      j["mesh_file"] = c.mesh_file;
      break;
  }
  j["a"] = c.a;
  j["q"] = c.q;
  if (c.eps) j["eps"] = *c.eps;
  if (!c.eps_grid.empty()) j["eps_grid"] = c.eps_grid;
  j["n_starts"] = c.n_starts;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  if (c.newton_tol) j["newton_tol"] = *c.newton_tol;
  j["eig_tol"] = c.eig_tol;
  if (c.diag_tol) j["diag_tol"] = *c.diag_tol;
  j["M_values"] = c.m_values;
  j["start"] = c.start;
  if (c.eps_lo) j["eps_lo"] = *c.eps_lo;
  if (c.eps_hi) j["eps_hi"] = *c.eps_hi;
  j["amplitude"] = c.amplitude;
  j["delta"] = c.delta;
  j["branch_steps"] = c.branch_steps;
  j["green_samples"] = c.green_samples;
  j["output_dir"] = c.output_dir;
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  JsonIn j;
  try {
    j = JsonIn::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

Mesh build_mesh(const ExperimentConfig& c) {
  switch (c.domain) {
    case DomainKind::kRectangle: return build_rectangle_mesh(c.nx, c.ny, c.lx, c.ly);
    case DomainKind::kDisk: return build_disk_mesh(c.refinement, c.radius);
    case DomainKind::kMeshFile: return read_mesh_file(c.mesh_file);
  }
  throw ValidationError("unknown domain");
}

}  // namespace rigidity
