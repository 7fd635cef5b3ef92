#include "rigidity/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "rigidity/errors.hpp"

namespace rigidity {

namespace {

void set_precision(std::ostream& out) { out << std::setprecision(std::numeric_limits<double>::max_digits10); }

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

void expect_keyword(std::istream& in, const std::string& keyword) {
  std::string word;
  if (!(in >> word) || word != keyword) throw IoError("expected '" + keyword + "' in input");
}

// JSON has no representation for non-finite numbers.
Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

}  // namespace

void write_mesh(std::ostream& out, const Mesh& mesh) {
  set_precision(out);
  out << "nodes " << mesh.nodes.size() << '\n';
  for (const Point& p : mesh.nodes) out << p.x << ' ' << p.y << '\n';
  out << "triangles " << mesh.triangles.size() << '\n';
  for (const auto& t : mesh.triangles) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

Mesh read_mesh(std::istream& in) {
  Mesh mesh;
  long count = -1;
  expect_keyword(in, "nodes");
  if (!(in >> count) || count < 3) throw IoError("bad node count in mesh file");
  mesh.nodes.resize(static_cast<std::size_t>(count));
  for (auto& p : mesh.nodes) {
    if (!(in >> p.x >> p.y)) throw IoError("truncated node list in mesh file");
  }
  expect_keyword(in, "triangles");
  if (!(in >> count) || count < 1) throw IoError("bad triangle count in mesh file");
  mesh.triangles.resize(static_cast<std::size_t>(count));
  for (auto& t : mesh.triangles) {
    if (!(in >> t[0] >> t[1] >> t[2])) throw IoError("truncated triangle list in mesh file");
  }
  finalize_mesh(mesh);
  return mesh;
}

void write_mesh_file(const std::string& path, const Mesh& mesh) {
  auto out = open_out(path);
  write_mesh(out, mesh);
  if (!out) throw IoError("failed writing '" + path + "'");
}

Mesh read_mesh_file(const std::string& path) {
  auto in = open_in(path);
  return read_mesh(in);
}

void write_field(std::ostream& out, const FieldFile& field) {
  set_precision(out);
  out << "field " << field.values.size() << " epsilon " << field.epsilon << " a " << field.a << '\n';
  for (Eigen::Index i = 0; i < field.values.size(); ++i) out << field.values[i] << '\n';
}

FieldFile read_field(std::istream& in) {
  FieldFile field;
  long count = -1;
  expect_keyword(in, "field");
  if (!(in >> count) || count < 1) throw IoError("bad value count in field file");
  expect_keyword(in, "epsilon");
  if (!(in >> field.epsilon)) throw IoError("bad epsilon in field file header");
  expect_keyword(in, "a");
  if (!(in >> field.a)) throw IoError("bad a in field file header");
  field.values.resize(count);
  for (long i = 0; i < count; ++i) {
    if (!(in >> field.values[i])) {
      throw IoError("field file truncated: expected " + std::to_string(count) + " values, read " +
                    std::to_string(i));
    }
  }
  return field;
}

void write_field_file(const std::string& path, const FieldFile& field) {
  auto out = open_out(path);
  write_field(out, field);
  if (!out) throw IoError("failed writing '" + path + "'");
}

FieldFile read_field_file(const std::string& path) {
  auto in = open_in(path);
  return read_field(in);
}

void write_text_file(const std::string& path, const std::string& contents) {
  auto out = open_out(path);
  out << contents;
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::string classification_name(const Classification& c) {
  return is_constant(c) ? "constant" : "nonconstant";
}

Json to_json(const ConstantChain& chain) {
  Json j;
  j["a"] = chain.a;
  j["q"] = chain.q;
  j["area"] = chain.area;
  j["diameter"] = chain.diameter;
  j["xi_a"] = chain.xi_a;
  j["c0"] = chain.c0;
  j["c1"] = chain.c1;
  j["eps0"] = chain.eps0;
  j["c2_bound"] = chain.c2_bound;
  j["k_green"] = chain.k_green ? Json(*chain.k_green) : Json(nullptr);
  return j;
}

Json to_json(const EigenPair& pair) {
  Json j;
  j["mu1"] = pair.mu1;
  j["mu2"] = number(pair.mu2);
  j["degenerate"] = pair.degenerate;
  j["multiplicity"] = pair.multiplicity;
  j["iterations"] = pair.iterations;
  return j;
}

Json to_json(const DiagnosticsReport& r) {
  Json j;
  j["zero_avg_residual"] = r.zero_avg_residual;
  j["zero_avg_pass"] = r.zero_avg_pass;
  j["l1_norm_f"] = r.l1_norm_f;
  j["l1_bound"] = r.l1_bound;
  j["l1_pass"] = r.l1_pass;
  j["mean_u"] = r.mean_u;
  j["mean_in_bounds"] = r.mean_in_bounds;
  j["q"] = r.q;
  j["exp_integral_q"] = number(r.exp_integral_q);
  j["exp_reference"] = r.exp_reference;
  j["exp_overflow"] = r.exp_overflow;
  j["energy_lhs"] = r.energy_lhs;
  j["energy_rhs"] = r.energy_rhs;
  j["energy_pass"] = r.energy_pass;
  j["poincare_ratio"] = r.poincare_ratio ? Json(*r.poincare_ratio) : Json(nullptr);
  j["poincare_pass"] = r.poincare_pass ? Json(*r.poincare_pass) : Json(nullptr);
  j["representation_error"] = r.representation_error;
  j["representation_pass"] = r.representation_pass;
  j["sup_norm"] = r.sup_norm;
  j["all_pass"] = r.all_pass();
  return j;
}

Json to_json(const GreenEstimate& est) {
  Json j;
  j["k_green_est"] = est.k_green_est;
  j["c2_est"] = est.c2_est;
  j["c2_bound"] = est.c2_bound;
  j["cq_estimate"] = number(est.cq_estimate);
  j["cq_note"] = "numerical estimate, not a certified constant";
  j["sources"] = est.sources;
  return j;
}

Json to_json(const SolutionRecord& rec) {
  Json j;
  j["epsilon"] = rec.epsilon;
  j["a"] = rec.a;
  j["residual_norm"] = rec.residual_norm;
  j["newton_iters"] = rec.newton_iters;
  j["classification"] = classification_name(rec.classification);
  if (const auto* c = std::get_if<Constant>(&rec.classification)) {
    j["value"] = c->value;
  } else {
    j["sup_fluct"] = std::get<Nonconstant>(rec.classification).sup_fluct;
  }
  j["mean"] = rec.mean;
  j["fluctuation"] = rec.sup_fluct;
  j["diagnostics"] = rec.diagnostics ? to_json(*rec.diagnostics) : Json(nullptr);
  return j;
}

namespace {

Json branch_json(const std::vector<BranchPoint>& branch) {
  Json arr = Json::array();
  for (const auto& pt : branch) {
    Json p;
    p["epsilon"] = pt.epsilon;
    p["mean"] = pt.solution.mean;
    p["sup_fluct"] = pt.solution.sup_fluct;
    p["classification"] = classification_name(pt.solution.classification);
    p["stability_indicator"] = pt.stability_indicator;
    p["residual_norm"] = pt.solution.residual_norm;
    arr.push_back(std::move(p));
  }
  return arr;
}

}  // namespace

Json to_json(const BifurcationReport& r) {
  Json j;
  j["a"] = r.a;
  j["mu1"] = r.mu1;
  j["degenerate"] = r.degenerate;
  j["multiplicity"] = r.multiplicity;
  j["eigenvector_choice"] = r.eigenvector_choice;
  j["eps_star_detected"] = r.eps_star_detected;
  j["eps_star_predicted"] = r.eps_star_predicted;
  j["relative_gap"] = r.relative_gap;
  j["switch_epsilon"] = r.switch_epsilon;
  j["switch_amplitude"] = r.switch_amplitude;
  j["branch"] = branch_json(r.branch);
  j["closure"] = branch_json(r.closure);
  return j;
}

void write_batch_csv(std::ostream& out, double eps, const MultiStartResult& run, bool header) {
  set_precision(out);
  if (header) out << "epsilon,start_id,converged,classification,mean,sup_fluct,residual_norm,iters,failure\n";
  for (const auto& o : run.outcomes) {
    out << eps << ',' << o.start_id << ',' << (o.converged ? 1 : 0) << ',';
    if (o.converged) {
      const SolutionRecord& rec = *o.record;
      out << classification_name(rec.classification) << ',' << rec.mean << ',' << rec.sup_fluct << ','
          << rec.residual_norm << ',' << rec.newton_iters << ",\n";
    } else {
      std::string reason = o.failure;
      std::replace(reason.begin(), reason.end(), ',', ';');
      out << "failed,,,,," << reason << '\n';
    }
  }
}

void write_branch_csv(std::ostream& out, const std::vector<BranchPoint>& branch) {
  set_precision(out);
  out << "epsilon,mean,sup_fluct,stability_indicator,residual_norm\n";
  for (const auto& pt : branch) {
    out << pt.epsilon << ',' << pt.solution.mean << ',' << pt.solution.sup_fluct << ','
        << pt.stability_indicator << ',' << pt.solution.residual_norm << '\n';
  }
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  set_precision(out);
  out << "epsilon,n_distinct,any_nonconstant,n_converged,n_failed,max_sup_norm,max_exp_integral\n";
  for (const auto& r : rows) {
    out << r.epsilon << ',' << r.n_distinct << ',' << (r.any_nonconstant ? 1 : 0) << ',' << r.n_converged << ','
        << r.n_failed << ',' << r.max_sup_norm << ',' << r.max_exp_integral << '\n';
  }
}

void write_suite_csv(std::ostream& out, const SweepResult& sweep) {
  set_precision(out);
  out << "epsilon,solution,classification,zero_avg_pass,l1_pass,mean_in_bounds,energy_pass,"
         "representation_pass,l1_norm_f,exp_integral_q,sup_norm\n";
  for (std::size_t i = 0; i < sweep.rows.size(); ++i) {
    const auto& sols = sweep.runs[i].solutions;
    for (std::size_t k = 0; k < sols.size(); ++k) {
      const auto& rec = sols[k];
      if (!rec.diagnostics) continue;
      const auto& d = *rec.diagnostics;
      out << sweep.rows[i].epsilon << ',' << k << ',' << classification_name(rec.classification) << ','
          << d.zero_avg_pass << ',' << d.l1_pass << ',' << d.mean_in_bounds << ',' << d.energy_pass << ','
          << d.representation_pass << ',' << d.l1_norm_f << ',' << d.exp_integral_q << ',' << d.sup_norm << '\n';
    }
  }
}

}  // namespace rigidity
