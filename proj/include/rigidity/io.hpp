#pragma once

// Plain-text mesh and field files, CSV tables and JSON views of results.
//
// Mesh file:   "nodes <n>", n lines "x y", "triangles <t>", t lines "i j k" (0-based).
// Field file:  "field <n> epsilon <eps> a <a>", then n lines with one value each.

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "rigidity/continuation.hpp"
#include "rigidity/diagnostics.hpp"
#include "rigidity/mesh.hpp"
#include "rigidity/newton.hpp"
#include "rigidity/scalar_model.hpp"

namespace rigidity {

using Json = nlohmann::ordered_json;

void write_mesh(std::ostream& out, const Mesh& mesh);
Mesh read_mesh(std::istream& in);
void write_mesh_file(const std::string& path, const Mesh& mesh);
Mesh read_mesh_file(const std::string& path);

struct FieldFile {
  Vec values;
  double epsilon = 0.0;
  double a = 0.0;
};

void write_field(std::ostream& out, const FieldFile& field);
FieldFile read_field(std::istream& in);
void write_field_file(const std::string& path, const FieldFile& field);
FieldFile read_field_file(const std::string& path);

void write_text_file(const std::string& path, const std::string& contents);

std::string classification_name(const Classification& c);

Json to_json(const ConstantChain& chain);
Json to_json(const EigenPair& pair);
Json to_json(const DiagnosticsReport& report);
Json to_json(const GreenEstimate& est);
/// Summary of a record; the field itself goes to a field file.
Json to_json(const SolutionRecord& record);
Json to_json(const BifurcationReport& report);

/// Columns: epsilon,start_id,converged,classification,mean,sup_fluct,residual_norm,iters
void write_batch_csv(std::ostream& out, double eps, const MultiStartResult& run, bool header = true);
/// Columns: epsilon,mean,sup_fluct,stability_indicator,residual_norm
void write_branch_csv(std::ostream& out, const std::vector<BranchPoint>& branch);
/// Columns: epsilon,n_distinct,any_nonconstant,n_converged,n_failed,max_sup_norm,max_exp_integral
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);
/// One row per distinct solution with its diagnostics pass flags.
void write_suite_csv(std::ostream& out, const SweepResult& sweep);

}  // namespace rigidity
