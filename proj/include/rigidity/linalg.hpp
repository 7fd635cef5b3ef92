#pragma once

// Sparse symmetric storage, solves restricted to the Neumann mean-zero
// subspace {x : sum_i m_i x_i = 0}, and the first nonzero eigenpair of the
// pencil A x = mu M x with M = diag(m).

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

namespace rigidity {

using Vec = Eigen::VectorXd;
using CsrMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Compressed-sparse-row symmetric matrix. Symmetry is verified on
/// construction against the transpose.
class SparseSym {
 public:
  SparseSym() = default;
  explicit SparseSym(CsrMatrix matrix, double symmetry_tol = 1e-14);

  const CsrMatrix& matrix() const noexcept { return matrix_; }
  Eigen::Index rows() const noexcept { return matrix_.rows(); }
  Vec diagonal() const { return matrix_.diagonal(); }
  Vec operator*(const Vec& x) const { return matrix_ * x; }

 private:
  CsrMatrix matrix_;
};

double weighted_sum(const Vec& x, const Vec& m);
double weighted_mean(const Vec& x, const Vec& m);
/// sqrt(sum m_i x_i^2).
double weighted_norm(const Vec& x, const Vec& m);

/// x minus its mass-weighted mean.
Vec project_mean_zero(const Vec& x, const Vec& m);

struct SolveStats {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Solves A x = b for the weighted-mean-zero x. b is a load vector; it is
/// made compatible first (b - m * sum(b) / sum(m), the discrete analogue of
/// removing its average) and the residual is measured against that.
/// Diagonally preconditioned CG with the preconditioned residual re-projected
/// onto the mean-zero subspace every iteration. Throws NoConvergence after
/// max_iter iterations (default 10 n).
Vec solve_projected(const SparseSym& a, const Vec& m, const Vec& b, double tol,
                    int max_iter = -1, SolveStats* stats = nullptr);

/// Direct solver for K restricted to the mean-zero subspace: factorizes the
/// bordered matrix [[K, m], [m^T, 0]] so that solve(r) returns the x with
/// sum m_i x_i = 0 and K x - r in span(m).
class BorderedSolver {
 public:
  BorderedSolver(const CsrMatrix& k, const Vec& m);

  /// Refactors for a new K with the same sparsity pattern and the same m,
  /// reusing the symbolic analysis.
  void refactor(const CsrMatrix& k);

  bool ok() const noexcept { return ok_; }
  /// Returns x and writes the multiplier of m into *multiplier when given.
  /// LDL^T first; a pivoted LU is used when its residual is poor.
  Vec solve(const Vec& rhs, double* multiplier = nullptr) const;

 private:
  void build(const CsrMatrix& k);
  void factorize();

  Vec m_;
  Eigen::SparseMatrix<double> bordered_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
  mutable std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>> lu_;
  Eigen::Index n_ = 0;
  bool analyzed_ = false;
  bool ldlt_ok_ = false;
  bool ok_ = false;
};

struct EigenOptions {
  double tol = 1e-11;           // relative Rayleigh-quotient stagnation
  int block = 3;                // subspace size
  int max_iter = 500;
  double solve_tol = 1e-12;     // inner CG tolerance
  unsigned seed = 12345;        // for the random start vectors
  /// Used to choose phi1 inside a degenerate eigenspace and to fix its sign.
  std::optional<Vec> preferred_direction;
  std::vector<Vec> start_vectors;  // optional explicit starts
};

struct EigenPair {
  double mu1 = 0.0;
  Vec phi1;             // weighted norm 1, weighted mean 0
  double mu2 = 0.0;     // next Ritz value in the block
  bool degenerate = false;
  int multiplicity = 1;
  int iterations = 0;
};

/// Smallest eigenvalues of (K, M) on the mean-zero subspace by block inverse
/// iteration. `apply_k` computes K x; `inverse` returns the mean-zero y with
/// K y - M x in span(m). Used for both the Laplacian and shifted Jacobians.
struct SubspaceResult {
  std::vector<double> values;  // ascending Ritz values
  std::vector<Vec> vectors;    // M-orthonormal
  int iterations = 0;
};

SubspaceResult subspace_inverse_iteration(const std::function<Vec(const Vec&)>& apply_k,
                                          const std::function<Vec(const Vec&)>& inverse,
                                          const Vec& m, const EigenOptions& opts,
                                          int converge_count = 2);

/// First nonzero Neumann eigenpair. Flags degeneracy when the second Ritz
/// value lies within 10 tol (relative) of the first; phi1 is then the
/// normalized projection of preferred_direction onto the eigenspace.
EigenPair smallest_nonzero_eigen(const SparseSym& a, const Vec& m, const EigenOptions& opts = {});

}  // namespace rigidity
