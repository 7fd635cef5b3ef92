#include "rigidity/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "rigidity/errors.hpp"

namespace rigidity {

SparseSym::SparseSym(CsrMatrix matrix, double symmetry_tol) : matrix_(std::move(matrix)) {
  if (matrix_.rows() != matrix_.cols()) throw ValidationError("SparseSym must be square");
  matrix_.makeCompressed();
  const CsrMatrix transpose = matrix_.transpose();
  const double scale = std::max(1.0, matrix_.coeffs().cwiseAbs().maxCoeff());
  const CsrMatrix diff = matrix_ - transpose;
  const double asym = diff.nonZeros() > 0 ? diff.coeffs().cwiseAbs().maxCoeff() : 0.0;
  if (asym > symmetry_tol * scale) {
    throw ValidationError("matrix is not symmetric (max |A - A^T| = " + std::to_string(asym) + ")");
  }
}

double weighted_sum(const Vec& x, const Vec& m) { return m.dot(x); }

double weighted_mean(const Vec& x, const Vec& m) { return m.dot(x) / m.sum(); }

double weighted_norm(const Vec& x, const Vec& m) { return std::sqrt(m.dot(x.cwiseAbs2())); }

Vec project_mean_zero(const Vec& x, const Vec& m) {
  return x.array() - weighted_mean(x, m);
}

namespace {

// Removes the component along m so that sum(r) = 0 (compatibility for A x = r).
void make_compatible(Vec& r, const Vec& m, double total_mass) {
  r -= m * (r.sum() / total_mass);
}

}  // namespace

Vec solve_projected(const SparseSym& a, const Vec& m, const Vec& b, double tol, int max_iter,
                    SolveStats* stats) {
  const Eigen::Index n = a.rows();
  if (b.size() != n || m.size() != n) throw ValidationError("solve_projected: dimension mismatch");
  if (!(tol > 0.0)) throw ValidationError("solve_projected: tol must be positive");
  if (max_iter < 0) max_iter = static_cast<int>(10 * n);
  const double total_mass = m.sum();

  Vec rhs = b;
  make_compatible(rhs, m, total_mass);
  const double rhs_norm = rhs.norm();
  Vec x = Vec::Zero(n);
  if (stats) *stats = {};
  if (rhs_norm == 0.0) return x;

  Vec inv_diag = a.diagonal();
  for (Eigen::Index i = 0; i < n; ++i) inv_diag[i] = inv_diag[i] != 0.0 ? 1.0 / inv_diag[i] : 1.0;

  Vec r = rhs;
  Vec z = project_mean_zero(inv_diag.cwiseProduct(r), m);
  Vec p = z;
  double rz = r.dot(z);
  Vec ap(n);
  for (int it = 1; it <= max_iter; ++it) {
    ap.noalias() = a.matrix() * p;
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) break;
    const double alpha = rz / pap;
    x += alpha * p;
    r -= alpha * ap;
    make_compatible(r, m, total_mass);
    if (r.norm() <= tol * rhs_norm) {
      // Confirm against the true residual; restart from it when they disagree.
      Vec true_r = rhs - a.matrix() * x;
      make_compatible(true_r, m, total_mass);
      const double rel = true_r.norm() / rhs_norm;
      if (rel <= tol) {
        if (stats) *stats = {it, rel};
        return project_mean_zero(x, m);
      }
      r = true_r;
      z = project_mean_zero(inv_diag.cwiseProduct(r), m);
      p = z;
      rz = r.dot(z);
      continue;
    }
    z = project_mean_zero(inv_diag.cwiseProduct(r), m);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  Vec true_r = rhs - a.matrix() * x;
  make_compatible(true_r, m, total_mass);
  throw NumericalError(NumericalFailure::kNoConvergence,
                       "projected CG did not reach relative residual " + std::to_string(tol),
                       true_r.norm() / rhs_norm);
}

BorderedSolver::BorderedSolver(const CsrMatrix& k, const Vec& m) : m_(m), n_(k.rows()) {
  if (m.size() != n_) throw ValidationError("bordered solve: mass length does not match matrix");
  build(k);
  factorize();
}

void BorderedSolver::build(const CsrMatrix& k) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(k.nonZeros() + 2 * n_));
  for (Eigen::Index row = 0; row < k.outerSize(); ++row) {
    for (CsrMatrix::InnerIterator it(k, row); it; ++it) {
      triplets.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    }
  }
  for (Eigen::Index i = 0; i < n_; ++i) {
    triplets.emplace_back(static_cast<int>(i), static_cast<int>(n_), m_[i]);
    triplets.emplace_back(static_cast<int>(n_), static_cast<int>(i), m_[i]);
  }
  bordered_.resize(n_ + 1, n_ + 1);
  bordered_.setFromTriplets(triplets.begin(), triplets.end());
  bordered_.makeCompressed();
}

void BorderedSolver::factorize() {
  lu_.reset();
  if (!analyzed_) {
    ldlt_.analyzePattern(bordered_);
    analyzed_ = true;
  }
  ldlt_.factorize(bordered_);
  ldlt_ok_ = ldlt_.info() == Eigen::Success;
  ok_ = ldlt_ok_;
  if (!ldlt_ok_) {
    lu_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>>();
    lu_->compute(bordered_);
    ok_ = lu_->info() == Eigen::Success;
  }
}

void BorderedSolver::refactor(const CsrMatrix& k) {
  if (k.rows() != n_ || k.cols() != n_) throw ValidationError("bordered solve: matrix size changed");
  const Eigen::Index nnz = bordered_.nonZeros();
  build(k);
  if (bordered_.nonZeros() != nnz) analyzed_ = false;
  factorize();
}

Vec BorderedSolver::solve(const Vec& rhs, double* multiplier) const {
  Vec full(n_ + 1);
  full.head(n_) = rhs;
  full[n_] = 0.0;
  Vec sol;
  if (ldlt_ok_) {
    sol = ldlt_.solve(full);
    const double scale = full.norm() + 1e-300;
    if (sol.allFinite() && (bordered_ * sol - full).norm() <= 1e-9 * scale) {
      if (multiplier) *multiplier = sol[n_];
      return sol.head(n_);
    }
  }
  if (!lu_) {
    lu_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>>();
    lu_->compute(bordered_);
  }
  if (lu_->info() != Eigen::Success) {
    throw NumericalError(NumericalFailure::kSingularJacobian, "bordered system is singular");
  }
  sol = lu_->solve(full);
  if (multiplier) *multiplier = sol[n_];
  return sol.head(n_);
}

namespace {

// Modified Gram-Schmidt (two passes) in the M inner product. Columns that
// collapse are replaced by fresh random mean-zero vectors.
void m_orthonormalize(std::vector<Vec>& basis, const Vec& m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (std::size_t j = 0; j < basis.size(); ++j) {
    for (int attempt = 0; attempt < 4; ++attempt) {
      const double before = weighted_norm(basis[j], m);
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t i = 0; i < j; ++i) {
          basis[j] -= m.dot(basis[i].cwiseProduct(basis[j])) * basis[i];
        }
      }
      const double after = weighted_norm(basis[j], m);
      if (after > 1e-10 * before && after > 0.0) {
        basis[j] /= after;
        break;
      }
      basis[j] = Vec::NullaryExpr(m.size(), [&] { return dist(rng); });
      basis[j] = project_mean_zero(basis[j], m);
    }
  }
}

}  // namespace

SubspaceResult subspace_inverse_iteration(const std::function<Vec(const Vec&)>& apply_k,
                                          const std::function<Vec(const Vec&)>& inverse,
                                          const Vec& m, const EigenOptions& opts,
                                          int converge_count) {
  const Eigen::Index n = m.size();
  const int block = static_cast<int>(std::min<Eigen::Index>(std::max(opts.block, converge_count), n - 1));
  if (block < 1) throw ValidationError("eigen solve needs at least two nodes");
  converge_count = std::min(converge_count, block);

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<Vec> basis;
  for (const Vec& v : opts.start_vectors) {
    if (static_cast<int>(basis.size()) == block) break;
    if (v.size() == n) basis.push_back(project_mean_zero(v, m));
  }
  while (static_cast<int>(basis.size()) < block) {
    basis.push_back(project_mean_zero(Vec::NullaryExpr(n, [&] { return dist(rng); }), m));
  }
  m_orthonormalize(basis, m, rng);

  SubspaceResult result;
  std::vector<double> previous(static_cast<std::size_t>(block), std::numeric_limits<double>::infinity());
  for (int it = 1; it <= opts.max_iter; ++it) {
    for (auto& v : basis) v = project_mean_zero(inverse(v), m);
    m_orthonormalize(basis, m, rng);

    Eigen::MatrixXd projected(block, block);
    std::vector<Vec> k_basis;
    k_basis.reserve(basis.size());
    for (const auto& v : basis) k_basis.push_back(apply_k(v));
    for (int i = 0; i < block; ++i) {
      for (int j = 0; j < block; ++j) projected(i, j) = basis[static_cast<std::size_t>(i)].dot(k_basis[static_cast<std::size_t>(j)]);
    }
    projected = 0.5 * (projected + projected.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(projected);
    const Eigen::MatrixXd& rot = ritz.eigenvectors();

    std::vector<Vec> rotated(static_cast<std::size_t>(block), Vec::Zero(n));
    for (int j = 0; j < block; ++j) {
      for (int i = 0; i < block; ++i) rotated[static_cast<std::size_t>(j)] += rot(i, j) * basis[static_cast<std::size_t>(i)];
    }
    basis = std::move(rotated);

    bool converged = true;
    result.values.assign(static_cast<std::size_t>(block), 0.0);
    for (int j = 0; j < block; ++j) {
      const double value = ritz.eigenvalues()[j];
      result.values[static_cast<std::size_t>(j)] = value;
      if (j < converge_count &&
          !(std::abs(value - previous[static_cast<std::size_t>(j)]) <= opts.tol * std::abs(value))) {
        converged = false;
      }
      previous[static_cast<std::size_t>(j)] = value;
    }
    result.iterations = it;
    if (converged) {
      result.vectors = std::move(basis);
      return result;
    }
  }
  throw NumericalError(NumericalFailure::kNoConvergence, "inverse iteration did not stagnate within " +
                                                              std::to_string(opts.max_iter) + " iterations");
}

EigenPair smallest_nonzero_eigen(const SparseSym& a, const Vec& m, const EigenOptions& opts) {
  EigenOptions local = opts;
  if (opts.preferred_direction && local.start_vectors.empty()) {
    local.start_vectors.push_back(*opts.preferred_direction);
  }
  auto apply = [&a](const Vec& x) -> Vec { return a * x; };
  auto inverse = [&](const Vec& x) -> Vec {
    return solve_projected(a, m, m.cwiseProduct(x), opts.solve_tol);
  };
  SubspaceResult sub = subspace_inverse_iteration(apply, inverse, m, local, 2);

  EigenPair pair;
  pair.mu1 = sub.values[0];
  pair.mu2 = sub.values.size() > 1 ? sub.values[1] : std::numeric_limits<double>::infinity();
  pair.iterations = sub.iterations;
  const double cluster = 10.0 * opts.tol * std::abs(pair.mu1);
  pair.multiplicity = 0;
  for (double v : sub.values) {
    if (std::abs(v - pair.mu1) <= cluster) ++pair.multiplicity;
  }
  pair.degenerate = pair.multiplicity > 1;

  Vec phi = sub.vectors[0];
  if (opts.preferred_direction) {
    const Vec pref = project_mean_zero(*opts.preferred_direction, m);
    if (pair.degenerate) {
      Vec proj = Vec::Zero(m.size());
      for (int k = 0; k < pair.multiplicity; ++k) {
        const Vec& xk = sub.vectors[static_cast<std::size_t>(k)];
        proj += m.dot(pref.cwiseProduct(xk)) * xk;
      }
      const double norm = weighted_norm(proj, m);
      if (norm > 1e-8 * weighted_norm(pref, m)) phi = proj / norm;
    }
    if (m.dot(pref.cwiseProduct(phi)) < 0.0) phi = -phi;
  } else {
    Eigen::Index idx = 0;
    phi.cwiseAbs().maxCoeff(&idx);
    if (phi[idx] < 0.0) phi = -phi;
  }
  phi = project_mean_zero(phi, m);
  phi /= weighted_norm(phi, m);
  pair.phi1 = std::move(phi);
  return pair;
}

}  // namespace rigidity
