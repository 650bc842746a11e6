#include "conex/nnls.hpp"

#include <algorithm>
#include <cmath>

#include "conex/errors.hpp"

namespace conex {

NnlsSystem::NnlsSystem(const DenseMatrix& w) : W(&w), gram(w.cols(), w.cols()) {
  require(w.all_nonnegative(), "nnls: W must be elementwise non-negative");
  const std::size_t p = w.rows(), r = w.cols();
  for (std::size_t k = 0; k < p; ++k) {
    auto wk = w.row(k);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < r; ++j) gram(i, j) += wk[i] * wk[j];
  }
}

std::vector<double> nnls_solve(std::span<const double> a_row, const DenseMatrix& W,
                               std::optional<std::span<const std::size_t>> active, const NnlsOptions& opts) {
  return nnls_solve(a_row, NnlsSystem(W), active, opts);
}

std::vector<double> nnls_solve(std::span<const double> a_row, const NnlsSystem& sys,
                               std::optional<std::span<const std::size_t>> active, const NnlsOptions& opts) {
  const DenseMatrix& W = *sys.W;
  const std::size_t p = W.rows(), r = W.cols();
  require(a_row.size() == p, "nnls_solve: row length " + std::to_string(a_row.size()) +
                                 " does not match W rows " + std::to_string(p));
  for (double v : a_row) require(std::isfinite(v), "nnls_solve: non-finite input");

  std::vector<std::size_t> free;
  if (active) {
    for (std::size_t k : *active) {
      require(k < r, "nnls_solve: active index " + std::to_string(k) + " out of range");
      free.push_back(k);
    }
  } else {
    for (std::size_t k = 0; k < r; ++k) free.push_back(k);
  }

  // b = Wᵀ a
  std::vector<double> b(r, 0.0);
  for (std::size_t i = 0; i < p; ++i) {
    const double ai = a_row[i];
    if (ai == 0.0) continue;
    auto wi = W.row(i);
    for (std::size_t k = 0; k < r; ++k) b[k] += wi[k] * ai;
  }

  std::vector<double> u(r, 0.0);
  // grad_k = (G u)_k − b_k, maintained incrementally.
  std::vector<double> grad(r);
  for (std::size_t k = 0; k < r; ++k) grad[k] = -b[k];
  const DenseMatrix& G = sys.gram;
  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (std::size_t k : free) {
      const double gkk = G(k, k);
      if (gkk <= 0.0) continue;
      const double next = std::max(0.0, u[k] - grad[k] / gkk);
      const double delta = next - u[k];
      if (delta == 0.0) continue;
      u[k] = next;
      for (std::size_t j = 0; j < r; ++j) grad[j] += G(j, k) * delta;
      max_change = std::max(max_change, std::abs(delta));
    }
    if (max_change < opts.tol) break;
  }
  return u;
}

double nnls_objective(std::span<const double> a_row, const DenseMatrix& W, std::span<const double> u) {
  require(a_row.size() == W.rows() && u.size() == W.cols(), "nnls_objective: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < W.rows(); ++i) {
    auto wi = W.row(i);
    double rec = 0.0;
    for (std::size_t k = 0; k < W.cols(); ++k) rec += wi[k] * u[k];
    const double d = a_row[i] - rec;
    s += d * d;
  }
  return 0.5 * s;
}

}  // namespace conex
