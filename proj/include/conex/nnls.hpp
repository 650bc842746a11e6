#pragma once

#include <optional>
#include <span>
#include <vector>

#include "conex/matrix.hpp"

namespace conex {

struct NnlsOptions {
  double tol = 1e-8;      // stop when the largest coordinate change in a sweep is below this
  int max_sweeps = 500;
};

// Precomputed Gram matrix WᵀW for repeated solves against the same W (p x r).
struct NnlsSystem {
  explicit NnlsSystem(const DenseMatrix& W);

  const DenseMatrix* W;
  DenseMatrix gram;  // r x r
};

// argmin_{u >= 0} ½‖a − W u‖² by cyclic coordinate descent with exact clamped
// per-coordinate steps. If `active` is given, only those coordinates are free
// and every other coordinate is fixed at 0.
std::vector<double> nnls_solve(std::span<const double> a_row, const DenseMatrix& W,
                               std::optional<std::span<const std::size_t>> active = std::nullopt,
                               const NnlsOptions& opts = {});

std::vector<double> nnls_solve(std::span<const double> a_row, const NnlsSystem& sys,
                               std::optional<std::span<const std::size_t>> active = std::nullopt,
                               const NnlsOptions& opts = {});

// ½‖a − W u‖².
double nnls_objective(std::span<const double> a_row, const DenseMatrix& W, std::span<const double> u);

}  // namespace conex
