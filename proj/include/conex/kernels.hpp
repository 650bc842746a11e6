#pragma once

// Dense kernels used by the factorization, transform and sensitivity stages.
//
// Every kernel has a serial reference in `kernels::serial` and an OpenMP
// version in `kernels::parallel`. The parallel versions split work only over
// independent output rows and keep the per-element summation order of the
// serial code, so the two produce bit-identical results for any thread count.
// The unqualified `kernels::` entry points dispatch to the parallel versions.

#include <functional>
#include <span>
#include <vector>

#include "conex/matrix.hpp"
#include "conex/nnls.hpp"

namespace conex::kernels {

// Scalar function of one row, evaluated independently per row.
using RowFunction = std::function<double(std::span<const double>)>;

#define CONEX_KERNEL_DECLS                                                                \
  /* A (m x k) · B (k x n) */                                                             \
  DenseMatrix gemm(const DenseMatrix& A, const DenseMatrix& B);                           \
  /* Aᵀ (k x m)ᵀ · B (k x n) */                                                           \
  DenseMatrix gemm_tn(const DenseMatrix& A, const DenseMatrix& B);                        \
  /* A (m x k) · Bᵀ, B is (n x k) */                                                      \
  DenseMatrix gemm_nt(const DenseMatrix& A, const DenseMatrix& B);                        \
  /* ½‖A − U Wᵀ‖²_F */                                                                    \
  double half_residual_sq(const DenseMatrix& A, const DenseMatrix& U, const DenseMatrix& W); \
  /* X ← X ⊙ numer / (denom + eps) */                                                     \
  void multiplicative_update(DenseMatrix& X, const DenseMatrix& numer, const DenseMatrix& denom, double eps); \
  /* Row-wise NNLS of A (n x p) against W (p x r); returns n x r. */                      \
  DenseMatrix nnls_rows(const DenseMatrix& A, const DenseMatrix& W, const NnlsOptions& opts); \
  /* out[i] = fn(rows.row(i)) */                                                          \
  std::vector<double> map_rows(const DenseMatrix& rows, const RowFunction& fn);            \
  /* fn(i) for i in [0, n); the first failing index (in order) is rethrown. */            \
  void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn);

namespace serial {
CONEX_KERNEL_DECLS
}  // namespace serial

namespace parallel {
CONEX_KERNEL_DECLS
}  // namespace parallel

#undef CONEX_KERNEL_DECLS

using parallel::gemm;
using parallel::gemm_nt;
using parallel::gemm_tn;
using parallel::half_residual_sq;
using parallel::map_rows;
using parallel::multiplicative_update;
using parallel::nnls_rows;
using parallel::for_each_index;

bool openmp_enabled() noexcept;
int max_threads() noexcept;

}  // namespace conex::kernels
