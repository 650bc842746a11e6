#include <algorithm>
#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "conex/kernels.hpp"

namespace conex::kernels {

namespace parallel {

// Row bodies that can throw capture the exception per row; nothing escapes
// the parallel region.
#define CONEX_OMP_FOR _Pragma("omp parallel for schedule(static)")
#include "kernels_impl.inc"
#undef CONEX_OMP_FOR

}  // namespace parallel

bool openmp_enabled() noexcept {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

int max_threads() noexcept {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace conex::kernels
