#include <algorithm>
#include <exception>

#include "conex/kernels.hpp"

namespace conex::kernels::serial {

#define CONEX_OMP_FOR
#include "kernels_impl.inc"
#undef CONEX_OMP_FOR

}  // namespace conex::kernels::serial
