#pragma once

#include "lampp/kernels.hpp"

namespace lampp::kernels::detail {

const KernelTable& scalar_table();
#if defined(LAMPP_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(LAMPP_HAVE_NEON)
const KernelTable& neon_table();
#endif

}  // namespace lampp::kernels::detail
