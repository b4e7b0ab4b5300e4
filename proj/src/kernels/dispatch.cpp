#include <cstdlib>
#include <string_view>

#include "tables.hpp"

namespace lampp::kernels {

const char* isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

const KernelTable* table_for(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return &detail::scalar_table();
    case Isa::Avx2:
#if defined(LAMPP_HAVE_AVX2)
      if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return &detail::avx2_table();
#endif
      return nullptr;
    case Isa::Neon:
#if defined(LAMPP_HAVE_NEON)
      return &detail::neon_table();
#else
      return nullptr;
#endif
  }
  return nullptr;
}

std::vector<Isa> available_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
    if (table_for(isa)) out.push_back(isa);
  }
  return out;
}

namespace {

const KernelTable& select_table() {
  if (const char* forced = std::getenv("LAMPP_SIMD"); forced && std::string_view(forced) == "scalar") {
    return detail::scalar_table();
  }
  for (Isa isa : {Isa::Avx2, Isa::Neon}) {
    if (const KernelTable* t = table_for(isa)) return *t;
  }
  return detail::scalar_table();
}

}  // namespace

const KernelTable& active() {
  static const KernelTable& table = select_table();
  return table;
}

}  // namespace lampp::kernels
