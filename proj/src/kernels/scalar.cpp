#include <cmath>
#include <limits>

#include "tables.hpp"

namespace lampp::kernels::detail {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double max_value_scalar(const double* x, std::size_t n) {
  double m = kNegInf;
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i] > m) m = x[i];
  }
  return m;
}

double log_sum_exp_scalar(const double* x, std::size_t n) {
  const double m = max_value_scalar(x, n);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(x[i] - m);
  return m + std::log(s);
}

double log_sum_exp_sum_scalar(const double* a, const double* b, std::size_t n) {
  double m = kNegInf;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = a[i] + b[i];
    if (v > m) m = v;
  }
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(a[i] + b[i] - m);
  return m + std::log(s);
}

void max_plus_scalar(const double* prev, std::size_t n_src, const double* mat,
                     std::size_t n_dst, double* best, std::uint32_t* arg) {
  for (std::size_t j = 0; j < n_dst; ++j) {
    best[j] = n_src ? prev[0] + mat[j] : kNegInf;
    arg[j] = 0;
  }
  for (std::size_t i = 1; i < n_src; ++i) {
    const double* row = mat + i * n_dst;
    for (std::size_t j = 0; j < n_dst; ++j) {
      const double c = prev[i] + row[j];
      if (c > best[j]) {
        best[j] = c;
        arg[j] = static_cast<std::uint32_t>(i);
      }
    }
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::Scalar, max_value_scalar, log_sum_exp_scalar,
                                 log_sum_exp_sum_scalar, max_plus_scalar};
  return table;
}

}  // namespace lampp::kernels::detail
