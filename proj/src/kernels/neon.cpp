// NEON (aarch64, two double lanes) variants.

#include <arm_neon.h>

#include <cmath>
#include <limits>

#include "tables.hpp"

namespace lampp::kernels::detail {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline float64x2_t exp_f64x2(float64x2_t x) {
  const float64x2_t lo = vdupq_n_f64(-708.3964185322641);
  const float64x2_t hi = vdupq_n_f64(709.0);
  const uint64x2_t underflow = vcltq_f64(x, lo);
  x = vminq_f64(vmaxq_f64(x, lo), hi);

  const float64x2_t n = vrndnq_f64(vmulq_f64(x, vdupq_n_f64(1.4426950408889634)));
  float64x2_t r = vfmsq_f64(x, n, vdupq_n_f64(6.93147180369123816490e-01));
  r = vfmsq_f64(r, n, vdupq_n_f64(1.90821492927058770002e-10));

  static constexpr double kCoef[14] = {
      1.0,           1.0,            1.0 / 2.0,       1.0 / 6.0,        1.0 / 24.0,
      1.0 / 120.0,   1.0 / 720.0,    1.0 / 5040.0,    1.0 / 40320.0,    1.0 / 362880.0,
      1.0 / 3628800.0, 1.0 / 39916800.0, 1.0 / 479001600.0, 1.0 / 6227020800.0,
  };
  float64x2_t p = vdupq_n_f64(kCoef[13]);
  for (int k = 12; k >= 0; --k) p = vfmaq_f64(vdupq_n_f64(kCoef[k]), p, r);

  const int64x2_t e = vshlq_n_s64(vaddq_s64(vcvtq_s64_f64(n), vdupq_n_s64(1023)), 52);
  const float64x2_t result = vmulq_f64(p, vreinterpretq_f64_s64(e));
  return vbslq_f64(underflow, vdupq_n_f64(0.0), result);
}

double max_value_neon(const double* x, std::size_t n) {
  std::size_t i = 0;
  double m = kNegInf;
  if (n >= 2) {
    float64x2_t vm = vld1q_f64(x);
    for (i = 2; i + 2 <= n; i += 2) vm = vmaxq_f64(vm, vld1q_f64(x + i));
    m = vmaxvq_f64(vm);
  }
  for (; i < n; ++i) m = x[i] > m ? x[i] : m;
  return m;
}

double log_sum_exp_neon(const double* x, std::size_t n) {
  const double m = max_value_neon(x, n);
  if (!std::isfinite(m)) return m;
  const float64x2_t vs = vdupq_n_f64(m);
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, exp_f64x2(vsubq_f64(vld1q_f64(x + i), vs)));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += std::exp(x[i] - m);
  return m + std::log(s);
}

double log_sum_exp_sum_neon(const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  double m = kNegInf;
  if (n >= 2) {
    float64x2_t vm = vaddq_f64(vld1q_f64(a), vld1q_f64(b));
    for (i = 2; i + 2 <= n; i += 2) vm = vmaxq_f64(vm, vaddq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    m = vmaxvq_f64(vm);
  }
  for (; i < n; ++i) {
    const double v = a[i] + b[i];
    m = v > m ? v : m;
  }
  if (!std::isfinite(m)) return m;
  const float64x2_t vs = vdupq_n_f64(m);
  float64x2_t acc = vdupq_n_f64(0.0);
  for (i = 0; i + 2 <= n; i += 2) {
    acc = vaddq_f64(acc, exp_f64x2(vsubq_f64(vaddq_f64(vld1q_f64(a + i), vld1q_f64(b + i)), vs)));
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += std::exp(a[i] + b[i] - m);
  return m + std::log(s);
}

void max_plus_neon(const double* prev, std::size_t n_src, const double* mat, std::size_t n_dst,
                   double* best, std::uint32_t* arg) {
  if (n_src == 0) {
    for (std::size_t j = 0; j < n_dst; ++j) {
      best[j] = kNegInf;
      arg[j] = 0;
    }
    return;
  }
  std::size_t j = 0;
  for (; j + 2 <= n_dst; j += 2) {
    float64x2_t vbest = vaddq_f64(vdupq_n_f64(prev[0]), vld1q_f64(mat + j));
    uint64x2_t varg = vdupq_n_u64(0);
    for (std::size_t i = 1; i < n_src; ++i) {
      const float64x2_t c = vaddq_f64(vdupq_n_f64(prev[i]), vld1q_f64(mat + i * n_dst + j));
      const uint64x2_t gt = vcgtq_f64(c, vbest);
      vbest = vbslq_f64(gt, c, vbest);
      varg = vbslq_u64(gt, vdupq_n_u64(i), varg);
    }
    vst1q_f64(best + j, vbest);
    arg[j] = static_cast<std::uint32_t>(vgetq_lane_u64(varg, 0));
    arg[j + 1] = static_cast<std::uint32_t>(vgetq_lane_u64(varg, 1));
  }
  for (; j < n_dst; ++j) {
    double b = prev[0] + mat[j];
    std::uint32_t a = 0;
    for (std::size_t i = 1; i < n_src; ++i) {
      const double c = prev[i] + mat[i * n_dst + j];
      if (c > b) {
        b = c;
        a = static_cast<std::uint32_t>(i);
      }
    }
    best[j] = b;
    arg[j] = a;
  }
}

}  // namespace

const KernelTable& neon_table() {
  static const KernelTable table{Isa::Neon, max_value_neon, log_sum_exp_neon,
                                 log_sum_exp_sum_neon, max_plus_neon};
  return table;
}

}  // namespace lampp::kernels::detail
