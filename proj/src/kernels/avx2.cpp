// AVX2 + FMA variants. Compiled with -mavx2 -mfma; only reached after the
// dispatcher has confirmed CPU support.

#include <immintrin.h>

#include <cmath>
#include <limits>

#include "tables.hpp"

namespace lampp::kernels::detail {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double hsum(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

inline double hmax(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  double m = lanes[0];
  for (int k = 1; k < 4; ++k) m = lanes[k] > m ? lanes[k] : m;
  return m;
}

// exp(x) for x in double range. Range reduction x = n ln2 + r with |r| <= ln2/2,
// degree-13 Taylor polynomial for e^r, then scaling by 2^n through the
// exponent field. Inputs below the smallest normal result flush to zero.
inline __m256d exp_pd(__m256d x) {
  const __m256d lo = _mm256_set1_pd(-708.3964185322641);
  const __m256d hi = _mm256_set1_pd(709.0);
  const __m256d underflow = _mm256_cmp_pd(x, lo, _CMP_LT_OQ);
  x = _mm256_min_pd(_mm256_max_pd(x, lo), hi);

  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93147180369123816490e-01), x);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.90821492927058770002e-10), r);

  static constexpr double kCoef[14] = {
      1.0,
      1.0,
      1.0 / 2.0,
      1.0 / 6.0,
      1.0 / 24.0,
      1.0 / 120.0,
      1.0 / 720.0,
      1.0 / 5040.0,
      1.0 / 40320.0,
      1.0 / 362880.0,
      1.0 / 3628800.0,
      1.0 / 39916800.0,
      1.0 / 479001600.0,
      1.0 / 6227020800.0,
  };
  __m256d p = _mm256_set1_pd(kCoef[13]);
  for (int k = 12; k >= 0; --k) p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(kCoef[k]));

  const __m256d magic = _mm256_set1_pd(6755399441055744.0);  // 1.5 * 2^52
  __m256i bits = _mm256_castpd_si256(_mm256_add_pd(n, magic));
  bits = _mm256_add_epi64(bits, _mm256_set1_epi64x(1023));
  const __m256d scale = _mm256_castsi256_pd(_mm256_slli_epi64(bits, 52));
  const __m256d result = _mm256_mul_pd(p, scale);
  return _mm256_blendv_pd(result, _mm256_setzero_pd(), underflow);
}

double max_value_avx2(const double* x, std::size_t n) {
  std::size_t i = 0;
  double m = kNegInf;
  if (n >= 4) {
    __m256d vm = _mm256_loadu_pd(x);
    for (i = 4; i + 4 <= n; i += 4) vm = _mm256_max_pd(vm, _mm256_loadu_pd(x + i));
    m = hmax(vm);
  }
  for (; i < n; ++i) m = x[i] > m ? x[i] : m;
  return m;
}

double sum_exp_shifted(const double* x, std::size_t n, double shift) {
  const __m256d vs = _mm256_set1_pd(shift);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_add_pd(acc, exp_pd(_mm256_sub_pd(_mm256_loadu_pd(x + i), vs)));
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += std::exp(x[i] - shift);
  return s;
}

double log_sum_exp_avx2(const double* x, std::size_t n) {
  const double m = max_value_avx2(x, n);
  if (!std::isfinite(m)) return m;
  return m + std::log(sum_exp_shifted(x, n, m));
}

double log_sum_exp_sum_avx2(const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  double m = kNegInf;
  if (n >= 4) {
    __m256d vm = _mm256_add_pd(_mm256_loadu_pd(a), _mm256_loadu_pd(b));
    for (i = 4; i + 4 <= n; i += 4) {
      vm = _mm256_max_pd(vm, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    m = hmax(vm);
  }
  for (; i < n; ++i) {
    const double v = a[i] + b[i];
    m = v > m ? v : m;
  }
  if (!std::isfinite(m)) return m;

  const __m256d vs = _mm256_set1_pd(m);
  __m256d acc = _mm256_setzero_pd();
  for (i = 0; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, exp_pd(_mm256_sub_pd(v, vs)));
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += std::exp(a[i] + b[i] - m);
  return m + std::log(s);
}

void max_plus_avx2(const double* prev, std::size_t n_src, const double* mat, std::size_t n_dst,
                   double* best, std::uint32_t* arg) {
  if (n_src == 0) {
    for (std::size_t j = 0; j < n_dst; ++j) {
      best[j] = kNegInf;
      arg[j] = 0;
    }
    return;
  }
  std::size_t j = 0;
  for (; j + 4 <= n_dst; j += 4) {
    __m256d vbest = _mm256_add_pd(_mm256_set1_pd(prev[0]), _mm256_loadu_pd(mat + j));
    __m256d varg = _mm256_setzero_pd();
    for (std::size_t i = 1; i < n_src; ++i) {
      const __m256d c = _mm256_add_pd(_mm256_set1_pd(prev[i]), _mm256_loadu_pd(mat + i * n_dst + j));
      const __m256d gt = _mm256_cmp_pd(c, vbest, _CMP_GT_OQ);
      vbest = _mm256_blendv_pd(vbest, c, gt);
      varg = _mm256_blendv_pd(varg, _mm256_set1_pd(static_cast<double>(i)), gt);
    }
    _mm256_storeu_pd(best + j, vbest);
    _mm_storeu_si128(reinterpret_cast<__m128i*>(arg + j), _mm256_cvtpd_epi32(varg));
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

const KernelTable& avx2_table() {
  static const KernelTable table{Isa::Avx2, max_value_avx2, log_sum_exp_avx2,
                                 log_sum_exp_sum_avx2, max_plus_avx2};
  return table;
}

}  // namespace lampp::kernels::detail
