#pragma once

// Numeric inner loops shared by the inference modules. Every kernel has a
// scalar reference implementation plus SIMD variants (AVX2+FMA on x86-64,
// NEON on aarch64). The active table is chosen once at startup from the
// CPU's capabilities; LAMPP_SIMD=scalar forces the reference path.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace lampp::kernels {

enum class Isa { Scalar, Avx2, Neon };

const char* isa_name(Isa isa);

struct KernelTable {
  Isa isa;
  // max over x[0..n); -inf when n == 0.
  double (*max_value)(const double* x, std::size_t n);
  // log(sum exp(x[i])); -inf when n == 0 or every x is -inf.
  double (*log_sum_exp)(const double* x, std::size_t n);
  // log(sum exp(a[i] + b[i])).
  double (*log_sum_exp_sum)(const double* a, const double* b, std::size_t n);
  // Max-plus product of a row vector with a row-major n_src x n_dst matrix:
  //   best[j] = max_i prev[i] + mat[i * n_dst + j]
  // arg[j] receives the smallest i attaining the max.
  void (*max_plus)(const double* prev, std::size_t n_src, const double* mat,
                   std::size_t n_dst, double* best, std::uint32_t* arg);
};

// Table for the given ISA, or nullptr when this build/CPU cannot run it.
const KernelTable* table_for(Isa isa);

// Every ISA usable on this machine, scalar first.
std::vector<Isa> available_isas();

const KernelTable& active();

inline double max_value(std::span<const double> x) {
  return active().max_value(x.data(), x.size());
}

inline double log_sum_exp(std::span<const double> x) {
  return active().log_sum_exp(x.data(), x.size());
}

inline double log_sum_exp_sum(std::span<const double> a, std::span<const double> b) {
  return active().log_sum_exp_sum(a.data(), b.data(), a.size() < b.size() ? a.size() : b.size());
}

inline void max_plus(std::span<const double> prev, std::span<const double> mat,
                     std::span<double> best, std::span<std::uint32_t> arg) {
  active().max_plus(prev.data(), prev.size(), mat.data(), best.size(), best.data(), arg.data());
}

}  // namespace lampp::kernels
