#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "lampp/kernels.hpp"

using namespace lampp::kernels;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<double> random_logs(std::mt19937_64& rng, std::size_t n, bool with_neg_inf) {
  std::uniform_real_distribution<double> u(-30.0, 5.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  if (with_neg_inf && n > 2) v[n / 2] = kNegInf;
  return v;
}

}  // namespace

TEST_CASE("scalar table is always available and listed first") {
  const auto isas = available_isas();
  REQUIRE(!isas.empty());
  CHECK(isas.front() == Isa::Scalar);
  CHECK(table_for(Isa::Scalar) != nullptr);
}

TEST_CASE("every available kernel table matches the scalar reference") {
  const KernelTable& ref = *table_for(Isa::Scalar);
  std::mt19937_64 rng(7);
  for (Isa isa : available_isas()) {
    CAPTURE(isa_name(isa));
    const KernelTable& k = *table_for(isa);
    for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 16u, 31u, 64u, 257u}) {
      CAPTURE(n);
      for (bool neg_inf : {false, true}) {
        const auto a = random_logs(rng, n, neg_inf);
        const auto b = random_logs(rng, n, false);
        CHECK(k.max_value(a.data(), n) == ref.max_value(a.data(), n));
        const double l1 = k.log_sum_exp(a.data(), n), l0 = ref.log_sum_exp(a.data(), n);
        if (n == 0) {
          CHECK(l1 == kNegInf);
        } else {
          CHECK(std::abs(l1 - l0) <= 1e-12 * (1.0 + std::abs(l0)));
        }
        const double s1 = k.log_sum_exp_sum(a.data(), b.data(), n), s0 = ref.log_sum_exp_sum(a.data(), b.data(), n);
        if (n == 0) {
          CHECK(s1 == kNegInf);
        } else {
          CHECK(std::abs(s1 - s0) <= 1e-12 * (1.0 + std::abs(s0)));
        }
      }
    }
  }
}

TEST_CASE("log_sum_exp edge cases") {
  for (Isa isa : available_isas()) {
    const KernelTable& k = *table_for(isa);
    const std::vector<double> all_inf(6, kNegInf);
    CHECK(k.log_sum_exp(all_inf.data(), all_inf.size()) == kNegInf);
    const std::vector<double> big = {1000.0, 1000.0, 1000.0, 1000.0, 1000.0};
    CHECK(k.log_sum_exp(big.data(), big.size()) == doctest::Approx(1000.0 + std::log(5.0)).epsilon(1e-14));
    const std::vector<double> zeros(4, 0.0);
    CHECK(k.log_sum_exp(zeros.data(), 4) == doctest::Approx(std::log(4.0)).epsilon(1e-14));
  }
}

TEST_CASE("max_plus agrees with the scalar reference including argmax ties") {
  const KernelTable& ref = *table_for(Isa::Scalar);
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> coarse(-3, 0);
  for (Isa isa : available_isas()) {
    CAPTURE(isa_name(isa));
    const KernelTable& k = *table_for(isa);
    for (std::size_t n_src : {1u, 2u, 3u, 5u, 8u, 13u}) {
      for (std::size_t n_dst : {1u, 3u, 4u, 7u, 9u, 16u}) {
        // Integer-valued inputs produce many exact ties.
        std::vector<double> prev(n_src), mat(n_src * n_dst);
        for (auto& v : prev) v = coarse(rng);
        for (auto& v : mat) v = coarse(rng);
        if (n_src > 1) mat[n_dst] = kNegInf;
        std::vector<double> b0(n_dst), b1(n_dst);
        std::vector<std::uint32_t> a0(n_dst), a1(n_dst);
        ref.max_plus(prev.data(), n_src, mat.data(), n_dst, b0.data(), a0.data());
        k.max_plus(prev.data(), n_src, mat.data(), n_dst, b1.data(), a1.data());
        CHECK(b0 == b1);
        CHECK(a0 == a1);
      }
    }
  }
}

TEST_CASE("max_plus picks the smallest source on ties") {
  const std::vector<double> prev = {0.0, 0.0, 0.0};
  const std::vector<double> mat = {1.0, 2.0,  //
                                   1.0, 2.0,  //
                                   1.0, 3.0};
  for (Isa isa : available_isas()) {
    std::vector<double> best(2);
    std::vector<std::uint32_t> arg(2);
    table_for(isa)->max_plus(prev.data(), 3, mat.data(), 2, best.data(), arg.data());
    CHECK(best == std::vector<double>{1.0, 3.0});
    CHECK(arg == std::vector<std::uint32_t>{0, 2});
  }
}
