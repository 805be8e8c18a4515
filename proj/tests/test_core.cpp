#include <cmath>
#include <set>

#include "doctest.h"
#include "hpe/config.hpp"
#include "hpe/error.hpp"
#include "hpe/parallel.hpp"
#include "hpe/rng.hpp"
#include "hpe/stats.hpp"

using namespace hpe;

TEST_SUITE("core") {

TEST_CASE("rng streams") {
  Rng a(1), b(1), c(2);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    (void)c;
  }
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(5, 9) == derive_seed(5, 9));

  Rng r(3);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    s += u;
  }
  CHECK(std::abs(s / n - 0.5) < 0.005);
  s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(s2 / n - 1.0) < 0.02);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto k = r.below(7);
    CHECK(k < 7);
    seen.insert(k);
  }
  CHECK(seen.size() == 7);
}

TEST_CASE("parallel_for fills every slot and rethrows") {
  std::vector<int> out(1000, 0);
  parallel_for(out.size(), 4, [&](std::size_t i) { out[i] = static_cast<int>(i) * 2; });
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == static_cast<int>(i) * 2);
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                    if (i == 7) throw NumericalError("boom");
                  }),
                  NumericalError);
}

TEST_CASE("descriptive statistics") {
  const std::vector<double> x = {4, 1, 3, 2, 5};
  CHECK(stats::mean(x) == 3.0);
  CHECK(stats::stddev(x) == doctest::Approx(std::sqrt(2.5)));
  CHECK(stats::quantile(x, 0.5) == 3.0);
  CHECK(stats::quantile(x, 0.25) == 2.0);
  CHECK(stats::quantile(x, 0.1) == doctest::Approx(1.4));
  CHECK(stats::quantile(x, 0.0) == 1.0);
  CHECK(stats::quantile(x, 1.0) == 5.0);
  const std::vector<double> l = {std::log(1.0), std::log(3.0)};
  CHECK(stats::log_sum_exp(l) == doctest::Approx(std::log(4.0)));
  const std::vector<double> big = {1000.0, 1000.0};
  CHECK(stats::log_sum_exp(big) == doctest::Approx(1000.0 + std::log(2.0)));
}

TEST_CASE("histogram mode finds the peak") {
  std::vector<double> x;
  for (int i = 0; i < 1000; ++i) x.push_back(50.0 + (i % 21) - 10.0);
  for (int i = 0; i < 3000; ++i) x.push_back(52.0);
  CHECK(std::abs(stats::histogram_mode(x) - 52.0) < 3.0);
}

TEST_CASE("rounding") {
  CHECK(stats::round_to(9.595, 2) == doctest::Approx(9.60));
  CHECK(stats::round_to(8.5756, 2) == doctest::Approx(8.58));
  CHECK(stats::round_to(-2.5, 0) == -3.0);
  CHECK(stats::round_to(1769.8, 0) == 1770.0);
}

TEST_CASE("toml subset") {
  const auto j = config::parse_toml(R"(# comment
county = "Cook"   # trailing
N_SSH = 14_050
flag = true
P_LivSit1 = { point = 16.05, half95 = 6.16 }
list = [1, 2,
        3]

[sampling]
mode = "coupon_chain"
a.b = 2.5e1
)");
  CHECK(j.at("county") == "Cook");
  CHECK(j.at("N_SSH") == 14050);
  CHECK(j.at("flag") == true);
  CHECK(j.at("P_LivSit1").at("half95").get<double>() == doctest::Approx(6.16));
  CHECK(j.at("list").size() == 3);
  CHECK(j.at("sampling").at("mode") == "coupon_chain");
  CHECK(j.at("sampling").at("a").at("b").get<double>() == 25.0);

  CHECK_THROWS_WITH_AS(config::parse_toml("a = 1\nb = \n"), doctest::Contains("line 2"), ValidationError);
  CHECK_THROWS_AS(config::parse_toml("a = 1\na = 2\n"), ValidationError);
  CHECK_THROWS_AS(config::parse_toml("[x\n"), ValidationError);
}

}  // TEST_SUITE
