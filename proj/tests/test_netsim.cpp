#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "hpe/error.hpp"
#include "hpe/netsim.hpp"
#include "hpe/stats.hpp"

using namespace hpe;

namespace {

SyntheticPopulation fixed_population(std::vector<int> degrees) {
  SyntheticPopulation pop;
  pop.true_N = static_cast<long long>(degrees.size());
  pop.degrees = std::move(degrees);
  return pop;
}

const TraitConfig kTrait{"trait", {"yes", "no"}, {0.3, 0.7}};

}  // namespace

TEST_SUITE("netsim") {

TEST_CASE("population generation") {
  const auto one = generate_population(1, DegreeModel::geometric(7, 100), {}, 1);
  CHECK(one.degrees.size() == 1);
  CHECK(one.degrees[0] >= 1);

  const auto pop = generate_population(10000, DegreeModel::geometric(7, 100000), {kTrait}, 2);
  std::vector<double> d(pop.degrees.begin(), pop.degrees.end());
  CHECK(std::abs(stats::mean(d) - 7.0) < 3.0 * std::sqrt(42.0 / 10000));
  const double p = pop.prevalence("trait", "yes");
  CHECK(std::abs(p - 0.3) < 3.0 * std::sqrt(0.21 / 10000));

  const auto again = generate_population(10000, DegreeModel::geometric(7, 100000), {kTrait}, 2);
  CHECK(again.degrees == pop.degrees);
  CHECK(again.traits == pop.traits);
}

TEST_CASE("successive sampling basics") {
  const auto pop = generate_population(50, DegreeModel::geometric(4, 100), {kTrait}, 3);
  const auto all = successive_sampling_draw(pop, 50, 9);
  std::set<long long> ids(all.unit_ids.begin(), all.unit_ids.end());
  CHECK(ids.size() == 50);
  CHECK(all.forest.seeds().size() == 50);
  CHECK(all.forest.has_trait("trait"));
  // degrees carried over from the population
  for (std::size_t i = 0; i < all.forest.size(); ++i)
    CHECK(all.forest.at(i).degree == pop.degrees[static_cast<std::size_t>(all.unit_ids[i])]);
}

TEST_CASE("high-degree unit is drawn first almost always") {
  const auto pop = fixed_population({1, 1000000});
  int first = 0;
  for (std::uint64_t s = 0; s < 10000; ++s)
    first += successive_sampling_draw(pop, 1, s).unit_ids[0] == 1;
  CHECK(first >= 9980);
}

TEST_CASE("first draw follows degree proportions (chi-square)") {
  const std::vector<int> degrees = {1, 2, 3, 4, 10};
  const auto pop = fixed_population(degrees);
  std::vector<double> counts(5, 0.0);
  const int draws = 100000;
  for (int s = 0; s < draws; ++s)
    counts[static_cast<std::size_t>(successive_sampling_draw(pop, 1, derive_seed(77, static_cast<std::uint64_t>(s))).unit_ids[0])] += 1;
  double chi2 = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    const double expected = draws * degrees[i] / 20.0;
    chi2 += (counts[i] - expected) * (counts[i] - expected) / expected;
  }
  // 4 degrees of freedom; P(chi2 > 18.47) = 0.001
  CHECK(chi2 < 18.47);
}

TEST_CASE("high-degree units are drawn earlier") {
  int wins = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto pop = generate_population(1000, DegreeModel::geometric(7, 1000), {}, derive_seed(5, s));
    const auto smp = successive_sampling_draw(pop, 500, derive_seed(6, s));
    std::vector<std::size_t> order(1000);
    for (std::size_t u = 0; u < 1000; ++u) order[u] = u;
    std::stable_sort(order.begin(), order.end(),
                     [&](auto a, auto b) { return pop.degrees[a] < pop.degrees[b]; });
    std::vector<double> pos(1000, 501.0);  // unsampled units come after the sample
    for (std::size_t i = 0; i < smp.unit_ids.size(); ++i)
      pos[static_cast<std::size_t>(smp.unit_ids[i])] = static_cast<double>(i + 1);
    double low = 0.0, high = 0.0;
    for (std::size_t k = 0; k < 100; ++k) {
      low += pos[order[k]];
      high += pos[order[999 - k]];
    }
    wins += high < low;
  }
  CHECK(wins == 100);
}

TEST_CASE("coupon chains") {
  const auto pop = generate_population(500, DegreeModel::geometric(6, 500), {kTrait}, 8);
  RDSConfig cfg;
  cfg.n_target = 100;
  cfg.n_seeds = 4;
  cfg.max_coupons = 0;
  const auto seeds_only = simulate_rds(pop, cfg);
  CHECK(seeds_only.forest.size() == 4);
  CHECK(seeds_only.died_out);
  CHECK_FALSE(seeds_only.warnings.empty());

  cfg.n_seeds = 1;
  cfg.max_coupons = 1;
  const auto path = simulate_rds(pop, cfg);
  REQUIRE(path.forest.size() == 100);
  CHECK(path.forest.wave(99) == 99);

  cfg.n_seeds = 5;
  cfg.max_coupons = 3;
  const auto s = simulate_rds(pop, cfg);
  CHECK(s.forest.size() == 100);
  CHECK(s.forest.seeds().size() == 5);
  std::set<long long> ids(s.unit_ids.begin(), s.unit_ids.end());
  CHECK(ids.size() == 100);
  for (std::size_t i = 0; i < s.forest.size(); ++i) CHECK(s.forest.children(i).size() <= 3);
  CHECK(serialize(simulate_rds(pop, cfg).forest) == serialize(s.forest));
}

TEST_CASE("coupon recruitment shows the successive-sampling degree trend") {
  // mean degree by draw decile, averaged over 100 seeds
  std::vector<double> ss(10, 0.0), rds(10, 0.0);
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto pop = generate_population(1000, DegreeModel::geometric(7, 1000), {}, derive_seed(31, s));
    const auto a = successive_sampling_draw(pop, 300, derive_seed(32, s));
    RDSConfig cfg;
    cfg.n_target = 300;
    cfg.n_seeds = 10;
    cfg.seed = derive_seed(33, s);
    const auto b = simulate_rds(pop, cfg);
    REQUIRE(b.forest.size() == 300);
    for (std::size_t i = 0; i < 300; ++i) {
      ss[i / 30] += a.forest.at(i).degree;
      rds[i / 30] += b.forest.at(i).degree;
    }
  }
  for (std::size_t k = 0; k < 10; ++k) CHECK(std::abs(rds[k] / ss[k] - 1.0) < 0.10);
  CHECK(ss[0] > ss[9]);
}

TEST_CASE("fitted mean degree from a degree-biased sample") {
  double total = 0.0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto pop = generate_population(5000, DegreeModel::geometric(7, 5000), {}, derive_seed(41, s));
    const auto smp = successive_sampling_draw(pop, 300, derive_seed(42, s));
    total += fit_degree_model(smp.forest, rds2_weights(smp.forest)).mu();
  }
  CHECK(std::abs(total / 50 - 7.0) < 0.7);
}

TEST_CASE("trait recovery with gile weights at the true size") {
  double bias = 0.0;
  const int reps = 100;
  for (int r = 0; r < reps; ++r) {
    const auto pop = generate_population(1000, DegreeModel::geometric(7, 1000), {kTrait},
                                         derive_seed(51, static_cast<std::uint64_t>(r)));
    const auto smp = successive_sampling_draw(pop, 300, derive_seed(52, static_cast<std::uint64_t>(r)));
    GileOptions go;
    go.assumed_N = 1000;
    go.sim_draws = 1000;
    const auto w = gile_ss_weights(smp.forest, go);
    bias += weighted_proportion(smp.forest, w, "trait", "yes").point - 100.0 * pop.prevalence("trait", "yes");
  }
  CHECK(std::abs(bias / reps) < 2.0);
}

TEST_CASE("census sample recovers prevalence exactly") {
  const auto pop = generate_population(200, DegreeModel::geometric(5, 200), {kTrait}, 61);
  const auto smp = successive_sampling_draw(pop, 200, 62);
  GileOptions go;
  go.assumed_N = 200;
  const auto w = gile_ss_weights(smp.forest, go);
  CHECK(weighted_proportion(smp.forest, w, "trait", "yes").point ==
        doctest::Approx(100.0 * pop.prevalence("trait", "yes")));
}

TEST_CASE("recovery experiment report shape") {
  nlohmann::json cfg = {{"replicates", 2},
                        {"trials", 2},
                        {"population", {{"true_N", 400}}},
                        {"sampling", {{"n", 120}, {"mode", "coupon_chain"}}},
                        {"prior", {{"lower", 200}, {"upper", 1500}}},
                        {"mcmc", {{"samples", 1000}, {"burn_in", 200}}}};
  const auto sc = RecoveryScenario::from_json(cfg);
  CHECK(sc.prior.hard_max == 8500);
  const auto a = recovery_experiment(sc, 1);
  const auto b = recovery_experiment(sc, 2);
  CHECK(a == b);
  CHECK(a.at("runs").size() == 2);
  CHECK(a.at("size").contains("covered_90"));
  CHECK(a.at("trait").contains("mean_bias"));

  CHECK_THROWS_AS(RecoveryScenario::from_json({{"sampling", {{"n", 5000}}}}), ValidationError);
  CHECK_THROWS_AS(RecoveryScenario::from_json({{"sampling", {{"mode", "snowball"}}}}), ValidationError);
}

}  // TEST_SUITE
