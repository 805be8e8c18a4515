#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "hpe/error.hpp"
#include "hpe/netsim.hpp"
#include "hpe/prior_pipeline.hpp"
#include "hpe/stats.hpp"
#include "hpe/sspse.hpp"
#include "oracles.hpp"

using namespace hpe;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

PriorSpec interval_spec(double lo, double hi, long long hmin, long long hmax) {
  PriorSpec s;
  s.form = PriorForm::Interval50;
  s.lower = lo;
  s.upper = hi;
  s.hard_min = hmin;
  s.hard_max = hmax;
  return s;
}

PriorSpec single_spec(PriorForm form, double v, long long hmin, long long hmax) {
  PriorSpec s;
  s.form = form;
  s.lower = v;
  s.hard_min = hmin;
  s.hard_max = hmax;
  return s;
}

}  // namespace

TEST_SUITE("sspse") {

TEST_CASE("interval prior reproduces its quartiles") {
  const auto [lo, hi] = ci95_to_ci50(12552, 6946);
  const auto p = fit_prior(interval_spec(lo, hi, 323, 129099));
  CHECK(rel(p.quantile(0.25), lo) < 0.01);
  CHECK(rel(p.quantile(0.75), hi) < 0.01);
  // inversion check against the CDF itself
  CHECK(p.cdf(lo) == doctest::Approx(0.25).epsilon(0.01));
  CHECK(p.cdf(hi) == doctest::Approx(0.75).epsilon(0.01));

  const auto diffuse = fit_prior(interval_spec(500, 5000, 300, 20000));
  CHECK(rel(diffuse.quantile(0.25), 500) < 0.01);
  CHECK(rel(diffuse.quantile(0.75), 5000) < 0.01);
}

TEST_CASE("symmetric interval gives equal shapes") {
  const auto p = fit_prior(interval_spec(500, 700, 100, 1100));
  CHECK(std::abs(p.alpha() - p.beta()) < 1e-6);
  CHECK(p.mean() == doctest::Approx(600.0));
}

TEST_CASE("density integrates to one") {
  const auto p = fit_prior(interval_spec(9000, 15000, 323, 60000));
  const int m = 20000;
  const double a = 323, b = 60000, h = (b - a) / m;
  double s = p.pdf(a) + p.pdf(b);
  for (int i = 1; i < m; ++i) s += (i % 2 ? 4.0 : 2.0) * p.pdf(a + i * h);
  CHECK(s * h / 3 == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(p.log_pdf(322) == -INFINITY);
  CHECK(p.log_pdf(60001) == -INFINITY);
}

TEST_CASE("single statistic priors") {
  const auto pm = fit_prior(single_spec(PriorForm::Mean, 12000, 323, 120000));
  CHECK(rel(pm.mean(), 12000) < 0.005);
  CHECK(pm.sd() / pm.mean() == doctest::Approx(kSingleStatisticCv).epsilon(0.01));

  const auto pmed = fit_prior(single_spec(PriorForm::Median, 9000, 323, 90000));
  CHECK(rel(pmed.median(), 9000) < 0.005);

  const auto pmode = fit_prior(single_spec(PriorForm::Mode, 7000, 323, 90000));
  CHECK(rel(pmode.mode(), 7000) < 0.005);

  // mode hard against the lower limit: right skewed
  const auto skew = fit_prior(single_spec(PriorForm::Mode, 330, 300, 20000));
  CHECK(skew.mean() > skew.median());
  CHECK(skew.median() > skew.mode());
}

TEST_CASE("infeasible prior specs") {
  CHECK_THROWS_AS(fit_prior(interval_spec(100, 5000, 300, 20000)), ValidationError);
  CHECK_THROWS_AS(fit_prior(interval_spec(5000, 500, 300, 20000)), ValidationError);
  CHECK_THROWS_AS(fit_prior(interval_spec(500, 50000, 300, 20000)), ValidationError);
  CHECK_THROWS_AS(fit_prior(single_spec(PriorForm::Mean, 200, 300, 20000)), ValidationError);
}

TEST_CASE("prior summary is ordered") {
  const auto s = fit_prior(interval_spec(10162, 14942, 323, 129099)).summary();
  const std::array<double, 7> q = {s.q025, s.q05, s.q25, s.median, s.q75, s.q90, s.q975};
  CHECK(std::is_sorted(q.begin(), q.end()));
}

TEST_CASE("degree model fit") {
  const std::vector<int> fives(10, 5);
  const std::vector<double> ones(10, 1.0);
  CHECK(fit_degree_model(fives, ones).mu() == doctest::Approx(5.0));
  const std::vector<int> d = {2, 4};
  const std::vector<double> w = {2, 1};
  const auto m = fit_degree_model(d, w);
  CHECK(m.mu() == doctest::Approx(8.0 / 3));
  CHECK(m.cap() == 8);
  CHECK_THROWS_AS(fit_degree_model(std::vector<int>(5, 1), std::vector<double>(5, 1.0)), NumericalError);
}

TEST_CASE("geometric model: normalized, right mean, sampler agrees") {
  const auto g = DegreeModel::geometric(7.0, 1000);
  double s = 0.0, mean = 0.0;
  for (int k = 1; k <= g.cap(); ++k) {
    s += g.pmf(k);
    mean += k * g.pmf(k);
  }
  CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mean == doctest::Approx(7.0).epsilon(1e-9));
  CHECK(g.mean() == doctest::Approx(7.0).epsilon(1e-9));
  CHECK(g.variance() == doctest::Approx(42.0).epsilon(1e-9));  // mu (mu - 1)

  Rng rng(5);
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += g.sample(rng);
  CHECK(std::abs(sum / n - 7.0) < 3.0 * std::sqrt(42.0 / n));

  const auto t = DegreeModel::geometric(7.0, 10);
  double ts = 0.0;
  for (int k = 1; k <= 10; ++k) ts += t.pmf(k);
  CHECK(ts == doctest::Approx(1.0));
  CHECK(t.pmf(11) == 0.0);
}

TEST_CASE("sequence likelihood closed forms") {
  const auto m = DegreeModel::geometric(4.0, 50);
  CHECK(sequence_log_likelihood(std::vector<int>{3}, 1, m, 100, 1) == doctest::Approx(0.0));
  CHECK(sequence_log_likelihood(std::vector<int>{2, 7}, 2, m, 100, 1) ==
        doctest::Approx(std::log(2.0 / 9.0)));
  const std::vector<int> d = {9, 4, 4, 1, 6};
  double exact = 0.0, T = 24.0;
  for (int x : d) {
    exact += std::log(x / T);
    T -= x;
  }
  CHECK(sequence_log_likelihood(d, 5, m, 100, 1) == doctest::Approx(exact));
  CHECK_THROWS_AS(sequence_log_likelihood(d, 4, m, 100, 1), ValidationError);
  CHECK_THROWS_AS(sequence_log_likelihood(d, 8, m, 99, 1), ValidationError);
}

TEST_CASE("sequence likelihood matches enumeration within 3 MC standard errors") {
  auto check_case = [](const std::vector<int>& obs, long long N, const DegreeModel& model,
                       const std::vector<double>& pmf, std::uint64_t seed) {
    const double exact = oracle::sequence_likelihood(obs, static_cast<int>(N) - static_cast<int>(obs.size()), pmf);
    const auto reps = sequence_log_likelihood_replicates(obs, N, model, 400, seed);
    std::vector<double> lik;
    for (double r : reps) lik.push_back(std::exp(r));
    const double mean = stats::mean(lik);
    const double se = stats::stddev(lik) / std::sqrt(static_cast<double>(lik.size()));
    CHECK(std::abs(mean - exact) <= 3.0 * se + 1e-12 * exact);
    CHECK(sequence_log_likelihood(obs, N, model, 400, seed) == doctest::Approx(std::log(mean)));
  };
  const std::vector<double> uni = {0.5, 0, 0, 0, 0.5};
  const auto model = DegreeModel::from_pmf(uni);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) check_case({5, 1}, 3, model, uni, seed);

  const auto geo = DegreeModel::geometric(3.0, 8);
  std::vector<double> gp;
  for (int k = 1; k <= 8; ++k) gp.push_back(geo.pmf(k));
  check_case({7, 2, 3}, 6, geo, gp, 3);
  check_case({1, 8}, 5, geo, gp, 4);
}

TEST_CASE("sequence likelihood is deterministic per seed") {
  const auto m = DegreeModel::geometric(6.0, 100);
  std::vector<int> d;
  for (int i = 0; i < 100; ++i) d.push_back(1 + (i * 37) % 23);
  CHECK(sequence_log_likelihood(d, 5000, m, 100, 9) == sequence_log_likelihood(d, 5000, m, 100, 9));
  CHECK(sequence_log_likelihood(d, 150, m, 100, 9) == sequence_log_likelihood(d, 150, m, 100, 9));
}

TEST_CASE("chain: determinism, support and summaries") {
  std::vector<int> d;
  for (int i = 0; i < 60; ++i) d.push_back(1 + (i * 13) % 17);
  const auto prior = fit_prior(interval_spec(150, 600, 60, 3000));
  const auto model = fit_degree_model(d, rds2_weights(d).weights);
  McmcConfig cfg;
  cfg.burn_in = 200;
  cfg.samples = 1000;
  cfg.seed = 42;
  const auto a = run_mcmc(d, prior, model, cfg);
  const auto b = run_mcmc(d, prior, model, cfg);
  CHECK(a.samples == b.samples);
  CHECK(a.samples.size() == 1000);
  for (auto x : a.samples) {
    CHECK(x >= 60);
    CHECK(x <= 3000);
  }
  const auto v = a.stats;
  const std::array<double, 7> q = {v.q025, v.q05, v.q25, v.median, v.q75, v.q90, v.q975};
  CHECK(std::is_sorted(q.begin(), q.end()));
  CHECK(v.mode >= 60);
  CHECK(v.mode <= 3000);
  CHECK(a.acceptance_rate > 0.0);
  CHECK(a.acceptance_rate < 1.0);

  cfg.samples = 999;
  CHECK_THROWS_AS(run_mcmc(d, prior, model, cfg), ValidationError);
}

TEST_CASE("flat likelihood samples the prior") {
  const auto prior = fit_prior(interval_spec(10162, 14942, 323, 129099));
  const auto model = DegreeModel::geometric(5.0, 100);
  std::vector<int> d(323, 5);
  McmcConfig cfg;
  cfg.flat_likelihood = true;
  cfg.samples = 40000;
  cfg.proposal_scale = 0.5;
  const auto mt = multi_trial(d, prior, model, cfg, 4, 100);
  CHECK(rel(mt.mean_of.mean, prior.mean()) < 0.02);
  CHECK(rel(mt.mean_of.median, prior.median()) < 0.02);
  CHECK(rel(mt.mean_of.q25, prior.quantile(0.25)) < 0.02);
  CHECK(rel(mt.mean_of.q75, prior.quantile(0.75)) < 0.02);
}

TEST_CASE("late high degrees push the posterior up") {
  std::vector<int> d;
  for (int i = 0; i < 80; ++i) d.push_back(1 + (i * 7) % 25);
  std::vector<int> inc = d, dec = d;
  std::sort(inc.begin(), inc.end());
  std::sort(dec.begin(), dec.end(), std::greater<>());
  const auto prior = fit_prior(interval_spec(150, 1000, 80, 5000));
  const auto model = fit_degree_model(d, rds2_weights(d).weights);
  McmcConfig cfg;
  cfg.seed = 3;
  const double up = run_mcmc(inc, prior, model, cfg).stats.mean;
  const double down = run_mcmc(dec, prior, model, cfg).stats.mean;
  CHECK(up > down);
}

TEST_CASE("multi-trial aggregation") {
  std::vector<int> d;
  for (int i = 0; i < 50; ++i) d.push_back(1 + (i * 11) % 19);
  const auto prior = fit_prior(interval_spec(100, 400, 50, 2000));
  const auto model = fit_degree_model(d, rds2_weights(d).weights);
  McmcConfig cfg;
  cfg.burn_in = 100;
  cfg.samples = 1000;
  const std::vector<std::uint64_t> same = {5, 5};
  const auto twin = multi_trial_with_seeds(d, prior, model, cfg, same);
  CHECK(twin.standard_error.mean == 0.0);
  CHECK(twin.mean_of.mean == twin.trials[0].stats.mean);

  const auto one = multi_trial(d, prior, model, cfg, 1, 10);
  CHECK(one.mean_of.mean == one.trials[0].stats.mean);
  CHECK(one.mean_of.q975 == one.trials[0].stats.q975);

  const auto serial = multi_trial(d, prior, model, cfg, 3, 10, 1);
  const auto par = multi_trial(d, prior, model, cfg, 3, 10, 3);
  CHECK(serial.mean_of.mean == par.mean_of.mean);
  CHECK(serial.trials[2].samples == par.trials[2].samples);
  CHECK(serial.trials[0].trial_seed == 11);
  CHECK(serial.trials[2].trial_seed == 13);
}

TEST_CASE("relative change") {
  CHECK(stats::round_to(relative_change(12878, 10071.5), 2) == doctest::Approx(-21.79));
  CHECK(stats::round_to(relative_change(9061, 8469.8), 2) == doctest::Approx(-6.52));
  CHECK(relative_change(42, 42) == 0.0);
  CHECK_THROWS_AS(relative_change(0, 1), ValidationError);
}

TEST_CASE("sample summaries") {
  std::vector<long long> s;
  for (long long i = 1; i <= 101; ++i) s.push_back(i);
  const auto st = summarize_samples(s);
  CHECK(st.mean == doctest::Approx(51.0));
  CHECK(st.median == doctest::Approx(51.0));
  CHECK(st.q25 == doctest::Approx(26.0));
  CHECK(st.q975 == doctest::Approx(98.5));
}

TEST_CASE("density grid") {
  const auto prior = fit_prior(interval_spec(150, 600, 60, 3000));
  std::vector<long long> s;
  for (int i = 0; i < 2000; ++i) s.push_back(200 + (i * 7919) % 400);
  const auto g = density_grid(prior, s, 64);
  REQUIRE(g.x.size() == 64);
  CHECK(g.prior_pdf[10] == doctest::Approx(prior.pdf(g.x[10])));
  const auto csv = density_csv(g);
  CHECK(csv.rfind("x,prior_pdf,posterior_pdf\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 65);
}

}  // TEST_SUITE
