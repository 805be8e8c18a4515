#include "hpe/sspse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/beta.hpp>

#include "hpe/error.hpp"
#include "hpe/parallel.hpp"
#include "hpe/stats.hpp"

namespace hpe {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::string to_string(PriorForm f) {
  switch (f) {
    case PriorForm::Mean: return "mean";
    case PriorForm::Median: return "median";
    case PriorForm::Mode: return "mode";
    case PriorForm::Interval50: return "interval50";
  }
  return "interval50";
}

PriorForm prior_form_from_string(const std::string& s) {
  if (s == "mean") return PriorForm::Mean;
  if (s == "median") return PriorForm::Median;
  if (s == "mode") return PriorForm::Mode;
  if (s == "interval50") return PriorForm::Interval50;
  throw ValidationError("unknown prior form '" + s + "'");
}

std::array<double, 10> SummaryStats::values() const {
  return {mean, median, mode, q025, q05, q25, q75, q90, q95, q975};
}

SummaryStats SummaryStats::from_values(const std::array<double, 10>& v) {
  return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9]};
}

// ---------------------------------------------------------------- prior

FittedPrior::FittedPrior(double alpha, double beta, long long hard_min, long long hard_max)
    : alpha_(alpha), beta_(beta), lo_(hard_min), hi_(hard_max) {
  if (!(alpha > 0.0) || !(beta > 0.0)) throw ValidationError("beta shapes must be positive");
  if (hard_max <= hard_min) throw ValidationError("prior support is empty");
}

double FittedPrior::pdf(double n) const {
  if (n < static_cast<double>(lo_) || n > static_cast<double>(hi_)) return 0.0;
  const double range = static_cast<double>(hi_ - lo_);
  const double x = (n - static_cast<double>(lo_)) / range;
  if (x <= 0.0 || x >= 1.0) {
    if ((x <= 0.0 && alpha_ < 1.0) || (x >= 1.0 && beta_ < 1.0)) return kInf;
    if ((x <= 0.0 && alpha_ > 1.0) || (x >= 1.0 && beta_ > 1.0)) return 0.0;
  }
  return boost::math::pdf(boost::math::beta_distribution<>(alpha_, beta_), x) / range;
}

double FittedPrior::log_pdf(long long n) const {
  if (n < lo_ || n > hi_) return -kInf;
  const double range = static_cast<double>(hi_ - lo_);
  const double eps = 0.5 / range;
  const double x = std::clamp((static_cast<double>(n - lo_)) / range, eps, 1.0 - eps);
  const double log_beta_fn = std::lgamma(alpha_) + std::lgamma(beta_) - std::lgamma(alpha_ + beta_);
  return (alpha_ - 1.0) * std::log(x) + (beta_ - 1.0) * std::log1p(-x) - log_beta_fn -
         std::log(range);
}

double FittedPrior::cdf(double n) const {
  const double x = (n - static_cast<double>(lo_)) / static_cast<double>(hi_ - lo_);
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return boost::math::cdf(boost::math::beta_distribution<>(alpha_, beta_), x);
}

double FittedPrior::quantile(double p) const {
  const double x = boost::math::quantile(boost::math::beta_distribution<>(alpha_, beta_), p);
  return static_cast<double>(lo_) + x * static_cast<double>(hi_ - lo_);
}

double FittedPrior::mean() const {
  return static_cast<double>(lo_) + alpha_ / (alpha_ + beta_) * static_cast<double>(hi_ - lo_);
}

double FittedPrior::sd() const {
  const double s = alpha_ + beta_;
  return std::sqrt(alpha_ * beta_ / (s * s * (s + 1.0))) * static_cast<double>(hi_ - lo_);
}

double FittedPrior::mode() const {
  double x;
  if (alpha_ > 1.0 && beta_ > 1.0)
    x = (alpha_ - 1.0) / (alpha_ + beta_ - 2.0);
  else if (alpha_ <= 1.0 && beta_ > 1.0)
    x = 0.0;
  else if (alpha_ > 1.0 && beta_ <= 1.0)
    x = 1.0;
  else
    x = alpha_ < beta_ ? 0.0 : 1.0;
  return static_cast<double>(lo_) + x * static_cast<double>(hi_ - lo_);
}

SummaryStats FittedPrior::summary() const {
  SummaryStats s;
  s.mean = mean();
  s.median = median();
  s.mode = mode();
  s.q025 = quantile(0.025);
  s.q05 = quantile(0.05);
  s.q25 = quantile(0.25);
  s.q75 = quantile(0.75);
  s.q90 = quantile(0.90);
  s.q95 = quantile(0.95);
  s.q975 = quantile(0.975);
  return s;
}

namespace {

using Vec2 = std::array<double, 2>;

double norm_inf(const Vec2& r) { return std::max(std::abs(r[0]), std::abs(r[1])); }

// Damped Newton with a forward-difference Jacobian. Residual evaluations
// that throw or return non-finite values count as infinitely bad.
Vec2 solve2(const std::function<Vec2(const Vec2&)>& residual, Vec2 x, double tol) {
  auto safe = [&](const Vec2& p) -> Vec2 {
    try {
      Vec2 r = residual(p);
      if (std::isfinite(r[0]) && std::isfinite(r[1])) return r;
    } catch (const std::exception&) {
    }
    return {kInf, kInf};
  };
  Vec2 r = safe(x);
  if (!std::isfinite(norm_inf(r))) throw NumericalError("prior solver: bad starting point");
  for (int it = 0; it < 200 && norm_inf(r) > tol; ++it) {
    double jac[2][2];
    for (int j = 0; j < 2; ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(x[j]));
      Vec2 xp = x;
      xp[j] += h;
      Vec2 rp = safe(xp);
      if (!std::isfinite(norm_inf(rp))) {
        xp[j] = x[j] - h;
        rp = safe(xp);
        for (int i = 0; i < 2; ++i) jac[i][j] = (r[i] - rp[i]) / h;
      } else {
        for (int i = 0; i < 2; ++i) jac[i][j] = (rp[i] - r[i]) / h;
      }
    }
    const double det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    if (!std::isfinite(det) || std::abs(det) < 1e-300)
      throw NumericalError("prior solver: singular Jacobian");
    const Vec2 step = {(jac[1][1] * r[0] - jac[0][1] * r[1]) / det,
                       (-jac[1][0] * r[0] + jac[0][0] * r[1]) / det};
    double lambda = 1.0;
    bool improved = false;
    for (int k = 0; k < 40; ++k, lambda *= 0.5) {
      const double cap = 2.0;  // limit moves in log-parameter space
      Vec2 s = {lambda * step[0], lambda * step[1]};
      const double big = norm_inf(s);
      if (big > cap) s = {s[0] * cap / big, s[1] * cap / big};
      const Vec2 xn = {x[0] - s[0], x[1] - s[1]};
      const Vec2 rn = safe(xn);
      if (norm_inf(rn) < norm_inf(r)) {
        x = xn;
        r = rn;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  if (norm_inf(r) > tol * 1e3) throw NumericalError("prior solver did not converge");
  return x;
}

// Method-of-moments shapes for a unit-interval mean and sd.
Vec2 moment_shapes(double m, double s) {
  const double v = s * s;
  double nu = m * (1.0 - m) / v - 1.0;
  if (!(nu > 0.0)) nu = 2.0;
  return {std::max(m * nu, 1e-3), std::max((1.0 - m) * nu, 1e-3)};
}

double beta_median(double a, double b) {
  return boost::math::quantile(boost::math::beta_distribution<>(a, b), 0.5);
}

}  // namespace

FittedPrior fit_prior(const PriorSpec& spec) {
  const double lo = static_cast<double>(spec.hard_min);
  const double hi = static_cast<double>(spec.hard_max);
  if (spec.hard_min < 1) throw ValidationError("prior hard_min must be positive");
  if (!(hi > lo)) throw ValidationError("prior hard_max must exceed hard_min");
  const double range = hi - lo;
  auto unit = [&](double n) { return (n - lo) / range; };
  auto inside = [&](double v) { return v > lo && v < hi; };

  if (spec.form == PriorForm::Interval50) {
    if (!(spec.lower < spec.upper)) throw ValidationError("prior interval needs lower < upper");
    if (!inside(spec.lower) || !inside(spec.upper))
      throw ValidationError("prior interval lies outside [hard_min, hard_max]");
    const double u1 = unit(spec.lower);
    const double u2 = unit(spec.upper);
    const Vec2 start = moment_shapes(0.5 * (u1 + u2), (u2 - u1) / 1.349);
    auto res = [&](const Vec2& p) -> Vec2 {
      boost::math::beta_distribution<> d(std::exp(p[0]), std::exp(p[1]));
      return {std::log(boost::math::quantile(d, 0.25) / u1),
              std::log(boost::math::quantile(d, 0.75) / u2)};
    };
    const Vec2 x = solve2(res, {std::log(start[0]), std::log(start[1])}, 1e-11);
    FittedPrior fp(std::exp(x[0]), std::exp(x[1]), spec.hard_min, spec.hard_max);
    if (std::abs(fp.quantile(0.25) / spec.lower - 1.0) > 0.01 ||
        std::abs(fp.quantile(0.75) / spec.upper - 1.0) > 0.01)
      throw NumericalError("prior fit misses the requested quartiles");
    return fp;
  }

  const double target = spec.lower;
  if (!inside(target)) throw ValidationError("prior statistic lies outside (hard_min, hard_max)");
  const double tu = unit(target);
  const double sd_u = kSingleStatisticCv * target / range;

  auto cv_of = [&](double a, double b) {
    const double s = a + b;
    const double m = a / s;
    const double sd = std::sqrt(a * b / (s * s * (s + 1.0)));
    return sd * range / (lo + m * range);
  };

  FittedPrior fitted(1.0, 1.0, spec.hard_min, spec.hard_max);
  double achieved = 0.0;
  switch (spec.form) {
    case PriorForm::Mean: {
      if (!(sd_u * sd_u < tu * (1.0 - tu)))
        throw ValidationError("no beta prior has this mean with coefficient of variation 0.5");
      const double nu = tu * (1.0 - tu) / (sd_u * sd_u) - 1.0;
      fitted = FittedPrior(tu * nu, (1.0 - tu) * nu, spec.hard_min, spec.hard_max);
      achieved = fitted.mean();
      break;
    }
    case PriorForm::Median: {
      const Vec2 start = moment_shapes(tu, std::min(sd_u, 0.45 * std::sqrt(tu * (1.0 - tu))));
      auto res = [&](const Vec2& p) -> Vec2 {
        const double a = std::exp(p[0]);
        const double b = std::exp(p[1]);
        return {std::log(beta_median(a, b) / tu), std::log(cv_of(a, b) / kSingleStatisticCv)};
      };
      const Vec2 x = solve2(res, {std::log(start[0]), std::log(start[1])}, 1e-11);
      fitted = FittedPrior(std::exp(x[0]), std::exp(x[1]), spec.hard_min, spec.hard_max);
      achieved = fitted.median();
      break;
    }
    case PriorForm::Mode: {
      // interior mode needs both shapes above 1
      Vec2 start = moment_shapes(tu, std::min(sd_u, 0.45 * std::sqrt(tu * (1.0 - tu))));
      start = {std::max(start[0] - 1.0, 1e-3), std::max(start[1] - 1.0, 1e-3)};
      auto res = [&](const Vec2& p) -> Vec2 {
        const double a = 1.0 + std::exp(p[0]);
        const double b = 1.0 + std::exp(p[1]);
        const double mode = (a - 1.0) / (a + b - 2.0);
        return {std::log(mode / tu), std::log(cv_of(a, b) / kSingleStatisticCv)};
      };
      const Vec2 x = solve2(res, {std::log(start[0]), std::log(start[1])}, 1e-11);
      fitted = FittedPrior(1.0 + std::exp(x[0]), 1.0 + std::exp(x[1]), spec.hard_min,
                           spec.hard_max);
      achieved = fitted.mode();
      break;
    }
    case PriorForm::Interval50: break;
  }
  if (std::abs(achieved / target - 1.0) > 0.005)
    throw NumericalError("prior fit misses the requested " + to_string(spec.form));
  return fitted;
}

// --------------------------------------------------------- degree model

DegreeModel DegreeModel::geometric(double mu, int cap) {
  if (!(mu > 1.0)) throw NumericalError("geometric degree model needs mean > 1");
  if (cap < 1) throw ValidationError("degree cap must be positive");
  DegreeModel m;
  m.geometric_ = true;
  m.mu_ = mu;
  const double q = 1.0 - 1.0 / mu;
  m.pmf_.resize(static_cast<std::size_t>(cap));
  double w = 1.0;
  for (auto& p : m.pmf_) {
    p = w;
    w *= q;
  }
  m.finish();
  return m;
}

DegreeModel DegreeModel::from_pmf(std::vector<double> pmf) {
  if (pmf.empty()) throw ValidationError("degree pmf is empty");
  for (double p : pmf)
    if (!(p >= 0.0)) throw ValidationError("degree pmf has a negative entry");
  DegreeModel m;
  m.pmf_ = std::move(pmf);
  m.finish();
  m.mu_ = m.mean_;
  return m;
}

void DegreeModel::finish() {
  const double total = std::accumulate(pmf_.begin(), pmf_.end(), 0.0);
  if (!(total > 0.0)) throw ValidationError("degree pmf has no mass");
  cdf_.resize(pmf_.size());
  double acc = 0.0;
  mean_ = 0.0;
  double second = 0.0;
  for (std::size_t k = 0; k < pmf_.size(); ++k) {
    pmf_[k] /= total;
    acc += pmf_[k];
    cdf_[k] = acc;
    const double d = static_cast<double>(k + 1);
    mean_ += d * pmf_[k];
    second += d * d * pmf_[k];
  }
  cdf_.back() = 1.0;
  var_ = std::max(0.0, second - mean_ * mean_);
}

double DegreeModel::pmf(int degree) const {
  if (degree < 1 || degree > cap()) return 0.0;
  return pmf_[static_cast<std::size_t>(degree - 1)];
}

double DegreeModel::log_pmf(int degree) const {
  const double p = pmf(degree);
  return p > 0.0 ? std::log(p) : -kInf;
}

int DegreeModel::quantile(double u) const {
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  return static_cast<int>(std::min<std::ptrdiff_t>(it - cdf_.begin(), cap() - 1)) + 1;
}

int DegreeModel::sample(Rng& rng) const { return quantile(rng.uniform()); }

DegreeModel fit_degree_model(std::span<const int> degrees, std::span<const double> weights) {
  if (degrees.empty()) throw ValidationError("cannot fit a degree model to an empty sample");
  if (weights.size() != degrees.size())
    throw ValidationError("weights do not match the sample size");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < degrees.size(); ++i) {
    num += weights[i] * degrees[i];
    den += weights[i];
  }
  const double mu = num / den;
  if (!(mu > 1.0)) throw NumericalError("fitted mean degree is <= 1; degree model is degenerate");
  const int cap = 2 * *std::max_element(degrees.begin(), degrees.end());
  return DegreeModel::geometric(mu, cap);
}

DegreeModel fit_degree_model(const RecruitmentForest& forest, const InclusionWeights& weights) {
  const auto d = forest.degrees();
  return fit_degree_model(d, weights.weights);
}

// ----------------------------------------------------------- likelihood

namespace {

struct TiltedModel {
  DegreeModel model;
  double lambda = 0.0;
  double log_mgf = 0.0;  // log sum_k f(k) exp(-lambda k)
};

TiltedModel tilt(const DegreeModel& base, double observed, std::span<const double> before,
                 long long unobserved) {
  const double m = static_cast<double>(unobserved);
  double lambda = 0.0;
  double total = observed + m * base.mean();
  std::vector<double> pmf(static_cast<std::size_t>(base.cap()));
  double mgf = 1.0;
  for (int it = 0; it < 4; ++it) {
    lambda = 0.0;
    for (double b : before) lambda += 1.0 / (total - b);
    mgf = 0.0;
    double mean = 0.0;
    for (int k = 1; k <= base.cap(); ++k) {
      const double w = base.pmf(k) * std::exp(-lambda * k);
      pmf[static_cast<std::size_t>(k - 1)] = w;
      mgf += w;
      mean += k * w;
    }
    total = observed + m * mean / mgf;
  }
  return {DegreeModel::from_pmf(std::move(pmf)), lambda, std::log(mgf)};
}

}  // namespace

std::vector<double> sequence_log_likelihood_replicates(std::span<const int> degrees, long long N,
                                                       const DegreeModel& model, int mc_draws,
                                                       std::uint64_t seed) {
  const auto n = static_cast<long long>(degrees.size());
  if (N < n) throw ValidationError("population size is smaller than the sample");
  if (mc_draws < 1) throw ValidationError("need at least one likelihood replicate");
  double log_num = 0.0;
  double observed = 0.0;
  std::vector<double> before(degrees.size());
  for (std::size_t i = 0; i < degrees.size(); ++i) {
    if (degrees[i] < 1) throw ValidationError("degrees must be >= 1");
    before[i] = observed;
    observed += degrees[i];
    log_num += std::log(static_cast<double>(degrees[i]));
  }
  auto log_sequence = [&](double total) {
    double ll = log_num;
    for (double b : before) {
      const double remaining = total - b;
      if (!(remaining > 0.0)) throw NumericalError("remaining degree mass is not positive");
      ll -= std::log(remaining);
    }
    return ll;
  };

  const long long unobserved = N - n;
  std::vector<double> out(static_cast<std::size_t>(mc_draws));
  if (unobserved == 0) {
    std::fill(out.begin(), out.end(), log_sequence(observed));
    return out;
  }

  // Draw the unobserved degrees from the model tilted by exp(-lambda d),
  // with lambda the slope of -log of the sequence term at the expected
  // total mass, and reweight by the likelihood ratio. The integrand is
  // then nearly flat in the total, which keeps the replicate weights tight.
  const TiltedModel tilted = tilt(model, observed, before, unobserved);
  const double m = static_cast<double>(unobserved);
  const bool exact = unobserved <= kExactUnobservedLimit;
  const double mean_total = m * tilted.model.mean();
  const double sd_total = std::sqrt(m * tilted.model.variance());

  for (int r = 0; r < mc_draws; ++r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    double hidden = 0.0;
    if (exact) {
      for (long long j = 0; j < unobserved; ++j) hidden += tilted.model.sample(rng);
    } else {
      hidden = std::clamp(mean_total + sd_total * rng.normal(), m, m * model.cap());
    }
    out[static_cast<std::size_t>(r)] =
        log_sequence(observed + hidden) + tilted.lambda * hidden + m * tilted.log_mgf;
  }
  return out;
}

double sequence_log_likelihood(std::span<const int> degrees, long long N, const DegreeModel& model,
                               int mc_draws, std::uint64_t seed) {
  if (mc_draws < 100) throw ValidationError("sequence likelihood needs mc_draws >= 100");
  const auto reps = sequence_log_likelihood_replicates(degrees, N, model, mc_draws, seed);
  return stats::log_sum_exp(reps) - std::log(static_cast<double>(reps.size()));
}

// ----------------------------------------------------------------- MCMC

SummaryStats summarize_samples(std::span<const long long> samples) {
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  SummaryStats st;
  st.mean = stats::mean(s);
  st.median = stats::quantile_sorted(s, 0.5);
  st.mode = stats::histogram_mode(s);
  st.q025 = stats::quantile_sorted(s, 0.025);
  st.q05 = stats::quantile_sorted(s, 0.05);
  st.q25 = stats::quantile_sorted(s, 0.25);
  st.q75 = stats::quantile_sorted(s, 0.75);
  st.q90 = stats::quantile_sorted(s, 0.90);
  st.q95 = stats::quantile_sorted(s, 0.95);
  st.q975 = stats::quantile_sorted(s, 0.975);
  return st;
}

namespace {

class SizeTarget {
 public:
  SizeTarget(std::span<const int> degrees, const FittedPrior& prior, const McmcConfig& cfg)
      : degrees_(degrees), prior_(prior), cfg_(cfg) {}

  double log_prior(long long N) const { return prior_.log_pdf(N); }

  // log P(ordered degrees | N, model), up to terms constant in both N and mu
  double log_likelihood(long long N, const DegreeModel& model) const {
    if (cfg_.flat_likelihood) return 0.0;
    const auto n = static_cast<double>(degrees_.size());
    const double Nd = static_cast<double>(N);
    double ll = std::lgamma(Nd + 1.0) - std::lgamma(Nd - n + 1.0);
    for (int d : degrees_) ll += model.log_pmf(d);
    const auto reps =
        sequence_log_likelihood_replicates(degrees_, N, model, cfg_.mc_draws, cfg_.seed);
    return ll + stats::log_sum_exp(reps) - std::log(static_cast<double>(reps.size()));
  }

 private:
  std::span<const int> degrees_;
  const FittedPrior& prior_;
  const McmcConfig& cfg_;
};

}  // namespace

PosteriorSummary run_mcmc(std::span<const int> degrees, const FittedPrior& prior,
                          const DegreeModel& model, const McmcConfig& config) {
  if (config.samples < 1000) throw ValidationError("mcmc needs at least 1000 retained samples");
  if (config.burn_in < 0 || config.thin < 1) throw ValidationError("invalid burn-in or thinning");
  if (!(config.proposal_scale > 0.0)) throw ValidationError("proposal scale must be positive");
  if (!config.flat_likelihood && config.mc_draws < 100)
    throw ValidationError("mcmc needs mc_draws >= 100");
  for (int d : degrees)
    if (d > model.cap()) throw ValidationError("observed degree exceeds the degree model cap");

  const long long n = static_cast<long long>(degrees.size());
  const long long floor_n = std::max(prior.hard_min(), n);
  if (floor_n > prior.hard_max()) throw ValidationError("sample is larger than the prior's hard_max");

  SizeTarget target(degrees, prior, config);
  Rng rng(derive_seed(config.seed, 0xC0FFEE));
  PosteriorSummary out;
  out.trial_seed = config.seed;

  DegreeModel current_model = model;
  long long N = std::clamp(std::llround(prior.median()), floor_n, prior.hard_max());
  double ll = target.log_likelihood(N, current_model);
  double lp = target.log_prior(N);

  const long long total_steps =
      static_cast<long long>(config.burn_in) + static_cast<long long>(config.samples) * config.thin;
  long long accepted = 0;
  long long accepted_retained = 0;
  long long proposed_retained = 0;
  double mu_sum = 0.0;
  out.samples.reserve(static_cast<std::size_t>(config.samples));

  for (long long step = 0; step < total_steps; ++step) {
    const bool retained_phase = step >= config.burn_in;
    const double z = rng.normal();
    const double log_u = std::log(rng.uniform_open());
    const long long proposal =
        std::llround(std::exp(std::log(static_cast<double>(N)) + config.proposal_scale * z));
    bool accept = false;
    if (proposal >= floor_n && proposal <= prior.hard_max()) {
      const double lp_new = target.log_prior(proposal);
      const double ll_new = target.log_likelihood(proposal, current_model);
      const double log_ratio = (lp_new + ll_new) - (lp + ll) +
                               std::log(static_cast<double>(proposal) / static_cast<double>(N));
      if (log_u < log_ratio) {
        accept = true;
        N = proposal;
        lp = lp_new;
        ll = ll_new;
      }
    }
    accepted += accept;
    if (retained_phase) {
      ++proposed_retained;
      accepted_retained += accept;
    }

    if (current_model.is_geometric() && config.mu_update_every > 0 &&
        (step + 1) % config.mu_update_every == 0) {
      const double mu = current_model.mu();
      const double mu_new = mu * std::exp(config.mu_proposal_sd * rng.normal());
      const double log_u_mu = std::log(rng.uniform_open());
      if (mu_new > 1.0 && mu_new <= current_model.cap()) {
        const auto candidate = DegreeModel::geometric(mu_new, current_model.cap());
        const double ll_new = target.log_likelihood(N, candidate);
        if (log_u_mu < ll_new - ll + std::log(mu_new / mu)) {
          current_model = candidate;
          ll = ll_new;
        }
      }
    }

    if (retained_phase && (step - config.burn_in) % config.thin == 0) {
      out.samples.push_back(N);
      mu_sum += current_model.mu();
    }
  }

  if (accepted == 0) throw NumericalError("mcmc chain rejected every proposal");
  out.acceptance_rate = proposed_retained > 0 ? static_cast<double>(accepted_retained) /
                                                    static_cast<double>(proposed_retained)
                                              : 0.0;
  if (out.acceptance_rate <= 0.05 || out.acceptance_rate >= 0.95) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "mcmc acceptance rate %.3f outside (0.05, 0.95)",
                  out.acceptance_rate);
    out.warnings.emplace_back(buf);
  }
  out.mu_mean = mu_sum / static_cast<double>(out.samples.size());
  out.stats = summarize_samples(out.samples);
  return out;
}

PosteriorSummary run_mcmc(const RecruitmentForest& forest, const FittedPrior& prior,
                          const DegreeModel& model, const McmcConfig& config) {
  const auto d = forest.degrees();
  return run_mcmc(d, prior, model, config);
}

MultiTrialResult multi_trial_with_seeds(std::span<const int> degrees, const FittedPrior& prior,
                                        const DegreeModel& model, const McmcConfig& config,
                                        std::span<const std::uint64_t> seeds, unsigned threads) {
  if (seeds.empty()) throw ValidationError("need at least one trial");
  MultiTrialResult res;
  res.trials.resize(seeds.size());
  parallel_for(seeds.size(), threads, [&](std::size_t t) {
    McmcConfig cfg = config;
    cfg.seed = seeds[t];
    res.trials[t] = run_mcmc(degrees, prior, model, cfg);
  });
  const std::size_t k = SummaryStats::kNames.size();
  std::array<double, 10> mean{}, se{};
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<double> v;
    for (const auto& tr : res.trials) v.push_back(tr.stats.values()[j]);
    mean[j] = stats::mean(v);
    se[j] = stats::stddev(v) / std::sqrt(static_cast<double>(v.size()));
  }
  res.mean_of = SummaryStats::from_values(mean);
  res.standard_error = SummaryStats::from_values(se);
  return res;
}

MultiTrialResult multi_trial(std::span<const int> degrees, const FittedPrior& prior,
                             const DegreeModel& model, const McmcConfig& config, int trials,
                             std::uint64_t base_seed, unsigned threads) {
  if (trials < 1) throw ValidationError("need at least one trial");
  std::vector<std::uint64_t> seeds;
  for (int t = 1; t <= trials; ++t) seeds.push_back(base_seed + static_cast<std::uint64_t>(t));
  return multi_trial_with_seeds(degrees, prior, model, config, seeds, threads);
}

double relative_change(double prior_stat, double posterior_stat) {
  if (prior_stat == 0.0) throw ValidationError("relative change against a zero prior statistic");
  return 100.0 * (posterior_stat - prior_stat) / prior_stat;
}

DensityGrid density_grid(const FittedPrior& prior, std::span<const long long> samples, int points) {
  if (points < 2) throw ValidationError("density grid needs at least 2 points");
  double lo = prior.quantile(0.001);
  double hi = prior.quantile(0.999);
  std::vector<double> s(samples.begin(), samples.end());
  if (!s.empty()) {
    lo = std::min(lo, *std::min_element(s.begin(), s.end()));
    hi = std::max(hi, *std::max_element(s.begin(), s.end()));
  }
  DensityGrid g;
  for (int i = 0; i < points; ++i) {
    const double x = lo + (hi - lo) * i / (points - 1);
    g.x.push_back(x);
    g.prior_pdf.push_back(prior.pdf(x));
  }
  g.posterior_pdf = s.empty() ? std::vector<double>(g.x.size(), 0.0) : stats::kde(s, g.x);
  return g;
}

std::string density_csv(const DensityGrid& grid) {
  std::ostringstream out;
  out << "x,prior_pdf,posterior_pdf\n";
  char buf[160];
  for (std::size_t i = 0; i < grid.x.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.3f,%.9e,%.9e\n", grid.x[i], grid.prior_pdf[i],
                  grid.posterior_pdf[i]);
    out << buf;
  }
  return out.str();
}

}  // namespace hpe
