#ifndef HPE_SSPSE_HPP
#define HPE_SSPSE_HPP

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hpe/rds_model.hpp"
#include "hpe/rng.hpp"
#include "hpe/ss_estimator.hpp"

namespace hpe {

enum class PriorForm { Mean, Median, Mode, Interval50 };

std::string to_string(PriorForm f);
PriorForm prior_form_from_string(const std::string& s);

/// Elicited prior on population size. For Interval50, (lower, upper) are
/// the 25% and 75% points; the other forms use `lower` only.
struct PriorSpec {
  PriorForm form = PriorForm::Interval50;
  double lower = 0.0;
  double upper = 0.0;
  long long hard_min = 1;  // the sample size
  long long hard_max = 0;
};

/// Location summaries shared by the fitted prior, each posterior trial and
/// the trial aggregate.
struct SummaryStats {
  double mean = 0.0;
  double median = 0.0;
  double mode = 0.0;
  double q025 = 0.0;
  double q05 = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double q90 = 0.0;
  double q95 = 0.0;
  double q975 = 0.0;

  static constexpr std::array<const char*, 10> kNames = {
      "mean", "median", "mode", "q025", "q05", "q25", "q75", "q90", "q95", "q975"};
  std::array<double, 10> values() const;
  static SummaryStats from_values(const std::array<double, 10>& v);
};

/// Beta density rescaled to [hard_min, hard_max].
class FittedPrior {
 public:
  FittedPrior(double alpha, double beta, long long hard_min, long long hard_max);

  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  long long hard_min() const { return lo_; }
  long long hard_max() const { return hi_; }

  double pdf(double n) const;
  /// Log density at integer population size n; -inf outside the support.
  /// The end points are evaluated half a unit inside the interval.
  double log_pdf(long long n) const;
  double cdf(double n) const;
  double quantile(double p) const;
  double mean() const;
  double sd() const;
  double median() const { return quantile(0.5); }
  /// Interior mode when both shapes exceed 1, otherwise the boundary the
  /// density piles up against.
  double mode() const;
  SummaryStats summary() const;

 private:
  double alpha_;
  double beta_;
  long long lo_;
  long long hi_;
};

/// Coefficient of variation used to pin the second shape parameter for
/// single-statistic prior specifications.
inline constexpr double kSingleStatisticCv = 0.5;

/// Solves for beta shape parameters matching `spec`: the 25%/75% quantiles
/// for Interval50 (1% relative tolerance each), or the requested statistic
/// (0.5%) with the coefficient of variation fixed at kSingleStatisticCv.
/// Throws ValidationError for infeasible specs and NumericalError when the
/// solver fails.
FittedPrior fit_prior(const PriorSpec& spec);

/// Degree distribution over 1..cap. The geometric family (discrete
/// exponential) is parameterized by its untruncated mean mu and then
/// truncated at cap.
class DegreeModel {
 public:
  static DegreeModel geometric(double mu, int cap);
  /// pmf[k] is the probability of degree k + 1; normalized on construction.
  static DegreeModel from_pmf(std::vector<double> pmf);

  bool is_geometric() const { return geometric_; }
  double mu() const { return mu_; }
  int cap() const { return static_cast<int>(pmf_.size()); }
  double pmf(int degree) const;
  double log_pmf(int degree) const;
  double mean() const { return mean_; }
  double variance() const { return var_; }
  /// Inverse-CDF draw, so equal uniforms give equal degrees on every
  /// platform.
  int sample(Rng& rng) const;
  int quantile(double u) const;

 private:
  DegreeModel() = default;
  void finish();
  bool geometric_ = false;
  double mu_ = 0.0;
  std::vector<double> pmf_;
  std::vector<double> cdf_;
  double mean_ = 0.0;
  double var_ = 0.0;
};

/// Geometric model with mu = weighted mean degree (weights undo the
/// size bias of degree-proportional sampling) and cap = 2 * max degree.
/// Throws NumericalError when mu <= 1.
DegreeModel fit_degree_model(std::span<const int> degrees, std::span<const double> weights);
DegreeModel fit_degree_model(const RecruitmentForest& forest, const InclusionWeights& weights);

/// Number of unobserved units below which their degrees are drawn one by
/// one; above it their total is drawn from a moment-matched normal.
inline constexpr long long kExactUnobservedLimit = 256;

/// Per-replicate log likelihood of the ordered degree sequence, each
/// sum_i [log d_i - log(T - sum_{j<i} d_j)] for one draw of the total
/// degree mass T of the N - n unobserved units.
std::vector<double> sequence_log_likelihood_replicates(std::span<const int> degrees, long long N,
                                                       const DegreeModel& model, int mc_draws,
                                                       std::uint64_t seed);

/// Log of the mean replicate likelihood. Exact when N == n.
double sequence_log_likelihood(std::span<const int> degrees, long long N, const DegreeModel& model,
                               int mc_draws, std::uint64_t seed);

struct McmcConfig {
  int burn_in = 1000;
  int samples = 5000;
  int thin = 1;
  double proposal_scale = 0.15;  // sd of the random walk on log N
  int mc_draws = 100;
  int mu_update_every = 10;
  double mu_proposal_sd = 0.05;
  std::uint64_t seed = 1;
  /// Replace the likelihood by a constant; the chain then samples the prior.
  bool flat_likelihood = false;
};

struct PosteriorSummary {
  std::vector<long long> samples;
  SummaryStats stats;
  double acceptance_rate = 0.0;
  double mu_mean = 0.0;
  std::uint64_t trial_seed = 0;
  std::vector<std::string> warnings;
};

SummaryStats summarize_samples(std::span<const long long> samples);

/// Metropolis-Hastings over N (Gaussian random walk on log N) with a
/// degree-model update of mu every `mu_update_every` steps. The target is
/// prior(N) times the probability of the observed ordered degrees:
/// N!/(N-n)! * prod f(d_i) * exp(sequence_log_likelihood). The likelihood
/// is evaluated with the chain seed on every call, so the Monte Carlo
/// noise is common to all states.
PosteriorSummary run_mcmc(std::span<const int> degrees, const FittedPrior& prior,
                          const DegreeModel& model, const McmcConfig& config);
PosteriorSummary run_mcmc(const RecruitmentForest& forest, const FittedPrior& prior,
                          const DegreeModel& model, const McmcConfig& config);

struct MultiTrialResult {
  std::vector<PosteriorSummary> trials;
  SummaryStats mean_of;         // per-statistic average over trials
  SummaryStats standard_error;  // sd over trials / sqrt(trials)
};

/// Runs one chain per seed (base_seed + 1 .. base_seed + trials), possibly
/// in parallel, and reduces in trial order.
MultiTrialResult multi_trial(std::span<const int> degrees, const FittedPrior& prior,
                             const DegreeModel& model, const McmcConfig& config, int trials,
                             std::uint64_t base_seed, unsigned threads = 1);
/// Same, with explicit per-trial seeds.
MultiTrialResult multi_trial_with_seeds(std::span<const int> degrees, const FittedPrior& prior,
                                        const DegreeModel& model, const McmcConfig& config,
                                        std::span<const std::uint64_t> seeds, unsigned threads = 1);

/// 100 * (posterior - prior) / prior.
double relative_change(double prior_stat, double posterior_stat);

struct DensityGrid {
  std::vector<double> x;
  std::vector<double> prior_pdf;
  std::vector<double> posterior_pdf;
};

/// Prior density and a kernel estimate of the pooled posterior samples on
/// a common grid, for plotting the two curves together.
DensityGrid density_grid(const FittedPrior& prior, std::span<const long long> samples,
                         int points = 512);
std::string density_csv(const DensityGrid& grid);

}  // namespace hpe

#endif
