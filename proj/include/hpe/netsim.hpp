#ifndef HPE_NETSIM_HPP
#define HPE_NETSIM_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "hpe/rds_model.hpp"
#include "hpe/sspse.hpp"

namespace hpe {

struct TraitConfig {
  std::string name;
  std::vector<std::string> categories;
  std::vector<double> prevalences;  // same length as categories, sums to 1
};

/// Ground-truth population: one degree and one label per trait for each
/// unit.
struct SyntheticPopulation {
  long long true_N = 0;
  std::vector<int> degrees;
  std::vector<TraitConfig> trait_configs;
  /// traits[t][u] is unit u's label for trait_configs[t].
  std::vector<std::vector<std::string>> traits;
  std::uint64_t seed = 0;

  /// Fraction of units labelled `category` for trait `trait`.
  double prevalence(const std::string& trait, const std::string& category) const;
};

SyntheticPopulation generate_population(long long true_N, const DegreeModel& degree_model,
                                        const std::vector<TraitConfig>& traits, std::uint64_t seed);

enum class SamplingMode { SuccessiveSampling, CouponChain };

std::string to_string(SamplingMode m);
SamplingMode sampling_mode_from_string(const std::string& s);

struct RDSConfig {
  int n_target = 0;
  int n_seeds = 1;
  int max_coupons = 3;
  SamplingMode mode = SamplingMode::CouponChain;
  std::uint64_t seed = 1;
  /// Chance that an issued coupon is redeemed.
  double redeem_prob = 1.0;
};

struct SimulatedSample {
  RecruitmentForest forest;
  std::vector<long long> unit_ids;  // population index of each respondent, in sample order
  bool died_out = false;
  std::vector<std::string> warnings;
};

/// Draws n units one at a time, each with probability d_i / (remaining
/// degree mass). Every draw is a seed of a flat forest.
SimulatedSample successive_sampling_draw(const SyntheticPopulation& pop, int n, std::uint64_t seed);

/// Coupon-chain recruitment. Seeds are drawn by degree; every recruit gets
/// max_coupons coupons, and coupons are processed in issue order, each
/// recruiting an unsampled unit chosen by degree among those remaining.
/// Stops at n_target or when no coupons are left (die-out, flagged).
SimulatedSample simulate_rds(const SyntheticPopulation& pop, const RDSConfig& cfg);

struct RecoveryScenario {
  long long true_N = 1000;
  double mu = 7.0;
  int degree_cap = 1000;
  int n = 300;
  int n_seeds = 10;
  int max_coupons = 3;
  SamplingMode mode = SamplingMode::SuccessiveSampling;
  PriorSpec prior;  // hard_min is replaced by the sample size
  int trials = 2;
  int replicates = 10;
  bool run_pse = true;
  McmcConfig mcmc;
  TraitConfig trait;
  int gile_sim_draws = 1000;
  std::uint64_t base_seed = 1;

  static RecoveryScenario from_json(const nlohmann::json& j);
};

/// The population and sample used by replicate `replicate` of the
/// experiment below.
SyntheticPopulation recovery_population(const RecoveryScenario& scenario, std::size_t replicate);
SimulatedSample recovery_sample(const RecoveryScenario& scenario, const SyntheticPopulation& pop,
                                std::size_t replicate);

/// Population, sample, SS-PSE multi-trial run and trait estimation for each
/// replicate; reports coverage of the central 90% interval and bias
/// against the truth.
nlohmann::json recovery_experiment(const RecoveryScenario& scenario, unsigned threads = 1);

}  // namespace hpe

#endif
