#ifndef HPE_SS_ESTIMATOR_HPP
#define HPE_SS_ESTIMATOR_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hpe/rds_model.hpp"

namespace hpe {

enum class WeightMethod { RDS2, GileSS };

std::string to_string(WeightMethod m);

/// Per-respondent sampling weights (reciprocal inclusion probabilities),
/// aligned with the forest's sample order and normalized to mean 1.
struct InclusionWeights {
  std::vector<double> weights;
  WeightMethod method = WeightMethod::RDS2;
  std::optional<long long> assumed_N;  // GileSS only
  bool converged = true;
  int iterations = 0;
  std::vector<std::string> warnings;
};

/// A weighted category share. All values are percentages except
/// design_effect; ci95 is always point +/- 1.96 se and may cross zero.
struct ProportionEstimate {
  std::string trait;
  std::string category;
  double point = 0.0;
  double se = 0.0;
  double ci95_lo = 0.0;
  double ci95_hi = 0.0;
  double design_effect = 0.0;
  std::size_t sample_size = 0;  // respondents in the category
  std::size_t analysis_n = 0;   // respondents with the trait observed
};

/// Fills se, ci95 and the design effect se^2 / (p(1-p)/analysis_n), with p
/// in proportion units. A degenerate p of 0 or 1 gives design effect 0.
void set_standard_error(ProportionEstimate& est, double se);

InclusionWeights rds2_weights(std::span<const int> degrees);
InclusionWeights rds2_weights(const RecruitmentForest& forest);

struct GileOptions {
  long long assumed_N = 0;
  int sim_draws = 2000;
  double tol = 1e-4;
  int max_iterations = 50;
  int max_classes = 30;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

/// Gile's successive-sampling weights. Iterates: population degree
/// composition estimated from the current inclusion probabilities, then
/// probabilities re-estimated by simulating successive sampling of n units
/// from a population of assumed_N with that composition. Every iteration
/// reuses the same random streams, so the map being iterated is
/// deterministic. On non-convergence the last iterate is returned with
/// `converged == false` and a warning.
InclusionWeights gile_ss_weights(std::span<const int> degrees, const GileOptions& options);
InclusionWeights gile_ss_weights(const RecruitmentForest& forest, const GileOptions& options);

/// Per-class inclusion probabilities for successive sampling (probability
/// proportional to degree, without replacement) of n units from a
/// population holding class_counts[k] units of degree class_degrees[k].
///
/// Each simulated draw contributes the conditional selection probability
/// of every class at every step rather than the realized 0/1 inclusion
/// (a Rao-Blackwellized count), which keeps the estimate unbiased and
/// makes it nearly exact when the population is huge.
std::vector<double> ss_inclusion_probabilities(std::span<const double> class_degrees,
                                               std::span<const long long> class_counts,
                                               int n, int draws, std::uint64_t seed,
                                               unsigned threads = 1);

/// 100 * (sum of weights in category) / (sum of weights with the trait
/// observed). Respondents with a missing value are excluded. Only the
/// point, counts and identifiers are filled in.
ProportionEstimate weighted_proportion(const RecruitmentForest& forest,
                                       const InclusionWeights& weights,
                                       const std::string& trait, const std::string& category);

struct BootstrapOptions {
  int replicates = 500;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct BootstrapResult {
  std::vector<ProportionEstimate> estimates;  // one per observed category, sorted by label
  bool respondent_level = false;              // fell back from the tree bootstrap
  std::vector<std::string> warnings;
};

/// Tree bootstrap of every category of `trait`: seeds are resampled with
/// replacement, then each sampled respondent's recruits are resampled with
/// replacement, recursively. Resampled respondents keep their original
/// weights. With fewer than two seeds it falls back to respondent-level
/// resampling and says so in `warnings`.
BootstrapResult bootstrap_trait(const RecruitmentForest& forest, const InclusionWeights& weights,
                                const std::string& trait, const BootstrapOptions& options);

ProportionEstimate bootstrap_ci(const RecruitmentForest& forest, const InclusionWeights& weights,
                                const std::string& trait, const std::string& category,
                                const BootstrapOptions& options);

/// Sum of disjoint category estimates of one trait; empty input gives 0.
double aggregate_categories(std::span<const ProportionEstimate> estimates);

/// Table-shaped CSV:
/// trait,category,point,ci95_lo,ci95_hi,design_effect,se,sample_size
std::string estimates_csv(std::span<const ProportionEstimate> estimates);

}  // namespace hpe

#endif
