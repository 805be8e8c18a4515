#ifndef HPE_PRIOR_PIPELINE_HPP
#define HPE_PRIOR_PIPELINE_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace hpe {

enum class Units { Count, Percent };

/// A point value with an optional 95% half-width. An absent half-width is
/// an unknown interval and renders as "±?".
struct IntervalEstimate {
  double point = 0.0;
  std::optional<double> half95;
  Units units = Units::Percent;

  static IntervalEstimate count(double point, std::optional<double> half95 = std::nullopt) {
    return {point, half95, Units::Count};
  }
  static IntervalEstimate percent(double point, std::optional<double> half95 = std::nullopt) {
    return {point, half95, Units::Percent};
  }

  /// "12,552 ± 6,946", "9.60% ± 3.42%", "885 ± ?"
  std::string render() const;
};

/// Published county aggregates and survey-weighted shares that feed the
/// census bridge.
struct CountyInputs {
  std::string county;
  IntervalEstimate N_SSH = IntervalEstimate::count(0);
  IntervalEstimate P_M_given_SSH;
  IntervalEstimate P_L_given_SSH;
  IntervalEstimate P_LivSit1;
  IntervalEstimate P_LivSit2;
  IntervalEstimate P_HIVpos;
  IntervalEstimate P_HIVunk;
  IntervalEstimate N_LM = IntervalEstimate::count(0);

  /// Reads a config object. Each field is a number or a table
  /// {point = ..., half95 = ...}. Throws ValidationError naming the field
  /// that is missing or out of range.
  static CountyInputs from_json(const nlohmann::json& j);
  void validate() const;
};

struct ReportRow {
  std::string key;
  std::string symbol;
  std::string description;
  IntervalEstimate value;
  std::string provenance;
};

/// Every derived quantity of the census bridge, plus the ordered rows
/// (inputs and derivations) with the step that produced each.
struct PriorReport {
  std::string county;
  IntervalEstimate P_LM_given_SSH;
  IntervalEstimate N_LM_SSH;
  IntervalEstimate P_DomesPart;
  IntervalEstimate P_SSH;
  IntervalEstimate N_LMSM;
  IntervalEstimate P_MSM_given_LM;
  IntervalEstimate N_HIVpos;
  IntervalEstimate N_HIVunk;
  std::vector<ReportRow> rows;

  nlohmann::json to_json() const;
  /// symbol,description,value,half95,units,provenance
  std::string to_csv() const;
};

/// pm * pl / 100 under independence of the two shares, to 2 decimals.
double latino_male_ssh_share(double pm, double pl);

/// share * n_ssh / 100 rounded to the nearest unit.
long long latino_male_ssh_count(double share, double n_ssh);

/// Sum of two disjoint category shares; half-widths combine in quadrature.
IntervalEstimate domestic_partnership_rate(const IntervalEstimate& p1, const IntervalEstimate& p2);

/// Half of domestic partners are taken to be the householder.
IntervalEstimate ssh_rate(const IntervalEstimate& domes);

/// Multiplier step N = count / rate. The half-width is the distance to the
/// upper end point count / (rate - half95); when rate - half95 <= 0 the
/// interval is unknown. Throws NumericalError when rate <= 0.
IntervalEstimate msm_population_prior(double n_lmssh, const IntervalEstimate& rate);

/// n * p / 100; only the proportion's half-width is scaled. `decimals` is 0
/// for whole counts or 2 for summary tables.
IntervalEstimate hiv_subpopulation(double n_lmsm, const IntervalEstimate& p_hiv, int decimals = 0);

IntervalEstimate msm_share_of_latino_males(const IntervalEstimate& n_lmsm, double n_lm);

/// Ratio between the 50% and 95% normal half-widths as used by the bridge.
inline constexpr double kCi50Ratio = 0.3441;

/// z(0.75) / z(0.975), computed; rounds to kCi50Ratio.
double normal_ci50_ratio();

std::pair<double, double> ci95_to_ci50(double point, double half95);

struct NsumInputs {
  std::vector<long long> known_members;   // m_i
  std::vector<long long> network_sizes;   // c_i
  long long frame_population = 0;         // N
};

/// round(N * sum m_i / sum c_i). Throws ValidationError on a zero
/// denominator or m_i > c_i.
long long nsum_estimate(const NsumInputs& inputs);

PriorReport build_prior_report(const CountyInputs& inputs);

}  // namespace hpe

#endif
