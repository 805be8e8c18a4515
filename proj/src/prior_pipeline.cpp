#include "hpe/prior_pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "hpe/error.hpp"
#include "hpe/rds_model.hpp"
#include "hpe/stats.hpp"

namespace hpe {

using stats::round_to;

namespace {

std::string group_thousands(long long v) {
  std::string digits = std::to_string(v < 0 ? -v : v);
  std::string out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i > 0 && (digits.size() - i) % 3 == 0) out += ',';
    out += digits[i];
  }
  return v < 0 ? "-" + out : out;
}

std::string format_value(double v, Units u) {
  if (u == Units::Count) {
    if (v == std::round(v)) return group_thousands(std::llround(v));
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f%%", v);
  return buf;
}

std::string plain_number(double v, Units u) {
  char buf[64];
  if (u == Units::Count && v == std::round(v))
    std::snprintf(buf, sizeof buf, "%lld", std::llround(v));
  else
    std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string IntervalEstimate::render() const {
  std::string s = format_value(point, units) + " ± ";
  return s + (half95 ? format_value(*half95, units) : "?");
}

namespace {

IntervalEstimate read_field(const nlohmann::json& j, const char* name, Units units) {
  if (!j.contains(name)) throw ValidationError(std::string("county config: missing field ") + name);
  const auto& v = j.at(name);
  IntervalEstimate e;
  e.units = units;
  if (v.is_number()) {
    e.point = v.get<double>();
  } else if (v.is_object() && v.contains("point") && v.at("point").is_number()) {
    e.point = v.at("point").get<double>();
    if (v.contains("half95")) {
      if (!v.at("half95").is_number())
        throw ValidationError(std::string("county config: ") + name + ".half95 must be a number");
      e.half95 = v.at("half95").get<double>();
    }
  } else {
    throw ValidationError(std::string("county config: field ") + name +
                          " must be a number or {point, half95}");
  }
  return e;
}

void check_range(const IntervalEstimate& e, const char* name) {
  if (!std::isfinite(e.point)) throw ValidationError(std::string(name) + " is not finite");
  if (e.half95 && !(*e.half95 >= 0.0))
    throw ValidationError(std::string(name) + " half95 must be non-negative");
  if (e.units == Units::Percent && (e.point < 0.0 || e.point > 100.0))
    throw ValidationError(std::string(name) + " must be a percentage in [0, 100]");
  if (e.units == Units::Count && e.point < 0.0)
    throw ValidationError(std::string(name) + " must be a non-negative count");
}

}  // namespace

CountyInputs CountyInputs::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("county config must be a table");
  CountyInputs c;
  if (j.contains("county") && j.at("county").is_string()) c.county = j.at("county").get<std::string>();
  c.N_SSH = read_field(j, "N_SSH", Units::Count);
  c.P_M_given_SSH = read_field(j, "P_M_given_SSH", Units::Percent);
  c.P_L_given_SSH = read_field(j, "P_L_given_SSH", Units::Percent);
  c.P_LivSit1 = read_field(j, "P_LivSit1", Units::Percent);
  c.P_LivSit2 = read_field(j, "P_LivSit2", Units::Percent);
  c.P_HIVpos = read_field(j, "P_HIVpos", Units::Percent);
  c.P_HIVunk = read_field(j, "P_HIVunk", Units::Percent);
  c.N_LM = read_field(j, "N_LM", Units::Count);
  c.validate();
  return c;
}

void CountyInputs::validate() const {
  check_range(N_SSH, "N_SSH");
  check_range(P_M_given_SSH, "P_M_given_SSH");
  check_range(P_L_given_SSH, "P_L_given_SSH");
  check_range(P_LivSit1, "P_LivSit1");
  check_range(P_LivSit2, "P_LivSit2");
  check_range(P_HIVpos, "P_HIVpos");
  check_range(P_HIVunk, "P_HIVunk");
  check_range(N_LM, "N_LM");
}

double latino_male_ssh_share(double pm, double pl) {
  if (pm < 0.0 || pm > 100.0 || pl < 0.0 || pl > 100.0)
    throw ValidationError("shares must be percentages in [0, 100]");
  return round_to(pm * pl / 100.0, 2);
}

long long latino_male_ssh_count(double share, double n_ssh) {
  if (n_ssh < 0.0) throw ValidationError("householder count must be non-negative");
  return std::llround(round_to(share * n_ssh / 100.0, 6));
}

IntervalEstimate domestic_partnership_rate(const IntervalEstimate& p1, const IntervalEstimate& p2) {
  IntervalEstimate out = IntervalEstimate::percent(round_to(p1.point + p2.point, 2));
  if (p1.half95 && p2.half95) out.half95 = round_to(std::hypot(*p1.half95, *p2.half95), 2);
  return out;
}

IntervalEstimate ssh_rate(const IntervalEstimate& domes) {
  IntervalEstimate out = IntervalEstimate::percent(round_to(domes.point / 2.0, 2));
  if (domes.half95) out.half95 = round_to(*domes.half95 / 2.0, 2);
  return out;
}

IntervalEstimate msm_population_prior(double n_lmssh, const IntervalEstimate& rate) {
  if (!(rate.point > 0.0))
    throw NumericalError("householder rate must be positive to scale up the population");
  IntervalEstimate out = IntervalEstimate::count(std::round(n_lmssh / (rate.point / 100.0)));
  if (rate.half95) {
    const double low_rate = rate.point - *rate.half95;
    if (low_rate > 0.0) out.half95 = std::round(n_lmssh / (low_rate / 100.0) - out.point);
  }
  return out;
}

IntervalEstimate hiv_subpopulation(double n_lmsm, const IntervalEstimate& p_hiv, int decimals) {
  if (p_hiv.point < 0.0 || p_hiv.point > 100.0)
    throw ValidationError("subpopulation share must be a percentage in [0, 100]");
  IntervalEstimate out = IntervalEstimate::count(round_to(n_lmsm * p_hiv.point / 100.0, decimals));
  if (p_hiv.half95) out.half95 = round_to(n_lmsm * *p_hiv.half95 / 100.0, decimals);
  return out;
}

IntervalEstimate msm_share_of_latino_males(const IntervalEstimate& n_lmsm, double n_lm) {
  if (!(n_lm > 0.0)) throw ValidationError("number of Latino males must be positive");
  IntervalEstimate out = IntervalEstimate::percent(round_to(100.0 * n_lmsm.point / n_lm, 2));
  if (n_lmsm.half95) out.half95 = round_to(100.0 * *n_lmsm.half95 / n_lm, 2);
  return out;
}

double normal_ci50_ratio() {
  const boost::math::normal_distribution<> z;
  return boost::math::quantile(z, 0.75) / boost::math::quantile(z, 0.975);
}

std::pair<double, double> ci95_to_ci50(double point, double half95) {
  if (half95 < 0.0) throw ValidationError("half-width must be non-negative");
  return {point - kCi50Ratio * half95, point + kCi50Ratio * half95};
}

long long nsum_estimate(const NsumInputs& in) {
  if (in.known_members.size() != in.network_sizes.size())
    throw ValidationError("nsum inputs must have one network size per respondent");
  long long m = 0;
  long long c = 0;
  for (std::size_t i = 0; i < in.known_members.size(); ++i) {
    if (in.known_members[i] < 0 || in.network_sizes[i] < 1)
      throw ValidationError("nsum counts must be non-negative, network sizes positive");
    if (in.known_members[i] > in.network_sizes[i])
      throw ValidationError("known members exceed the personal network size");
    m += in.known_members[i];
    c += in.network_sizes[i];
  }
  if (c <= 0) throw ValidationError("nsum needs a positive total network size");
  return std::llround(static_cast<double>(in.frame_population) * static_cast<double>(m) /
                      static_cast<double>(c));
}

PriorReport build_prior_report(const CountyInputs& in) {
  in.validate();
  PriorReport r;
  r.county = in.county;
  r.P_LM_given_SSH =
      IntervalEstimate::percent(latino_male_ssh_share(in.P_M_given_SSH.point, in.P_L_given_SSH.point));
  r.N_LM_SSH = IntervalEstimate::count(
      static_cast<double>(latino_male_ssh_count(r.P_LM_given_SSH.point, in.N_SSH.point)));
  r.P_DomesPart = domestic_partnership_rate(in.P_LivSit1, in.P_LivSit2);
  r.P_SSH = ssh_rate(r.P_DomesPart);
  r.N_LMSM = msm_population_prior(r.N_LM_SSH.point, r.P_SSH);
  r.P_MSM_given_LM = msm_share_of_latino_males(r.N_LMSM, in.N_LM.point);
  r.N_HIVpos = hiv_subpopulation(r.N_LMSM.point, in.P_HIVpos);
  r.N_HIVunk = hiv_subpopulation(r.N_LMSM.point, in.P_HIVunk);

  r.rows = {
      {"N_SSH", "N_SSH", "# of same-sex householders", in.N_SSH, "input"},
      {"P_M_given_SSH", "P_M|SSH", "% SSH are male", in.P_M_given_SSH, "input"},
      {"P_L_given_SSH", "P_L|SSH", "% SSH are Latino", in.P_L_given_SSH, "input"},
      {"P_LM_given_SSH", "P_L,M|SSH", "% SSH are Latino and male", r.P_LM_given_SSH, "latino_male_ssh_share"},
      {"N_LM_SSH", "N_L,M,SSH", "# of Latino male SSH", r.N_LM_SSH, "latino_male_ssh_count"},
      {"P_LivSit1", "P_LivSit1|L,MSM", "% Latino MSM living with partner only", in.P_LivSit1, "input"},
      {"P_LivSit2", "P_LivSit2|L,MSM", "% Latino MSM living with partner and others", in.P_LivSit2,
       "input"},
      {"P_DomesPart", "P_DomesPart|L,MSM", "% Latino MSM are domestic partner", r.P_DomesPart,
       "domestic_partnership_rate"},
      {"P_SSH", "P_SSH|L,MSM", "% Latino MSM are SSH", r.P_SSH, "ssh_rate"},
      {"N_LMSM", "Prior N_L,MSM", "# of Latino MSM", r.N_LMSM, "msm_population_prior"},
      {"N_LM", "N_L,M", "Number of Latino males", in.N_LM, "input"},
      {"P_MSM_given_LM", "P_MSM|L,M", "% Latino males are MSM", r.P_MSM_given_LM,
       "msm_share_of_latino_males"},
      {"P_HIVpos", "P_HIV+|L,MSM", "% Latino MSM are HIV positive", in.P_HIVpos, "input"},
      {"P_HIVunk", "P_HIV?|L,MSM", "% Latino MSM are HIV unknown", in.P_HIVunk, "input"},
      {"N_HIVpos", "N_L,MSM,HIV+", "# of Latino MSM are HIV positive", r.N_HIVpos, "hiv_subpopulation"},
      {"N_HIVunk", "N_L,MSM,HIV?", "# of Latino MSM are HIV unknown", r.N_HIVunk, "hiv_subpopulation"},
  };
  return r;
}

nlohmann::json PriorReport::to_json() const {
  nlohmann::json j;
  j["county"] = county;
  auto rows_json = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json e;
    e["key"] = row.key;
    e["symbol"] = row.symbol;
    e["description"] = row.description;
    e["point"] = row.value.point;
    e["half95"] = row.value.half95 ? nlohmann::json(*row.value.half95) : nlohmann::json(nullptr);
    e["units"] = row.value.units == Units::Count ? "count" : "percent";
    e["provenance"] = row.provenance;
    rows_json.push_back(std::move(e));
  }
  j["rows"] = std::move(rows_json);
  const auto ci50 = N_LMSM.half95 ? ci95_to_ci50(N_LMSM.point, *N_LMSM.half95)
                                  : std::pair{N_LMSM.point, N_LMSM.point};
  j["prior_interval50"] = {ci50.first, ci50.second};
  return j;
}

std::string PriorReport::to_csv() const {
  std::ostringstream out;
  out << "symbol,description,value,half95,units,provenance\n";
  for (const auto& row : rows) {
    out << csv_escape(row.symbol) << ',' << csv_escape(row.description) << ','
        << plain_number(row.value.point, row.value.units) << ','
        << (row.value.half95 ? plain_number(*row.value.half95, row.value.units) : "?") << ','
        << (row.value.units == Units::Count ? "count" : "percent") << ','
        << csv_escape(row.provenance) << '\n';
  }
  return out.str();
}

}  // namespace hpe
