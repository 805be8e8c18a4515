#include "hpe/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "hpe/error.hpp"
#include "hpe/parallel.hpp"
#include "hpe/ss_estimator.hpp"
#include "hpe/stats.hpp"

namespace hpe {

double SyntheticPopulation::prevalence(const std::string& trait, const std::string& category) const {
  for (std::size_t t = 0; t < trait_configs.size(); ++t) {
    if (trait_configs[t].name != trait) continue;
    const auto hits = std::count(traits[t].begin(), traits[t].end(), category);
    return static_cast<double>(hits) / static_cast<double>(true_N);
  }
  throw ValidationError("population has no trait '" + trait + "'");
}

SyntheticPopulation generate_population(long long true_N, const DegreeModel& degree_model,
                                        const std::vector<TraitConfig>& traits, std::uint64_t seed) {
  if (true_N < 1) throw ValidationError("population size must be at least 1");
  for (const auto& t : traits) {
    if (t.categories.empty() || t.categories.size() != t.prevalences.size())
      throw ValidationError("trait '" + t.name + "' needs one prevalence per category");
    const double total = std::accumulate(t.prevalences.begin(), t.prevalences.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-9)
      throw ValidationError("prevalences of trait '" + t.name + "' must sum to 1");
  }
  SyntheticPopulation pop;
  pop.true_N = true_N;
  pop.trait_configs = traits;
  pop.seed = seed;
  Rng rng(seed);
  pop.degrees.resize(static_cast<std::size_t>(true_N));
  for (auto& d : pop.degrees) d = degree_model.sample(rng);
  for (const auto& t : traits) {
    std::vector<double> cum(t.prevalences.size());
    std::partial_sum(t.prevalences.begin(), t.prevalences.end(), cum.begin());
    std::vector<std::string> labels(static_cast<std::size_t>(true_N));
    for (auto& l : labels) {
      const double u = rng.uniform();
      auto k = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
      l = t.categories[std::min(k, t.categories.size() - 1)];
    }
    pop.traits.push_back(std::move(labels));
  }
  return pop;
}

std::string to_string(SamplingMode m) {
  return m == SamplingMode::SuccessiveSampling ? "successive_sampling" : "coupon_chain";
}

SamplingMode sampling_mode_from_string(const std::string& s) {
  if (s == "successive_sampling") return SamplingMode::SuccessiveSampling;
  if (s == "coupon_chain") return SamplingMode::CouponChain;
  throw ValidationError("unknown sampling mode '" + s + "'");
}

namespace {

// Fenwick tree over integer degrees; selection is exact integer
// arithmetic so draws do not depend on floating-point summation order.
class DegreeUrn {
 public:
  explicit DegreeUrn(const std::vector<int>& degrees) : tree_(degrees.size() + 1, 0) {
    for (std::size_t i = 0; i < degrees.size(); ++i) add(i, degrees[i]);
    weight_.assign(degrees.begin(), degrees.end());
    while ((std::size_t{1} << (log_ + 1)) <= degrees.size()) ++log_;
  }

  long long total() const { return total_; }
  bool empty() const { return total_ == 0; }

  // Removes and returns a unit chosen with probability weight / total.
  std::size_t draw(Rng& rng) {
    long long target = static_cast<long long>(rng.below(static_cast<std::uint64_t>(total_)));
    std::size_t pos = 0;
    for (int b = log_; b >= 0; --b) {
      const std::size_t next = pos + (std::size_t{1} << b);
      if (next < tree_.size() && tree_[next] <= target) {
        pos = next;
        target -= tree_[next];
      }
    }
    const std::size_t unit = pos;  // 0-based
    add(unit, -weight_[unit]);
    weight_[unit] = 0;
    return unit;
  }

 private:
  void add(std::size_t i, long long delta) {
    total_ += delta;
    for (std::size_t j = i + 1; j < tree_.size(); j += j & (~j + 1)) tree_[j] += delta;
  }
  std::vector<long long> tree_;
  std::vector<long long> weight_;
  long long total_ = 0;
  int log_ = 0;
};

Respondent make_respondent(const SyntheticPopulation& pop, std::size_t unit, int order,
                           std::optional<std::string> recruiter) {
  Respondent r;
  r.id = "u" + std::to_string(unit);
  r.recruiter_id = std::move(recruiter);
  r.degree = pop.degrees[unit];
  r.sample_order = order;
  for (std::size_t t = 0; t < pop.trait_configs.size(); ++t)
    r.traits[pop.trait_configs[t].name] = pop.traits[t][unit];
  return r;
}

std::vector<std::string> trait_names(const SyntheticPopulation& pop) {
  std::vector<std::string> names;
  for (const auto& t : pop.trait_configs) names.push_back(t.name);
  return names;
}

}  // namespace

SimulatedSample successive_sampling_draw(const SyntheticPopulation& pop, int n, std::uint64_t seed) {
  if (n < 0 || n > pop.true_N) throw ValidationError("sample size exceeds population size");
  Rng rng(seed);
  DegreeUrn urn(pop.degrees);
  SimulatedSample out;
  std::vector<Respondent> rs;
  for (int i = 0; i < n; ++i) {
    const std::size_t unit = urn.draw(rng);
    out.unit_ids.push_back(static_cast<long long>(unit));
    rs.push_back(make_respondent(pop, unit, i + 1, std::nullopt));
  }
  out.forest = RecruitmentForest::build(std::move(rs), trait_names(pop), 0);
  return out;
}

SimulatedSample simulate_rds(const SyntheticPopulation& pop, const RDSConfig& cfg) {
  if (cfg.n_target < 0 || cfg.n_target > pop.true_N)
    throw ValidationError("target sample size exceeds population size");
  if (cfg.n_seeds < 1) throw ValidationError("need at least one seed");
  if (cfg.max_coupons < 0) throw ValidationError("max_coupons must be non-negative");
  if (cfg.mode == SamplingMode::SuccessiveSampling)
    return successive_sampling_draw(pop, cfg.n_target, cfg.seed);

  Rng rng(cfg.seed);
  DegreeUrn urn(pop.degrees);
  SimulatedSample out;
  std::vector<Respondent> rs;
  std::deque<std::size_t> coupons;  // holder's position in rs, one entry per coupon
  auto recruit = [&](std::optional<std::size_t> holder) {
    const std::size_t unit = urn.draw(rng);
    std::optional<std::string> recruiter;
    if (holder) recruiter = rs[*holder].id;
    rs.push_back(make_respondent(pop, unit, static_cast<int>(rs.size()) + 1, recruiter));
    out.unit_ids.push_back(static_cast<long long>(unit));
    for (int c = 0; c < cfg.max_coupons; ++c) coupons.push_back(rs.size() - 1);
  };
  const int seeds = std::min(cfg.n_seeds, cfg.n_target);
  for (int s = 0; s < seeds; ++s) recruit(std::nullopt);
  while (static_cast<int>(rs.size()) < cfg.n_target && !coupons.empty() && !urn.empty()) {
    const std::size_t holder = coupons.front();
    coupons.pop_front();
    if (cfg.redeem_prob < 1.0 && !rng.bernoulli(cfg.redeem_prob)) continue;
    recruit(holder);
  }
  if (static_cast<int>(rs.size()) < cfg.n_target) {
    out.died_out = true;
    out.warnings.push_back("recruitment died out after " + std::to_string(rs.size()) + " of " +
                           std::to_string(cfg.n_target) + " respondents");
  }
  out.forest = RecruitmentForest::build(std::move(rs), trait_names(pop), cfg.max_coupons);
  return out;
}

// ------------------------------------------------------------- recovery

namespace {

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(std::string("scenario field '") + key + "' has the wrong type");
  }
}

}  // namespace

RecoveryScenario RecoveryScenario::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("scenario config must be a table");
  RecoveryScenario s;
  s.prior.form = PriorForm::Interval50;
  s.prior.lower = 500;
  s.prior.upper = 5000;
  s.trait = {"trait", {"yes", "no"}, {0.3, 0.7}};

  const nlohmann::json pop = j.value("population", nlohmann::json::object());
  read_opt(pop, "true_N", s.true_N);
  read_opt(pop, "mu", s.mu);
  read_opt(pop, "degree_cap", s.degree_cap);
  const nlohmann::json smp = j.value("sampling", nlohmann::json::object());
  read_opt(smp, "n", s.n);
  read_opt(smp, "n_seeds", s.n_seeds);
  read_opt(smp, "max_coupons", s.max_coupons);
  if (smp.contains("mode")) s.mode = sampling_mode_from_string(smp.at("mode").get<std::string>());
  const nlohmann::json pr = j.value("prior", nlohmann::json::object());
  if (pr.contains("form")) s.prior.form = prior_form_from_string(pr.at("form").get<std::string>());
  read_opt(pr, "lower", s.prior.lower);
  read_opt(pr, "upper", s.prior.upper);
  read_opt(pr, "value", s.prior.lower);
  read_opt(pr, "hard_max", s.prior.hard_max);
  const nlohmann::json mc = j.value("mcmc", nlohmann::json::object());
  read_opt(mc, "burn_in", s.mcmc.burn_in);
  read_opt(mc, "samples", s.mcmc.samples);
  read_opt(mc, "thin", s.mcmc.thin);
  read_opt(mc, "proposal_scale", s.mcmc.proposal_scale);
  read_opt(mc, "mc_draws", s.mcmc.mc_draws);
  read_opt(j, "trials", s.trials);
  read_opt(j, "replicates", s.replicates);
  read_opt(j, "run_pse", s.run_pse);
  read_opt(j, "gile_sim_draws", s.gile_sim_draws);
  read_opt(j, "seed", s.base_seed);
  if (j.contains("trait")) {
    const auto& t = j.at("trait");
    read_opt(t, "name", s.trait.name);
    read_opt(t, "categories", s.trait.categories);
    read_opt(t, "prevalences", s.trait.prevalences);
  }
  if (s.prior.hard_max <= 0) {
    const double point =
        s.prior.form == PriorForm::Interval50 ? 0.5 * (s.prior.lower + s.prior.upper) : s.prior.lower;
    s.prior.hard_max = std::llround(10.0 * point);
  }
  if (s.true_N < 1 || s.n < 1 || s.n > s.true_N)
    throw ValidationError("scenario needs 1 <= sampling.n <= population.true_N");
  if (s.replicates < 1 || s.trials < 1) throw ValidationError("scenario needs replicates, trials >= 1");
  return s;
}

SyntheticPopulation recovery_population(const RecoveryScenario& sc, std::size_t replicate) {
  return generate_population(sc.true_N, DegreeModel::geometric(sc.mu, sc.degree_cap), {sc.trait},
                             derive_seed(sc.base_seed, 3 * replicate));
}

SimulatedSample recovery_sample(const RecoveryScenario& sc, const SyntheticPopulation& pop,
                                std::size_t replicate) {
  RDSConfig cfg;
  cfg.n_target = sc.n;
  cfg.n_seeds = sc.n_seeds;
  cfg.max_coupons = sc.max_coupons;
  cfg.mode = sc.mode;
  cfg.seed = derive_seed(sc.base_seed, 3 * replicate + 1);
  return simulate_rds(pop, cfg);
}

nlohmann::json recovery_experiment(const RecoveryScenario& sc, unsigned threads) {
  struct Outcome {
    nlohmann::json row;
    bool covered = false;
    double posterior_mean = 0.0;
    double trait_bias = 0.0;
  };
  const auto reps = static_cast<std::size_t>(sc.replicates);
  std::vector<Outcome> outcomes(reps);
  const std::string target_category = sc.trait.categories.front();

  parallel_for(reps, threads, [&](std::size_t r) {
    const auto pop = recovery_population(sc, r);
    const auto sample = recovery_sample(sc, pop, r);
    const auto& forest = sample.forest;
    const auto degrees = forest.degrees();

    Outcome& o = outcomes[r];
    o.row["replicate"] = r;
    o.row["sample_size"] = forest.size();
    o.row["died_out"] = sample.died_out;

    GileOptions go;
    go.assumed_N = sc.true_N;
    go.sim_draws = sc.gile_sim_draws;
    go.seed = derive_seed(sc.base_seed, 3 * r + 2);
    const auto w = gile_ss_weights(forest, go);
    const double truth = 100.0 * pop.prevalence(sc.trait.name, target_category);
    const double est = weighted_proportion(forest, w, sc.trait.name, target_category).point;
    o.trait_bias = est - truth;
    o.row["trait_truth"] = truth;
    o.row["trait_estimate"] = est;

    if (sc.run_pse) {
      const auto model = fit_degree_model(forest, rds2_weights(forest));
      PriorSpec spec = sc.prior;
      spec.hard_min = static_cast<long long>(forest.size());
      const auto prior = fit_prior(spec);
      const auto mt = multi_trial(degrees, prior, model, sc.mcmc, sc.trials,
                                  derive_seed(sc.base_seed, 1000003 + r));
      o.posterior_mean = mt.mean_of.mean;
      o.covered = mt.mean_of.q05 <= static_cast<double>(sc.true_N) &&
                  static_cast<double>(sc.true_N) <= mt.mean_of.q95;
      o.row["fitted_mu"] = model.mu();
      o.row["posterior_mean"] = mt.mean_of.mean;
      o.row["posterior_median"] = mt.mean_of.median;
      o.row["ci90"] = {mt.mean_of.q05, mt.mean_of.q95};
      o.row["covered"] = o.covered;
      std::vector<double> acc;
      for (const auto& t : mt.trials) acc.push_back(t.acceptance_rate);
      o.row["acceptance_rate"] = stats::mean(acc);
    }
  });

  nlohmann::json report;
  report["true_N"] = sc.true_N;
  report["mu"] = sc.mu;
  report["n"] = sc.n;
  report["mode"] = to_string(sc.mode);
  report["replicates"] = sc.replicates;
  report["trials"] = sc.trials;
  report["seed"] = sc.base_seed;
  auto rows = nlohmann::json::array();
  std::vector<double> means, biases;
  int covered = 0;
  for (const auto& o : outcomes) {
    rows.push_back(o.row);
    biases.push_back(o.trait_bias);
    if (sc.run_pse) {
      means.push_back(o.posterior_mean);
      covered += o.covered;
    }
  }
  report["runs"] = std::move(rows);
  report["trait"] = {{"name", sc.trait.name},
                     {"category", target_category},
                     {"mean_bias", stats::mean(biases)},
                     {"mean_abs_bias", [&] {
                        double s = 0.0;
                        for (double b : biases) s += std::abs(b);
                        return s / static_cast<double>(biases.size());
                      }()}};
  if (sc.run_pse) {
    const double mom = stats::mean(means);
    report["size"] = {{"covered_90", covered},
                      {"mean_of_means", mom},
                      {"relative_error", (mom - static_cast<double>(sc.true_N)) /
                                             static_cast<double>(sc.true_N)}};
  }
  return report;
}

}  // namespace hpe
