#include "hpe/ss_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "hpe/error.hpp"
#include "hpe/parallel.hpp"
#include "hpe/rng.hpp"
#include "hpe/stats.hpp"

namespace hpe {

std::string to_string(WeightMethod m) {
  return m == WeightMethod::RDS2 ? "rds2" : "giless";
}

void set_standard_error(ProportionEstimate& est, double se) {
  est.se = se;
  est.ci95_lo = est.point - 1.96 * se;
  est.ci95_hi = est.point + 1.96 * se;
  const double p = est.point / 100.0;
  const double srs_var = est.analysis_n > 0 ? p * (1.0 - p) / static_cast<double>(est.analysis_n) : 0.0;
  const double s = se / 100.0;
  est.design_effect = srs_var > 0.0 ? s * s / srs_var : 0.0;
}

namespace {

void normalize_mean_one(std::vector<double>& w) {
  if (w.empty()) return;
  const double m = stats::mean(w);
  for (auto& v : w) v /= m;
}

struct DegreeClasses {
  std::vector<double> degree;        // representative degree per class
  std::vector<long long> count;      // sample units per class
  std::vector<std::size_t> of_unit;  // class index per respondent
};

// Distinct observed degrees, merged into at most max_classes quantile bins.
DegreeClasses make_classes(std::span<const int> degrees, int max_classes) {
  std::map<int, long long> tally;
  for (int d : degrees) tally[d]++;
  const double n = static_cast<double>(degrees.size());
  std::map<int, std::size_t> bin_of;
  std::vector<double> sum;
  std::vector<long long> cnt;
  if (static_cast<int>(tally.size()) <= max_classes) {
    for (auto [d, c] : tally) {
      bin_of[d] = sum.size();
      sum.push_back(static_cast<double>(d) * static_cast<double>(c));
      cnt.push_back(c);
    }
  } else {
    long long before = 0;
    long long last_bin = -1;
    for (auto [d, c] : tally) {
      const auto b = static_cast<long long>(std::floor(static_cast<double>(before) / n * max_classes));
      if (b != last_bin) {
        sum.push_back(0.0);
        cnt.push_back(0);
        last_bin = b;
      }
      bin_of[d] = sum.size() - 1;
      sum.back() += static_cast<double>(d) * static_cast<double>(c);
      cnt.back() += c;
      before += c;
    }
  }
  DegreeClasses out;
  for (std::size_t k = 0; k < sum.size(); ++k) {
    out.degree.push_back(sum[k] / static_cast<double>(cnt[k]));
    out.count.push_back(cnt[k]);
  }
  for (int d : degrees) out.of_unit.push_back(bin_of[d]);
  return out;
}

// Integer population composition of size total: every class keeps at least
// its sample count, and the remainder is spread proportionally to the
// estimated excess by largest remainder.
std::vector<long long> population_counts(std::span<const double> estimate,
                                         std::span<const long long> sample_count,
                                         long long total) {
  const std::size_t k = estimate.size();
  std::vector<long long> out(sample_count.begin(), sample_count.end());
  const long long sample_total = std::accumulate(out.begin(), out.end(), 0LL);
  const long long extra = total - sample_total;
  if (extra <= 0) return out;
  std::vector<double> excess(k);
  for (std::size_t i = 0; i < k; ++i)
    excess[i] = std::max(0.0, estimate[i] - static_cast<double>(sample_count[i]));
  double excess_total = std::accumulate(excess.begin(), excess.end(), 0.0);
  if (!(excess_total > 0.0)) {
    std::fill(excess.begin(), excess.end(), 1.0);
    excess_total = static_cast<double>(k);
  }
  std::vector<std::pair<double, std::size_t>> remainders;
  long long assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double share = static_cast<double>(extra) * excess[i] / excess_total;
    const auto whole = static_cast<long long>(std::floor(share));
    out[i] += whole;
    assigned += whole;
    remainders.emplace_back(share - static_cast<double>(whole), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (long long j = 0; j < extra - assigned; ++j)
    out[remainders[static_cast<std::size_t>(j) % k].second]++;
  return out;
}

}  // namespace

InclusionWeights rds2_weights(std::span<const int> degrees) {
  InclusionWeights w;
  w.method = WeightMethod::RDS2;
  w.weights.reserve(degrees.size());
  for (int d : degrees) {
    if (d < 1) throw ValidationError("rds2 weights need degrees >= 1");
    w.weights.push_back(1.0 / d);
  }
  normalize_mean_one(w.weights);
  return w;
}

InclusionWeights rds2_weights(const RecruitmentForest& forest) {
  return rds2_weights(forest.degrees());
}

std::vector<double> ss_inclusion_probabilities(std::span<const double> class_degrees,
                                               std::span<const long long> class_counts, int n,
                                               int draws, std::uint64_t seed, unsigned threads) {
  const std::size_t k = class_degrees.size();
  const long long total = std::accumulate(class_counts.begin(), class_counts.end(), 0LL);
  if (n < 0 || n > total) throw ValidationError("sample size exceeds population size");
  if (draws < 1) throw ValidationError("need at least one simulation draw");
  for (std::size_t i = 0; i < k; ++i)
    if (!(class_degrees[i] > 0.0)) throw ValidationError("class degrees must be positive");

  std::vector<std::vector<double>> per_draw(static_cast<std::size_t>(draws));
  parallel_for(per_draw.size(), threads, [&](std::size_t r) {
    Rng rng(derive_seed(seed, r));
    std::vector<double> remaining(class_counts.begin(), class_counts.end());
    std::vector<double> expected(k, 0.0);
    for (int t = 0; t < n; ++t) {
      double mass = 0.0;
      for (std::size_t i = 0; i < k; ++i) mass += remaining[i] * class_degrees[i];
      for (std::size_t i = 0; i < k; ++i) expected[i] += remaining[i] * class_degrees[i] / mass;
      double u = rng.uniform() * mass;
      std::size_t pick = k;
      for (std::size_t i = 0; i < k; ++i) {
        if (remaining[i] <= 0.0) continue;
        pick = i;
        u -= remaining[i] * class_degrees[i];
        if (u < 0.0) break;
      }
      remaining[pick] -= 1.0;
    }
    per_draw[r] = std::move(expected);
  });

  std::vector<double> pi(k, 0.0);
  for (const auto& e : per_draw)
    for (std::size_t i = 0; i < k; ++i) pi[i] += e[i];
  for (std::size_t i = 0; i < k; ++i)
    pi[i] = class_counts[i] > 0
                ? pi[i] / (static_cast<double>(draws) * static_cast<double>(class_counts[i]))
                : 0.0;
  return pi;
}

InclusionWeights gile_ss_weights(std::span<const int> degrees, const GileOptions& options) {
  const auto n = static_cast<long long>(degrees.size());
  if (n == 0) throw ValidationError("gile weights need a non-empty sample");
  if (options.assumed_N < n)
    throw ValidationError("assumed population size " + std::to_string(options.assumed_N) +
                          " is smaller than the sample size " + std::to_string(n));
  if (options.sim_draws < 1000) throw ValidationError("gile weights need sim_draws >= 1000");
  for (int d : degrees)
    if (d < 1) throw ValidationError("gile weights need degrees >= 1");

  InclusionWeights w;
  w.method = WeightMethod::GileSS;
  w.assumed_N = options.assumed_N;
  if (options.assumed_N == n) {
    // census: every unit is included with certainty
    w.weights.assign(degrees.size(), 1.0);
    return w;
  }

  const DegreeClasses cls = make_classes(degrees, std::max(1, options.max_classes));
  const std::size_t k = cls.degree.size();
  std::vector<double> pi(cls.degree);
  w.converged = false;
  for (int it = 1; it <= options.max_iterations; ++it) {
    std::vector<double> inv(k);
    for (std::size_t i = 0; i < k; ++i) inv[i] = static_cast<double>(cls.count[i]) / pi[i];
    const double inv_total = std::accumulate(inv.begin(), inv.end(), 0.0);
    for (auto& v : inv) v *= static_cast<double>(options.assumed_N) / inv_total;
    const auto counts = population_counts(inv, cls.count, options.assumed_N);
    auto next = ss_inclusion_probabilities(cls.degree, counts, static_cast<int>(n),
                                           options.sim_draws, options.seed, options.threads);
    double change = 0.0;
    for (std::size_t i = 0; i < k; ++i) change = std::max(change, std::abs(next[i] - pi[i]));
    pi = std::move(next);
    w.iterations = it;
    if (change < options.tol) {
      w.converged = true;
      break;
    }
  }
  if (!w.converged)
    w.warnings.push_back("gile weights did not converge after " +
                         std::to_string(options.max_iterations) + " iterations");

  w.weights.reserve(degrees.size());
  for (std::size_t u = 0; u < degrees.size(); ++u) {
    const std::size_t c = cls.of_unit[u];
    // within a merged bin, inclusion scales with the unit's own degree
    const double unit_pi = pi[c] * static_cast<double>(degrees[u]) / cls.degree[c];
    w.weights.push_back(1.0 / unit_pi);
  }
  normalize_mean_one(w.weights);
  return w;
}

InclusionWeights gile_ss_weights(const RecruitmentForest& forest, const GileOptions& options) {
  return gile_ss_weights(forest.degrees(), options);
}

ProportionEstimate weighted_proportion(const RecruitmentForest& forest,
                                       const InclusionWeights& weights, const std::string& trait,
                                       const std::string& category) {
  if (!forest.has_trait(trait)) throw ValidationError("unknown trait '" + trait + "'");
  if (weights.weights.size() != forest.size())
    throw ValidationError("weights do not match the sample size");
  ProportionEstimate est;
  est.trait = trait;
  est.category = category;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < forest.size(); ++i) {
    const auto& v = forest.trait_value(i, trait);
    if (v.empty()) continue;
    den += weights.weights[i];
    est.analysis_n++;
    if (v == category) {
      num += weights.weights[i];
      est.sample_size++;
    }
  }
  if (!(den > 0.0))
    throw NumericalError("no respondent has an observed value for trait '" + trait + "'");
  est.point = 100.0 * num / den;
  return est;
}

namespace {

// Indices of one tree-bootstrap resample.
std::vector<std::size_t> tree_resample(const RecruitmentForest& forest, Rng& rng) {
  std::vector<std::size_t> out;
  out.reserve(forest.size());
  const auto& seeds = forest.seeds();
  std::vector<std::size_t> stack;
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    stack.push_back(seeds[rng.below(seeds.size())]);
    while (!stack.empty()) {
      const std::size_t node = stack.back();
      stack.pop_back();
      out.push_back(node);
      const auto& kids = forest.children(node);
      for (std::size_t c = 0; c < kids.size(); ++c) stack.push_back(kids[rng.below(kids.size())]);
    }
  }
  return out;
}

std::vector<std::size_t> flat_resample(std::size_t n, Rng& rng) {
  std::vector<std::size_t> out(n);
  for (auto& i : out) i = rng.below(n);
  return out;
}

}  // namespace

BootstrapResult bootstrap_trait(const RecruitmentForest& forest, const InclusionWeights& weights,
                                const std::string& trait, const BootstrapOptions& options) {
  if (options.replicates < 200) throw ValidationError("bootstrap needs at least 200 replicates");
  if (!forest.has_trait(trait)) throw ValidationError("unknown trait '" + trait + "'");

  std::set<std::string> labels;
  for (std::size_t i = 0; i < forest.size(); ++i) {
    const auto& v = forest.trait_value(i, trait);
    if (!v.empty()) labels.insert(v);
  }
  BootstrapResult result;
  const std::vector<std::string> cats(labels.begin(), labels.end());
  for (const auto& c : cats) result.estimates.push_back(weighted_proportion(forest, weights, trait, c));

  result.respondent_level = forest.seeds().size() < 2;
  if (result.respondent_level)
    result.warnings.push_back("fewer than 2 seeds; using respondent-level bootstrap");

  std::vector<std::size_t> code(forest.size(), cats.size());
  for (std::size_t i = 0; i < forest.size(); ++i) {
    const auto& v = forest.trait_value(i, trait);
    if (!v.empty())
      code[i] = static_cast<std::size_t>(std::lower_bound(cats.begin(), cats.end(), v) - cats.begin());
  }

  const auto reps = static_cast<std::size_t>(options.replicates);
  std::vector<std::vector<double>> shares(reps);
  parallel_for(reps, options.threads, [&](std::size_t r) {
    Rng rng(derive_seed(options.seed, r));
    const auto idx = result.respondent_level ? flat_resample(forest.size(), rng)
                                             : tree_resample(forest, rng);
    std::vector<double> num(cats.size(), 0.0);
    double den = 0.0;
    for (auto i : idx) {
      if (code[i] == cats.size()) continue;
      num[code[i]] += weights.weights[i];
      den += weights.weights[i];
    }
    if (den > 0.0)
      for (auto& v : num) v = 100.0 * v / den;
    else
      num.clear();  // replicate without any observed value; dropped
    shares[r] = std::move(num);
  });

  std::size_t dropped = 0;
  for (const auto& s : shares) dropped += s.empty();
  if (dropped == reps) throw NumericalError("every bootstrap replicate was empty");
  if (dropped > 0)
    result.warnings.push_back(std::to_string(dropped) + " bootstrap replicates had no observed values");

  for (std::size_t c = 0; c < cats.size(); ++c) {
    std::vector<double> vals;
    vals.reserve(reps);
    for (const auto& s : shares)
      if (!s.empty()) vals.push_back(s[c]);
    set_standard_error(result.estimates[c], stats::stddev(vals));
  }
  return result;
}

ProportionEstimate bootstrap_ci(const RecruitmentForest& forest, const InclusionWeights& weights,
                                const std::string& trait, const std::string& category,
                                const BootstrapOptions& options) {
  auto res = bootstrap_trait(forest, weights, trait, options);
  for (auto& e : res.estimates)
    if (e.category == category) return e;
  // category never observed: point 0 with no spread
  auto est = weighted_proportion(forest, weights, trait, category);
  set_standard_error(est, 0.0);
  return est;
}

double aggregate_categories(std::span<const ProportionEstimate> estimates) {
  std::set<std::string> seen;
  double total = 0.0;
  for (const auto& e : estimates) {
    if (e.trait != estimates.front().trait)
      throw ValidationError("cannot aggregate categories of different traits");
    if (!seen.insert(e.category).second)
      throw ValidationError("overlapping category '" + e.category + "'");
    total += e.point;
  }
  return total;
}

std::string estimates_csv(std::span<const ProportionEstimate> estimates) {
  std::ostringstream out;
  out << "trait,category,point,ci95_lo,ci95_hi,design_effect,se,sample_size\n";
  char buf[256];
  for (const auto& e : estimates) {
    std::snprintf(buf, sizeof buf, "%.2f,%.2f,%.2f,%.2f,%.2f,%zu", e.point, e.ci95_lo, e.ci95_hi,
                  e.design_effect, e.se, e.sample_size);
    out << csv_escape(e.trait) << ',' << csv_escape(e.category) << ',' << buf << '\n';
  }
  return out.str();
}

}  // namespace hpe
