#include "cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "hpe/config.hpp"
#include "hpe/error.hpp"
#include "hpe/netsim.hpp"
#include "hpe/prior_pipeline.hpp"
#include "hpe/rds_model.hpp"
#include "hpe/rng.hpp"
#include "hpe/ss_estimator.hpp"
#include "hpe/sspse.hpp"

#ifndef HPE_VERSION
#define HPE_VERSION "dev"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace hpe::cli {

std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

struct Global {
  std::uint64_t seed = 1;
  bool seed_given = false;
  std::string config;
  std::string out_dir = "out";
  std::string format = "csv";
  unsigned threads = 0;
};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt2(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  // keep "-0.00" out of tables
  if (std::string(buf) == "-0.00") return "0.00";
  return buf;
}

// Output files of one run plus what goes into its manifest.
class Session {
 public:
  Session(const Global& g, std::string sub) : g_(g), sub_(std::move(sub)) {}

  void input(const std::string& path) {
    if (path.empty()) return;
    inputs_.push_back({{"path", path}, {"fnv1a", hex64(fnv1a(read_text(path)))}});
  }

  void emit(const std::string& name, const std::string& content, bool primary = false) {
    fs::create_directories(g_.out_dir);
    const fs::path p = fs::path(g_.out_dir) / name;
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + p.string());
    out << content;
    outputs_.push_back({{"path", name}, {"fnv1a", hex64(fnv1a(content))}, {"bytes", content.size()}});
    const bool is_json = name.size() > 5 && name.substr(name.size() - 5) == ".json";
    if (primary && is_json == (g_.format == "json")) stdout_ = content;
  }

  void finish(const std::vector<std::string>& args, double seconds) {
    json m;
    m["subcommand"] = sub_;
    m["args"] = args;
    m["inputs"] = inputs_;
    m["config"] = g_.config.empty() ? json(nullptr) : json(g_.config);
    m["seed"] = g_.seed;
    m["version"] = HPE_VERSION;
    m["outputs"] = outputs_;
    m["wall_clock_seconds"] = seconds;
    fs::create_directories(g_.out_dir);
    std::ofstream out(fs::path(g_.out_dir) / (sub_ + ".manifest.json"), std::ios::binary);
    out << m.dump(2) << '\n';
    std::cout << stdout_;
  }

 private:
  const Global& g_;
  std::string sub_;
  json inputs_ = json::array();
  json outputs_ = json::array();
  std::string stdout_;
};

std::pair<std::string, std::string> split_assignment(const std::string& s, const char* flag) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ValidationError(std::string(flag) + " expects trait=value, got '" + s + "'");
  return {s.substr(0, eq), s.substr(eq + 1)};
}

RecruitmentForest load_forest(Session& session, const std::string& path, bool impute,
                              int max_coupons, const std::string& subset) {
  session.input(path);
  ParseOptions po;
  po.impute_degree_median = impute;
  po.max_coupons = max_coupons;
  auto forest = parse_dataset(path, {}, po);
  for (const auto& w : forest.warnings()) std::cerr << "warning: " << w << '\n';
  if (!subset.empty()) {
    const auto [trait, value] = split_assignment(subset, "--subset");
    forest = subset_by_trait(forest, trait, value);
    if (forest.empty()) throw ValidationError("--subset " + subset + " selects no respondents");
  }
  return forest;
}

json estimate_json(const ProportionEstimate& e) {
  return {{"trait", e.trait},       {"category", e.category},    {"point", e.point},
          {"se", e.se},             {"ci95_lo", e.ci95_lo},      {"ci95_hi", e.ci95_hi},
          {"design_effect", e.design_effect}, {"sample_size", e.sample_size},
          {"analysis_n", e.analysis_n}};
}

json summary_json(const SummaryStats& s) {
  json j;
  const auto v = s.values();
  for (std::size_t i = 0; i < v.size(); ++i) j[SummaryStats::kNames[i]] = v[i];
  return j;
}

// ---------------------------------------------------------------- ingest

struct IngestArgs {
  std::string dataset;
  std::string impute;
  int max_coupons = 3;
};

void cmd_ingest(const Global& g, const IngestArgs& a, Session& s) {
  const auto forest = load_forest(s, a.dataset, a.impute == "median", a.max_coupons, "");
  json j;
  j["dataset"] = a.dataset;
  j["n"] = forest.size();
  j["seeds"] = forest.seeds().size();
  int max_wave = 0;
  for (std::size_t i = 0; i < forest.size(); ++i) max_wave = std::max(max_wave, forest.wave(i));
  j["max_wave"] = max_wave;
  json traits = json::object();
  for (const auto& t : forest.trait_names()) {
    std::map<std::string, int> counts;
    for (std::size_t i = 0; i < forest.size(); ++i) ++counts[forest.trait_value(i, t)];
    json c = json::object();
    for (const auto& [label, k] : counts) c[label.empty() ? "(missing)" : label] = k;
    traits[t] = c;
  }
  j["traits"] = traits;
  j["warnings"] = forest.warnings();
  (void)g;
  s.emit("dataset.csv", serialize(forest), true);
  s.emit("ingest.json", j.dump(2) + "\n", true);
}

// -------------------------------------------------------------- estimate

struct EstimateArgs {
  std::string dataset;
  std::vector<std::string> traits;
  std::string weights = "giless";
  long long N = 0;
  std::string prior_report;
  int sim_draws = 2000;
  int bootstrap = 500;
  std::string subset;
  std::string impute;
};

double prior_point_from_file(Session& s, const std::string& path);

void cmd_estimate(const Global& g, const EstimateArgs& a, Session& s) {
  const auto forest = load_forest(s, a.dataset, a.impute == "median", 3, a.subset);
  InclusionWeights w;
  if (a.weights == "rds2") {
    w = rds2_weights(forest);
  } else {
    GileOptions go;
    go.assumed_N = a.N;
    if (go.assumed_N == 0 && !a.prior_report.empty())
      go.assumed_N = std::llround(prior_point_from_file(s, a.prior_report));
    if (go.assumed_N == 0) go.assumed_N = 10 * static_cast<long long>(forest.size());
    go.sim_draws = a.sim_draws;
    go.seed = derive_seed(g.seed, 0x6a11e);
    go.threads = g.threads;
    w = gile_ss_weights(forest, go);
    for (const auto& m : w.warnings) std::cerr << "warning: " << m << '\n';
  }

  std::vector<std::string> traits = a.traits;
  if (traits.empty()) traits = forest.trait_names();
  std::vector<ProportionEstimate> all;
  json boot = json::array();
  for (const auto& t : traits) {
    BootstrapOptions bo;
    bo.replicates = a.bootstrap;
    bo.seed = derive_seed(g.seed, fnv1a(t));
    bo.threads = g.threads;
    auto res = bootstrap_trait(forest, w, t, bo);
    for (const auto& m : res.warnings) std::cerr << "warning: " << m << '\n';
    boot.push_back({{"trait", t}, {"seed", bo.seed}, {"respondent_level", res.respondent_level}});
    all.insert(all.end(), res.estimates.begin(), res.estimates.end());
  }

  json j;
  j["dataset"] = a.dataset;
  j["subset"] = a.subset.empty() ? json(nullptr) : json(a.subset);
  j["n"] = forest.size();
  j["method"] = to_string(w.method);
  j["assumed_N"] = w.assumed_N ? json(*w.assumed_N) : json(nullptr);
  j["converged"] = w.converged;
  j["iterations"] = w.iterations;
  j["bootstrap"] = {{"replicates", a.bootstrap}, {"traits", boot}};
  j["estimates"] = json::array();
  for (const auto& e : all) j["estimates"].push_back(estimate_json(e));
  j["warnings"] = w.warnings;
  s.emit("estimates.csv", estimates_csv(all), true);
  s.emit("estimates.json", j.dump(2) + "\n", true);
}

// ----------------------------------------------------------------- prior

void cmd_prior(const Global& g, const std::string& county_config, Session& s) {
  const std::string path = county_config.empty() ? g.config : county_config;
  if (path.empty()) throw ValidationError("prior needs a county config (--county or --config)");
  s.input(path);
  const auto inputs = CountyInputs::from_json(config::load_file(path));
  const auto report = build_prior_report(inputs);
  s.emit("prior_report.csv", report.to_csv(), true);
  s.emit("prior_report.json", report.to_json().dump(2) + "\n", true);
}

// ------------------------------------------------------------------- pse

struct PseArgs {
  std::string dataset;
  std::string prior_interval;
  double prior_mean = 0.0;
  double prior_median = 0.0;
  double prior_mode = 0.0;
  std::string prior_report;
  long long hard_max = 0;
  McmcConfig mcmc;
  int trials = 10;
  std::optional<double> hiv_pos;
  std::optional<double> hiv_unk;
  std::string subset;
  std::string impute;
  int density_points = 512;
};

// A prior report is either the JSON written by `prior` or a county config.
struct ReportPrior {
  double point = 0.0;
  std::pair<double, double> interval50;
  std::optional<double> hiv_pos;
  std::optional<double> hiv_unk;
};

ReportPrior read_report_prior(Session& s, const std::string& path) {
  s.input(path);
  const json j = config::load_file(path);
  ReportPrior rp;
  if (j.contains("rows")) {
    for (const auto& row : j.at("rows")) {
      const auto key = row.at("key").get<std::string>();
      if (key == "N_LMSM") rp.point = row.at("point").get<double>();
      if (key == "P_HIVpos") rp.hiv_pos = row.at("point").get<double>();
      if (key == "P_HIVunk") rp.hiv_unk = row.at("point").get<double>();
    }
    const auto& iv = j.at("prior_interval50");
    rp.interval50 = {iv.at(0).get<double>(), iv.at(1).get<double>()};
    if (rp.point <= 0) throw ValidationError(path + ": report has no population prior row");
    return rp;
  }
  const auto report = build_prior_report(CountyInputs::from_json(j));
  rp.point = report.N_LMSM.point;
  if (!report.N_LMSM.half95) throw ValidationError(path + ": prior interval is unknown");
  rp.interval50 = ci95_to_ci50(report.N_LMSM.point, *report.N_LMSM.half95);
  for (const auto& row : report.rows) {
    if (row.key == "P_HIVpos") rp.hiv_pos = row.value.point;
    if (row.key == "P_HIVunk") rp.hiv_unk = row.value.point;
  }
  return rp;
}

double prior_point_from_file(Session& s, const std::string& path) {
  return read_report_prior(s, path).point;
}

std::pair<double, double> parse_pair(const std::string& text, const char* flag) {
  const auto comma = text.find(',');
  try {
    if (comma == std::string::npos) throw std::invalid_argument("");
    const double lo = std::stod(text.substr(0, comma));
    const double hi = std::stod(text.substr(comma + 1));
    return {lo, hi};
  } catch (const std::exception&) {
    throw ValidationError(std::string(flag) + " expects lo,hi, got '" + text + "'");
  }
}

void cmd_pse(const Global& g, const PseArgs& a, Session& s) {
  const auto forest = load_forest(s, a.dataset, a.impute == "median", 3, a.subset);
  const auto n = static_cast<long long>(forest.size());

  PriorSpec spec;
  spec.hard_min = n;
  double point = 0.0;
  std::optional<double> hiv_pos = a.hiv_pos, hiv_unk = a.hiv_unk;
  if (!a.prior_report.empty()) {
    const auto rp = read_report_prior(s, a.prior_report);
    spec.form = PriorForm::Interval50;
    spec.lower = rp.interval50.first;
    spec.upper = rp.interval50.second;
    point = rp.point;
    if (!hiv_pos) hiv_pos = rp.hiv_pos;
    if (!hiv_unk) hiv_unk = rp.hiv_unk;
  } else if (!a.prior_interval.empty()) {
    const auto [lo, hi] = parse_pair(a.prior_interval, "--prior-interval");
    spec.form = PriorForm::Interval50;
    spec.lower = lo;
    spec.upper = hi;
    point = 0.5 * (lo + hi);
  } else if (a.prior_mean > 0) {
    spec.form = PriorForm::Mean;
    spec.lower = point = a.prior_mean;
  } else if (a.prior_median > 0) {
    spec.form = PriorForm::Median;
    spec.lower = point = a.prior_median;
  } else if (a.prior_mode > 0) {
    spec.form = PriorForm::Mode;
    spec.lower = point = a.prior_mode;
  } else {
    throw ValidationError(
        "pse needs a prior: --prior-interval, --prior-mean, --prior-median, --prior-mode or "
        "--prior-report");
  }
  spec.hard_max = a.hard_max > 0 ? a.hard_max : std::llround(10.0 * point);
  const auto prior = fit_prior(spec);
  const auto model = fit_degree_model(forest, rds2_weights(forest));
  const auto degrees = forest.degrees();

  const auto mt = multi_trial(degrees, prior, model, a.mcmc, a.trials, g.seed, g.threads);
  for (const auto& t : mt.trials)
    for (const auto& w : t.warnings) std::cerr << "warning: trial " << t.trial_seed << ": " << w << '\n';

  const auto ps = prior.summary().values();
  const auto post = mt.mean_of.values();
  // Table columns in presentation order: mean, median, mode, 25%, 75%, 90%, 2.5%, 97.5%
  const std::array<std::size_t, 8> cols = {0, 1, 2, 5, 6, 7, 3, 9};
  std::ostringstream csv;
  csv << "row,mean,median,mode,q25,q75,q90,q025,q975\n";
  auto line = [&](const std::string& label, auto value_of) {
    csv << label;
    for (auto c : cols) csv << ',' << fmt2(value_of(c));
    csv << '\n';
  };
  line("prior", [&](std::size_t c) { return ps[c]; });
  line("posterior", [&](std::size_t c) { return post[c]; });
  line("relative_change", [&](std::size_t c) { return relative_change(ps[c], post[c]); });

  json subpops = json::array();
  auto subpop = [&](const std::string& label, std::optional<double> rate) {
    if (!rate) return;
    line(label, [&](std::size_t c) {
      return hiv_subpopulation(post[c], IntervalEstimate::percent(*rate), 2).point;
    });
    json v;
    for (std::size_t c = 0; c < post.size(); ++c)
      v[SummaryStats::kNames[c]] = hiv_subpopulation(post[c], IntervalEstimate::percent(*rate), 2).point;
    subpops.push_back({{"row", label}, {"rate_percent", *rate}, {"values", v}});
  };
  subpop("N_HIVpos", hiv_pos);
  subpop("N_HIVunk", hiv_unk);

  json rel;
  for (std::size_t c = 0; c < ps.size(); ++c)
    rel[SummaryStats::kNames[c]] = relative_change(ps[c], post[c]);

  json trials = json::array();
  std::vector<long long> pooled;
  json seeds = json::array();
  for (const auto& t : mt.trials) {
    trials.push_back({{"seed", t.trial_seed},
                      {"acceptance_rate", t.acceptance_rate},
                      {"mu_mean", t.mu_mean},
                      {"summary", summary_json(t.stats)},
                      {"warnings", t.warnings}});
    seeds.push_back(t.trial_seed);
    pooled.insert(pooled.end(), t.samples.begin(), t.samples.end());
  }

  json j;
  j["dataset"] = a.dataset;
  j["n"] = n;
  j["prior"] = {{"form", to_string(spec.form)},
                {"lower", spec.lower},
                {"upper", spec.upper},
                {"hard_min", prior.hard_min()},
                {"hard_max", prior.hard_max()},
                {"alpha", prior.alpha()},
                {"beta", prior.beta()},
                {"summary", summary_json(prior.summary())}};
  j["degree_model"] = {{"family", "geometric"}, {"mu", model.mu()}, {"cap", model.cap()}};
  j["posterior"] = trials;
  j["aggregate"] = {{"mean_of", summary_json(mt.mean_of)},
                    {"standard_error", summary_json(mt.standard_error)}};
  j["relative_change"] = rel;
  j["subpopulations"] = subpops;
  j["config"] = {{"burn_in", a.mcmc.burn_in},
                 {"samples", a.mcmc.samples},
                 {"thin", a.mcmc.thin},
                 {"proposal_scale", a.mcmc.proposal_scale},
                 {"mc_draws", a.mcmc.mc_draws},
                 {"mu_update_every", a.mcmc.mu_update_every},
                 {"mu_proposal_sd", a.mcmc.mu_proposal_sd},
                 {"trials", a.trials},
                 {"flat_likelihood", a.mcmc.flat_likelihood}};
  j["seeds"] = {{"master", g.seed}, {"trials", seeds}};

  s.emit("pse.csv", csv.str(), true);
  s.emit("pse.json", j.dump(2) + "\n", true);
  s.emit("density.csv", density_csv(density_grid(prior, pooled, a.density_points)));
}

// -------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string scenario;
  int replicates = 0;
  int trials = 0;
  bool no_pse = false;
};

void cmd_simulate(const Global& g, const SimulateArgs& a, Session& s) {
  const std::string path = a.scenario.empty() ? g.config : a.scenario;
  json cfg = json::object();
  if (!path.empty()) {
    s.input(path);
    cfg = config::load_file(path);
  }
  auto sc = RecoveryScenario::from_json(cfg);
  if (g.seed_given || !cfg.contains("seed")) sc.base_seed = g.seed;
  if (a.replicates > 0) sc.replicates = a.replicates;
  if (a.trials > 0) sc.trials = a.trials;
  if (a.no_pse) sc.run_pse = false;

  const auto pop = recovery_population(sc, 0);
  const auto sample = recovery_sample(sc, pop, 0);
  for (const auto& w : sample.warnings) std::cerr << "warning: " << w << '\n';
  const auto report = recovery_experiment(sc, g.threads);
  s.emit("sample.csv", serialize(sample.forest), true);
  s.emit("recovery.json", report.dump(2) + "\n", true);
}

// ---------------------------------------------------------------- report

struct ReportArgs {
  std::string manifest;
  std::string rerun_dir;
  bool verify_only = false;
};

int cmd_report(const ReportArgs& a) {
  const json m = json::parse(read_text(a.manifest));
  const fs::path base = fs::path(a.manifest).parent_path();
  int mismatches = 0;
  auto check = [&](const fs::path& dir) {
    for (const auto& o : m.at("outputs")) {
      const auto name = o.at("path").get<std::string>();
      const auto want = o.at("fnv1a").get<std::string>();
      std::string got = "missing";
      if (fs::exists(dir / name)) got = hex64(fnv1a(read_text((dir / name).string())));
      const bool ok = got == want;
      mismatches += !ok;
      std::cout << (ok ? "match   " : "differ  ") << name << ' ' << got << '\n';
    }
  };
  for (const auto& in : m.at("inputs")) {
    const auto p = in.at("path").get<std::string>();
    if (!fs::exists(p) || hex64(fnv1a(read_text(p))) != in.at("fnv1a").get<std::string>())
      throw ValidationError("input " + p + " is missing or changed since the manifest was written");
  }
  if (a.verify_only) {
    check(base);
  } else {
    const fs::path dir = a.rerun_dir.empty() ? base / "rerun" : fs::path(a.rerun_dir);
    std::vector<std::string> args = {"--seed", std::to_string(m.at("seed").get<std::uint64_t>()),
                                     "--out-dir", dir.string()};
    if (!m.at("config").is_null()) {
      args.push_back("--config");
      args.push_back(m.at("config").get<std::string>());
    }
    for (const auto& x : m.at("args")) args.push_back(x.get<std::string>());
    std::ostringstream sink;
    auto* old = std::cout.rdbuf(sink.rdbuf());
    int code = 0;
    try {
      code = run(args);
    } catch (...) {
      std::cout.rdbuf(old);
      throw;
    }
    std::cout.rdbuf(old);
    if (code != 0) return code;
    check(dir);
  }
  std::cout << (mismatches == 0 ? "reproduced" : "NOT reproduced") << '\n';
  return mismatches == 0 ? 0 : 3;
}

// Arguments recorded in the manifest: everything except the global flags
// the manifest stores separately.
std::vector<std::string> recordable(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const auto& x = args[i];
    bool skip_value = false;
    for (const char* f : {"--seed", "--out-dir", "-o", "--config"}) {
      if (x == f) skip_value = true;
    }
    if (skip_value) {
      ++i;
      continue;
    }
    if (x.rfind("--seed=", 0) == 0 || x.rfind("--out-dir=", 0) == 0 || x.rfind("--config=", 0) == 0)
      continue;
    out.push_back(x);
  }
  return out;
}

}  // namespace

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Hidden population size estimation from respondent-driven samples", "hpe"};
  app.set_version_flag("--version", HPE_VERSION);
  app.require_subcommand(1);
  app.fallthrough();

  Global g;
  auto* seed_opt = app.add_option("--seed", g.seed, "Master seed (default: $HPE_SEED or 1)")
                       ->envname("HPE_SEED");
  app.add_option("--config", g.config, "Config file (county inputs for prior, scenario for simulate)");
  app.add_option("-o,--out-dir", g.out_dir, "Directory for output files")->capture_default_str();
  app.add_option("--format", g.format, "Format echoed to standard output")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores); never changes results");

  IngestArgs ia;
  auto* ingest = app.add_subcommand("ingest", "Validate a survey dataset and write it back normalized");
  ingest->add_option("--dataset", ia.dataset, "Survey CSV")->required()->check(CLI::ExistingFile);
  ingest->add_option("--impute-degree", ia.impute, "Fill missing degrees")
      ->check(CLI::IsMember({"median"}));
  ingest->add_option("--max-coupons", ia.max_coupons, "Coupon limit checked as a warning")
      ->capture_default_str();

  EstimateArgs ea;
  auto* estimate = app.add_subcommand("estimate", "Weighted trait proportions with bootstrap intervals");
  estimate->add_option("--dataset", ea.dataset, "Survey CSV")->required()->check(CLI::ExistingFile);
  estimate->add_option("--trait", ea.traits, "Trait to estimate (repeatable; default all)");
  estimate->add_option("--weights", ea.weights, "Weighting method")
      ->check(CLI::IsMember({"rds2", "giless"}))
      ->capture_default_str();
  estimate->add_option("--N", ea.N, "Assumed population size for giless (default: prior point or 10 n)");
  estimate->add_option("--prior-report", ea.prior_report,
                       "Prior report JSON or county config supplying the assumed N")
      ->check(CLI::ExistingFile);
  estimate->add_option("--sim-draws", ea.sim_draws, "Successive-sampling simulations per iteration")
      ->capture_default_str();
  estimate->add_option("--bootstrap", ea.bootstrap, "Bootstrap replicates")->capture_default_str();
  estimate->add_option("--subset", ea.subset, "Restrict to respondents with trait=value");
  estimate->add_option("--impute-degree", ea.impute, "Fill missing degrees")
      ->check(CLI::IsMember({"median"}));

  std::string county;
  auto* prior = app.add_subcommand("prior", "Census-bridge prior population estimate");
  prior->add_option("--county", county, "County config (TOML or JSON)")->check(CLI::ExistingFile);

  PseArgs pa;
  auto* pse = app.add_subcommand("pse", "Successive-sampling population size estimation");
  pse->add_option("--dataset", pa.dataset, "Survey CSV")->required()->check(CLI::ExistingFile);
  auto* p_iv = pse->add_option("--prior-interval", pa.prior_interval, "Prior 50% interval lo,hi");
  auto* p_mean = pse->add_option("--prior-mean", pa.prior_mean, "Prior mean");
  auto* p_median = pse->add_option("--prior-median", pa.prior_median, "Prior median");
  auto* p_mode = pse->add_option("--prior-mode", pa.prior_mode, "Prior mode");
  auto* p_rep = pse->add_option("--prior-report", pa.prior_report,
                                "Prior report JSON or county config (50% interval from its 95% interval)")
                    ->check(CLI::ExistingFile);
  const std::vector<CLI::Option*> prior_opts = {p_iv, p_mean, p_median, p_mode, p_rep};
  for (auto* o : prior_opts)
    for (auto* other : prior_opts)
      if (o != other) o->excludes(other);
  pse->add_option("--hard-max", pa.hard_max, "Upper limit of the prior support (default 10 x prior point)");
  pse->add_option("--burn-in", pa.mcmc.burn_in, "Burn-in steps")->capture_default_str();
  pse->add_option("--samples", pa.mcmc.samples, "Retained samples per trial")->capture_default_str();
  pse->add_option("--thin", pa.mcmc.thin, "Thinning interval")->capture_default_str();
  pse->add_option("--proposal-scale", pa.mcmc.proposal_scale, "Random-walk sd on log N")
      ->capture_default_str();
  pse->add_option("--mc-draws", pa.mcmc.mc_draws, "Likelihood Monte Carlo replicates")
      ->capture_default_str();
  pse->add_option("--trials", pa.trials, "Independent chains")->capture_default_str();
  pse->add_option("--hiv-rate,--hiv-pos", pa.hiv_pos, "HIV positive share (percent) for the subpopulation row");
  pse->add_option("--hiv-unknown", pa.hiv_unk, "HIV unknown share (percent) for the subpopulation row");
  pse->add_option("--subset", pa.subset, "Restrict to respondents with trait=value");
  pse->add_option("--impute-degree", pa.impute, "Fill missing degrees")->check(CLI::IsMember({"median"}));
  pse->add_option("--density-points", pa.density_points, "Density grid size")->capture_default_str();
  pse->add_flag("--flat-likelihood", pa.mcmc.flat_likelihood)->group("");

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Synthetic population, sample and recovery experiment");
  simulate->add_option("--scenario", sa.scenario, "Scenario config (TOML or JSON)")
      ->check(CLI::ExistingFile);
  simulate->add_option("--replicates", sa.replicates, "Override the scenario's replicate count");
  simulate->add_option("--trials", sa.trials, "Override the scenario's trials per replicate");
  simulate->add_flag("--no-pse", sa.no_pse, "Skip population size estimation");

  ReportArgs ra;
  auto* report = app.add_subcommand("report", "Re-run a manifest and compare output hashes");
  report->add_option("--manifest", ra.manifest, "Manifest JSON written by an earlier run")
      ->required()
      ->check(CLI::ExistingFile);
  report->add_option("--rerun-dir", ra.rerun_dir, "Where to write the re-run (default <manifest dir>/rerun)");
  report->add_flag("--verify-only", ra.verify_only, "Only hash the existing outputs");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  g.seed_given = seed_opt->count() > 0;

  try {
    if (report->parsed()) return cmd_report(ra);

    CLI::App* sub = app.get_subcommands().front();
    Session session(g, sub->get_name());
    const auto t0 = std::chrono::steady_clock::now();
    if (ingest->parsed()) cmd_ingest(g, ia, session);
    if (estimate->parsed()) cmd_estimate(g, ea, session);
    if (prior->parsed()) cmd_prior(g, county, session);
    if (pse->parsed()) cmd_pse(g, pa, session);
    if (simulate->parsed()) cmd_simulate(g, sa, session);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    session.finish(recordable(args), secs);
    return 0;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace hpe::cli
