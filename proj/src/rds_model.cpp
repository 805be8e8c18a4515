#include "hpe/rds_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "hpe/error.hpp"

namespace hpe {

bool TraitSchema::allows(const std::string& trait, const std::string& label) const {
  if (label == missing) return true;
  auto it = allowed.find(trait);
  if (it == allowed.end() || it->second.empty()) return true;
  return std::find(it->second.begin(), it->second.end(), label) != it->second.end();
}

RecruitmentForest RecruitmentForest::build(std::vector<Respondent> respondents,
                                           std::vector<std::string> trait_names,
                                           int max_coupons) {
  RecruitmentForest f;
  f.trait_names_ = std::move(trait_names);
  f.max_coupons_ = max_coupons;
  const std::size_t n = respondents.size();

  for (const auto& r : respondents) {
    if (r.degree < 1)
      throw ValidationError("respondent '" + r.id + "': degree must be >= 1");
    if (!f.index_.emplace(r.id, 0).second)
      throw ValidationError("duplicate id '" + r.id + "'");
  }
  for (const auto& r : respondents) {
    if (r.recruiter_id && !f.index_.contains(*r.recruiter_id))
      throw ValidationError("respondent '" + r.id + "': dangling recruiter_id '" +
                            *r.recruiter_id + "'");
    if (r.recruiter_id && *r.recruiter_id == r.id)
      throw ValidationError("cycle detected at '" + r.id + "'");
  }

  // Cycle check on the id graph before ordering checks, so mutual
  // recruitment is reported as a cycle rather than an ordering problem.
  {
    std::unordered_map<std::string, const Respondent*> by_id;
    for (const auto& r : respondents) by_id[r.id] = &r;
    std::unordered_map<std::string, int> state;  // 1 = on path, 2 = done
    for (const auto& r : respondents) {
      std::vector<const Respondent*> path;
      const Respondent* cur = &r;
      while (cur && state[cur->id] == 0) {
        state[cur->id] = 1;
        path.push_back(cur);
        cur = cur->recruiter_id ? by_id[*cur->recruiter_id] : nullptr;
      }
      if (cur && state[cur->id] == 1)
        throw ValidationError("cycle detected at '" + cur->id + "'");
      for (auto* p : path) state[p->id] = 2;
    }
  }

  std::vector<bool> seen(n, false);
  for (const auto& r : respondents) {
    if (r.sample_order < 1 || static_cast<std::size_t>(r.sample_order) > n ||
        seen[r.sample_order - 1])
      throw ValidationError("sample orders must be a permutation of 1.." +
                            std::to_string(n) + " (respondent '" + r.id + "')");
    seen[r.sample_order - 1] = true;
  }
  std::sort(respondents.begin(), respondents.end(),
            [](const Respondent& a, const Respondent& b) { return a.sample_order < b.sample_order; });
  f.respondents_ = std::move(respondents);
  for (std::size_t i = 0; i < n; ++i) f.index_[f.respondents_[i].id] = i;

  f.parent_.assign(n, std::nullopt);
  f.children_.assign(n, {});
  f.waves_.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = f.respondents_[i];
    if (!r.recruiter_id) {
      f.seeds_.push_back(i);
      continue;
    }
    const std::size_t p = f.index_.at(*r.recruiter_id);
    if (p >= i)
      throw ValidationError("respondent '" + r.id + "' is recruited by '" + *r.recruiter_id +
                            "', who appears later in the sample");
    f.parent_[i] = p;
    f.children_[p].push_back(i);
    f.waves_[i] = f.waves_[p] + 1;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (static_cast<int>(f.children_[i].size()) > max_coupons)
      f.warnings_.push_back("respondent '" + f.respondents_[i].id + "' has " +
                            std::to_string(f.children_[i].size()) +
                            " recruits, more than max_coupons=" + std::to_string(max_coupons));
  }
  return f;
}

bool RecruitmentForest::has_trait(std::string_view name) const {
  return std::find(trait_names_.begin(), trait_names_.end(), name) != trait_names_.end();
}

std::optional<std::size_t> RecruitmentForest::recruiter_index(std::size_t i) const {
  return parent_.at(i);
}

std::optional<std::size_t> RecruitmentForest::index_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int RecruitmentForest::wave_of(std::string_view id) const {
  auto i = index_of(id);
  if (!i) throw ValidationError("unknown respondent id '" + std::string(id) + "'");
  return waves_[*i];
}

std::vector<int> RecruitmentForest::degrees() const {
  std::vector<int> d;
  d.reserve(respondents_.size());
  for (const auto& r : respondents_) d.push_back(r.degree);
  return d;
}

const std::string& RecruitmentForest::trait_value(std::size_t i, const std::string& trait) const {
  static const std::string kMissing;
  const auto& traits = respondents_.at(i).traits;
  auto it = traits.find(trait);
  return it == traits.end() ? kMissing : it->second;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(std::move(field));
  return out;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_int(const std::string& s, long long& out) {
  if (s.empty()) return false;
  std::size_t used = 0;
  try {
    out = std::stoll(s, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == s.size();
}

}  // namespace

RecruitmentForest parse_dataset_text(std::string_view text, const TraitSchema& schema,
                                     const ParseOptions& options, std::string_view source) {
  const std::string src(source);
  std::vector<std::string> lines;
  {
    std::string cur;
    std::istringstream in{std::string(text)};
    while (std::getline(in, cur)) lines.push_back(cur);
  }
  // skip a UTF-8 byte order mark
  if (!lines.empty() && lines[0].rfind("\xEF\xBB\xBF", 0) == 0) lines[0].erase(0, 3);
  if (lines.empty()) throw ValidationError(src + ": empty file, header required");

  auto header = split_csv_line(lines[0]);
  for (auto& h : header) h = trim(h);
  const std::vector<std::string> fixed = {"id", "recruiter_id", "degree", "order"};
  if (header.size() < fixed.size() || !std::equal(fixed.begin(), fixed.end(), header.begin()))
    throw ValidationError(src + ":1: header must start with id,recruiter_id,degree,order");
  std::vector<std::string> trait_names(header.begin() + 4, header.end());
  for (std::size_t i = 0; i < trait_names.size(); ++i) {
    if (trait_names[i].empty()) throw ValidationError(src + ":1: empty trait column name");
    if (std::find(trait_names.begin(), trait_names.begin() + i, trait_names[i]) !=
        trait_names.begin() + i)
      throw ValidationError(src + ":1: duplicate trait column '" + trait_names[i] + "'");
  }

  std::vector<Respondent> rows;
  std::vector<std::size_t> line_of_row;
  std::vector<std::size_t> needs_degree;
  std::size_t with_order = 0;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (trim(lines[ln]).empty()) continue;
    const std::string where = src + ":" + std::to_string(ln + 1) + ": ";
    auto cells = split_csv_line(lines[ln]);
    if (cells.size() != header.size())
      throw ValidationError(where + "malformed row, expected " + std::to_string(header.size()) +
                            " fields, got " + std::to_string(cells.size()));
    for (auto& c : cells) c = trim(c);
    Respondent r;
    r.id = cells[0];
    if (r.id.empty()) throw ValidationError(where + "malformed row, empty id");
    if (!cells[1].empty()) r.recruiter_id = cells[1];
    long long v = 0;
    if (cells[2].empty() || (parse_int(cells[2], v) && v == 0)) {
      if (!options.impute_degree_median)
        throw ValidationError(where + "missing or zero degree for '" + r.id +
                              "' (use median imputation to fill it)");
      needs_degree.push_back(rows.size());
      r.degree = 0;
    } else if (!parse_int(cells[2], v) || v < 1 || v > 1'000'000'000) {
      throw ValidationError(where + "malformed row, invalid degree '" + cells[2] + "'");
    } else {
      r.degree = static_cast<int>(v);
    }
    if (!cells[3].empty()) {
      if (!parse_int(cells[3], v) || v < 1 || v > 1'000'000'000)
        throw ValidationError(where + "malformed row, invalid order '" + cells[3] + "'");
      r.sample_order = static_cast<int>(v);
      ++with_order;
    }
    for (std::size_t t = 0; t < trait_names.size(); ++t) {
      const auto& label = cells[4 + t];
      if (!schema.allows(trait_names[t], label))
        throw ValidationError(where + "unknown label '" + label + "' for trait '" +
                              trait_names[t] + "'");
      r.traits[trait_names[t]] = label;
    }
    rows.push_back(std::move(r));
    line_of_row.push_back(ln + 1);
  }

  if (with_order != 0 && with_order != rows.size())
    throw ValidationError(src + ": order column must be filled on every row or on none");
  if (with_order == 0)
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i].sample_order = static_cast<int>(i + 1);

  if (!needs_degree.empty()) {
    std::vector<int> known;
    for (const auto& r : rows)
      if (r.degree >= 1) known.push_back(r.degree);
    if (known.empty()) throw ValidationError(src + ": no valid degrees to impute from");
    std::sort(known.begin(), known.end());
    const std::size_t m = known.size();
    const double med = m % 2 ? known[m / 2] : 0.5 * (known[m / 2 - 1] + known[m / 2]);
    const int fill = std::max(1, static_cast<int>(std::lround(med)));
    for (auto i : needs_degree) rows[i].degree = fill;
  }

  try {
    return RecruitmentForest::build(std::move(rows), std::move(trait_names), options.max_coupons);
  } catch (const ValidationError& e) {
    throw ValidationError(src + ": " + e.what());
  }
}

RecruitmentForest parse_dataset(const std::filesystem::path& path, const TraitSchema& schema,
                                const ParseOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open dataset " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_dataset_text(buf.str(), schema, options, path.string());
}

std::string serialize(const RecruitmentForest& forest) {
  std::ostringstream out;
  out << "id,recruiter_id,degree,order";
  for (const auto& t : forest.trait_names()) out << ',' << csv_escape(t);
  out << '\n';
  for (const auto& r : forest.respondents()) {
    out << csv_escape(r.id) << ',' << csv_escape(r.recruiter_id.value_or("")) << ','
        << r.degree << ',' << r.sample_order;
    for (const auto& t : forest.trait_names()) {
      auto it = r.traits.find(t);
      out << ',' << csv_escape(it == r.traits.end() ? "" : it->second);
    }
    out << '\n';
  }
  return out.str();
}

RecruitmentForest subset_by_trait(const RecruitmentForest& forest, const std::string& trait,
                                  const std::string& value) {
  if (!forest.has_trait(trait)) throw ValidationError("unknown trait '" + trait + "'");
  std::vector<Respondent> kept;
  std::unordered_map<std::string, bool> in_view;
  for (std::size_t i = 0; i < forest.size(); ++i)
    if (forest.trait_value(i, trait) == value) in_view[forest.at(i).id] = true;
  int order = 0;
  for (std::size_t i = 0; i < forest.size(); ++i) {
    const auto& r = forest.at(i);
    if (!in_view.contains(r.id)) continue;
    Respondent copy = r;
    copy.sample_order = ++order;
    if (copy.recruiter_id && !in_view.contains(*copy.recruiter_id)) copy.recruiter_id.reset();
    kept.push_back(std::move(copy));
  }
  return RecruitmentForest::build(std::move(kept), forest.trait_names(), forest.max_coupons());
}

}  // namespace hpe
