#ifndef HPE_RDS_MODEL_HPP
#define HPE_RDS_MODEL_HPP

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hpe {

/// One survey record. `degree` is the self-reported network size (the
/// respondent's visibility); `sample_order` is the 1-based position in
/// chronological recruitment order.
struct Respondent {
  std::string id;
  std::optional<std::string> recruiter_id;
  int degree = 1;
  int sample_order = 0;
  /// trait name -> category label; the missing token marks no answer.
  std::map<std::string, std::string> traits;
};

/// Allowed category labels per trait. A trait mapped to an empty label
/// list, or a trait absent from the schema, accepts any label.
struct TraitSchema {
  std::map<std::string, std::vector<std::string>> allowed;
  std::string missing = "";

  bool allows(const std::string& trait, const std::string& label) const;
};

struct ParseOptions {
  /// Replace missing (or zero) degrees with the sample median instead of
  /// rejecting the row.
  bool impute_degree_median = false;
  int max_coupons = 3;
};

/// Validated, immutable recruitment forest. Respondents are stored in
/// sample order; index i holds the respondent with sample_order i + 1.
class RecruitmentForest {
 public:
  /// Validates the forest invariants and throws ValidationError on
  /// duplicate ids, dangling recruiters, cycles, recruiters that come later
  /// in the sample, or sample orders that are not a permutation of 1..n.
  /// Coupon-limit violations are recorded as warnings.
  static RecruitmentForest build(std::vector<Respondent> respondents,
                                 std::vector<std::string> trait_names,
                                 int max_coupons = 3);

  RecruitmentForest() = default;

  std::size_t size() const { return respondents_.size(); }
  bool empty() const { return respondents_.empty(); }
  const std::vector<Respondent>& respondents() const { return respondents_; }
  const Respondent& at(std::size_t i) const { return respondents_.at(i); }
  const std::vector<std::string>& trait_names() const { return trait_names_; }
  bool has_trait(std::string_view name) const;
  int max_coupons() const { return max_coupons_; }

  const std::vector<std::size_t>& seeds() const { return seeds_; }
  const std::vector<std::size_t>& children(std::size_t i) const { return children_.at(i); }
  std::optional<std::size_t> recruiter_index(std::size_t i) const;
  int wave(std::size_t i) const { return waves_.at(i); }

  /// Seeds are wave 0; everyone else is one more than their recruiter.
  int wave_of(std::string_view id) const;
  std::optional<std::size_t> index_of(std::string_view id) const;

  std::vector<int> degrees() const;
  /// Trait value for respondent i, or the empty string when missing.
  const std::string& trait_value(std::size_t i, const std::string& trait) const;

  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  std::vector<Respondent> respondents_;
  std::vector<std::string> trait_names_;
  int max_coupons_ = 3;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::optional<std::size_t>> parent_;
  std::vector<std::vector<std::size_t>> children_;
  std::vector<std::size_t> seeds_;
  std::vector<int> waves_;
  std::vector<std::string> warnings_;
};

/// Parses the survey CSV (`id,recruiter_id,degree,order,<traits...>`).
/// Empty recruiter_id marks a seed. When every `order` cell is empty the
/// row order defines sample order; otherwise every row must carry one.
RecruitmentForest parse_dataset(const std::filesystem::path& path,
                                const TraitSchema& schema = {},
                                const ParseOptions& options = {});

RecruitmentForest parse_dataset_text(std::string_view text,
                                     const TraitSchema& schema = {},
                                     const ParseOptions& options = {},
                                     std::string_view source = "<input>");

/// Writes the forest back in the input CSV schema, rows in sample order.
std::string serialize(const RecruitmentForest& forest);

/// Respondents whose `trait` equals `value`, in their original relative
/// order, renumbered 1..m. A respondent whose recruiter falls outside the
/// subset becomes a seed of the view. Throws ValidationError when the
/// forest has no such trait.
RecruitmentForest subset_by_trait(const RecruitmentForest& forest,
                                  const std::string& trait,
                                  const std::string& value);

/// Splits one CSV line, honoring double-quoted fields.
std::vector<std::string> split_csv_line(std::string_view line);
std::string csv_escape(std::string_view field);

}  // namespace hpe

#endif
