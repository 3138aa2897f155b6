#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "complaints/token.hpp"

namespace complaints {

enum class Domain {
    food_beverage,
    apparel,
    retail,
    cars,
    services,
    software,
    transport,
    electronics,
    other,
    unknown,
};

inline constexpr std::array<Domain, 9> kAllDomains = {
    Domain::food_beverage, Domain::apparel,  Domain::retail,
    Domain::cars,          Domain::services, Domain::software,
    Domain::transport,     Domain::electronics, Domain::other,
};

std::string_view domain_key(Domain d);
std::string_view domain_display_name(Domain d);
// Accepts the canonical key ("food_beverage"), the display name
// ("Food & Beverage") or a short alias, case-insensitively.
std::optional<Domain> parse_domain(std::string_view s);

enum class Label : std::int8_t { not_complaint = 0, complaint = 1, unlabeled = -1 };

struct Document {
    std::string id;
    std::string raw_text;
    std::string clean_text;
    Domain domain = Domain::unknown;
    Label label = Label::unlabeled;
    std::optional<std::chrono::year_month_day> post_date;
    std::optional<TokenSeq> tokens;
    // Externally supplied tags, one per token (the `pos_tags` column).
    std::optional<std::vector<std::string>> pos_tags;

    bool is_complaint() const { return label == Label::complaint; }
    bool operator==(const Document&) const = default;
};

struct Corpus {
    std::vector<Document> documents;
    std::string source_tag;

    std::size_t size() const { return documents.size(); }
    std::size_t count(Label l) const;
    bool operator==(const Corpus&) const = default;
};

// Replaces @-mentions with <USER> and http(s)/www URLs with <URL>.
std::string anonymize(std::string_view text);

std::optional<std::chrono::year_month_day> parse_iso_date(std::string_view s);
std::string format_iso_date(const std::chrono::year_month_day& d);

// Tab-separated, header row required, double-quoted fields may contain tabs,
// newlines and doubled quotes. Required columns: id, text, domain, label.
// Optional: date (YYYY-MM-DD), pos_tags (space separated).
Corpus load_corpus(const std::filesystem::path& path, std::string source_tag = "annotated");
Corpus read_corpus(std::istream& in, std::string source_tag = "annotated");
void write_corpus(std::ostream& out, const Corpus& corpus);
void save_corpus(const std::filesystem::path& path, const Corpus& corpus);

// Splits one TSV record (handles quoting); returns false at end of input.
bool read_tsv_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line_no);
std::string quote_tsv_field(std::string_view field);

// The seven complaint hashtags used for distant supervision.
std::set<std::string> default_trigger_hashtags();

// Positive and negative files hold one raw text per line.
Corpus ingest_distant(const std::filesystem::path& positives,
                      const std::filesystem::path& negatives,
                      const std::set<std::string>& trigger_hashtags);
Corpus ingest_distant(std::istream& positives, std::istream& negatives,
                      const std::set<std::string>& trigger_hashtags);

std::string strip_hashtags(std::string_view text, const std::set<std::string>& hashtags);

struct FoldPlan {
    std::size_t outer = 10;
    std::size_t inner = 3;
    std::uint64_t seed = 0;
    std::vector<std::string> doc_ids;
    // outer_fold[i] in [0, outer)
    std::vector<int> outer_fold;
    // inner_fold[k][i]: inner fold of document i when outer fold k is held
    // out; -1 for the documents of fold k itself.
    std::vector<std::vector<int>> inner_fold;

    std::vector<std::size_t> test_indices(std::size_t k) const;
    std::vector<std::size_t> train_indices(std::size_t k) const;
    std::vector<std::size_t> inner_val_indices(std::size_t k, std::size_t j) const;
    std::vector<std::size_t> inner_train_indices(std::size_t k, std::size_t j) const;
    std::string fingerprint() const;
    bool operator==(const FoldPlan&) const = default;
};

// Stratified on label: each class's indices are ordered by a seeded hash of
// the document id and dealt round-robin into folds, continuing the deal
// across classes so fold sizes differ by at most one.
FoldPlan plan_nested_folds(const Corpus& corpus, std::size_t outer = 10, std::size_t inner = 3,
                           std::uint64_t seed = 0);

// Deals the given labels (0/1) into `folds` stratified folds.
std::vector<int> stratified_assignment(const std::vector<std::string>& ids,
                                       const std::vector<int>& labels, std::size_t folds,
                                       std::uint64_t seed);

// One line per document: doc_id<TAB>outer_fold<TAB>inner folds, the last
// being a comma-separated list with one entry per outer fold ("-" where the
// document is itself in the held-out fold).
void write_fold_plan(std::ostream& out, const FoldPlan& plan);
void save_fold_plan(const std::filesystem::path& path, const FoldPlan& plan);
// Accepts the format above, or two columns (doc_id, outer_fold) in which case
// inner folds are derived with stratified dealing from `seed`.
FoldPlan load_fold_plan(const std::filesystem::path& path, const Corpus& corpus,
                        std::size_t inner = 3, std::uint64_t seed = 0);

}  // namespace complaints
