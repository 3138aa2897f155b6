#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "complaints/clusters.hpp"
#include "complaints/corpus.hpp"
#include "complaints/lexicons.hpp"
#include "complaints/textproc.hpp"

namespace complaints {

// Sparse, name-keyed feature values. Zero values are never stored.
struct FeatureVector {
    std::string schema_id;
    std::map<std::string, double> entries;

    void set(const std::string& name, double value);
    void add(const std::string& name, double value);
    double get(std::string_view name) const;
    bool empty() const { return entries.empty(); }
    bool operator==(const FeatureVector&) const = default;
};

double dot(const FeatureVector& a, const FeatureVector& b);

// Ordered feature names a model binds to. The id is a hash of the names.
struct FeatureSchema {
    std::string id;
    std::vector<std::string> names;
    std::unordered_map<std::string, std::size_t> index;

    static FeatureSchema from_names(std::vector<std::string> names);
    static FeatureSchema from_vectors(const std::vector<FeatureVector>& vectors);
    std::size_t size() const { return names.size(); }
    std::optional<std::size_t> find(std::string_view name) const;
};

struct Vocab {
    std::vector<std::string> words;  // df desc, then lexicographic
    std::unordered_map<std::string, std::size_t> df;
    std::unordered_map<std::string, double> idf;
    std::size_t n_docs = 0;

    bool contains(std::string_view w) const { return idf.contains(std::string(w)); }
    std::size_t size() const { return words.size(); }
};

// Units are the strings counted per document (lowered tokens for bow,
// word_TAG for bowpos). Keeps units with document frequency >= min_df.
Vocab build_vocab(const std::vector<std::vector<std::string>>& unit_docs, std::size_t min_df = 2);
Vocab build_vocab(const Corpus& corpus);

// Tokenizes documents lacking tokens and fills POS tags, preferring a
// document's own pos_tags column when present.
void prepare_document(Document& doc, const TaggerModel& tagger);
void prepare_corpus(Corpus& corpus, const TaggerModel& tagger);

std::vector<std::string> bow_units(const TokenSeq& tokens);
std::vector<std::string> bowpos_units(const TokenSeq& tokens);

// tf * idf over vocabulary units, L2-normalized.
FeatureVector tfidf_vector(const std::vector<std::string>& units, const Vocab& vocab,
                           std::string_view family);
FeatureVector bow_tfidf(const Document& doc, const Vocab& vocab);
FeatureVector pos_ngram_features(const TokenSeq& tokens);
// `bowpos_vocab` must be built over bowpos_units.
FeatureVector pos_augmented_unigrams(const TokenSeq& tokens, const Vocab& bowpos_vocab);

// Category fractions from a lexicon, under the given family prefix.
FeatureVector lexicon_features(const TokenSeq& tokens, const LexiconMatcher& matcher,
                               std::string_view family);
FeatureVector cluster_feature_vector(const TokenSeq& tokens, const ClusterMap& cm);

struct SentimentLexica {
    // MPQA: categories "positive" and "negative".
    const LexiconMatcher* mpqa = nullptr;
    // NRC: positive, negative and the eight emotion categories.
    const LexiconMatcher* nrc = nullptr;
    // Scored valence list for the rule-based scorer.
    const LexiconMatcher* valence = nullptr;
};

inline constexpr double kBoosterStep = 0.293;
inline constexpr double kCapsEmphasis = 1.5;
inline constexpr double kExclamationStep = 0.05;
inline constexpr int kNegationWindow = 3;

// Lexicon valence mean with negation flips, boosters, caps emphasis and
// exclamation runs; in [-1, 1].
double rule_compound(const TokenSeq& tokens, const LexiconMatcher& valence);
FeatureVector sentiment_scores(const TokenSeq& tokens, const SentimentLexica& lexica);

enum class TimeBucket { day, week, month, year };
std::string_view bucket_name(TimeBucket b);
TimeBucket bucket_for_days(long days);

struct TemporalExpression {
    std::size_t begin = 0;  // byte offsets into the searched text
    std::size_t end = 0;
    std::string text;
    long days = 0;  // days elapsed before the post; negative for future
    TimeBucket bucket = TimeBucket::day;
};

std::vector<TemporalExpression> find_temporal_expressions(
    std::string_view text, const std::chrono::year_month_day& post_date);

struct ComplaintMarkers {
    int request_flag = 0;
    double caps_word_frac = 0.0;
    double init_cap_frac = 0.0;
    double cap_letter_frac = 0.0;
    int exclamation_runs = 0;
    int question_runs = 0;
    int elongated = 0;
    std::map<std::string, int> marker_counts;  // downgrader and politeness categories
    std::map<std::string, double> pronoun_fracs;
    // absent when the document has no post date
    std::optional<std::vector<TemporalExpression>> temporal;
};

ComplaintMarkers complaint_markers(const Document& doc, const LexiconMatcher& markers);
FeatureVector markers_to_features(const ComplaintMarkers& m);
FeatureVector complaint_marker_features(const Document& doc, const LexiconMatcher& markers);

FeatureVector normalize_unit_sum(const FeatureVector& v);
// Divides each namespace (text before the first ':') by its own sum.
FeatureVector normalize_unit_sum_per_family(const FeatureVector& v);

std::string easyadapt_prefix(std::string_view domain);
FeatureVector easyadapt(const FeatureVector& v, std::string_view domain,
                        const std::vector<std::string>& domains);
FeatureSchema easyadapt_schema(const FeatureSchema& base, const std::vector<std::string>& domains);

// Family names accepted in a feature selection.
const std::vector<std::string>& known_families();
// Parses "bow,pos" or "all"; empty selections are rejected.
std::set<std::string> parse_family_list(std::string_view spec);

struct FeatureResources {
    std::shared_ptr<const TaggerModel> tagger;
    std::shared_ptr<const LexiconMatcher> liwc;
    std::shared_ptr<const LexiconMatcher> mpqa;
    std::shared_ptr<const LexiconMatcher> nrc;
    std::shared_ptr<const ClusterMap> clusters;
    std::shared_ptr<const LexiconMatcher> markers;
    std::shared_ptr<const LexiconMatcher> valence;

    // Bundled marker and valence lexica, rule-only tagger, nothing else.
    static FeatureResources defaults();
};

struct FeatureConfig {
    std::set<std::string> families;
    // "all" keeps families whose resources are missing out instead of failing.
    bool lenient = false;
};

FeatureConfig feature_config_from(std::string_view spec);

// Families that will actually be extracted; throws ConfigError when a
// selected family lacks its resource (unless lenient).
std::vector<std::string> resolve_families(const FeatureConfig& config,
                                          const FeatureResources& resources);

// Per-training-set feature extraction state. fit() only looks at the given
// documents; transform() is pure.
class FeaturePipeline {
public:
    static FeaturePipeline fit(const std::vector<const Document*>& train,
                               const FeatureConfig& config, const FeatureResources& resources);

    FeatureVector base_features(const Document& doc) const;
    // Adds the schema id; applies max-abs scaling fitted on training data.
    FeatureVector transform(const Document& doc) const;

    const std::vector<std::string>& active_families() const { return families_; }
    const Vocab& vocab() const { return vocab_; }
    const std::set<std::string>& fitted_ids() const { return fitted_ids_; }
    std::string fingerprint() const;
    const std::string& schema_id() const { return schema_id_; }

    // Throws LeakageError when any of `test_ids` was used for fitting.
    void check_no_leakage(const std::vector<std::string>& test_ids) const;

private:
    std::vector<std::string> families_;
    FeatureResources resources_;
    Vocab vocab_;
    Vocab bowpos_vocab_;
    std::map<std::string, double> scale_;  // divisor for features whose train max |value| > 1
    std::set<std::string> fitted_ids_;
    std::string schema_id_;
};

// Sparse export: doc_id<TAB>name=value<TAB>... ; manifest: one name per line.
void write_feature_matrix(std::ostream& out, const std::vector<std::string>& ids,
                          const std::vector<FeatureVector>& vectors);
void write_schema_manifest(std::ostream& out, const FeatureSchema& schema);

}  // namespace complaints
