#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "complaints/token.hpp"

namespace complaints {

inline constexpr std::string_view kUserPlaceholder = "<USER>";
inline constexpr std::string_view kUrlPlaceholder = "<URL>";

// The fixed western emoticon inventory recognised by the tokenizer.
const std::set<std::string, std::less<>>& emoticons();
bool is_emoticon(std::string_view s);

// Splits anonymized text into tokens. Placeholders, emoticons, hashtags,
// contractions ("can't") and punctuation runs ("???") stay whole. Every
// non-whitespace byte belongs to exactly one token.
TokenSeq tokenize(std::string_view clean_text);

// Penn Treebank tags plus the Twitter additions (HT, USR, URL, RT).
const std::set<std::string, std::less<>>& known_tags();

// Averaged-perceptron tagger weights. A model with a tagset and no weights is
// the rule-only fallback (closed-class lexicon plus suffix heuristics).
struct TaggerModel {
    int version = 1;
    std::set<std::string> tagset;
    // feature -> tag -> weight
    std::map<std::string, std::map<std::string, double>> weights;

    bool loaded() const { return !tagset.empty(); }
    bool rule_only() const { return weights.empty(); }

    static TaggerModel rule_based();
    bool operator==(const TaggerModel&) const = default;
};

// Tag assigned by lexical rule regardless of model (USR, URL, HT, UH), or
// empty when the token is left to the model.
std::string rule_tag(const Token& token);

TokenSeq pos_tag(TokenSeq tokens, const TaggerModel& model);

struct TaggedSentence {
    std::vector<std::string> words;
    std::vector<std::string> tags;
};

// Blocks of `token<TAB>tag` lines, one sentence per block, blank-line separated.
std::vector<TaggedSentence> read_tagged_sentences(std::istream& in);
std::vector<TaggedSentence> read_tagged_sentences(const std::filesystem::path& path);

struct TaggerTrainResult {
    TaggerModel model;
    double heldout_accuracy = 0.0;  // training accuracy when nothing is held out
    std::size_t heldout_sentences = 0;
};

// Shuffles sentence order each epoch with `seed`. When heldout_fraction > 0
// and there are at least 10 sentences, that share is held out for the
// reported accuracy.
TaggerTrainResult train_pos_tagger(const std::vector<TaggedSentence>& data, int epochs,
                                   std::uint64_t seed, double heldout_fraction = 0.0);
TaggerTrainResult train_pos_tagger(const std::filesystem::path& tagged_corpus, int epochs,
                                   std::uint64_t seed, double heldout_fraction = 0.1);

double tagger_accuracy(const TaggerModel& model, const std::vector<TaggedSentence>& data);

void write_tagger(std::ostream& out, const TaggerModel& model);
void save_tagger(const std::filesystem::path& path, const TaggerModel& model);
TaggerModel read_tagger(std::istream& in);
TaggerModel load_tagger(const std::filesystem::path& path);

}  // namespace complaints
