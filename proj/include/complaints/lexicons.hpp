#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "complaints/token.hpp"

namespace complaints {

// A pattern is a literal (possibly multi-word, space separated) or a prefix
// pattern ending in '*'. Patterns are stored lowercase.
struct Lexicon {
    std::string name;
    // category -> patterns, in first-seen order, duplicates collapsed
    std::map<std::string, std::vector<std::string>> categories;
    // optional per-pattern score (sentiment lexicon variant)
    std::map<std::string, double> scores;

    std::size_t pattern_count() const;
    bool has_category(std::string_view c) const { return categories.find(std::string(c)) != categories.end(); }
};

// Validates and normalizes a pattern; throws FormatError for interior '*',
// empty patterns or a bare '*'.
std::string normalize_pattern(std::string_view raw);

// Format:
//   % <name>
//   <category><TAB><pattern>[,<pattern>...][<TAB><score>]
// Blank lines are ignored. A LIWC-style .dic file (two '%' delimiter lines
// around an id<TAB>category table, then word<TAB>id... rows) is also accepted.
Lexicon read_lexicon(std::istream& in, std::string_view fallback_name = "lexicon");
Lexicon load_lexicon(const std::filesystem::path& path);
Lexicon parse_lexicon(std::string_view text, std::string_view fallback_name = "lexicon");
void write_lexicon(std::ostream& out, const Lexicon& lex);

struct CategoryCount {
    std::size_t count = 0;
    double fraction = 0.0;
};

struct CategoryProfile {
    std::size_t token_count = 0;
    std::map<std::string, CategoryCount> categories;  // every lexicon category present
};

// Prefix trie with literal and wildcard terminals. Immutable after build.
class LexiconMatcher {
public:
    explicit LexiconMatcher(const Lexicon& lex);
    ~LexiconMatcher();
    LexiconMatcher(LexiconMatcher&&) noexcept;
    LexiconMatcher& operator=(LexiconMatcher&&) noexcept;

    const Lexicon& lexicon() const { return lex_; }
    const std::vector<std::string>& category_names() const { return names_; }

    // Category ids hit at each token position. A position counts once per
    // category even when several patterns (or a phrase starting there) match.
    std::vector<std::vector<int>> hits(const std::vector<std::string>& lowered) const;
    // Categories matched by a single word (phrases ignored).
    std::vector<int> word_categories(std::string_view lowered) const;
    // Score of the best (literal over wildcard, then longest) pattern matching
    // the word, if the lexicon carries scores.
    std::optional<double> word_score(std::string_view lowered) const;

    CategoryProfile profile(const TokenSeq& tokens) const;

private:
    struct Node;
    Lexicon lex_;
    std::vector<std::string> names_;
    std::unique_ptr<Node> root_;
};

CategoryProfile match_categories(const TokenSeq& tokens, const Lexicon& lexicon);

// Downgrader, politeness and pronoun-type dictionaries bundled with the toolkit.
const Lexicon& bundled_marker_lexicon();
// A small built-in valence list (scores in [-1, 1]) for the rule-based scorer.
const Lexicon& bundled_valence_lexicon();

}  // namespace complaints
