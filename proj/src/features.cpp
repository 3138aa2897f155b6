#include "complaints/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <ostream>
#include <regex>
#include <sstream>

#include "complaints/common.hpp"

namespace complaints {

// ---------------------------------------------------------------------------
// FeatureVector / FeatureSchema

void FeatureVector::set(const std::string& name, double value) {
    if (value == 0.0) {
        entries.erase(name);
    } else {
        entries[name] = value;
    }
}

void FeatureVector::add(const std::string& name, double value) {
    set(name, get(name) + value);
}

double FeatureVector::get(std::string_view name) const {
    const auto it = entries.find(std::string(name));
    return it == entries.end() ? 0.0 : it->second;
}

double dot(const FeatureVector& a, const FeatureVector& b) {
    const auto& small = a.entries.size() <= b.entries.size() ? a : b;
    const auto& large = &small == &a ? b : a;
    double s = 0.0;
    for (const auto& [k, v] : small.entries) s += v * large.get(k);
    return s;
}

FeatureSchema FeatureSchema::from_names(std::vector<std::string> names) {
    FeatureSchema s;
    std::uint64_t h = fnv1a("schema");
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (!s.index.emplace(names[i], i).second) {
            throw SchemaError("duplicate feature name '" + names[i] + "' in schema");
        }
        h = fnv1a(names[i], mix64(h ^ i));
    }
    s.names = std::move(names);
    s.id = hex64(h);
    return s;
}

FeatureSchema FeatureSchema::from_vectors(const std::vector<FeatureVector>& vectors) {
    std::set<std::string> all;
    for (const auto& v : vectors) {
        for (const auto& [k, _] : v.entries) all.insert(k);
    }
    return from_names(std::vector<std::string>(all.begin(), all.end()));
}

std::optional<std::size_t> FeatureSchema::find(std::string_view name) const {
    const auto it = index.find(std::string(name));
    if (it == index.end()) return std::nullopt;
    return it->second;
}

// ---------------------------------------------------------------------------
// Vocabulary and preprocessing

Vocab build_vocab(const std::vector<std::vector<std::string>>& unit_docs, std::size_t min_df) {
    if (unit_docs.empty()) throw DataError("cannot build a vocabulary from an empty corpus");
    std::unordered_map<std::string, std::size_t> df;
    for (const auto& units : unit_docs) {
        std::set<std::string_view> seen(units.begin(), units.end());
        for (const auto u : seen) ++df[std::string(u)];
    }
    Vocab v;
    v.n_docs = unit_docs.size();
    for (auto& [w, c] : df) {
        if (c < min_df) continue;
        v.words.push_back(w);
        v.df.emplace(w, c);
        v.idf.emplace(w, std::log(static_cast<double>(v.n_docs) / static_cast<double>(c)) + 1.0);
    }
    std::sort(v.words.begin(), v.words.end(), [&](const std::string& a, const std::string& b) {
        const auto da = v.df.at(a);
        const auto db = v.df.at(b);
        return da != db ? da > db : a < b;
    });
    return v;
}

Vocab build_vocab(const Corpus& corpus) {
    std::vector<std::vector<std::string>> units;
    units.reserve(corpus.size());
    for (const auto& d : corpus.documents) {
        units.push_back(bow_units(d.tokens ? *d.tokens : tokenize(d.clean_text)));
    }
    return build_vocab(units);
}

void prepare_document(Document& doc, const TaggerModel& tagger) {
    if (!doc.tokens) doc.tokens = tokenize(doc.clean_text);
    auto& toks = *doc.tokens;
    if (doc.pos_tags) {
        if (doc.pos_tags->size() != toks.size()) {
            throw DataError("document " + doc.id + ": " + std::to_string(doc.pos_tags->size()) +
                            " pos_tags for " + std::to_string(toks.size()) + " tokens");
        }
        for (std::size_t i = 0; i < toks.size(); ++i) toks[i].pos = (*doc.pos_tags)[i];
        return;
    }
    const bool tagged = std::all_of(toks.begin(), toks.end(), [](const Token& t) { return t.pos.has_value(); });
    if (!tagged) toks = pos_tag(std::move(toks), tagger);
}

void prepare_corpus(Corpus& corpus, const TaggerModel& tagger) {
    for (auto& d : corpus.documents) prepare_document(d, tagger);
}

std::vector<std::string> bow_units(const TokenSeq& tokens) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(t.lower);
    return out;
}

std::vector<std::string> bowpos_units(const TokenSeq& tokens) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) {
        if (!t.pos) throw ConfigError("word_TAG units need tagged tokens ('" + t.surface + "' is untagged)");
        out.push_back(t.lower + "_" + *t.pos);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Family extractors

FeatureVector tfidf_vector(const std::vector<std::string>& units, const Vocab& vocab,
                           std::string_view family) {
    std::map<std::string_view, double> tf;
    for (const auto& u : units) {
        if (vocab.contains(u)) tf[u] += 1.0;
    }
    double norm = 0.0;
    for (auto& [u, c] : tf) {
        c *= vocab.idf.at(std::string(u));
        norm += c * c;
    }
    FeatureVector fv;
    if (norm == 0.0) return fv;
    norm = std::sqrt(norm);
    const std::string prefix = std::string(family) + ":";
    for (const auto& [u, c] : tf) fv.set(prefix + std::string(u), c / norm);
    return fv;
}

FeatureVector bow_tfidf(const Document& doc, const Vocab& vocab) {
    return tfidf_vector(bow_units(doc.tokens ? *doc.tokens : tokenize(doc.clean_text)), vocab, "bow");
}

FeatureVector pos_ngram_features(const TokenSeq& tokens) {
    FeatureVector fv;
    for (const auto& t : tokens) {
        if (!t.pos) throw ConfigError("POS features need tagged tokens ('" + t.surface + "' is untagged)");
    }
    if (tokens.empty()) return fv;
    const double uni = 1.0 / static_cast<double>(tokens.size());
    for (const auto& t : tokens) fv.add("pos1:" + *t.pos, uni);
    if (tokens.size() >= 2) {
        const double bi = 1.0 / static_cast<double>(tokens.size() - 1);
        for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
            fv.add("pos2:" + *tokens[i].pos + "_" + *tokens[i + 1].pos, bi);
        }
    }
    return fv;
}

FeatureVector pos_augmented_unigrams(const TokenSeq& tokens, const Vocab& bowpos_vocab) {
    return tfidf_vector(bowpos_units(tokens), bowpos_vocab, "bowpos");
}

FeatureVector lexicon_features(const TokenSeq& tokens, const LexiconMatcher& matcher,
                               std::string_view family) {
    FeatureVector fv;
    const auto prof = matcher.profile(tokens);
    const std::string prefix = std::string(family) + ":";
    for (const auto& [cat, cc] : prof.categories) {
        std::string name = cat;
        if (family == "liwc") {
            std::transform(name.begin(), name.end(), name.begin(),
                           [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
        }
        fv.set(prefix + name, cc.fraction);
    }
    return fv;
}

FeatureVector cluster_feature_vector(const TokenSeq& tokens, const ClusterMap& cm) {
    FeatureVector fv;
    const auto dist = cluster_features(tokens, cm);
    for (std::size_t k = 0; k < dist.size(); ++k) fv.set("cl:" + std::to_string(k), dist[k]);
    return fv;
}

// ---------------------------------------------------------------------------
// Sentiment

namespace {

const std::set<std::string, std::less<>>& negation_words() {
    static const std::set<std::string, std::less<>> words = {
        "not", "no", "never", "none", "nobody", "nothing", "neither", "nor", "nowhere",
        "cannot", "cant", "dont", "doesnt", "didnt", "wont", "isnt", "arent", "wasnt",
        "werent", "havent", "hasnt", "hadnt", "shouldnt", "wouldnt", "couldnt", "aint",
        "without", "barely", "hardly"};
    return words;
}

bool is_negation(std::string_view lower) {
    if (negation_words().contains(lower)) return true;
    return lower.size() > 3 && lower.substr(lower.size() - 3) == "n't";
}

// +1 intensifies, -1 dampens.
int booster_direction(std::string_view lower) {
    static const std::set<std::string, std::less<>> up = {
        "very", "really", "so", "extremely", "absolutely", "totally", "completely", "super",
        "incredibly", "highly", "too", "truly", "seriously", "utterly", "especially",
        "exceptionally", "most", "hugely", "majorly", "fully", "freaking", "damn"};
    static const std::set<std::string, std::less<>> down = {
        "slightly", "somewhat", "kinda", "sorta", "marginally", "partly", "almost", "fairly",
        "little", "occasionally"};
    if (up.contains(lower)) return 1;
    if (down.contains(lower)) return -1;
    return 0;
}

bool is_all_caps_word(std::string_view s) {
    int letters = 0;
    for (const unsigned char c : s) {
        if (std::islower(c)) return false;
        if (std::isupper(c)) ++letters;
    }
    return letters >= 2;
}

bool is_placeholder(std::string_view surface) {
    return surface == kUserPlaceholder || surface == kUrlPlaceholder;
}

}  // namespace

double rule_compound(const TokenSeq& tokens, const LexiconMatcher& valence) {
    double sum = 0.0;
    int valenced = 0;
    std::size_t longest_bang = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto& t = tokens[i];
        if (!t.surface.empty() && t.surface.find_first_not_of('!') == std::string::npos) {
            longest_bang = std::max(longest_bang, t.surface.size());
        }
        const auto score = valence.word_score(t.lower);
        if (!score) continue;
        double v = *score;
        if (v == 0.0) continue;
        if (is_all_caps_word(t.surface) && !is_placeholder(t.surface)) v *= kCapsEmphasis;
        if (i >= 1) {
            if (const int dir = booster_direction(tokens[i - 1].lower); dir != 0) {
                v += (v > 0 ? 1.0 : -1.0) * dir * kBoosterStep;
            }
        }
        bool negated = false;
        for (std::size_t back = 1; back <= static_cast<std::size_t>(kNegationWindow) && back <= i; ++back) {
            if (is_negation(tokens[i - back].lower)) {
                negated = true;
                break;
            }
        }
        if (negated) v = -v;
        sum += v;
        ++valenced;
    }
    if (valenced == 0) return 0.0;
    double c = sum / valenced;
    if (c != 0.0 && longest_bang > 0) {
        const double bump = kExclamationStep * static_cast<double>(std::min<std::size_t>(longest_bang, 3));
        c += c > 0 ? bump : -bump;
    }
    return std::clamp(c, -1.0, 1.0);
}

FeatureVector sentiment_scores(const TokenSeq& tokens, const SentimentLexica& lexica) {
    if (!lexica.valence && !lexica.mpqa && !lexica.nrc) {
        throw ConfigError("sentiment features need at least one sentiment lexicon");
    }
    FeatureVector fv;
    if (lexica.mpqa) {
        const auto prof = lexica.mpqa->profile(tokens);
        for (const auto& [cat, name] : {std::pair{"positive", "sent:mpqa_pos"}, std::pair{"negative", "sent:mpqa_neg"}}) {
            const auto it = prof.categories.find(cat);
            if (it != prof.categories.end()) fv.set(name, it->second.fraction);
        }
    }
    if (lexica.nrc && !tokens.empty()) {
        std::vector<std::string> lowered;
        for (const auto& t : tokens) lowered.push_back(t.lower);
        const auto hits = lexica.nrc->hits(lowered);
        const auto& names = lexica.nrc->category_names();
        static const std::map<std::string, std::string> kNrcNames = {
            {"positive", "nrc_pos"}, {"negative", "nrc_neg"}, {"anger", "nrc_anger"},
            {"disgust", "nrc_disgust"}, {"fear", "nrc_fear"}, {"joy", "nrc_joy"},
            {"sadness", "nrc_sadness"}, {"surprise", "nrc_surprise"}, {"trust", "nrc_trust"},
            {"anticipation", "nrc_anticipation"}};
        std::map<std::string, double> counts;
        double neutral = 0.0;
        for (const auto& cats : hits) {
            bool polar = false;
            for (const int c : cats) {
                const auto& cat = names[static_cast<std::size_t>(c)];
                const auto it = kNrcNames.find(cat);
                if (it == kNrcNames.end()) continue;
                counts[it->second] += 1.0;
                if (cat == "positive" || cat == "negative") polar = true;
            }
            // tokens with no polarity association count as neutral
            if (!polar) neutral += 1.0;
        }
        const double n = static_cast<double>(tokens.size());
        for (const auto& [name, c] : counts) fv.set("sent:" + name, c / n);
        fv.set("sent:nrc_neutral", neutral / n);
    }
    if (lexica.valence) fv.set("sent:rule_compound", rule_compound(tokens, *lexica.valence));
    return fv;
}

// ---------------------------------------------------------------------------
// Temporal expressions

std::string_view bucket_name(TimeBucket b) {
    switch (b) {
        case TimeBucket::day: return "day";
        case TimeBucket::week: return "week";
        case TimeBucket::month: return "month";
        case TimeBucket::year: return "year";
    }
    return "day";
}

TimeBucket bucket_for_days(long days) {
    const long d = std::labs(days);
    if (d <= 1) return TimeBucket::day;
    if (d <= 7) return TimeBucket::week;
    if (d <= 31) return TimeBucket::month;
    return TimeBucket::year;
}

namespace {

constexpr const char* kNumberWord =
    "(\\d+|a few|a couple of|a couple|couple of|couple|few|several|an|a|one|two|three|four|five|"
    "six|seven|eight|nine|ten|eleven|twelve)";

long number_value(const std::string& s) {
    static const std::map<std::string, long> words = {
        {"a", 1},      {"an", 1},         {"one", 1},         {"two", 2},     {"three", 3},
        {"four", 4},   {"five", 5},       {"six", 6},         {"seven", 7},   {"eight", 8},
        {"nine", 9},   {"ten", 10},       {"eleven", 11},     {"twelve", 12}, {"few", 3},
        {"a few", 3},  {"several", 3},    {"couple", 2},      {"a couple", 2}, {"couple of", 2},
        {"a couple of", 2}};
    if (const auto it = words.find(s); it != words.end()) return it->second;
    if (s.size() > 6) return -1;  // absurd counts are not time references
    return static_cast<long>(parse_int(s));
}

long unit_days(const std::string& unit) {
    if (unit == "day") return 1;
    if (unit == "week") return 7;
    if (unit == "month") return 30;
    return 365;
}

std::optional<long> days_between(const std::chrono::year_month_day& from,
                                 const std::chrono::year_month_day& to) {
    if (!from.ok() || !to.ok()) return std::nullopt;
    return (std::chrono::sys_days(to) - std::chrono::sys_days(from)).count();
}

struct TemporalRule {
    std::regex re;
    // returns days elapsed for a match, or nullopt to reject it
    std::optional<long> (*eval)(const std::smatch&, const std::chrono::year_month_day&);
};

const std::vector<TemporalRule>& temporal_rules() {
    using ymd = std::chrono::year_month_day;
    static const std::vector<TemporalRule> rules = [] {
        const auto icase = std::regex::ECMAScript | std::regex::icase;
        const std::string num = kNumberWord;
        std::vector<TemporalRule> r;
        r.push_back({std::regex(R"(\b(\d{4})-(\d{1,2})-(\d{1,2})\b)", icase),
                     [](const std::smatch& m, const ymd& post) -> std::optional<long> {
                         const ymd d{std::chrono::year(static_cast<int>(parse_int(m.str(1)))),
                                     std::chrono::month(static_cast<unsigned>(parse_int(m.str(2)))),
                                     std::chrono::day(static_cast<unsigned>(parse_int(m.str(3))))};
                         return days_between(d, post);
                     }});
        r.push_back({std::regex(R"(\b(\d{1,2})/(\d{1,2})/(\d{4}|\d{2})\b)", icase),
                     [](const std::smatch& m, const ymd& post) -> std::optional<long> {
                         int y = static_cast<int>(parse_int(m.str(3)));
                         if (y < 100) y += 2000;
                         const ymd d{std::chrono::year(y),
                                     std::chrono::month(static_cast<unsigned>(parse_int(m.str(1)))),
                                     std::chrono::day(static_cast<unsigned>(parse_int(m.str(2))))};
                         return days_between(d, post);
                     }});
        r.push_back({std::regex("\\bfor\\s+(?:the\\s+(?:past|last)\\s+)?" + num +
                                    "\\s+(day|week|month|year)s?\\b",
                                icase),
                     [](const std::smatch& m, const ymd&) -> std::optional<long> {
                         const long n = number_value(m.str(1));
                         if (n < 0) return std::nullopt;
                         return n * unit_days(m.str(2));
                     }});
        r.push_back({std::regex("\\b" + num + "\\s+(day|week|month|year)s?\\s+ago\\b", icase),
                     [](const std::smatch& m, const ymd&) -> std::optional<long> {
                         const long n = number_value(m.str(1));
                         if (n < 0) return std::nullopt;
                         return n * unit_days(m.str(2));
                     }});
        r.push_back({std::regex("\\b(?:last|past)\\s+(?:" + num + "\\s+)?(day|week|month|year)s?\\b", icase),
                     [](const std::smatch& m, const ymd&) -> std::optional<long> {
                         const long n = m[1].matched ? number_value(m.str(1)) : 1;
                         if (n < 0) return std::nullopt;
                         return n * unit_days(m.str(2));
                     }});
        r.push_back({std::regex(R"(\b(?:yesterday|last night)\b)", icase),
                     [](const std::smatch&, const ymd&) -> std::optional<long> { return 1; }});
        r.push_back({std::regex(R"(\b(?:today|tonight|this (?:morning|afternoon|evening))\b)", icase),
                     [](const std::smatch&, const ymd&) -> std::optional<long> { return 0; }});
        r.push_back({std::regex(R"(\btomorrow\b)", icase),
                     [](const std::smatch&, const ymd&) -> std::optional<long> { return -1; }});
        r.push_back({std::regex(R"(\b(?:last\s+|on\s+)?(monday|tuesday|wednesday|thursday|friday|saturday|sunday)\b)", icase),
                     [](const std::smatch& m, const ymd& post) -> std::optional<long> {
                         static const std::vector<std::string> names = {
                             "sunday", "monday", "tuesday", "wednesday", "thursday", "friday", "saturday"};
                         const auto name = to_lower_ascii(m.str(1));
                         const auto target = static_cast<unsigned>(
                             std::find(names.begin(), names.end(), name) - names.begin());
                         const unsigned today = std::chrono::weekday(std::chrono::sys_days(post)).c_encoding();
                         const long diff = static_cast<long>((today + 7 - target) % 7);
                         return diff == 0 ? 7 : diff;
                     }});
        return r;
    }();
    return rules;
}

}  // namespace

std::vector<TemporalExpression> find_temporal_expressions(
    std::string_view text, const std::chrono::year_month_day& post_date) {
    const std::string s(text);
    std::vector<TemporalExpression> found;
    const auto overlaps = [&](std::size_t b, std::size_t e) {
        return std::any_of(found.begin(), found.end(),
                           [&](const TemporalExpression& t) { return b < t.end && t.begin < e; });
    };
    for (const auto& rule : temporal_rules()) {
        for (auto it = std::sregex_iterator(s.begin(), s.end(), rule.re); it != std::sregex_iterator(); ++it) {
            const auto& m = *it;
            const auto b = static_cast<std::size_t>(m.position(0));
            const auto e = b + static_cast<std::size_t>(m.length(0));
            if (overlaps(b, e)) continue;
            std::optional<long> days;
            try {
                days = rule.eval(m, post_date);
            } catch (const FormatError&) {
                days.reset();
            }
            if (!days) continue;
            found.push_back({b, e, m.str(0), *days, bucket_for_days(*days)});
        }
    }
    std::sort(found.begin(), found.end(),
              [](const TemporalExpression& a, const TemporalExpression& b) { return a.begin < b.begin; });
    return found;
}

// ---------------------------------------------------------------------------
// Complaint markers

namespace {

const std::vector<std::string>& marker_categories() {
    static const std::vector<std::string> cats = {
        "play_down",        "understaters",      "disarmers",          "downtoners",
        "hedges",           "apologies",         "greetings",          "direct_questions",
        "direct_start",     "indicative_modals", "subjunctive_modals", "politeness_markers",
        "politeness_maxims"};
    return cats;
}

bool start_only_category(std::string_view c) {
    return c == "greetings" || c == "direct_questions" || c == "direct_start";
}

const std::vector<std::string>& pronoun_categories() {
    static const std::vector<std::string> cats = {"pron_first", "pron_second", "pron_third",
                                                  "pron_demonstrative", "pron_indefinite"};
    return cats;
}

int count_runs(std::string_view text, char c) {
    int runs = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] != c) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < text.size() && text[j] == c) ++j;
        if (j - i >= 2) ++runs;
        i = j;
    }
    return runs;
}

bool is_elongated(std::string_view s) {
    int run = 1;
    for (std::size_t i = 1; i < s.size(); ++i) {
        const auto a = static_cast<unsigned char>(s[i]);
        const auto b = static_cast<unsigned char>(s[i - 1]);
        if (std::isalpha(a) && std::tolower(a) == std::tolower(b)) {
            if (++run >= 3) return true;
        } else {
            run = 1;
        }
    }
    return false;
}

bool is_alpha_word(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isalpha(c) || c == '\''; });
}

}  // namespace

ComplaintMarkers complaint_markers(const Document& doc, const LexiconMatcher& markers) {
    const TokenSeq tokens = doc.tokens ? *doc.tokens : tokenize(doc.clean_text);
    ComplaintMarkers m;

    std::vector<std::string> lowered;
    lowered.reserve(tokens.size());
    for (const auto& t : tokens) lowered.push_back(t.lower);
    const auto hits = markers.hits(lowered);
    const auto& names = markers.category_names();
    const auto position_has = [&](std::size_t pos, std::string_view cat) {
        for (const int c : hits[pos]) {
            if (names[static_cast<std::size_t>(c)] == cat) return true;
        }
        return false;
    };

    std::size_t first_word = 0;
    while (first_word < tokens.size() && is_placeholder(tokens[first_word].surface)) ++first_word;

    for (const auto& cat : marker_categories()) {
        if (!markers.lexicon().has_category(cat)) continue;
        int count = 0;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (start_only_category(cat) && i != first_word) continue;
            if (position_has(i, cat)) ++count;
        }
        m.marker_counts[cat] = count;
    }
    for (const auto& cat : pronoun_categories()) {
        if (!markers.lexicon().has_category(cat)) continue;
        int count = 0;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (position_has(i, cat)) ++count;
        }
        m.pronoun_fracs[cat] = tokens.empty() ? 0.0 : static_cast<double>(count) / static_cast<double>(tokens.size());
    }

    // request: modal request to the addressee, "please" + verb, or a question
    // that addresses the reader directly
    bool request = false;
    bool has_question = false;
    bool second_person = false;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto& w = lowered[i];
        if (w.find('?') != std::string::npos) has_question = true;
        if (markers.lexicon().has_category("pron_second") && position_has(i, "pron_second")) second_person = true;
        if (i + 1 < tokens.size()) {
            const auto& nx = lowered[i + 1];
            const bool modal = w == "can" || w == "could" || w == "would" || w == "will";
            if (modal && (nx == "you" || nx == "u")) request = true;
            if (w == "please" || w == "pls" || w == "plz") {
                const auto& t = tokens[i + 1];
                const bool verb = t.pos ? t.pos->rfind("VB", 0) == 0 : is_alpha_word(t.surface);
                if (verb) request = true;
            }
        }
    }
    if (has_question && second_person) request = true;
    m.request_flag = request ? 1 : 0;

    // intensifiers
    int eligible = 0;
    int caps = 0;
    int init_caps = 0;
    int letters = 0;
    int upper_letters = 0;
    for (const auto& t : tokens) {
        if (is_placeholder(t.surface)) continue;
        int n_letters = 0;
        int n_upper = 0;
        for (const unsigned char c : t.surface) {
            if (std::isalpha(c)) {
                ++n_letters;
                if (std::isupper(c)) ++n_upper;
            }
        }
        letters += n_letters;
        upper_letters += n_upper;
        if (is_elongated(t.surface)) ++m.elongated;
        if (n_letters < 2) continue;
        ++eligible;
        if (n_upper == n_letters) {
            ++caps;
        } else if (std::isupper(static_cast<unsigned char>(t.surface.front()))) {
            ++init_caps;
        }
    }
    if (eligible > 0) {
        m.caps_word_frac = static_cast<double>(caps) / eligible;
        m.init_cap_frac = static_cast<double>(init_caps) / eligible;
    }
    if (letters > 0) m.cap_letter_frac = static_cast<double>(upper_letters) / letters;
    m.exclamation_runs = count_runs(doc.clean_text, '!');
    m.question_runs = count_runs(doc.clean_text, '?');

    if (doc.post_date) m.temporal = find_temporal_expressions(doc.clean_text, *doc.post_date);
    return m;
}

FeatureVector markers_to_features(const ComplaintMarkers& m) {
    FeatureVector fv;
    fv.set("cmp:request", m.request_flag);
    fv.set("cmp:caps_frac", m.caps_word_frac);
    fv.set("cmp:init_caps_frac", m.init_cap_frac);
    fv.set("cmp:caps_letter_frac", m.cap_letter_frac);
    fv.set("cmp:excl_runs", m.exclamation_runs);
    fv.set("cmp:quest_runs", m.question_runs);
    fv.set("cmp:elongated", m.elongated);
    for (const auto& [cat, c] : m.marker_counts) fv.set("cmp:" + cat, c);
    for (const auto& [cat, f] : m.pronoun_fracs) fv.set("cmp:" + cat, f);
    if (m.temporal) {
        fv.set("cmp:time_known", 1.0);
        fv.set("cmp:time_count", static_cast<double>(m.temporal->size()));
        if (!m.temporal->empty()) {
            long min_days = std::labs(m.temporal->front().days);
            for (const auto& t : *m.temporal) {
                min_days = std::min(min_days, std::labs(t.days));
                fv.add("cmp:time_" + std::string(bucket_name(t.bucket)), 1.0);
            }
            fv.set("cmp:time_min_days", static_cast<double>(min_days));
        }
    }
    return fv;
}

FeatureVector complaint_marker_features(const Document& doc, const LexiconMatcher& markers) {
    return markers_to_features(complaint_markers(doc, markers));
}

// ---------------------------------------------------------------------------
// Normalization and domain augmentation

FeatureVector normalize_unit_sum(const FeatureVector& v) {
    double sum = 0.0;
    for (const auto& [_, x] : v.entries) sum += x;
    if (sum == 0.0) return v;
    FeatureVector out;
    out.schema_id = v.schema_id;
    for (const auto& [k, x] : v.entries) out.set(k, x / sum);
    return out;
}

FeatureVector normalize_unit_sum_per_family(const FeatureVector& v) {
    std::map<std::string, double> sums;
    for (const auto& [k, x] : v.entries) sums[k.substr(0, k.find(':'))] += x;
    FeatureVector out;
    out.schema_id = v.schema_id;
    for (const auto& [k, x] : v.entries) {
        const double s = sums[k.substr(0, k.find(':'))];
        out.set(k, s == 0.0 ? x : x / s);
    }
    return out;
}

std::string easyadapt_prefix(std::string_view domain) {
    return "dom" + std::string(domain) + ":";
}

namespace {

std::string easyadapt_schema_id(const std::string& base_id, const std::vector<std::string>& domains) {
    std::uint64_t h = fnv1a(base_id);
    for (const auto& d : domains) h = fnv1a(d, mix64(h));
    return "ea" + hex64(h);
}

}  // namespace

FeatureVector easyadapt(const FeatureVector& v, std::string_view domain,
                        const std::vector<std::string>& domains) {
    if (std::find(domains.begin(), domains.end(), domain) == domains.end()) {
        throw ConfigError("unknown adaptation domain '" + std::string(domain) + "'");
    }
    FeatureVector out;
    out.schema_id = v.schema_id.empty() ? std::string() : easyadapt_schema_id(v.schema_id, domains);
    const std::string dom = easyadapt_prefix(domain);
    for (const auto& [k, x] : v.entries) {
        out.entries.emplace("gen:" + k, x);
        out.entries.emplace(dom + k, x);
    }
    return out;
}

FeatureSchema easyadapt_schema(const FeatureSchema& base, const std::vector<std::string>& domains) {
    std::vector<std::string> names;
    names.reserve(base.size() * (domains.size() + 1));
    for (const auto& n : base.names) names.push_back("gen:" + n);
    for (const auto& d : domains) {
        for (const auto& n : base.names) names.push_back(easyadapt_prefix(d) + n);
    }
    auto s = FeatureSchema::from_names(std::move(names));
    s.id = easyadapt_schema_id(base.id, domains);
    return s;
}

// ---------------------------------------------------------------------------
// Family selection

const std::vector<std::string>& known_families() {
    static const std::vector<std::string> f = {"bow", "bowpos", "pos", "liwc", "clusters", "sent", "cmp"};
    return f;
}

std::set<std::string> parse_family_list(std::string_view spec) {
    static const std::map<std::string, std::string> aliases = {
        {"unigrams", "bow"}, {"cl", "clusters"}, {"cluster", "clusters"},
        {"sentiment", "sent"}, {"markers", "cmp"}, {"complaint", "cmp"}};
    std::set<std::string> out;
    for (const auto& raw : split(spec, ',')) {
        auto f = to_lower_ascii(trim(raw));
        if (f.empty()) continue;
        if (const auto it = aliases.find(f); it != aliases.end()) f = it->second;
        if (f == "all") {
            for (const auto& k : known_families()) {
                if (k != "bowpos") out.insert(k);
            }
            continue;
        }
        if (std::find(known_families().begin(), known_families().end(), f) == known_families().end()) {
            throw ConfigError("unknown feature family '" + f + "'");
        }
        out.insert(f);
    }
    if (out.empty()) throw ConfigError("empty feature selection");
    return out;
}

FeatureConfig feature_config_from(std::string_view spec) {
    FeatureConfig c;
    c.families = parse_family_list(spec);
    for (const auto& raw : split(spec, ',')) {
        if (to_lower_ascii(trim(raw)) == "all") c.lenient = true;
    }
    return c;
}

FeatureResources FeatureResources::defaults() {
    FeatureResources r;
    r.tagger = std::make_shared<const TaggerModel>(TaggerModel::rule_based());
    r.markers = std::make_shared<const LexiconMatcher>(bundled_marker_lexicon());
    r.valence = std::make_shared<const LexiconMatcher>(bundled_valence_lexicon());
    return r;
}

std::vector<std::string> resolve_families(const FeatureConfig& config,
                                          const FeatureResources& resources) {
    if (config.families.empty()) throw ConfigError("empty feature selection");
    std::vector<std::string> out;
    for (const auto& f : known_families()) {
        if (!config.families.contains(f)) continue;
        std::string missing;
        if ((f == "pos" || f == "bowpos") && !resources.tagger) missing = "a POS tagger";
        if (f == "liwc" && !resources.liwc) missing = "a LIWC dictionary";
        if (f == "clusters" && !resources.clusters) missing = "a cluster map";
        if (f == "sent" && !resources.valence && !resources.mpqa && !resources.nrc) missing = "a sentiment lexicon";
        if (f == "cmp" && !resources.markers) missing = "the marker lexicon";
        if (!missing.empty()) {
            if (config.lenient) continue;
            throw ConfigError("feature family '" + f + "' needs " + missing);
        }
        out.push_back(f);
    }
    if (out.empty()) throw ConfigError("no feature family has its resources available");
    return out;
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

const TokenSeq& tokens_for(const Document& doc, const FeatureResources& r, bool need_pos,
                           TokenSeq& storage) {
    const bool ok = doc.tokens &&
                    (!need_pos || std::all_of(doc.tokens->begin(), doc.tokens->end(),
                                              [](const Token& t) { return t.pos.has_value(); }));
    if (ok) return *doc.tokens;
    Document copy = doc;
    if (need_pos) {
        prepare_document(copy, r.tagger ? *r.tagger : TaggerModel::rule_based());
    } else if (!copy.tokens) {
        copy.tokens = tokenize(copy.clean_text);
    }
    storage = std::move(*copy.tokens);
    return storage;
}

bool needs_pos(const std::vector<std::string>& families) {
    return std::find(families.begin(), families.end(), "pos") != families.end() ||
           std::find(families.begin(), families.end(), "bowpos") != families.end();
}

}  // namespace

FeaturePipeline FeaturePipeline::fit(const std::vector<const Document*>& train,
                                     const FeatureConfig& config, const FeatureResources& resources) {
    if (train.empty()) throw DataError("cannot fit features on an empty training set");
    FeaturePipeline p;
    p.families_ = resolve_families(config, resources);
    p.resources_ = resources;
    const bool pos = needs_pos(p.families_);
    const auto has = [&](std::string_view f) {
        return std::find(p.families_.begin(), p.families_.end(), f) != p.families_.end();
    };
    std::vector<std::vector<std::string>> bow_docs;
    std::vector<std::vector<std::string>> bowpos_docs;
    for (const Document* d : train) {
        if (!p.fitted_ids_.insert(d->id).second) {
            throw IntegrityError("document " + d->id + " appears twice in a training set");
        }
        TokenSeq storage;
        const auto& toks = tokens_for(*d, resources, pos, storage);
        if (has("bow")) bow_docs.push_back(bow_units(toks));
        if (has("bowpos")) bowpos_docs.push_back(bowpos_units(toks));
    }
    if (has("bow")) p.vocab_ = build_vocab(bow_docs);
    if (has("bowpos")) p.bowpos_vocab_ = build_vocab(bowpos_docs);

    std::vector<FeatureVector> base;
    base.reserve(train.size());
    std::map<std::string, double> max_abs;
    for (const Document* d : train) {
        base.push_back(p.base_features(*d));
        for (const auto& [k, v] : base.back().entries) {
            auto& m = max_abs[k];
            m = std::max(m, std::abs(v));
        }
    }
    for (const auto& [k, m] : max_abs) {
        if (m > 1.0) p.scale_[k] = m;
    }
    p.schema_id_ = FeatureSchema::from_vectors(base).id;
    return p;
}

FeatureVector FeaturePipeline::base_features(const Document& doc) const {
    const auto& r = resources_;
    TokenSeq storage;
    const auto& toks = tokens_for(doc, r, needs_pos(families_), storage);
    FeatureVector out;
    const auto merge = [&](const FeatureVector& part) {
        for (const auto& [k, v] : part.entries) {
            if (!out.entries.emplace(k, v).second) {
                throw InvariantError("feature name collision on '" + k + "'");
            }
        }
    };
    for (const auto& f : families_) {
        if (f == "bow") {
            merge(tfidf_vector(bow_units(toks), vocab_, "bow"));
        } else if (f == "bowpos") {
            merge(tfidf_vector(bowpos_units(toks), bowpos_vocab_, "bowpos"));
        } else if (f == "pos") {
            merge(pos_ngram_features(toks));
        } else if (f == "liwc") {
            merge(lexicon_features(toks, *r.liwc, "liwc"));
        } else if (f == "clusters") {
            merge(cluster_feature_vector(toks, *r.clusters));
        } else if (f == "sent") {
            merge(sentiment_scores(toks, {r.mpqa.get(), r.nrc.get(), r.valence.get()}));
        } else if (f == "cmp") {
            if (doc.tokens) {
                merge(complaint_marker_features(doc, *r.markers));
            } else {
                Document copy = doc;
                copy.tokens = toks;
                merge(complaint_marker_features(copy, *r.markers));
            }
        }
    }
    return out;
}

FeatureVector FeaturePipeline::transform(const Document& doc) const {
    FeatureVector v = base_features(doc);
    for (auto& [k, x] : v.entries) {
        if (const auto it = scale_.find(k); it != scale_.end()) x /= it->second;
    }
    v.schema_id = schema_id_;
    return v;
}

std::string FeaturePipeline::fingerprint() const {
    std::uint64_t h = fnv1a("pipeline");
    for (const auto& f : families_) h = fnv1a(f, mix64(h));
    for (const auto& w : vocab_.words) h = fnv1a(w, mix64(h ^ vocab_.df.at(w)));
    for (const auto& w : bowpos_vocab_.words) h = fnv1a(w, mix64(h ^ bowpos_vocab_.df.at(w)));
    for (const auto& [k, s] : scale_) h = fnv1a(k + "=" + format_double(s), mix64(h));
    for (const auto& id : fitted_ids_) h = fnv1a(id, mix64(h));
    h = fnv1a(schema_id_, mix64(h));
    return hex64(h);
}

void FeaturePipeline::check_no_leakage(const std::vector<std::string>& test_ids) const {
    for (const auto& id : test_ids) {
        if (fitted_ids_.contains(id)) {
            throw LeakageError("feature resources were fitted on test document " + id);
        }
    }
}

// ---------------------------------------------------------------------------
// Export

void write_feature_matrix(std::ostream& out, const std::vector<std::string>& ids,
                          const std::vector<FeatureVector>& vectors) {
    if (ids.size() != vectors.size()) throw InvariantError("feature matrix ids/vectors mismatch");
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out << ids[i];
        for (const auto& [k, v] : vectors[i].entries) out << '\t' << k << '=' << format_double(v);
        out << '\n';
    }
}

void write_schema_manifest(std::ostream& out, const FeatureSchema& schema) {
    out << "# schema " << schema.id << '\n';
    for (const auto& n : schema.names) out << n << '\n';
}

}  // namespace complaints
