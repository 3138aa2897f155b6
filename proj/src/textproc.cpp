#include "complaints/textproc.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "complaints/common.hpp"

namespace complaints {

// ---------------------------------------------------------------------------
// Tokenizer

const std::set<std::string, std::less<>>& emoticons() {
    static const std::set<std::string, std::less<>> list = {
        ":)",  ":-)", ":(",  ":-(", ":D",  ":-D", ";)",  ";-)", ":P",  ":-P",
        ":p",  ":-p", ":/",  ":-/", ":|",  ":-|", ":O",  ":-O", ":o",  ":'(",
        ":')", ":*",  ":-*", "<3",  "</3", "=)",  "=(",  "=D",  "XD",  "xD",
        ":]",  ":[",  ";D",  ":S",  ":$",  ":@",  "8)",  "B)",  "^_^", "^^",
        "-_-", ">:(", ">:)", "D:",  ":((", ":))", ":3",  "o_O", "O_o", "T_T",
        ";(",  ":\\", "=/",  ";P",  ";p",
    };
    return list;
}

bool is_emoticon(std::string_view s) { return emoticons().find(s) != emoticons().end(); }

namespace {

enum class CharClass { space, word, punct, symbol, apostrophe, modifier };

struct CodePoint {
    char32_t value = 0;
    std::size_t length = 1;
};

CodePoint decode(std::string_view s, std::size_t i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    char32_t cp = b0;
    if (b0 >= 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else if (b0 >= 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if (b0 >= 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if (b0 >= 0x80) {
        return {0xFFFD, 1};  // stray continuation byte
    }
    if (i + len > s.size()) return {0xFFFD, 1};
    for (std::size_t k = 1; k < len; ++k) {
        const auto b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) return {0xFFFD, 1};
        cp = (cp << 6) | (b & 0x3F);
    }
    return {cp, len};
}

CharClass classify(char32_t cp) {
    if (cp < 0x80) {
        const auto c = static_cast<unsigned char>(cp);
        if (std::isspace(c)) return CharClass::space;
        if (std::isalnum(c) || c == '_') return CharClass::word;
        if (c == '\'') return CharClass::apostrophe;
        return CharClass::punct;
    }
    if (cp == 0xA0 || cp == 0x2028 || cp == 0x2029 || cp == 0x3000) return CharClass::space;
    if (cp == 0x2019 || cp == 0x2018) return CharClass::apostrophe;
    if (cp == 0xFE0F || cp == 0x200D || (cp >= 0x1F3FB && cp <= 0x1F3FF)) return CharClass::modifier;
    if (cp >= 0x2000 && cp <= 0x206F) return CharClass::punct;
    if ((cp >= 0x2190 && cp <= 0x2BFF) || cp >= 0x1F000) return CharClass::symbol;
    if (cp == 0xFFFD) return CharClass::symbol;
    return CharClass::word;
}

class Scanner {
public:
    explicit Scanner(std::string_view text) : text_(text) {}

    TokenSeq run() {
        TokenSeq out;
        std::size_t i = 0;
        while (i < text_.size()) {
            const auto cp = decode(text_, i);
            const auto cls = classify(cp.value);
            if (cls == CharClass::space) {
                i += cp.length;
                continue;
            }
            const std::size_t end = match_at(i, cls, cp);
            push(out, i, end);
            i = end;
        }
        return out;
    }

private:
    CharClass class_at(std::size_t i) const {
        if (i >= text_.size()) return CharClass::space;
        return classify(decode(text_, i).value);
    }

    bool space_before(std::size_t i) const {
        if (i == 0) return true;
        std::size_t j = i - 1;
        while (j > 0 && (static_cast<unsigned char>(text_[j]) & 0xC0) == 0x80) --j;
        return class_at(j) == CharClass::space;
    }

    std::size_t match_at(std::size_t i, CharClass cls, CodePoint cp) const {
        for (std::string_view ph : {kUserPlaceholder, kUrlPlaceholder}) {
            if (text_.substr(i, ph.size()) == ph) return i + ph.size();
        }
        if (const std::size_t e = match_emoticon(i)) return e;
        const char c = text_[i];
        if ((c == '#' || c == '@') && class_at(i + 1) == CharClass::word) {
            std::size_t j = i + 1;
            while (j < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[j])) || text_[j] == '_')) {
                ++j;
            }
            if (j > i + 1) return j;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            if (const std::size_t e = match_number(i)) return e;
        }
        switch (cls) {
            case CharClass::word: return match_word(i);
            case CharClass::apostrophe:
            case CharClass::punct: return match_punct_run(i, cp);
            case CharClass::symbol: {
                std::size_t j = i + cp.length;
                while (j < text_.size() && class_at(j) == CharClass::modifier) {
                    j += decode(text_, j).length;
                }
                return j;
            }
            case CharClass::modifier:
            case CharClass::space: return i + cp.length;
        }
        return i + cp.length;
    }

    std::size_t match_emoticon(std::size_t i) const {
        if (!space_before(i)) return 0;
        std::size_t best = 0;
        for (const auto& e : emoticons()) {
            if (e.size() <= best || text_.substr(i, e.size()) != e) continue;
            const std::size_t end = i + e.size();
            // letter-final emoticons (":D", "XD") must not run into a word
            const bool alnum_tail = std::isalnum(static_cast<unsigned char>(e.back())) != 0;
            const CharClass next = class_at(end);
            if (alnum_tail && next == CharClass::word) continue;
            if (next == CharClass::word && std::isalnum(static_cast<unsigned char>(e.front()))) {
                continue;
            }
            best = e.size();
        }
        return best ? i + best : 0;
    }

    // 7%, 2018, 3/5/2018, 3:30, 1,000.50 -- but "3rd" or "10am" are words.
    std::size_t match_number(std::size_t i) const {
        std::size_t j = i;
        const auto digits = [&] {
            const std::size_t s = j;
            while (j < text_.size() && std::isdigit(static_cast<unsigned char>(text_[j]))) ++j;
            return j > s;
        };
        digits();
        while (j + 1 < text_.size() && (text_[j] == '.' || text_[j] == ',' || text_[j] == ':' ||
                                        text_[j] == '/') &&
               std::isdigit(static_cast<unsigned char>(text_[j + 1]))) {
            ++j;
            digits();
        }
        if (j < text_.size() && text_[j] == '%') return j + 1;
        if (class_at(j) == CharClass::word) return 0;
        return j;
    }

    std::size_t match_word(std::size_t i) const {
        std::size_t j = i;
        for (;;) {
            while (j < text_.size() && class_at(j) == CharClass::word) {
                j += decode(text_, j).length;
            }
            if (j >= text_.size()) break;
            const auto cp = decode(text_, j);
            const auto cls = classify(cp.value);
            const bool joiner = cls == CharClass::apostrophe || text_[j] == '-';
            if (joiner && class_at(j + cp.length) == CharClass::word) {
                j += cp.length;
                continue;
            }
            break;
        }
        return j;
    }

    std::size_t match_punct_run(std::size_t i, CodePoint cp) const {
        const char c = text_[i];
        std::size_t j = i + cp.length;
        if (c == '!' || c == '?') {
            while (j < text_.size() && (text_[j] == '!' || text_[j] == '?')) ++j;
            return j;
        }
        while (j < text_.size()) {
            const auto next = decode(text_, j);
            if (next.value != cp.value) break;
            j += next.length;
        }
        return j;
    }

    void push(TokenSeq& out, std::size_t start, std::size_t end) const {
        Token t;
        t.surface = std::string(text_.substr(start, end - start));
        t.lower = to_lower_ascii(t.surface);
        t.span = {start, end};
        out.push_back(std::move(t));
    }

    std::string_view text_;
};

}  // namespace

TokenSeq tokenize(std::string_view clean_text) { return Scanner(clean_text).run(); }

// ---------------------------------------------------------------------------
// Tagging

const std::set<std::string, std::less<>>& known_tags() {
    static const std::set<std::string, std::less<>> tags = {
        "CC",  "CD",   "DT",   "EX",  "FW",  "IN",  "JJ",  "JJR", "JJS", "LS",  "MD",
        "NN",  "NNS",  "NNP",  "NNPS", "PDT", "POS", "PRP", "PRP$", "RB", "RBR", "RBS",
        "RP",  "SYM",  "TO",   "UH",  "VB",  "VBD", "VBG", "VBN", "VBP", "VBZ", "WDT",
        "WP",  "WP$",  "WRB",  "$",   "#",   ".",   ",",   ":",   "``",  "''",  "(",
        ")",   "-LRB-", "-RRB-", "HT", "USR", "URL", "RT",
    };
    return tags;
}

TaggerModel TaggerModel::rule_based() {
    TaggerModel m;
    for (const auto& t : known_tags()) m.tagset.insert(t);
    return m;
}

std::string rule_tag(const Token& token) {
    const std::string& s = token.surface;
    if (s == kUserPlaceholder) return "USR";
    if (s == kUrlPlaceholder) return "URL";
    if (s.size() > 1 && s[0] == '#') return "HT";
    if (s.size() > 1 && s[0] == '@') return "USR";
    if (is_emoticon(s)) return "UH";
    return {};
}

namespace {

const std::unordered_map<std::string, std::string>& closed_class() {
    static const std::unordered_map<std::string, std::string> table = [] {
        std::unordered_map<std::string, std::string> m;
        const auto add = [&m](std::initializer_list<const char*> words, const char* tag) {
            for (const char* w : words) m.emplace(w, tag);
        };
        add({"i", "you", "he", "she", "it", "we", "they", "me", "him", "us", "them", "u", "ya",
             "myself", "yourself", "himself", "herself", "itself", "ourselves", "themselves",
             "i'm", "im", "you're", "he's", "she's", "it's", "we're", "they're", "i've", "you've",
             "we've", "they've", "i'll", "you'll", "he'll", "she'll", "we'll", "they'll", "i'd",
             "you'd", "he'd", "she'd", "we'd", "they'd", "that's", "there's"},
            "PRP");
        add({"my", "your", "his", "her", "its", "our", "their", "ur", "yo"}, "PRP$");
        add({"the", "a", "an", "this", "that", "these", "those", "every", "each", "some", "any",
             "no", "another", "all", "both", "either", "neither"},
            "DT");
        add({"in", "on", "at", "of", "for", "with", "from", "by", "about", "into", "over", "after",
             "before", "since", "until", "through", "during", "without", "under", "between",
             "against", "via", "per", "than", "like", "if", "because", "while", "as", "upon",
             "within", "across", "towards", "toward", "though", "although", "unless", "whether"},
            "IN");
        add({"and", "or", "but", "nor", "yet", "&", "plus"}, "CC");
        add({"can", "could", "will", "would", "shall", "should", "may", "might", "must", "can't",
             "cannot", "won't", "wouldn't", "couldn't", "shouldn't", "wont", "cant", "'ll"},
            "MD");
        add({"to"}, "TO");
        add({"why", "when", "where", "how", "whenever", "wherever"}, "WRB");
        add({"what", "who", "whom"}, "WP");
        add({"which", "whatever", "whichever"}, "WDT");
        add({"whose"}, "WP$");
        add({"not", "n't", "never", "also", "just", "still", "already", "again", "very", "too",
             "so", "now", "then", "here", "there", "only", "even", "ever", "really", "back", "yet",
             "soon", "always", "once", "twice", "ago", "almost", "quite", "maybe", "probably"},
            "RB");
        add({"is", "'s", "has", "does", "doesn't", "isn't", "hasn't", "says", "seems"}, "VBZ");
        add({"are", "am", "'re", "'m", "have", "do", "don't", "aren't", "haven't", "'ve"}, "VBP");
        add({"was", "were", "had", "did", "didn't", "wasn't", "weren't", "hadn't", "got", "said",
             "went", "came", "made", "told", "paid", "bought", "sent", "left"},
            "VBD");
        add({"been", "gone", "done", "given", "taken", "seen", "received", "arrived"}, "VBN");
        add({"being"}, "VBG");
        add({"be", "get", "make", "go", "take", "fix", "help", "see", "know", "let", "give"}, "VB");
        add({"lol", "haha", "hahaha", "lmao", "omg", "ugh", "hi", "hey", "hello", "oh", "wow",
             "yes", "yeah", "yep", "ok", "okay", "please", "pls", "plz", "thanks", "thx", "ty",
             "ha", "hmm", "um", "oops", "yay", "woo", "nope", "xx", "xxx", "rt"},
            "UH");
        add({"one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
             "eleven", "twelve", "twenty", "thirty", "hundred", "thousand", "million"},
            "CD");
        add({"there"}, "EX");
        return m;
    }();
    return table;
}

bool ends_with(std::string_view s, std::string_view suf) {
    return s.size() >= suf.size() && s.substr(s.size() - suf.size()) == suf;
}

std::string punct_tag(std::string_view s) {
    if (s == "$") return "$";
    if (s == "#") return "#";
    if (s == ",") return ",";
    if (s == "(" || s == "[" || s == "{") return "(";
    if (s == ")" || s == "]" || s == "}") return ")";
    if (s == "\"" || s == "''" || s == "\xE2\x80\x9D") return "''";
    if (s == "``" || s == "\xE2\x80\x9C") return "``";
    if (s.find_first_not_of("!?.") == std::string_view::npos) return ".";
    if (s.find_first_not_of(":;-") == std::string_view::npos) return ":";
    if (s == "'" || s == "\xE2\x80\x99") return "''";
    return "SYM";
}

bool has_alpha(std::string_view s) {
    return std::any_of(s.begin(), s.end(),
                       [](char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; });
}

bool has_digit(std::string_view s) {
    return std::any_of(s.begin(), s.end(),
                       [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; });
}

// Closed-class lexicon plus morphology; used when the model carries no weights.
std::string heuristic_tag(const Token& tok, std::size_t index, std::string_view prev_tag) {
    const std::string& w = tok.lower;
    if (const auto it = closed_class().find(w); it != closed_class().end()) {
        if (w == "that" && (prev_tag == "NN" || prev_tag == "NNS")) return "WDT";
        if (w == "her" && (prev_tag.starts_with("VB") || prev_tag == "IN")) return "PRP";
        return it->second;
    }
    if (!has_alpha(w)) {
        if (has_digit(w)) return "CD";
        return punct_tag(tok.surface);
    }
    if (has_digit(w) && !has_alpha(w.substr(0, 1))) return "CD";
    const bool after_aux = prev_tag == "VBZ" || prev_tag == "VBP" || prev_tag == "VBD" ||
                           prev_tag == "VBN" || prev_tag == "RB";
    if (prev_tag == "MD" || prev_tag == "TO") return "VB";
    if (w.size() > 4 && ends_with(w, "ing")) return "VBG";
    if (w.size() > 3 && ends_with(w, "ed")) return after_aux ? "VBN" : "VBD";
    if (w.size() > 3 && ends_with(w, "ly")) return "RB";
    if (w.size() > 4 && (ends_with(w, "ful") || ends_with(w, "ous") || ends_with(w, "ive") ||
                         ends_with(w, "less") || ends_with(w, "able") || ends_with(w, "ible") ||
                         ends_with(w, "ish"))) {
        return "JJ";
    }
    if (w.size() > 3 && (ends_with(w, "est"))) return "JJS";
    if (w.size() > 3 && ends_with(w, "er") && prev_tag == "RB") return "JJR";
    const bool capitalized = std::isupper(static_cast<unsigned char>(tok.surface[0])) != 0;
    const bool all_caps = std::none_of(tok.surface.begin(), tok.surface.end(), [](char c) {
        return std::islower(static_cast<unsigned char>(c)) != 0;
    });
    if (capitalized && !all_caps && index > 0) return "NNP";
    if (prev_tag == "PRP" && w.size() > 2) {
        return ends_with(w, "s") && !ends_with(w, "ss") ? "VBZ" : "VBP";
    }
    if (w.size() > 3 && ends_with(w, "s") && !ends_with(w, "ss") && !ends_with(w, "us")) {
        return "NNS";
    }
    return "NN";
}

// ---- perceptron features

std::string normalize_word(std::string_view lower) {
    if (!lower.empty() && std::all_of(lower.begin(), lower.end(), [](char c) {
            return std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == ',' ||
                   c == '/' || c == ':' || c == '%';
        }) && has_digit(lower)) {
        return "!DIGITS";
    }
    return std::string(lower);
}

std::string shape(std::string_view surface) {
    if (!has_alpha(surface)) return has_digit(surface) ? "num" : "punct";
    const bool first_upper = std::isupper(static_cast<unsigned char>(surface[0])) != 0;
    const bool any_lower = std::any_of(surface.begin(), surface.end(), [](char c) {
        return std::islower(static_cast<unsigned char>(c)) != 0;
    });
    if (!any_lower) return "caps";
    return first_upper ? "title" : "lower";
}

std::vector<std::string> context_features(const std::vector<std::string>& words,
                                          const std::vector<std::string>& surfaces,
                                          std::size_t i, std::string_view prev,
                                          std::string_view prev2) {
    const auto word_at = [&](std::ptrdiff_t k) -> std::string {
        if (k < 0) return "-START-";
        if (k >= static_cast<std::ptrdiff_t>(words.size())) return "-END-";
        return words[static_cast<std::size_t>(k)];
    };
    const auto idx = static_cast<std::ptrdiff_t>(i);
    const std::string& w = words[i];
    std::vector<std::string> f;
    f.reserve(20);
    f.emplace_back("bias");
    f.push_back("w=" + w);
    for (std::size_t n = 1; n <= 3 && n <= w.size(); ++n) {
        f.push_back("p" + std::to_string(n) + "=" + w.substr(0, n));
        f.push_back("s" + std::to_string(n) + "=" + w.substr(w.size() - n));
    }
    f.push_back("shape=" + shape(surfaces[i]));
    f.push_back("t-1=" + std::string(prev));
    f.push_back("t-2t-1=" + std::string(prev2) + "|" + std::string(prev));
    f.push_back("t-1w=" + std::string(prev) + "|" + w);
    f.push_back("w-1=" + word_at(idx - 1));
    f.push_back("w+1=" + word_at(idx + 1));
    f.push_back("w-2=" + word_at(idx - 2));
    f.push_back("w+2=" + word_at(idx + 2));
    const std::string next = word_at(idx + 1);
    f.push_back("s3+1=" + (next.size() > 3 ? next.substr(next.size() - 3) : next));
    return f;
}

class Perceptron {
public:
    explicit Perceptron(const std::set<std::string>& tags) : tags_(tags.begin(), tags.end()) {}

    std::string predict(const std::vector<std::string>& features,
                        const std::map<std::string, std::map<std::string, double>>& weights) const {
        std::map<std::string, double> scores;
        for (const auto& t : tags_) scores[t] = 0.0;
        for (const auto& f : features) {
            const auto it = weights.find(f);
            if (it == weights.end()) continue;
            for (const auto& [tag, w] : it->second) scores[tag] += w;
        }
        // highest score; ties go to the lexicographically smallest tag
        std::string best = tags_.front();
        double best_score = scores[best];
        for (const auto& [tag, s] : scores) {
            if (s > best_score) {
                best = tag;
                best_score = s;
            }
        }
        return best;
    }

    void update(const std::string& truth, const std::string& guess,
                const std::vector<std::string>& features) {
        ++instances_;
        if (truth == guess) return;
        for (const auto& f : features) {
            bump(f, truth, 1.0);
            bump(f, guess, -1.0);
        }
    }

    const std::map<std::string, std::map<std::string, double>>& current() const { return weights_; }

    std::map<std::string, std::map<std::string, double>> averaged() const {
        std::map<std::string, std::map<std::string, double>> out;
        for (const auto& [feat, by_tag] : weights_) {
            for (const auto& [tag, w] : by_tag) {
                const auto& acc = accum_.at(feat).at(tag);
                const double total = acc.total + (instances_ - acc.stamp) * w;
                const double avg = total / static_cast<double>(instances_);
                if (avg != 0.0) out[feat][tag] = avg;
            }
        }
        return out;
    }

private:
    struct Accum {
        double total = 0.0;
        long long stamp = 0;
    };

    void bump(const std::string& f, const std::string& tag, double delta) {
        double& w = weights_[f][tag];
        Accum& a = accum_[f][tag];
        a.total += (instances_ - a.stamp) * w;
        a.stamp = instances_;
        w += delta;
    }

    std::vector<std::string> tags_;
    std::map<std::string, std::map<std::string, double>> weights_;
    std::map<std::string, std::map<std::string, Accum>> accum_;
    long long instances_ = 0;
};

std::vector<std::string> tag_words(const std::vector<std::string>& surfaces,
                                   const TaggerModel& model) {
    std::vector<std::string> words;
    words.reserve(surfaces.size());
    for (const auto& s : surfaces) words.push_back(normalize_word(to_lower_ascii(s)));
    Perceptron p(model.tagset);
    std::vector<std::string> tags;
    std::string prev = "-START-";
    std::string prev2 = "-START2-";
    for (std::size_t i = 0; i < surfaces.size(); ++i) {
        Token tok;
        tok.surface = surfaces[i];
        tok.lower = to_lower_ascii(surfaces[i]);
        std::string tag = rule_tag(tok);
        if (tag.empty()) {
            tag = model.rule_only() ? heuristic_tag(tok, i, prev)
                                    : p.predict(context_features(words, surfaces, i, prev, prev2),
                                                model.weights);
        }
        tags.push_back(tag);
        prev2 = prev;
        prev = tag;
    }
    return tags;
}

}  // namespace

TokenSeq pos_tag(TokenSeq tokens, const TaggerModel& model) {
    if (!model.loaded()) {
        throw ConfigError("POS tagger model is not loaded (empty tagset)");
    }
    std::vector<std::string> surfaces;
    surfaces.reserve(tokens.size());
    for (const auto& t : tokens) surfaces.push_back(t.surface);
    const auto tags = tag_words(surfaces, model);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (!model.tagset.contains(tags[i])) {
            throw InvariantError("tagger produced tag outside its tagset: " + tags[i]);
        }
        tokens[i].pos = tags[i];
    }
    return tokens;
}

std::vector<TaggedSentence> read_tagged_sentences(std::istream& in) {
    std::vector<TaggedSentence> out;
    TaggedSentence current;
    std::size_t line_no = 0;
    const auto flush = [&] {
        if (!current.words.empty()) out.push_back(std::move(current));
        current = {};
    };
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) {
            flush();
            continue;
        }
        const auto fields = split(line, '\t');
        if (fields.size() != 2 || fields[0].empty()) {
            throw DataError("tagged corpus line " + std::to_string(line_no) +
                            ": expected token<TAB>tag");
        }
        const std::string tag = trim(fields[1]);
        if (!known_tags().contains(tag)) {
            throw DataError("tagged corpus line " + std::to_string(line_no) + ": unknown tag '" +
                            tag + "'");
        }
        current.words.push_back(fields[0]);
        current.tags.push_back(tag);
    }
    flush();
    return out;
}

std::vector<TaggedSentence> read_tagged_sentences(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open tagged corpus " + path.string());
    return read_tagged_sentences(in);
}

TaggerTrainResult train_pos_tagger(const std::vector<TaggedSentence>& data, int epochs,
                                   std::uint64_t seed, double heldout_fraction) {
    if (data.empty()) throw DataError("tagged training corpus is empty");
    if (epochs < 1) throw ConfigError("tagger training needs at least one epoch");
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);

    std::vector<std::size_t> heldout;
    if (heldout_fraction > 0.0 && data.size() >= 10) {
        rng.shuffle(order);
        const auto n_held = static_cast<std::size_t>(
            std::max(1.0, std::floor(heldout_fraction * static_cast<double>(data.size()))));
        heldout.assign(order.end() - static_cast<std::ptrdiff_t>(n_held), order.end());
        order.resize(order.size() - n_held);
        std::sort(order.begin(), order.end());
    }

    TaggerModel model;
    for (const auto& s : data) {
        if (s.words.size() != s.tags.size()) throw DataError("sentence with mismatched tag count");
        for (const auto& t : s.tags) {
            if (!known_tags().contains(t)) throw DataError("unknown tag '" + t + "'");
            model.tagset.insert(t);
        }
    }
    for (const char* t : {"USR", "URL", "HT", "UH"}) model.tagset.insert(t);

    Perceptron p(model.tagset);
    for (int epoch = 0; epoch < epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t idx : order) {
            const auto& s = data[idx];
            std::vector<std::string> words;
            for (const auto& w : s.words) words.push_back(normalize_word(to_lower_ascii(w)));
            std::string prev = "-START-";
            std::string prev2 = "-START2-";
            for (std::size_t i = 0; i < words.size(); ++i) {
                const auto feats = context_features(words, s.words, i, prev, prev2);
                const std::string guess = p.predict(feats, p.current());
                p.update(s.tags[i], guess, feats);
                prev2 = prev;
                prev = guess;
            }
        }
    }
    model.weights = p.averaged();

    TaggerTrainResult result;
    std::vector<TaggedSentence> eval;
    if (heldout.empty()) {
        eval = data;
    } else {
        for (std::size_t i : heldout) eval.push_back(data[i]);
    }
    result.heldout_sentences = heldout.size();
    result.heldout_accuracy = tagger_accuracy(model, eval);
    result.model = std::move(model);
    return result;
}

TaggerTrainResult train_pos_tagger(const std::filesystem::path& tagged_corpus, int epochs,
                                   std::uint64_t seed, double heldout_fraction) {
    return train_pos_tagger(read_tagged_sentences(tagged_corpus), epochs, seed, heldout_fraction);
}

double tagger_accuracy(const TaggerModel& model, const std::vector<TaggedSentence>& data) {
    std::size_t total = 0;
    std::size_t correct = 0;
    for (const auto& s : data) {
        const auto tags = tag_words(s.words, model);
        for (std::size_t i = 0; i < tags.size(); ++i) {
            ++total;
            if (tags[i] == s.tags[i]) ++correct;
        }
    }
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

void write_tagger(std::ostream& out, const TaggerModel& model) {
    out << "ppn-tagger v" << model.version << '\n';
    out << "tagset";
    for (const auto& t : model.tagset) out << '\t' << t;
    out << '\n';
    for (const auto& [feat, by_tag] : model.weights) {
        for (const auto& [tag, w] : by_tag) {
            out << feat << '\t' << tag << '\t' << format_double(w) << '\n';
        }
    }
}

void save_tagger(const std::filesystem::path& path, const TaggerModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    write_tagger(out, model);
}

TaggerModel read_tagger(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "ppn-tagger v1") {
        throw FormatError("not a ppn-tagger v1 model file");
    }
    TaggerModel model;
    if (!std::getline(in, line) || !line.starts_with("tagset")) {
        throw FormatError("tagger model missing tagset line");
    }
    auto tags = split(line, '\t');
    for (std::size_t i = 1; i < tags.size(); ++i) {
        if (!known_tags().contains(tags[i])) throw FormatError("unknown tag in model: " + tags[i]);
        model.tagset.insert(tags[i]);
    }
    std::size_t line_no = 2;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split(line, '\t');
        if (f.size() != 3) {
            throw FormatError("tagger model line " + std::to_string(line_no) + " is malformed");
        }
        if (!model.tagset.contains(f[1])) {
            throw FormatError("tagger model line " + std::to_string(line_no) +
                              ": tag outside tagset");
        }
        model.weights[f[0]][f[1]] = parse_double(f[2]);
    }
    return model;
}

TaggerModel load_tagger(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open tagger model " + path.string());
    return read_tagger(in);
}

}  // namespace complaints
