#include "complaints/lexicons.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "complaints/common.hpp"

namespace complaints {

std::size_t Lexicon::pattern_count() const {
    std::size_t n = 0;
    for (const auto& [c, p] : categories) n += p.size();
    return n;
}

std::string normalize_pattern(std::string_view raw) {
    // collapse internal whitespace so phrases are single-space separated
    std::string p;
    bool pending_space = false;
    for (char c : trim(raw)) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = true;
            continue;
        }
        if (pending_space && !p.empty()) p.push_back(' ');
        pending_space = false;
        p.push_back(c);
    }
    p = to_lower_ascii(p);
    if (p.empty()) throw FormatError("empty lexicon pattern");
    const auto star = p.find('*');
    if (star != std::string::npos && star != p.size() - 1) {
        throw FormatError("pattern '" + p + "' has an interior '*'");
    }
    if (p == "*" || (star != std::string::npos && p[p.size() - 2] == ' ')) {
        throw FormatError("pattern '" + p + "' has an empty prefix");
    }
    return p;
}

namespace {

void add_pattern(Lexicon& lex, const std::string& category, const std::string& pattern,
                 std::optional<double> score) {
    auto& list = lex.categories[category];
    if (std::find(list.begin(), list.end(), pattern) == list.end()) list.push_back(pattern);
    if (score) lex.scores[pattern] = *score;
}

// LIWC .dic: "%", id<TAB>name rows, "%", word<TAB>id<TAB>id... rows.
Lexicon read_liwc_dic(std::istream& in, std::string_view name) {
    Lexicon lex;
    lex.name = std::string(name);
    std::map<std::string, std::string> id_to_cat;
    std::string line;
    std::size_t line_no = 1;
    bool in_header = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        if (trim(line) == "%") {
            in_header = false;
            continue;
        }
        std::vector<std::string> fields;
        std::istringstream ls(line);
        for (std::string f; ls >> f;) fields.push_back(f);
        if (in_header) {
            if (fields.size() < 2) {
                throw FormatError("LIWC header line " + std::to_string(line_no) + " is malformed");
            }
            id_to_cat[fields[0]] = fields[1];
            lex.categories[fields[1]];
            continue;
        }
        // the word may itself contain spaces; trailing fields are numeric ids
        std::size_t first_id = fields.size();
        while (first_id > 1 && std::all_of(fields[first_id - 1].begin(), fields[first_id - 1].end(),
                                           [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
            --first_id;
        }
        if (first_id == fields.size()) {
            throw FormatError("LIWC entry line " + std::to_string(line_no) + " has no category ids");
        }
        std::string word;
        for (std::size_t i = 0; i < first_id; ++i) {
            if (i) word.push_back(' ');
            word += fields[i];
        }
        const std::string pattern = normalize_pattern(word);
        for (std::size_t i = first_id; i < fields.size(); ++i) {
            const auto it = id_to_cat.find(fields[i]);
            if (it == id_to_cat.end()) {
                throw FormatError("LIWC entry line " + std::to_string(line_no) +
                                  " uses undeclared category id " + fields[i]);
            }
            add_pattern(lex, it->second, pattern, std::nullopt);
        }
    }
    return lex;
}

}  // namespace

Lexicon read_lexicon(std::istream& in, std::string_view fallback_name) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!trim(line).empty()) break;
    }
    if (trim(line).empty()) throw FormatError("lexicon file is empty");
    if (trim(line) == "%") return read_liwc_dic(in, fallback_name);
    if (line.front() != '%') {
        throw FormatError("lexicon must start with a '% <name>' header line");
    }
    Lexicon lex;
    lex.name = trim(std::string_view(line).substr(1));
    if (lex.name.empty()) lex.name = std::string(fallback_name);
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const auto fields = split(line, '\t');
        if (fields.size() < 2 || fields.size() > 3) {
            throw FormatError("lexicon line " + std::to_string(line_no) +
                              ": expected category<TAB>patterns[<TAB>score]");
        }
        const std::string category = trim(fields[0]);
        if (category.empty()) {
            throw FormatError("lexicon line " + std::to_string(line_no) + ": empty category");
        }
        std::optional<double> score;
        if (fields.size() == 3) score = parse_double(fields[2]);
        try {
            for (const auto& raw : split(fields[1], ',')) {
                add_pattern(lex, category, normalize_pattern(raw), score);
            }
        } catch (const FormatError& e) {
            throw FormatError("lexicon line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return lex;
}

Lexicon load_lexicon(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open lexicon " + path.string());
    return read_lexicon(in, path.stem().string());
}

Lexicon parse_lexicon(std::string_view text, std::string_view fallback_name) {
    std::istringstream in{std::string(text)};
    return read_lexicon(in, fallback_name);
}

void write_lexicon(std::ostream& out, const Lexicon& lex) {
    out << "% " << lex.name << '\n';
    for (const auto& [cat, patterns] : lex.categories) {
        // patterns sharing a score go on one line
        std::map<std::optional<double>, std::vector<std::string>> by_score;
        for (const auto& p : patterns) {
            const auto it = lex.scores.find(p);
            by_score[it == lex.scores.end() ? std::nullopt : std::optional<double>(it->second)]
                .push_back(p);
        }
        for (const auto& [score, ps] : by_score) {
            out << cat << '\t';
            for (std::size_t i = 0; i < ps.size(); ++i) {
                if (i) out << ',';
                out << ps[i];
            }
            if (score) out << '\t' << format_double(*score);
            out << '\n';
        }
    }
}

// ---------------------------------------------------------------------------
// Matching

struct LexiconMatcher::Node {
    std::map<char, std::unique_ptr<Node>> children;
    std::vector<int> literal;
    std::vector<int> wildcard;
    std::optional<double> literal_score;
    std::optional<double> wildcard_score;

    Node* child(char c) const {
        const auto it = children.find(c);
        return it == children.end() ? nullptr : it->second.get();
    }
};

LexiconMatcher::LexiconMatcher(const Lexicon& lex) : lex_(lex), root_(std::make_unique<Node>()) {
    for (const auto& [cat, patterns] : lex_.categories) {
        const int id = static_cast<int>(names_.size());
        names_.push_back(cat);
        for (const auto& p : patterns) {
            const bool wild = p.back() == '*';
            const std::string_view body = wild ? std::string_view(p).substr(0, p.size() - 1) : p;
            Node* node = root_.get();
            for (char c : body) {
                auto& next = node->children[c];
                if (!next) next = std::make_unique<Node>();
                node = next.get();
            }
            auto& ids = wild ? node->wildcard : node->literal;
            if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
            if (const auto it = lex_.scores.find(p); it != lex_.scores.end()) {
                (wild ? node->wildcard_score : node->literal_score) = it->second;
            }
        }
    }
}

LexiconMatcher::~LexiconMatcher() = default;
LexiconMatcher::LexiconMatcher(LexiconMatcher&&) noexcept = default;
LexiconMatcher& LexiconMatcher::operator=(LexiconMatcher&&) noexcept = default;

std::vector<std::vector<int>> LexiconMatcher::hits(const std::vector<std::string>& lowered) const {
    std::vector<std::vector<int>> out(lowered.size());
    for (std::size_t i = 0; i < lowered.size(); ++i) {
        std::set<int> cats;
        const Node* node = root_.get();
        for (std::size_t t = i; t < lowered.size() && node; ++t) {
            if (t > i) {
                node = node->child(' ');
                if (!node) break;
            }
            for (char c : lowered[t]) {
                node = node->child(c);
                if (!node) break;
                cats.insert(node->wildcard.begin(), node->wildcard.end());
            }
            if (!node) break;
            cats.insert(node->literal.begin(), node->literal.end());
        }
        out[i].assign(cats.begin(), cats.end());
    }
    return out;
}

std::vector<int> LexiconMatcher::word_categories(std::string_view lowered) const {
    std::set<int> cats;
    const Node* node = root_.get();
    for (char c : lowered) {
        node = node->child(c);
        if (!node) break;
        cats.insert(node->wildcard.begin(), node->wildcard.end());
    }
    if (node) cats.insert(node->literal.begin(), node->literal.end());
    return {cats.begin(), cats.end()};
}

std::optional<double> LexiconMatcher::word_score(std::string_view lowered) const {
    std::optional<double> wildcard;
    const Node* node = root_.get();
    for (char c : lowered) {
        node = node->child(c);
        if (!node) return wildcard;
        if (node->wildcard_score) wildcard = node->wildcard_score;
    }
    if (node->literal_score) return node->literal_score;
    return wildcard;
}

CategoryProfile LexiconMatcher::profile(const TokenSeq& tokens) const {
    std::vector<std::string> lowered;
    lowered.reserve(tokens.size());
    for (const auto& t : tokens) lowered.push_back(t.lower);
    CategoryProfile prof;
    prof.token_count = tokens.size();
    for (const auto& n : names_) prof.categories[n];
    for (const auto& cats : hits(lowered)) {
        for (int c : cats) ++prof.categories[names_[static_cast<std::size_t>(c)]].count;
    }
    if (prof.token_count > 0) {
        for (auto& [name, cc] : prof.categories) {
            cc.fraction = static_cast<double>(cc.count) / static_cast<double>(prof.token_count);
        }
    }
    return prof;
}

CategoryProfile match_categories(const TokenSeq& tokens, const Lexicon& lexicon) {
    return LexiconMatcher(lexicon).profile(tokens);
}

// ---------------------------------------------------------------------------
// Bundled dictionaries

namespace {

constexpr std::string_view kMarkerLexicon = R"(% complaint-markers
play_down	i wondered if,i wonder if,i was wondering if,i was wondering,i wondered whether,i just wanted to,i just wondered,i was hoping
understaters	one little,a little,a little bit,a bit,a tad,slightly,kind of,sort of,kinda,sorta,a touch
disarmers	but,however,although,though,i know,i understand,i realize,i realise,i appreciate,no offense,no offence
downtoners	just,simply,possibly,perhaps,maybe,rather,somehow,merely,only
hedges	somewhat,probably,apparently,seemingly,i think,i guess,i suppose,i believe,i feel,more or less,in a way,sort of,kind of
apologies	sorry,apologies,apologize*,apologise*,my bad,excuse me,pardon,forgive me
greetings	hi,hello,hey,good morning,good afternoon,good evening,dear,greetings,hiya,howdy,morning
direct_questions	what,why,who,how,where,when,which
direct_start	so,then,and,but,or
indicative_modals	can you,will you,can u,will u,can't you,won't you
subjunctive_modals	could you,would you,could u,would u,couldn't you,wouldn't you
politeness_markers	please,pls,plz,kindly,thank you,thanks,thank*,appreciate*
politeness_maxims	i must say,i have to say,i must admit,i have to admit,to be honest,honestly,with all due respect,if i may
pron_first	i,me,my,mine,myself,we,us,our,ours,ourselves,i'm,i've,i'll,i'd,im,ive
pron_second	you,your,yours,yourself,yourselves,u,ur,you're,you've,you'll,you'd,ya,y'all
pron_third	he,him,his,himself,she,her,hers,herself,it,its,itself,they,them,their,theirs,themselves,he's,she's,it's,they're
pron_demonstrative	this,that,these,those
pron_indefinite	everybody,everyone,everything,somebody,someone,something,anybody,anyone,anything,nobody,none,nothing,no one,each,either,neither,all,both,few,many,several,some,any
)";

constexpr std::string_view kValenceLexicon = R"(% valence-basic
valence	awesome,amazing,excellent,fantastic,perfect,wonderful,brilliant,outstanding,superb	0.75
valence	love,loved,loving,lovely,beautiful,best	0.65
valence	great,happy,glad,pleased,delighted,enjoy,enjoyed,impressed,thrilled	0.55
valence	good,nice,cool,fun,helpful,win,proud,sweet,yay,recommend,congrats,congratulations	0.45
valence	thanks,thank,thx,lol,like,easy,fine,fixed,resolved,quick	0.3
valence	issue,issues,waiting,wait,late,slow,problem,problems,confused	-0.3
valence	error,lost,missing,cancelled,canceled,delayed,broken,damaged,wrong,fail,failed,fails	-0.45
valence	bad,poor,sad,annoyed,annoying,upset,unhappy,disappointed,disappointing,frustrated,frustrating,sucks,suck,crap,stupid,rude,useless,ridiculous,shame	-0.6
valence	terrible,awful,horrible,worst,hate,hated,disgusting,unacceptable,pathetic,nightmare,scam,worse,appalling,furious	-0.8
)";

}  // namespace

const Lexicon& bundled_marker_lexicon() {
    static const Lexicon lex = parse_lexicon(kMarkerLexicon);
    return lex;
}

const Lexicon& bundled_valence_lexicon() {
    static const Lexicon lex = parse_lexicon(kValenceLexicon);
    return lex;
}

}  // namespace complaints
