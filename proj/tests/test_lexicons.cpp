#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "complaints/common.hpp"
#include "complaints/lexicons.hpp"
#include "complaints/textproc.hpp"

using namespace complaints;

namespace {

TokenSeq toks(const std::string& s) { return tokenize(s); }

}  // namespace

TEST_CASE("lexicon file with one category of three patterns") {
    const auto lex = parse_lexicon("% negations\nNEGATE\tnot, No ,can't\n");
    CHECK(lex.name == "negations");
    REQUIRE(lex.categories.size() == 1);
    CHECK(lex.categories.at("NEGATE") == std::vector<std::string>{"not", "no", "can't"});
}

TEST_CASE("prefix patterns and rejections") {
    const auto lex = parse_lexicon("% x\nneg\tnegat*\n");
    CHECK(lex.categories.at("neg") == std::vector<std::string>{"negat*"});
    CHECK_THROWS_AS(parse_lexicon("% x\nneg\tne*ate\n"), FormatError);
    CHECK_THROWS_AS(parse_lexicon("% x\nneg\t*\n"), FormatError);
    CHECK_THROWS_AS(parse_lexicon("neg\tnot\n"), FormatError);
    CHECK_THROWS_AS(parse_lexicon(""), FormatError);
}

TEST_CASE("duplicates collapse and lines may repeat a category") {
    const auto lex = parse_lexicon("% x\na\tfoo,FOO\na\tbar,foo\n");
    CHECK(lex.categories.at("a") == std::vector<std::string>{"foo", "bar"});
}

TEST_CASE("scored lexicon variant") {
    const auto lex = parse_lexicon("% v\nvalence\tgood\t0.5\nvalence\tawful\t-0.75\n");
    CHECK(lex.scores.at("good") == 0.5);
    LexiconMatcher m(lex);
    CHECK(m.word_score("awful") == -0.75);
    CHECK_FALSE(m.word_score("meh").has_value());
}

TEST_CASE("LIWC dic format is accepted") {
    const auto lex = parse_lexicon("%\n1\tnegate\n2\tposemo\n%\nnot\t1\nlov*\t2\nno\t1\n");
    CHECK(lex.categories.at("negate") == std::vector<std::string>{"not", "no"});
    CHECK(lex.categories.at("posemo") == std::vector<std::string>{"lov*"});
}

TEST_CASE("write then read is the identity") {
    const auto lex = parse_lexicon("% x\nb\tzeta,alpha beta,pre*\na\tone\t0.25\n");
    std::stringstream buf;
    write_lexicon(buf, lex);
    const auto back = read_lexicon(buf);
    CHECK(back.name == lex.name);
    CHECK(back.categories == lex.categories);
    CHECK(back.scores == lex.scores);
}

TEST_CASE("match examples") {
    const auto neg = parse_lexicon("% n\nNEGATE\tnot\n");
    const auto p = match_categories(toks("not working"), neg);
    CHECK(p.categories.at("NEGATE").count == 1);
    CHECK(p.categories.at("NEGATE").fraction == 0.5);

    const auto e = match_categories(TokenSeq{}, neg);
    CHECK(e.categories.at("NEGATE").count == 0);
    CHECK(e.categories.at("NEGATE").fraction == 0.0);

    const auto w = parse_lexicon("% w\nneg\tnegat*\n");
    CHECK(match_categories(toks("negative"), w).categories.at("neg").count == 1);
    CHECK(match_categories(toks("NEGATIVE"), w).categories.at("neg").count == 1);
    CHECK(match_categories(toks("nega"), w).categories.at("neg").count == 0);
}

TEST_CASE("literal and wildcard collisions count once per category") {
    const auto lex = parse_lexicon("% c\nfeel\tlove,lov*,lo*\nother\tlove\n");
    const auto p = match_categories(toks("love lovely lo"), lex);
    CHECK(p.categories.at("feel").count == 3);
    CHECK(p.categories.at("other").count == 1);
}

TEST_CASE("fraction times token count equals count") {
    const auto lex = parse_lexicon("% c\na\tthe,a*\nb\tis,it\nc\tzz*\n");
    Rng rng(2);
    const std::vector<std::string> words = {"the", "apple", "is", "IT", "zzz", "x", "ab", "?"};
    for (int t = 0; t < 200; ++t) {
        std::string s;
        const auto len = rng.below(12);
        for (std::size_t i = 0; i < len; ++i) s += words[rng.below(words.size())] + " ";
        const auto tk = toks(s);
        const auto p = match_categories(tk, lex);
        CHECK(p.token_count == tk.size());
        for (const auto& [name, cc] : p.categories) {
            CHECK(cc.fraction >= 0.0);
            CHECK(cc.fraction <= 1.0);
            CHECK(cc.fraction * static_cast<double>(p.token_count) == doctest::Approx(static_cast<double>(cc.count)));
            if (p.token_count == 0) CHECK(cc.fraction == 0.0);
        }
        CHECK(match_categories(tk, lex).categories.size() == 3);
    }
}

TEST_CASE("bundled lexica carry the marker categories") {
    const auto& m = bundled_marker_lexicon();
    for (const char* c : {"hedges", "apologies", "greetings", "politeness_markers", "downtoners", "understaters",
                          "disarmers", "play_down", "direct_start", "indicative_modals", "subjunctive_modals",
                          "politeness_maxims", "pron_first", "pron_second", "pron_third"}) {
        CHECK_MESSAGE(m.has_category(c), c);
    }
    CHECK_FALSE(bundled_valence_lexicon().scores.empty());
}
