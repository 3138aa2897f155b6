#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "complaints/features.hpp"
#include "support/synthetic.hpp"

using namespace complaints;
using std::chrono::day;
using std::chrono::month;
using std::chrono::year;
using std::chrono::year_month_day;

namespace {

using Units = std::vector<std::vector<std::string>>;

Document doc(const std::string& text, std::optional<year_month_day> date = std::nullopt) {
    Document d;
    d.id = "x";
    d.raw_text = text;
    d.clean_text = anonymize(text);
    d.post_date = date;
    d.label = Label::complaint;
    prepare_document(d, TaggerModel::rule_based());
    return d;
}

TokenSeq tagged(const std::vector<std::pair<std::string, std::string>>& wt) {
    TokenSeq t;
    for (const auto& [w, tag] : wt) {
        Token tok;
        tok.surface = w;
        tok.lower = to_lower_ascii(w);
        tok.pos = tag;
        t.push_back(tok);
    }
    return t;
}

double sum_prefix(const FeatureVector& v, const std::string& prefix) {
    double s = 0.0;
    for (const auto& [k, x] : v.entries) {
        if (k.rfind(prefix, 0) == 0) s += x;
    }
    return s;
}

const year_month_day kDate{year{2018}, month{5}, day{20}};

}  // namespace

TEST_CASE("vocabulary keeps words seen in two documents") {
    const auto v = build_vocab(Units{{"a", "b"}, {"a", "c"}});
    CHECK(v.words == std::vector<std::string>{"a"});
    CHECK(v.idf.at("a") == 1.0);
    CHECK_FALSE(v.contains("b"));
    CHECK_THROWS_AS(build_vocab(Units{}), DataError);

    const auto w = build_vocab(Units{{"x", "y", "y"}, {"y", "x"}, {"y", "z"}, {"z"}});
    CHECK(w.words == std::vector<std::string>{"y", "x", "z"});
    CHECK(w.df.at("y") == 3);
    CHECK(w.idf.at("x") == doctest::Approx(std::log(4.0 / 2.0) + 1.0));
}

TEST_CASE("tf-idf examples") {
    Vocab v;
    v.words = {"a", "b"};
    v.idf = {{"a", 1.0}, {"b", 2.0}};
    v.n_docs = 4;
    auto f = tfidf_vector({"a"}, v, "bow");
    CHECK(f.entries.size() == 1);
    CHECK(f.get("bow:a") == 1.0);
    CHECK(tfidf_vector({"zzz"}, v, "bow").empty());
    f = tfidf_vector({"a", "a", "b"}, v, "bow");
    CHECK(f.get("bow:a") == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(f.get("bow:b") == doctest::Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("POS n-gram examples") {
    auto f = pos_ngram_features(tagged({{"my", "PRP$"}, {"phone", "NN"}}));
    CHECK(f.get("pos1:PRP$") == 0.5);
    CHECK(f.get("pos1:NN") == 0.5);
    CHECK(f.get("pos2:PRP$_NN") == 1.0);
    f = pos_ngram_features(tagged({{"hi", "UH"}}));
    CHECK(sum_prefix(f, "pos2:") == 0.0);
    f = pos_ngram_features(tagged({{"is", "VBZ"}, {"broken", "VBN"}}));
    CHECK(f.get("pos2:VBZ_VBN") == 1.0);
    CHECK_THROWS_AS(pos_ngram_features(tokenize("no tags")), ConfigError);
}

TEST_CASE("POS-augmented unigrams") {
    const auto t = tagged({{"I", "PRP"}, {"bought", "VBN"}});
    CHECK(bowpos_units(t) == std::vector<std::string>{"i_PRP", "bought_VBN"});
    const auto v = build_vocab(Units{bowpos_units(t), bowpos_units(t)});
    const auto f = pos_augmented_unigrams(t, v);
    CHECK(f.get("bowpos:bought_VBN") > 0.0);
    CHECK(f == pos_augmented_unigrams(t, v));
    CHECK_THROWS_AS(bowpos_units(tokenize("untagged words")), ConfigError);
}

TEST_CASE("sentiment examples") {
    const LexiconMatcher mpqa(parse_lexicon("% mpqa\npositive\tgood\nnegative\tbad\n"));
    const LexiconMatcher valence(parse_lexicon("% v\nvalence\tgood\t0.5\n"));
    SentimentLexica lx;
    lx.mpqa = &mpqa;
    auto f = sentiment_scores(tokenize("good bad bad the"), lx);
    CHECK(f.get("sent:mpqa_pos") == 0.25);
    CHECK(f.get("sent:mpqa_neg") == 0.5);
    CHECK(sentiment_scores(TokenSeq{}, lx).empty());

    lx.valence = &valence;
    CHECK(rule_compound(tokenize("not good"), valence) < 0.0);
    CHECK(rule_compound(tokenize("good"), valence) > 0.0);
    CHECK(rule_compound(tokenize("GOOD"), valence) > rule_compound(tokenize("good"), valence));
    CHECK(rule_compound(tokenize("good !!!"), valence) > rule_compound(tokenize("good"), valence));
    CHECK(rule_compound(tokenize("nothing here"), valence) == 0.0);

    SentimentLexica none;
    CHECK_THROWS_AS(sentiment_scores(tokenize("x"), none), ConfigError);
}

TEST_CASE("NRC proportions with the neutral share") {
    const LexiconMatcher nrc(parse_lexicon("% nrc\npositive\tlove\nnegative\thate\nanger\thate\njoy\tlove\n"));
    SentimentLexica lx;
    lx.nrc = &nrc;
    const auto f = sentiment_scores(tokenize("love hate the cat"), lx);
    CHECK(f.get("sent:nrc_pos") == 0.25);
    CHECK(f.get("sent:nrc_neg") == 0.25);
    CHECK(f.get("sent:nrc_anger") == 0.25);
    CHECK(f.get("sent:nrc_neutral") == 0.5);
}

TEST_CASE("rule compound stays in [-1, 1]") {
    const LexiconMatcher valence(bundled_valence_lexicon());
    Rng rng(9);
    const std::vector<std::string> w = {"GREAT", "awful", "not", "very", "!!!", "never", "love", "hate", "good", "x"};
    for (int t = 0; t < 300; ++t) {
        std::string s;
        const auto len = rng.below(10);
        for (std::size_t i = 0; i < len; ++i) s += w[rng.below(w.size())] + " ";
        const double c = rule_compound(tokenize(s), valence);
        CHECK(c >= -1.0);
        CHECK(c <= 1.0);
    }
}

TEST_CASE("complaint marker examples") {
    const LexiconMatcher markers(bundled_marker_lexicon());
    auto m = complaint_markers(doc("WHY IS THIS NOT WORKING???"), markers);
    CHECK(m.caps_word_frac == 1.0);
    CHECK(m.question_runs == 1);
    CHECK(m.exclamation_runs == 0);

    m = complaint_markers(doc("could you fix this please"), markers);
    CHECK(m.request_flag == 1);
    CHECK(m.marker_counts.at("politeness_markers") >= 1);

    m = complaint_markers(doc("I ordered a week ago", kDate), markers);
    REQUIRE(m.temporal.has_value());
    REQUIRE(m.temporal->size() == 1);
    CHECK(m.temporal->front().days == 7);
    CHECK(m.temporal->front().bucket == TimeBucket::week);

    m = complaint_markers(doc("sooooo slow"), markers);
    CHECK(m.elongated == 1);
    CHECK(m.request_flag == 0);
}

TEST_CASE("temporal features are absent without a post date") {
    const LexiconMatcher markers(bundled_marker_lexicon());
    const auto m = complaint_markers(doc("I ordered a week ago"), markers);
    CHECK_FALSE(m.temporal.has_value());
    const auto f = markers_to_features(m);
    for (const auto& [k, v] : f.entries) CHECK(k.rfind("cmp:time_", 0) != 0);
    const auto g = complaint_marker_features(doc("I ordered a week ago", kDate), markers);
    CHECK(g.get("cmp:time_known") == 1.0);
    CHECK(g.get("cmp:time_count") == 1.0);
    CHECK(g.get("cmp:time_week") == 1.0);
}

TEST_CASE("temporal recognizer rule table") {
    const auto one = [](const std::string& s) {
        const auto e = find_temporal_expressions(s, kDate);
        REQUIRE(e.size() == 1);
        return e.front();
    };
    CHECK(one("it broke yesterday").days == 1);
    CHECK(one("waiting for 3 days now").days == 3);
    CHECK(one("ordered 2 months ago").bucket == TimeBucket::year);
    CHECK(one("ordered 2 weeks ago").bucket == TimeBucket::month);
    CHECK(one("since last week").days == 7);
    CHECK(one("shipped on 2018-05-01").days == 19);
    CHECK(one("shipped on 5/1/2018").days == 19);
    CHECK(one("coming tomorrow").days == -1);
    CHECK(find_temporal_expressions("nothing temporal", kDate).empty());
    CHECK(bucket_for_days(0) == TimeBucket::day);
    CHECK(bucket_for_days(1) == TimeBucket::day);
    CHECK(bucket_for_days(7) == TimeBucket::week);
    CHECK(bucket_for_days(31) == TimeBucket::month);
    CHECK(bucket_for_days(32) == TimeBucket::year);
}

TEST_CASE("unit-sum normalization examples") {
    FeatureVector v;
    v.set("a", 2);
    v.set("b", 2);
    auto n = normalize_unit_sum(v);
    CHECK(n.get("a") == 0.5);
    CHECK(n.get("b") == 0.5);
    CHECK(normalize_unit_sum(FeatureVector{}).empty());
    FeatureVector one;
    one.set("a", 3);
    CHECK(normalize_unit_sum(one).get("a") == 1.0);

    FeatureVector fam;
    fam.set("x:a", 1);
    fam.set("x:b", 3);
    fam.set("y:c", 5);
    n = normalize_unit_sum_per_family(fam);
    CHECK(n.get("x:a") == 0.25);
    CHECK(n.get("y:c") == 1.0);
}

TEST_CASE("EasyAdapt examples") {
    FeatureVector v;
    v.set("f", 3.0);
    const std::vector<std::string> doms = {"A", "B"};
    const auto a = easyadapt(v, "A", doms);
    CHECK(a.entries.size() == 2);
    CHECK(a.get("gen:f") == 3.0);
    CHECK(a.get("domA:f") == 3.0);
    CHECK_THROWS_AS(easyadapt(v, "C", doms), ConfigError);

    const auto base = FeatureSchema::from_names({"p", "q", "r"});
    CHECK(easyadapt_schema(base, {"A", "B", "C"}).size() == 4 * 3);

    const auto b = easyadapt(v, "B", doms);
    CHECK(a.get("gen:f") == b.get("gen:f"));
    CHECK(b.get("domA:f") == 0.0);
    CHECK(dot(a, b) == dot(v, v));  // shared block only
}

TEST_CASE("EasyAdapt preserves inner products in the general block") {
    Rng rng(10);
    const std::vector<std::string> doms = {"a", "b", "c"};
    for (int t = 0; t < 200; ++t) {
        FeatureVector u;
        FeatureVector v;
        for (int k = 0; k < 6; ++k) {
            if (rng.below(2)) u.set("f" + std::to_string(rng.below(8)), rng.normal());
            if (rng.below(2)) v.set("f" + std::to_string(rng.below(8)), rng.normal());
        }
        const auto du = doms[rng.below(3)];
        const auto dv = doms[rng.below(3)];
        const auto eu = easyadapt(u, du, doms);
        const auto ev = easyadapt(v, dv, doms);
        FeatureVector gu;
        FeatureVector gv;
        for (const auto& [k, x] : eu.entries) {
            if (k.rfind("gen:", 0) == 0) gu.set(k, x);
        }
        for (const auto& [k, x] : ev.entries) {
            if (k.rfind("gen:", 0) == 0) gv.set(k, x);
        }
        CHECK(dot(gu, gv) == doctest::Approx(dot(u, v)).epsilon(1e-12));
        CHECK(dot(eu, ev) == doctest::Approx(dot(u, v) * (du == dv ? 2.0 : 1.0)).epsilon(1e-12));
    }
}

TEST_CASE("family selection parsing") {
    CHECK(parse_family_list("bow,pos") == std::set<std::string>{"bow", "pos"});
    CHECK_THROWS_AS(parse_family_list(""), ConfigError);
    CHECK_THROWS_AS(parse_family_list("bow,nope"), ConfigError);
    const auto all = feature_config_from("all");
    CHECK(all.lenient);
    CHECK(all.families.contains("liwc"));
    CHECK_FALSE(all.families.contains("bowpos"));
    FeatureConfig empty;
    CHECK_THROWS_AS(resolve_families(empty, FeatureResources::defaults()), ConfigError);
}

TEST_CASE("a selected family without its resource is a configuration error") {
    const auto res = FeatureResources::defaults();
    CHECK_THROWS_AS(resolve_families(feature_config_from("bow,liwc"), res), ConfigError);
    const auto active = resolve_families(feature_config_from("all"), res);
    CHECK(std::find(active.begin(), active.end(), "liwc") == active.end());
    CHECK(std::find(active.begin(), active.end(), "bow") != active.end());
    CHECK(std::find(active.begin(), active.end(), "cmp") != active.end());
}

TEST_CASE("pipeline with bow alone equals the tf-idf extractor") {
    auto c = synth::make_corpus();
    prepare_corpus(c, TaggerModel::rule_based());
    std::vector<const Document*> docs;
    for (const auto& d : c.documents) docs.push_back(&d);
    const auto p = FeaturePipeline::fit(docs, feature_config_from("bow"), FeatureResources::defaults());
    for (const auto* d : docs) {
        CHECK(p.transform(*d).entries == bow_tfidf(*d, p.vocab()).entries);
    }
}

TEST_CASE("pipeline properties over every family") {
    synth::Options o;
    o.n = 150;
    auto c = synth::make_corpus(o);
    prepare_corpus(c, TaggerModel::rule_based());
    auto res = FeatureResources::defaults();
    res.liwc = std::make_shared<const LexiconMatcher>(parse_lexicon("% liwc\nnegate\tnot,no,never\nposemo\tlov*,great,good\n"));
    res.mpqa = std::make_shared<const LexiconMatcher>(parse_lexicon("% mpqa\npositive\tgood,great,love\nnegative\tbroken,error\n"));
    res.nrc = std::make_shared<const LexiconMatcher>(parse_lexicon("% nrc\npositive\tgood\nnegative\tbroken\nanger\tbroken\n"));
    auto cm = std::make_shared<ClusterMap>();
    cm->k = 3;
    cm->assignment = {{"not", 0}, {"still", 0}, {"love", 1}, {"great", 1}, {"the", 2}};
    res.clusters = cm;

    std::vector<const Document*> docs;
    for (const auto& d : c.documents) docs.push_back(&d);
    const auto cfg = feature_config_from("bow,bowpos,pos,liwc,clusters,sent,cmp");
    const auto p = FeaturePipeline::fit(docs, cfg, res);
    CHECK(p.active_families().size() == 7);
    const std::set<std::string> prefixes = {"bow", "bowpos", "pos1", "pos2", "liwc", "cl", "sent", "cmp"};
    for (const auto* d : docs) {
        const auto base = p.base_features(*d);
        const auto again = p.base_features(*d);
        CHECK(base == again);
        double l2 = 0.0;
        for (const auto& [k, v] : base.entries) {
            CHECK(v != 0.0);
            CHECK(prefixes.contains(k.substr(0, k.find(':'))));
            if (k.rfind("bow:", 0) == 0) l2 += v * v;
        }
        CHECK((std::abs(l2 - 1.0) < 1e-9 || l2 == 0.0));
        const double p1 = sum_prefix(base, "pos1:");
        const double p2 = sum_prefix(base, "pos2:");
        CHECK((std::abs(p1 - 1.0) < 1e-9 || p1 == 0.0));
        CHECK((std::abs(p2 - 1.0) < 1e-9 || p2 == 0.0));
        for (const char* frac : {"cmp:caps_frac", "cmp:init_caps_frac", "cmp:caps_letter_frac", "cmp:pron_first"}) {
            CHECK(base.get(frac) >= 0.0);
            CHECK(base.get(frac) <= 1.0);
        }
        const double buckets = base.get("cmp:time_day") + base.get("cmp:time_week") + base.get("cmp:time_month") +
                               base.get("cmp:time_year");
        CHECK(buckets <= base.get("cmp:time_count") + 1e-12);
        const auto t = p.transform(*d);
        CHECK(t.schema_id == p.schema_id());
        for (const auto& [k, v] : t.entries) CHECK(std::abs(v) <= 1.0 + 1e-12);
    }
}

TEST_CASE("leakage check names held-out documents") {
    auto c = synth::make_corpus();
    prepare_corpus(c, TaggerModel::rule_based());
    std::vector<const Document*> train(c.documents.size() - 10);
    for (std::size_t i = 0; i < train.size(); ++i) train[i] = &c.documents[i];
    const auto p = FeaturePipeline::fit(train, feature_config_from("bow,pos"), FeatureResources::defaults());
    CHECK_NOTHROW(p.check_no_leakage({c.documents.back().id}));
    CHECK_THROWS_AS(p.check_no_leakage({c.documents.front().id}), LeakageError);
    std::vector<const Document*> dup = {&c.documents[0], &c.documents[0]};
    CHECK_THROWS_AS(FeaturePipeline::fit(dup, feature_config_from("bow"), FeatureResources::defaults()), IntegrityError);
}

TEST_CASE("feature matrix and schema exports") {
    FeatureVector a;
    a.set("bow:x", 0.5);
    a.set("cmp:request", 1.0);
    FeatureVector b;
    b.set("bow:y", 0.25);
    std::ostringstream out;
    write_feature_matrix(out, {"d1", "d2"}, {a, b});
    CHECK(out.str() == "d1\tbow:x=0.5\tcmp:request=1\nd2\tbow:y=0.25\n");
    const auto s = FeatureSchema::from_vectors({a, b});
    CHECK(s.names == std::vector<std::string>{"bow:x", "bow:y", "cmp:request"});
    std::ostringstream man;
    write_schema_manifest(man, s);
    CHECK(man.str() == "# schema " + s.id + "\nbow:x\nbow:y\ncmp:request\n");
    CHECK_THROWS_AS(FeatureSchema::from_names({"a", "a"}), SchemaError);
}
