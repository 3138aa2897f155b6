#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "complaints/corpus.hpp"
#include "support/synthetic.hpp"

using namespace complaints;

namespace {

Corpus parse(const std::string& text) {
    std::istringstream in(text);
    return read_corpus(in);
}

Corpus labeled(std::size_t pos, std::size_t neg) {
    Corpus c;
    for (std::size_t i = 0; i < pos + neg; ++i) {
        Document d;
        d.id = "d" + std::to_string(i);
        d.raw_text = d.clean_text = "text " + std::to_string(i);
        d.label = i < pos ? Label::complaint : Label::not_complaint;
        c.documents.push_back(d);
    }
    return c;
}

}  // namespace

TEST_CASE("three-row file parses with two positives") {
    const auto c = parse("id\ttext\tdomain\tlabel\n"
                         "a\tmy order never came\tretail\t1\n"
                         "b\tlove it\tapparel\t0\n"
                         "c\t@Shop where is it http://x.co/1\tretail\t1\n");
    REQUIRE(c.size() == 3);
    CHECK(c.count(Label::complaint) == 2);
    CHECK(c.documents[2].clean_text == "<USER> where is it <URL>");
    CHECK(c.documents[2].raw_text == "@Shop where is it http://x.co/1");
    CHECK(c.documents[0].domain == Domain::retail);
}

TEST_CASE("malformed label names the row") {
    try {
        parse("id\ttext\tdomain\tlabel\na\tok\tretail\t1\nb\thmm\tretail\tmaybe\n");
        FAIL("expected an error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    }
}

TEST_CASE("schema and integrity errors") {
    CHECK_THROWS_AS(parse("id\ttext\tlabel\na\tx\t1\n"), SchemaError);
    CHECK_THROWS_AS(parse(""), SchemaError);
    CHECK_THROWS_AS(parse("id\ttext\tdomain\tlabel\na\tx\tretail\t1\na\ty\tretail\t0\n"), IntegrityError);
    CHECK_THROWS_AS(parse("id\ttext\tdomain\tlabel\na\tx\tnowhere\t1\n"), DataError);
    CHECK_THROWS_AS(parse("id\ttext\tdomain\tlabel\tdate\na\tx\tretail\t1\t2018-13-01\n"), DataError);
}

TEST_CASE("quoted fields carry tabs, newlines and quotes") {
    const auto c = parse("id\ttext\tdomain\tlabel\n"
                         "a\t\"line one\nline \"\"two\"\"\tthree\"\tretail\t0\n");
    REQUIRE(c.size() == 1);
    CHECK(c.documents[0].raw_text == "line one\nline \"two\"\tthree");
}

TEST_CASE("anonymize examples") {
    CHECK(anonymize("@FC_Help hi, I ordered") == "<USER> hi, I ordered");
    CHECK(anonymize("see http://a.co/x now") == "see <URL> now");
    CHECK(anonymize("no mentions here") == "no mentions here");
    CHECK(anonymize("visit www.example.com/page today") == "visit <URL> today");
    CHECK(anonymize("https://t.co/abc") == "<URL>");
}

TEST_CASE("anonymize is idempotent and leaves no handles or URLs") {
    Rng rng(3);
    const std::vector<std::string> parts = {"@a_b", "hi", "http://x.y/z", "www.q.com", "!", "@", "mail@host",
                                            "<URL>", "<USER>", "https://", "ok"};
    for (int t = 0; t < 300; ++t) {
        std::string s;
        const auto len = 1 + rng.below(8);
        for (std::size_t k = 0; k < len; ++k) s += parts[rng.below(parts.size())] + (rng.below(2) ? " " : "");
        const auto once = anonymize(s);
        CHECK(anonymize(once) == once);
        CHECK(once.find("http://") == std::string::npos);
        CHECK(once.find("www.") == std::string::npos);
    }
}

TEST_CASE("corpus round-trips through the file format") {
    synth::Options o;
    o.n = 80;
    auto c = synth::make_corpus(o);
    c.documents[3].raw_text = "tab\there and \"quotes\"\nnewline";
    c.documents[3].clean_text = anonymize(c.documents[3].raw_text);
    c.documents[5].post_date.reset();
    c.documents[6].pos_tags = std::vector<std::string>{"NN", "VBZ"};
    std::stringstream buf;
    write_corpus(buf, c);
    auto back = read_corpus(buf);
    CHECK(back == c);
}

TEST_CASE("ten folds of twenty documents hold one of each class") {
    const auto c = labeled(10, 10);
    const auto plan = plan_nested_folds(c, 10, 3, 5);
    for (std::size_t k = 0; k < 10; ++k) {
        const auto test = plan.test_indices(k);
        REQUIRE(test.size() == 2);
        const int pos = c.documents[test[0]].is_complaint() + c.documents[test[1]].is_complaint();
        CHECK(pos == 1);
    }
}

TEST_CASE("full-size corpus folds: sizes 197/198 with 123 +- 1 positives") {
    // 1971 documents, 1232 complaints: 1971/10 and 1232/10 by hand
    const auto c = labeled(1232, 739);
    const auto plan = plan_nested_folds(c, 10, 3, 0);
    for (std::size_t k = 0; k < 10; ++k) {
        const auto test = plan.test_indices(k);
        CHECK((test.size() == 197 || test.size() == 198));
        std::size_t pos = 0;
        for (auto i : test) pos += c.documents[i].is_complaint();
        CHECK(pos >= 122);
        CHECK(pos <= 124);
    }
}

TEST_CASE("fold partition and stratification properties") {
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        synth::Options o;
        o.n = 60 + seed * 17;
        o.seed = seed + 100;
        const auto c = synth::make_corpus(o);
        const std::size_t outer = 2 + seed % 9;
        const std::size_t inner = 2 + seed % 3;
        const auto plan = plan_nested_folds(c, outer, inner, seed);
        const double global = static_cast<double>(c.count(Label::complaint)) / static_cast<double>(c.size());

        std::vector<int> seen(c.size(), 0);
        for (std::size_t k = 0; k < outer; ++k) {
            const auto test = plan.test_indices(k);
            std::size_t pos = 0;
            for (auto i : test) {
                ++seen[i];
                pos += c.documents[i].is_complaint();
            }
            const double ratio = static_cast<double>(pos) / static_cast<double>(test.size());
            CHECK(std::abs(ratio - global) <= 1.0 / static_cast<double>(test.size()) + 1e-12);

            // inner folds partition the outer training set
            const auto train = plan.train_indices(k);
            CHECK(train.size() + test.size() == c.size());
            std::vector<int> inner_seen(c.size(), 0);
            for (std::size_t j = 0; j < inner; ++j) {
                for (auto i : plan.inner_val_indices(k, j)) ++inner_seen[i];
                const auto itrain = plan.inner_train_indices(k, j);
                const auto ival = plan.inner_val_indices(k, j);
                CHECK(itrain.size() + ival.size() == train.size());
            }
            for (auto i : train) CHECK(inner_seen[i] == 1);
            for (auto i : test) CHECK(inner_seen[i] == 0);
        }
        for (int s : seen) CHECK(s == 1);
    }
}

TEST_CASE("fold plans are deterministic and round-trip") {
    const auto c = synth::make_corpus();
    const auto a = plan_nested_folds(c, 10, 3, 42);
    const auto b = plan_nested_folds(c, 10, 3, 42);
    CHECK(a == b);
    CHECK(a.fingerprint() == b.fingerprint());
    const auto other = plan_nested_folds(c, 10, 3, 43);
    CHECK(other.fingerprint() != a.fingerprint());

    const auto dir = synth::temp_dir("foldplan");
    save_fold_plan(dir / "plan.tsv", a);
    const auto back = load_fold_plan(dir / "plan.tsv", c, 3, 42);
    CHECK(back.outer_fold == a.outer_fold);
    CHECK(back.inner_fold == a.inner_fold);
    CHECK(back.fingerprint() == a.fingerprint());
}

TEST_CASE("two-column fold plans derive inner folds") {
    const auto c = synth::make_corpus();
    const auto a = plan_nested_folds(c, 5, 3, 9);
    const auto dir = synth::temp_dir("foldplan2");
    {
        std::ofstream out(dir / "plan.tsv");
        for (std::size_t i = 0; i < c.size(); ++i) out << a.doc_ids[i] << '\t' << a.outer_fold[i] << '\n';
    }
    const auto back = load_fold_plan(dir / "plan.tsv", c, 3, 9);
    CHECK(back.outer_fold == a.outer_fold);
    CHECK(back.inner_fold == a.inner_fold);
}

TEST_CASE("fold plan errors") {
    const auto c = synth::make_corpus();
    CHECK_THROWS_AS(plan_nested_folds(labeled(3, 30), 10, 3, 0), StratificationError);
    const auto dir = synth::temp_dir("foldplan3");
    {
        std::ofstream out(dir / "missing.tsv");
        out << c.documents[0].id << "\t0\n";
    }
    CHECK_THROWS_AS(load_fold_plan(dir / "missing.tsv", c), IntegrityError);
    {
        std::ofstream out(dir / "bad.tsv");
        out << c.documents[0].id << "\n";
    }
    CHECK_THROWS_AS(load_fold_plan(dir / "bad.tsv", c), FormatError);
}

TEST_CASE("distant ingestion strips triggers and drops duplicates") {
    std::istringstream pos("ignored again #badservice\nignored again #BadService\nstill broken #fail\n");
    std::istringstream neg("sunny day\n@bob look https://x.y\n");
    const auto c = ingest_distant(pos, neg, {"#badservice", "fail"});
    REQUIRE(c.size() == 4);
    CHECK(c.documents[0].clean_text == "ignored again");
    CHECK(c.documents[0].label == Label::complaint);
    CHECK(c.documents[1].clean_text == "still broken");
    CHECK(c.documents[3].clean_text == "<USER> look <URL>");
    CHECK(c.documents[3].label == Label::not_complaint);
    CHECK(c.source_tag == "distant");

    std::istringstream empty("");
    std::istringstream neg2("x\n");
    CHECK_THROWS_AS(ingest_distant(empty, neg2, {"#fail"}), DataError);
}

TEST_CASE("balanced distant files give at most 2n documents with equal labels before dedup") {
    const auto dir = synth::temp_dir("distant");
    std::ofstream(dir / "p.txt") << "a #badservice\nb #worstbrand\nc #badservice\n";
    std::ofstream(dir / "n.txt") << "x\ny\nz\n";
    const auto c = ingest_distant(dir / "p.txt", dir / "n.txt", default_trigger_hashtags());
    CHECK(c.size() == 6);
    CHECK(c.count(Label::complaint) == 3);
}

TEST_CASE("domains parse from keys and display names") {
    for (const Domain d : kAllDomains) {
        CHECK(parse_domain(domain_key(d)) == d);
        CHECK(parse_domain(domain_display_name(d)) == d);
    }
    CHECK_FALSE(parse_domain("nowhere").has_value());
}
