#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <sstream>
#include <stdexcept>

#include "complaints/eval.hpp"
#include "complaints/textproc.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace complaints;

namespace {

ModelConfig small_grid() {
    ModelConfig m;
    m.alphas = {1e-2, 1e-1};
    m.rhos = {0.5};
    return m;
}

ModelConfig single_point() {
    ModelConfig m;
    m.alphas = {1e-2};
    m.rhos = {0.5};
    return m;
}

std::string report_text(const ExperimentReport& r) {
    std::ostringstream out;
    write_report(out, r);
    return out.str();
}

Corpus relabel_domain(Corpus c, Domain d, const std::string& id_prefix) {
    for (auto& doc : c.documents) {
        doc.domain = d;
        doc.id = id_prefix + doc.id;
    }
    return c;
}

}  // namespace

TEST_CASE("metric examples") {
    const auto perfect = compute_metrics({1, 0, 1}, {0.9, 0.1, 0.8});
    CHECK(perfect.accuracy == 1.0);
    CHECK(perfect.macro_f1 == 1.0);
    CHECK(*perfect.roc_auc == 1.0);

    CHECK(roc_auc({1, 0, 1, 0}, {0.9, 0.8, 0.4, 0.1}) == 0.75);
    CHECK(roc_auc({1, 0}, {0.5, 0.5}) == 0.5);

    std::vector<int> y(1232, 1);
    y.insert(y.end(), 739, 0);
    const std::vector<int> all_pos(y.size(), 1);
    CHECK(accuracy(y, all_pos) == doctest::Approx(1232.0 / 1971.0));
    CHECK(accuracy(y, all_pos) == doctest::Approx(0.625).epsilon(1e-3));
    // positive-class F1 = 2*1232 / (2*1232 + 739); the negative class scores 0
    CHECK(macro_f1(y, all_pos) == doctest::Approx(2464.0 / 3203.0 / 2.0));
    CHECK(macro_f1(y, all_pos) == doctest::Approx(0.3846).epsilon(1e-3));
}

TEST_CASE("threshold is strict") {
    CHECK(threshold_scores({0.5, 0.50001, 0.2}) == std::vector<int>{0, 1, 0});
    CHECK(threshold_scores({0.3}, 0.2) == std::vector<int>{1});
}

TEST_CASE("single-class labels leave AUC undefined") {
    CHECK_THROWS_AS(roc_auc({1, 1}, {0.2, 0.3}), UndefinedError);
    const auto m = compute_metrics({1, 1}, {0.2, 0.9});
    CHECK_FALSE(m.roc_auc.has_value());
    CHECK(m.accuracy == 0.5);
}

TEST_CASE("rank AUC equals brute-force pair counting") {
    Rng rng(77);
    for (int t = 0; t < 50; ++t) {
        std::vector<int> y(200);
        std::vector<double> s(200);
        for (std::size_t i = 0; i < 200; ++i) {
            y[i] = rng.uniform() < 0.4 ? 1 : 0;
            // coarse scores force many ties
            s[i] = std::round(rng.uniform() * (t % 2 ? 10.0 : 1000.0)) / 10.0 + 0.3 * y[i];
        }
        y[0] = 1;
        y[1] = 0;
        CHECK(roc_auc(y, s) == oracle::pair_count_auc(y, s));
    }
}

TEST_CASE("constant scorer has AUC 0.5") {
    Rng rng(4);
    for (int t = 0; t < 20; ++t) {
        std::vector<int> y(30);
        for (auto& v : y) v = rng.uniform() < 0.5 ? 1 : 0;
        y[0] = 1;
        y[1] = 0;
        CHECK(roc_auc(y, std::vector<double>(30, rng.uniform())) == 0.5);
    }
}

TEST_CASE("macro-F1 is invariant under swapping labels and predictions together") {
    Rng rng(12);
    for (int t = 0; t < 300; ++t) {
        const auto n = 1 + rng.below(15);
        std::vector<int> y(n);
        std::vector<int> p(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = static_cast<int>(rng.below(2));
            p[i] = static_cast<int>(rng.below(2));
        }
        std::vector<int> ys(n);
        std::vector<int> ps(n);
        for (std::size_t i = 0; i < n; ++i) {
            ys[i] = 1 - y[i];
            ps[i] = 1 - p[i];
        }
        const double f = macro_f1(y, p);
        CHECK(f == doctest::Approx(macro_f1(ys, ps)));
        CHECK(f >= 0.0);
        CHECK(f <= 1.0);
    }
}

TEST_CASE("parallel_for covers every index and rethrows the first failure") {
    std::vector<int> hit(100, 0);
    parallel_for(100, 4, [&](std::size_t i) { hit[i] += 1; });
    CHECK(std::count(hit.begin(), hit.end(), 1) == 100);
    try {
        parallel_for(50, 3, [](std::size_t i) {
            if (i == 7 || i == 30) throw std::runtime_error("boom " + std::to_string(i));
        });
        FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()) == "boom 7");
    }
}

TEST_CASE("MFC nested CV scores the prior") {
    const auto c = synth::make_corpus({.n = 120, .seed = 2});
    const auto plan = plan_nested_folds(c, 5, 3, 1);
    ModelConfig m;
    m.kind = ModelKind::mfc;
    const auto r = run_nested_cv(c, plan, feature_config_from("bow"), FeatureResources::defaults(), m);
    REQUIRE(r.folds.size() == 5);
    for (const auto& f : r.folds) {
        CHECK(*f.metrics.roc_auc == 0.5);
        CHECK(f.metrics.macro_f1 <= 0.5);
    }
    // complaints are the minority here, so MFC predicts 0
    const double share_neg = static_cast<double>(c.count(Label::not_complaint)) / static_cast<double>(c.size());
    CHECK(r.mean.accuracy == doctest::Approx(share_neg).epsilon(0.02));
}

TEST_CASE("logistic regression nested CV: means, determinism, scheduling independence") {
    const auto c = synth::make_corpus({.n = 200, .seed = 5});
    const auto plan = plan_nested_folds(c, 5, 3, 9);
    const auto feats = feature_config_from("bow");
    const auto res = FeatureResources::defaults();
    const auto a = run_nested_cv(c, plan, feats, res, small_grid(), 1);
    const auto b = run_nested_cv(c, plan, feats, res, small_grid(), 4);
    CHECK(report_text(a) == report_text(b));
    CHECK(report_text(a) == report_text(run_nested_cv(c, plan, feats, res, small_grid(), 1)));
    CHECK(a.mean.macro_f1 > 0.7);

    double acc = 0.0;
    double f1 = 0.0;
    double auc = 0.0;
    for (const auto& f : a.folds) {
        acc += f.metrics.accuracy;
        f1 += f.metrics.macro_f1;
        auc += *f.metrics.roc_auc;
    }
    CHECK(a.mean.accuracy == doctest::Approx(acc / 5.0));
    CHECK(a.mean.macro_f1 == doctest::Approx(f1 / 5.0));
    CHECK(*a.mean.roc_auc == doctest::Approx(auc / 5.0));

    const auto text = report_text(a);
    CHECK(text.find("# fingerprint\t" + a.fingerprint()) != std::string::npos);
    CHECK(text.find("fold\tn_train\tn_test\taccuracy\tmacro_f1\troc_auc\tparams") != std::string::npos);

    CHECK_THROWS_AS(run_nested_cv(synth::make_corpus({.n = 60, .seed = 6}), plan, feats, res, small_grid()),
                    IntegrityError);
}

TEST_CASE("held-out documents do not influence the fitted pipeline") {
    auto c = synth::make_corpus({.n = 150, .seed = 8});
    const auto res = FeatureResources::defaults();
    const auto prepared = prepared_copy(c, res);
    const auto plan = plan_nested_folds(prepared, 5, 3, 2);
    const auto feats = feature_config_from("bow,pos");
    for (std::size_t k = 0; k < 2; ++k) {
        SplitTask with_test;
        for (const auto i : plan.train_indices(k)) {
            with_test.train.push_back(&prepared.documents[i]);
            with_test.inner_fold.push_back(plan.inner_fold[k][i]);
        }
        for (const auto i : plan.test_indices(k)) with_test.test.push_back(&prepared.documents[i]);

        // same training set with the held-out fold deleted from the corpus
        Corpus reduced;
        for (const auto i : plan.train_indices(k)) reduced.documents.push_back(prepared.documents[i]);
        SplitTask without = with_test;
        for (std::size_t j = 0; j < without.train.size(); ++j) without.train[j] = &reduced.documents[j];
        without.test = {with_test.test.front()};

        const auto a = run_split(with_test, feats, res, small_grid());
        const auto b = run_split(without, feats, res, small_grid());
        CHECK(a.pipeline_fingerprint == b.pipeline_fingerprint);
        CHECK(a.params == b.params);
        CHECK(a.scores.front() == b.scores.front());
    }
}

TEST_CASE("distant supervision modes") {
    const auto dir = synth::temp_dir("eval_distant");
    synth::write_distant_files(dir / "p.txt", dir / "n.txt", 120, 4);
    const auto distant = ingest_distant(dir / "p.txt", dir / "n.txt", default_trigger_hashtags());
    REQUIRE(distant.size() > 0);
    const auto c = synth::make_corpus({.n = 120, .seed = 3});
    const auto plan = plan_nested_folds(c, 4, 3, 1);
    const auto feats = feature_config_from("bow,pos");
    const auto res = FeatureResources::defaults();
    for (const auto mode : {DistantMode::annotated_only, DistantMode::pooling, DistantMode::easyadapt}) {
        const auto r = run_distant_experiment(c, distant, mode, plan, feats, res, small_grid());
        const auto cfg = std::find(r.config.begin(), r.config.end(),
                                   std::pair<std::string, std::string>{"mode", std::string(distant_mode_name(mode))});
        CHECK(cfg != r.config.end());
        REQUIRE(r.folds.size() == 4);
        std::size_t tested = 0;
        for (const auto& f : r.folds) tested += f.n_test;
        CHECK(tested == c.size());
        if (mode != DistantMode::annotated_only) CHECK(r.folds[0].n_train > c.size());
    }
    CHECK_THROWS_AS(run_distant_experiment(c, Corpus{}, DistantMode::pooling, plan, feats, res, small_grid()),
                    DataError);
    CHECK_THROWS_AS(run_distant_experiment(c, c, DistantMode::pooling, plan, feats, res, small_grid()),
                    IntegrityError);
    CHECK(parse_distant_mode("easyadapt") == DistantMode::easyadapt);
    CHECK_THROWS_AS(parse_distant_mode("nope"), ConfigError);
}

TEST_CASE("domain experiments") {
    const auto feats = feature_config_from("bow");
    const auto res = FeatureResources::defaults();
    auto single = relabel_domain(synth::make_corpus({.n = 100, .seed = 4}), Domain::cars, "");
    const auto in = run_domain_experiment(single, DomainMode::in_domain, feats, res, single_point(), 5);
    const auto pooled = run_domain_experiment(single, DomainMode::pooling, feats, res, single_point(), 5);
    REQUIRE(in.rows.size() == 1);
    REQUIRE(pooled.rows.size() == 1);
    CHECK(*in.rows[0].macro_f1 == *pooled.rows[0].macro_f1);
    CHECK(in.rows[0].folds == pooled.rows[0].folds);

    auto c = synth::make_corpus({.n = 160, .domains = 4, .seed = 6});
    // starve one domain of positives
    int kept = 0;
    for (auto& d : c.documents) {
        if (d.domain == Domain::food_beverage && d.is_complaint()) {
            if (kept++ >= 3) d.label = Label::not_complaint;
        }
    }
    const auto r = run_domain_experiment(c, DomainMode::easyadapt, feats, res, single_point(), 5);
    bool saw_reduced = false;
    for (const auto& row : r.rows) {
        if (row.domain == Domain::food_beverage) {
            CHECK(row.folds == 3);
            CHECK(row.note == "folds reduced to 3");
            saw_reduced = true;
        }
        if (row.folds > 0) CHECK(row.macro_f1.has_value());
    }
    CHECK(saw_reduced);
    CHECK(r.fingerprint == run_domain_experiment(c, DomainMode::easyadapt, feats, res, single_point(), 5, 3).fingerprint);
}

TEST_CASE("cross-domain with two identical pseudo-domains is symmetric") {
    const auto base = synth::make_corpus({.n = 120, .domains = 1, .seed = 10});
    Corpus c = relabel_domain(base, Domain::cars, "x");
    const auto copy = relabel_domain(base, Domain::apparel, "y");
    c.documents.insert(c.documents.end(), copy.documents.begin(), copy.documents.end());
    const auto feats = feature_config_from("bow");
    const auto res = FeatureResources::defaults();
    const auto r = run_crossdomain(c, feats, res, single_point());
    REQUIRE(r.domains.size() == 2);
    CHECK_FALSE(r.auc[0][0].has_value());
    CHECK_FALSE(r.auc[1][1].has_value());
    REQUIRE(r.auc[0][1].has_value());
    CHECK(*r.auc[0][1] == doctest::Approx(*r.auc[1][0]).epsilon(1e-12));
    CHECK(*r.all_but_one[0] == doctest::Approx(*r.auc[1][0]).epsilon(1e-12));

    // direct train/test on the copies
    const auto prepared = prepared_copy(c, res);
    SplitTask t;
    for (const auto& d : prepared.documents) (d.domain == r.domains[0] ? t.train : t.test).push_back(&d);
    t.inner_fold.assign(t.train.size(), 0);
    t.inner_folds = 0;
    const auto s = run_split(t, feats, res, single_point());
    std::vector<int> y;
    for (const auto* d : t.test) y.push_back(d->is_complaint() ? 1 : 0);
    CHECK(roc_auc(y, s.scores) == doctest::Approx(*r.auc[0][1]).epsilon(1e-12));

    std::ostringstream out;
    write_crossdomain(out, r);
    CHECK(out.str().find("All") != std::string::npos);
    CHECK_THROWS_AS(run_crossdomain(base, feats, res, single_point()), DataError);
}
