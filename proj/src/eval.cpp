#include "complaints/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <memory>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>
#include <set>
#include <unordered_set>

#include "complaints/common.hpp"

namespace complaints {

// ---------------------------------------------------------------------------
// Metrics

std::vector<int> threshold_scores(const std::vector<double>& scores, double threshold) {
    std::vector<int> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] > threshold ? 1 : 0;
    return out;
}

double accuracy(const std::vector<int>& y, const std::vector<int>& pred) {
    if (y.size() != pred.size() || y.empty()) throw DataError("accuracy needs equal, non-empty inputs");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < y.size(); ++i) hit += y[i] == pred[i] ? 1 : 0;
    return static_cast<double>(hit) / static_cast<double>(y.size());
}

double macro_f1(const std::vector<int>& y, const std::vector<int>& pred) {
    if (y.size() != pred.size() || y.empty()) throw DataError("macro-F1 needs equal, non-empty inputs");
    double total = 0.0;
    for (const int cls : {0, 1}) {
        std::size_t tp = 0;
        std::size_t fp = 0;
        std::size_t fn = 0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (pred[i] == cls && y[i] == cls) ++tp;
            if (pred[i] == cls && y[i] != cls) ++fp;
            if (pred[i] != cls && y[i] == cls) ++fn;
        }
        const std::size_t denom = 2 * tp + fp + fn;
        total += denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
    }
    return total / 2.0;
}

double roc_auc(const std::vector<int>& y, const std::vector<double>& scores) {
    if (y.size() != scores.size() || y.empty()) throw DataError("AUC needs equal, non-empty inputs");
    std::vector<std::size_t> order(y.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    // Doubled ranks are integers even with ties, so the statistic is exact.
    std::int64_t doubled_rank_sum = 0;
    std::int64_t pos = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        // ranks i+1 .. j, average (i + 1 + j) / 2
        const auto doubled_avg = static_cast<std::int64_t>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) {
            if (y[order[k]] == 1) {
                doubled_rank_sum += doubled_avg;
                ++pos;
            }
        }
        i = j;
    }
    const auto neg = static_cast<std::int64_t>(y.size()) - pos;
    if (pos == 0 || neg == 0) throw UndefinedError("AUC undefined: only one class present");
    const std::int64_t doubled_u = doubled_rank_sum - pos * (pos + 1);
    return static_cast<double>(doubled_u) / static_cast<double>(2 * pos * neg);
}

Metrics compute_metrics(const std::vector<int>& y, const std::vector<double>& scores, double threshold) {
    Metrics m;
    const auto pred = threshold_scores(scores, threshold);
    m.accuracy = accuracy(y, pred);
    m.macro_f1 = macro_f1(y, pred);
    try {
        m.roc_auc = roc_auc(y, scores);
    } catch (const UndefinedError&) {
        m.roc_auc.reset();
    }
    return m;
}

std::string_view model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::mfc: return "mfc";
        case ModelKind::logreg: return "logreg";
        case ModelKind::mlp: return "mlp";
    }
    return "logreg";
}

ModelKind parse_model_kind(std::string_view s) {
    const auto v = to_lower_ascii(trim(s));
    if (v == "mfc" || v == "baseline") return ModelKind::mfc;
    if (v == "logreg" || v == "lr") return ModelKind::logreg;
    if (v == "mlp") return ModelKind::mlp;
    throw ConfigError("unknown model kind '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Split runner

namespace {

std::vector<int> labels_of(const std::vector<const Document*>& docs) {
    std::vector<int> y;
    y.reserve(docs.size());
    for (const Document* d : docs) {
        if (d->label == Label::unlabeled) throw DataError("document " + d->id + " has no label");
        y.push_back(d->is_complaint() ? 1 : 0);
    }
    return y;
}

bool both_classes(const std::vector<int>& y) {
    const auto pos = std::count(y.begin(), y.end(), 1);
    return pos > 0 && pos < static_cast<std::ptrdiff_t>(y.size());
}

TokenSeq tokens_of(const Document& d) {
    return d.tokens ? *d.tokens : tokenize(d.clean_text);
}

std::string num(double v) {
    return format_double(v);
}

struct Featurized {
    FeaturePipeline pipeline;
    FeatureSchema schema;
    SparseMatrix x;
};

std::vector<FeatureVector> featurize(const FeaturePipeline& p, const std::vector<const Document*>& docs,
                                     const SplitTask& task) {
    std::vector<FeatureVector> out;
    out.reserve(docs.size());
    for (const Document* d : docs) {
        auto v = p.transform(*d);
        if (task.domain_of) v = easyadapt(v, task.domain_of(*d), task.domains);
        out.push_back(std::move(v));
    }
    return out;
}

Featurized fit_features(const std::vector<const Document*>& train, const SplitTask& task,
                        const FeatureConfig& features, const FeatureResources& resources) {
    auto pipeline = FeaturePipeline::fit(train, features, resources);
    const auto vectors = featurize(pipeline, train, task);
    auto schema = FeatureSchema::from_vectors(vectors);
    auto x = build_matrix(vectors, schema);
    return {std::move(pipeline), std::move(schema), std::move(x)};
}

}  // namespace

SplitResult run_split(const SplitTask& task, const FeatureConfig& features, const FeatureResources& resources,
                      const ModelConfig& model) {
    if (task.train.empty() || task.test.empty()) throw DataError("a split needs training and test documents");
    const auto ytrain = labels_of(task.train);
    if (!both_classes(ytrain)) throw DataError("training split contains a single class");
    SplitResult res;

    if (model.kind == ModelKind::mfc) {
        const auto m = train_mfc(ytrain);
        res.scores.assign(task.test.size(), predict_proba(m));
        res.params = "prior=" + num(m.prior);
        return res;
    }
    if (model.kind == ModelKind::mlp) {
        std::vector<TokenSeq> docs;
        for (const Document* d : task.train) docs.push_back(tokens_of(*d));
        const auto m = train_mlp(docs, ytrain, model.mlp, model.seed);
        for (const Document* d : task.test) res.scores.push_back(predict_proba(m, tokens_of(*d)));
        res.params = "E=" + std::to_string(model.mlp.embed_dim) + ";D=" + std::to_string(model.mlp.hidden) +
                     ";epochs=" + std::to_string(model.mlp.epochs);
        return res;
    }

    // grid search over inner folds, warm-starting along descending alpha
    std::vector<double> alphas = model.alphas;
    std::sort(alphas.begin(), alphas.end(), std::greater<>());
    if (alphas.empty() || model.rhos.empty()) throw ConfigError("empty hyperparameter grid");
    std::map<std::pair<std::size_t, std::size_t>, double> f1_sum;
    std::size_t used_folds = 0;
    if (alphas.size() * model.rhos.size() > 1 && task.inner_folds >= 2) {
        if (task.inner_fold.size() != task.train.size()) throw InvariantError("inner fold vector size mismatch");
        for (std::size_t j = 0; j < task.inner_folds; ++j) {
            std::vector<const Document*> itrain;
            std::vector<const Document*> ival;
            for (std::size_t i = 0; i < task.train.size(); ++i) {
                (task.inner_fold[i] == static_cast<int>(j) ? ival : itrain).push_back(task.train[i]);
            }
            if (ival.empty()) continue;
            const auto yi = labels_of(itrain);
            if (!both_classes(yi)) continue;
            const auto yv = labels_of(ival);
            const auto fz = fit_features(itrain, task, features, resources);
            const auto xv = build_matrix(featurize(fz.pipeline, ival, task), fz.schema);
            ++used_folds;
            for (std::size_t r = 0; r < model.rhos.size(); ++r) {
                LogregFit warm;
                bool has_warm = false;
                for (std::size_t a = 0; a < alphas.size(); ++a) {
                    auto fit = fit_logreg(fz.x, yi, alphas[a], model.rhos[r], model.logreg, has_warm ? &warm : nullptr);
                    const auto pred = threshold_scores(predict_proba(fit, xv), model.threshold);
                    f1_sum[{r, a}] += macro_f1(yv, pred);
                    warm = std::move(fit);
                    has_warm = true;
                }
            }
        }
    }
    double best_alpha = model.fallback_alpha;
    double best_rho = model.fallback_rho;
    if (alphas.size() * model.rhos.size() == 1) {
        best_alpha = alphas[0];
        best_rho = model.rhos[0];
    } else if (used_folds > 0) {
        double best = -1.0;
        for (std::size_t r = 0; r < model.rhos.size(); ++r) {
            for (std::size_t a = 0; a < alphas.size(); ++a) {
                const double v = f1_sum[{r, a}];
                if (v > best) {
                    best = v;
                    best_alpha = alphas[a];
                    best_rho = model.rhos[r];
                }
            }
        }
    }

    const auto fz = fit_features(task.train, task, features, resources);
    std::vector<std::string> test_ids;
    for (const Document* d : task.test) test_ids.push_back(d->id);
    fz.pipeline.check_no_leakage(test_ids);
    const auto fit = fit_logreg(fz.x, ytrain, best_alpha, best_rho, model.logreg);
    const auto xt = build_matrix(featurize(fz.pipeline, task.test, task), fz.schema);
    res.scores = predict_proba(fit, xt);
    res.params = "alpha=" + num(best_alpha) + ";rho=" + num(best_rho) +
                 (used_folds == 0 && alphas.size() * model.rhos.size() > 1 ? ";grid=fallback" : "");
    res.pipeline_fingerprint = fz.pipeline.fingerprint();
    res.active_families = fz.pipeline.active_families();
    return res;
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    std::vector<std::exception_ptr> errors(n);
    const auto run_one = [&](std::size_t i) {
        try {
            fn(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    const auto workers = static_cast<std::size_t>(std::max(1, jobs));
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) run_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < std::min(workers, n); ++t) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) run_one(i);
            });
        }
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

// ---------------------------------------------------------------------------
// Reports

std::string ExperimentReport::fingerprint() const {
    std::uint64_t h = fnv1a(experiment);
    for (const auto& [k, v] : config) h = fnv1a(k + "=" + v, mix64(h));
    h = fnv1a(fold_plan, mix64(h));
    return hex64(h);
}

Metrics mean_metrics(const std::vector<FoldResult>& folds) {
    Metrics m;
    if (folds.empty()) return m;
    double auc = 0.0;
    std::size_t auc_n = 0;
    for (const auto& f : folds) {
        m.accuracy += f.metrics.accuracy;
        m.macro_f1 += f.metrics.macro_f1;
        if (f.metrics.roc_auc) {
            auc += *f.metrics.roc_auc;
            ++auc_n;
        }
    }
    m.accuracy /= static_cast<double>(folds.size());
    m.macro_f1 /= static_cast<double>(folds.size());
    if (auc_n > 0) m.roc_auc = auc / static_cast<double>(auc_n);
    return m;
}

Corpus prepared_copy(const Corpus& corpus, const FeatureResources& resources) {
    Corpus c = corpus;
    prepare_corpus(c, resources.tagger ? *resources.tagger : TaggerModel::rule_based());
    return c;
}

std::string describe_families(const std::vector<std::string>& families, const FeatureResources& resources) {
    std::string out;
    for (const auto& f : families) {
        if (!out.empty()) out += ',';
        out += f;
        if (f == "sent") {
            std::vector<std::string> src;
            if (resources.valence) src.emplace_back("rule");
            if (resources.mpqa) src.emplace_back("mpqa");
            if (resources.nrc) src.emplace_back("nrc");
            out += "(";
            for (std::size_t i = 0; i < src.size(); ++i) out += (i ? "+" : "") + src[i];
            out += ")";
        }
    }
    return out;
}

namespace {

std::string join_doubles(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
    return s;
}

std::string join_strings(const std::set<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ",") + x;
    return s;
}

std::vector<std::pair<std::string, std::string>> model_config_lines(const FeatureConfig& features,
                                                                    const ModelConfig& model) {
    std::vector<std::pair<std::string, std::string>> c;
    c.emplace_back("features", join_strings(features.families) + (features.lenient ? " (lenient)" : ""));
    c.emplace_back("model", std::string(model_kind_name(model.kind)));
    c.emplace_back("seed", std::to_string(model.seed));
    c.emplace_back("threshold", format_double(model.threshold));
    if (model.kind == ModelKind::logreg) {
        c.emplace_back("alphas", join_doubles(model.alphas));
        c.emplace_back("rhos", join_doubles(model.rhos));
        c.emplace_back("tol", format_double(model.logreg.tol));
        c.emplace_back("max_epochs", std::to_string(model.logreg.max_epochs));
    }
    if (model.kind == ModelKind::mlp) {
        const auto& m = model.mlp;
        c.emplace_back("mlp", "E=" + std::to_string(m.embed_dim) + ",D=" + std::to_string(m.hidden) +
                                  ",dropout=" + format_double(m.dropout) + ",lr=" + format_double(m.lr) +
                                  ",epochs=" + std::to_string(m.epochs) + ",batch=" + std::to_string(m.batch));
    }
    return c;
}

void check_plan_matches(const FoldPlan& plan, const Corpus& corpus) {
    if (plan.doc_ids.size() != corpus.size()) throw IntegrityError("fold plan and corpus differ in size");
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (plan.doc_ids[i] != corpus.documents[i].id) {
            throw IntegrityError("fold plan order does not match the corpus at '" + corpus.documents[i].id + "'");
        }
    }
}

// Stratified inner folds over a training set; fewer folds when a class is rare.
void derive_inner_folds(SplitTask& task, std::size_t wanted, std::uint64_t seed) {
    std::vector<std::string> ids;
    std::vector<int> y;
    for (const Document* d : task.train) {
        ids.push_back(d->id);
        y.push_back(d->is_complaint() ? 1 : 0);
    }
    const auto pos = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
    const std::size_t folds = std::min({wanted, pos, y.size() - pos});
    if (folds < 2) {
        task.inner_folds = 0;
        task.inner_fold.assign(task.train.size(), -1);
        return;
    }
    task.inner_folds = folds;
    task.inner_fold = stratified_assignment(ids, y, folds, seed);
}

ExperimentReport cv_over_tasks(std::string experiment, const std::vector<SplitTask>& tasks,
                               const FeatureConfig& features, const FeatureResources& resources,
                               const ModelConfig& model, int jobs) {
    std::vector<SplitResult> results(tasks.size());
    parallel_for(tasks.size(), jobs, [&](std::size_t k) {
        results[k] = run_split(tasks[k], features, resources, model);
    });
    ExperimentReport rep;
    rep.experiment = std::move(experiment);
    for (std::size_t k = 0; k < tasks.size(); ++k) {
        FoldResult f;
        f.fold = k;
        f.n_train = tasks[k].train.size();
        f.n_test = tasks[k].test.size();
        f.metrics = compute_metrics(labels_of(tasks[k].test), results[k].scores, model.threshold);
        f.params = results[k].params;
        f.pipeline_fingerprint = results[k].pipeline_fingerprint;
        rep.folds.push_back(std::move(f));
    }
    if (!results.empty() && !results.front().active_families.empty()) {
        rep.active_families = results.front().active_families;
    }
    rep.mean = mean_metrics(rep.folds);
    return rep;
}

}  // namespace

ExperimentReport run_nested_cv(const Corpus& corpus, const FoldPlan& plan, const FeatureConfig& features,
                               const FeatureResources& resources, const ModelConfig& model, int jobs) {
    check_plan_matches(plan, corpus);
    if (model.kind == ModelKind::logreg) resolve_families(features, resources);
    const Corpus prepared = prepared_copy(corpus, resources);
    std::vector<SplitTask> tasks(plan.outer);
    for (std::size_t k = 0; k < plan.outer; ++k) {
        auto& t = tasks[k];
        for (const auto i : plan.train_indices(k)) {
            t.train.push_back(&prepared.documents[i]);
            if (!plan.inner_fold.empty()) t.inner_fold.push_back(plan.inner_fold[k][i]);
        }
        for (const auto i : plan.test_indices(k)) t.test.push_back(&prepared.documents[i]);
        if (plan.inner_fold.empty()) {
            derive_inner_folds(t, plan.inner, mix64(plan.seed + k + 1));
        } else {
            t.inner_folds = plan.inner;
        }
    }
    auto rep = cv_over_tasks("cv", tasks, features, resources, model, jobs);
    rep.config = model_config_lines(features, model);
    rep.config.emplace_back("outer_folds", std::to_string(plan.outer));
    rep.config.emplace_back("inner_folds", std::to_string(plan.inner));
    rep.config.emplace_back("corpus_size", std::to_string(corpus.size()));
    rep.fold_plan = plan.fingerprint();
    if (!rep.active_families.empty()) {
        rep.config.emplace_back("active_families", describe_families(rep.active_families, resources));
    }
    return rep;
}

std::string_view distant_mode_name(DistantMode m) {
    switch (m) {
        case DistantMode::annotated_only: return "annotated";
        case DistantMode::pooling: return "pooling";
        case DistantMode::easyadapt: return "easyadapt";
    }
    return "annotated";
}

DistantMode parse_distant_mode(std::string_view s) {
    const auto v = to_lower_ascii(trim(s));
    if (v == "annotated" || v == "annotated_only" || v == "none") return DistantMode::annotated_only;
    if (v == "pooling" || v == "pool") return DistantMode::pooling;
    if (v == "easyadapt" || v == "ea") return DistantMode::easyadapt;
    throw ConfigError("unknown distant mode '" + std::string(s) + "'");
}

ExperimentReport run_distant_experiment(const Corpus& annotated, const Corpus& distant, DistantMode mode,
                                        const FoldPlan& plan, const FeatureConfig& features,
                                        const FeatureResources& resources, const ModelConfig& model, int jobs) {
    check_plan_matches(plan, annotated);
    if (distant.documents.empty()) throw DataError("the distant corpus is empty");
    for (const auto& d : distant.documents) {
        if (d.label == Label::unlabeled) throw DataError("distant document " + d.id + " has no label");
    }
    const Corpus ann = prepared_copy(annotated, resources);
    const auto dist = std::make_shared<const Corpus>(prepared_copy(distant, resources));
    std::unordered_set<std::string> ann_ids;
    for (const auto& d : ann.documents) ann_ids.insert(d.id);
    for (const auto& d : dist->documents) {
        if (ann_ids.contains(d.id)) throw IntegrityError("distant id " + d.id + " collides with an annotated id");
    }
    auto distant_ptrs = std::make_shared<std::unordered_set<const Document*>>();
    for (const auto& d : dist->documents) distant_ptrs->insert(&d);

    std::vector<SplitTask> tasks(plan.outer);
    for (std::size_t k = 0; k < plan.outer; ++k) {
        auto& t = tasks[k];
        for (const auto i : plan.train_indices(k)) {
            t.train.push_back(&ann.documents[i]);
            if (!plan.inner_fold.empty()) t.inner_fold.push_back(plan.inner_fold[k][i]);
        }
        for (const auto i : plan.test_indices(k)) t.test.push_back(&ann.documents[i]);
        if (plan.inner_fold.empty()) {
            derive_inner_folds(t, plan.inner, mix64(plan.seed + k + 1));
        } else {
            t.inner_folds = plan.inner;
        }
        if (mode != DistantMode::annotated_only) {
            for (const auto& d : dist->documents) {
                t.train.push_back(&d);
                t.inner_fold.push_back(-1);
            }
        }
        if (mode == DistantMode::easyadapt) {
            t.domains = {"annotated", "distant"};
            t.domain_of = [distant_ptrs, dist](const Document& d) {
                return std::string(distant_ptrs->contains(&d) ? "distant" : "annotated");
            };
        }
    }
    auto rep = cv_over_tasks("distant", tasks, features, resources, model, jobs);
    rep.config = model_config_lines(features, model);
    rep.config.emplace_back("mode", std::string(distant_mode_name(mode)));
    rep.config.emplace_back("distant_size", std::to_string(distant.size()));
    rep.config.emplace_back("outer_folds", std::to_string(plan.outer));
    rep.config.emplace_back("corpus_size", std::to_string(annotated.size()));
    rep.fold_plan = plan.fingerprint();
    if (!rep.active_families.empty()) {
        rep.config.emplace_back("active_families", describe_families(rep.active_families, resources));
    }
    return rep;
}

std::string_view domain_mode_name(DomainMode m) {
    switch (m) {
        case DomainMode::in_domain: return "in_domain";
        case DomainMode::pooling: return "pooling";
        case DomainMode::easyadapt: return "easyadapt";
    }
    return "in_domain";
}

DomainMode parse_domain_mode(std::string_view s) {
    const auto v = to_lower_ascii(trim(s));
    if (v == "in_domain" || v == "in-domain" || v == "in") return DomainMode::in_domain;
    if (v == "pooling" || v == "pool") return DomainMode::pooling;
    if (v == "easyadapt" || v == "ea") return DomainMode::easyadapt;
    throw ConfigError("unknown domain mode '" + std::string(s) + "'");
}

namespace {

std::vector<Domain> domains_present(const Corpus& c) {
    std::vector<Domain> out;
    for (const Domain d : kAllDomains) {
        if (std::any_of(c.documents.begin(), c.documents.end(), [&](const Document& x) { return x.domain == d; })) {
            out.push_back(d);
        }
    }
    if (std::any_of(c.documents.begin(), c.documents.end(), [](const Document& x) { return x.domain == Domain::unknown; })) {
        out.push_back(Domain::unknown);
    }
    return out;
}

std::string domains_fingerprint(std::string_view name, const std::vector<std::pair<std::string, std::string>>& cfg,
                                const Corpus& corpus) {
    std::uint64_t h = fnv1a(name);
    for (const auto& [k, v] : cfg) h = fnv1a(k + "=" + v, mix64(h));
    for (const auto& d : corpus.documents) h = fnv1a(d.id, mix64(h));
    return hex64(h);
}

}  // namespace

DomainReport run_domain_experiment(const Corpus& corpus, DomainMode mode, const FeatureConfig& features,
                                   const FeatureResources& resources, const ModelConfig& model,
                                   std::size_t folds, int jobs) {
    if (folds < 2) throw ConfigError("domain experiments need at least two folds");
    const Corpus prepared = prepared_copy(corpus, resources);
    for (const auto& d : prepared.documents) {
        if (d.label == Label::unlabeled) throw DataError("document " + d.id + " has no label");
    }
    const auto domains = domains_present(prepared);
    std::vector<std::string> domain_keys;
    for (const Domain d : domains) domain_keys.emplace_back(domain_key(d));

    DomainReport rep;
    rep.mode = mode;
    struct Job {
        std::size_t row;
        SplitTask task;
    };
    std::vector<Job> jobs_list;
    for (std::size_t r = 0; r < domains.size(); ++r) {
        DomainRow row;
        row.domain = domains[r];
        std::vector<const Document*> in;
        std::vector<const Document*> out;
        for (const auto& d : prepared.documents) (d.domain == domains[r] ? in : out).push_back(&d);
        row.n = in.size();
        std::vector<std::string> ids;
        std::vector<int> y;
        for (const Document* d : in) {
            ids.push_back(d->id);
            y.push_back(d->is_complaint() ? 1 : 0);
        }
        row.positives = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
        const std::size_t f = std::min({folds, row.positives, row.n - row.positives});
        if (f < 2) {
            row.note = "too few examples of one class";
            rep.rows.push_back(row);
            continue;
        }
        if (f < folds) row.note = "folds reduced to " + std::to_string(f);
        row.folds = f;
        const auto seed = mix64(model.seed ^ fnv1a(domain_key(domains[r])));
        const auto assignment = stratified_assignment(ids, y, f, seed);
        for (std::size_t k = 0; k < f; ++k) {
            SplitTask t;
            for (std::size_t i = 0; i < in.size(); ++i) {
                (assignment[i] == static_cast<int>(k) ? t.test : t.train).push_back(in[i]);
            }
            if (mode != DomainMode::in_domain) t.train.insert(t.train.end(), out.begin(), out.end());
            if (mode == DomainMode::easyadapt) {
                t.domains = domain_keys;
                t.domain_of = [](const Document& d) { return std::string(domain_key(d.domain)); };
            }
            derive_inner_folds(t, 3, mix64(seed + k + 1));
            jobs_list.push_back({rep.rows.size(), std::move(t)});
        }
        rep.rows.push_back(row);
    }

    std::vector<double> f1(jobs_list.size());
    parallel_for(jobs_list.size(), jobs, [&](std::size_t i) {
        const auto& t = jobs_list[i].task;
        const auto res = run_split(t, features, resources, model);
        f1[i] = macro_f1(labels_of(t.test), threshold_scores(res.scores, model.threshold));
    });
    std::map<std::size_t, std::pair<double, std::size_t>> acc;
    for (std::size_t i = 0; i < jobs_list.size(); ++i) {
        auto& a = acc[jobs_list[i].row];
        a.first += f1[i];
        ++a.second;
    }
    for (const auto& [r, a] : acc) rep.rows[r].macro_f1 = a.first / static_cast<double>(a.second);

    auto cfg = model_config_lines(features, model);
    cfg.emplace_back("mode", std::string(domain_mode_name(mode)));
    cfg.emplace_back("folds", std::to_string(folds));
    rep.fingerprint = domains_fingerprint("domains", cfg, corpus);
    return rep;
}

CrossDomainReport run_crossdomain(const Corpus& corpus, const FeatureConfig& features,
                                  const FeatureResources& resources, const ModelConfig& model, int jobs) {
    const Corpus prepared = prepared_copy(corpus, resources);
    for (const auto& d : prepared.documents) {
        if (d.label == Label::unlabeled) throw DataError("document " + d.id + " has no label");
    }
    CrossDomainReport rep;
    rep.domains = domains_present(prepared);
    const std::size_t n = rep.domains.size();
    if (n < 2) throw DataError("cross-domain evaluation needs at least two domains");
    rep.auc.assign(n, std::vector<std::optional<double>>(n));
    rep.all_but_one.assign(n, std::nullopt);

    // tasks 0..n-1 train on one domain; n..2n-1 train on all but one
    std::vector<std::optional<SplitTask>> tasks(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        SplitTask one;
        SplitTask rest;
        for (const auto& d : prepared.documents) {
            if (d.domain == rep.domains[i]) {
                one.train.push_back(&d);
                rest.test.push_back(&d);
            } else {
                one.test.push_back(&d);
                rest.train.push_back(&d);
            }
        }
        const auto ok = [](const SplitTask& t) { return both_classes(labels_of(t.train)); };
        const auto seed = mix64(model.seed ^ fnv1a(domain_key(rep.domains[i])));
        if (ok(one)) {
            derive_inner_folds(one, 3, seed);
            tasks[i] = std::move(one);
        }
        if (ok(rest)) {
            derive_inner_folds(rest, 3, mix64(seed + 1));
            tasks[n + i] = std::move(rest);
        }
    }
    std::vector<std::vector<double>> scores(2 * n);
    parallel_for(2 * n, jobs, [&](std::size_t t) {
        if (tasks[t]) scores[t] = run_split(*tasks[t], features, resources, model).scores;
    });
    const auto auc_of = [](const std::vector<const Document*>& docs, const std::vector<double>& s) -> std::optional<double> {
        try {
            return roc_auc(labels_of(docs), s);
        } catch (const UndefinedError&) {
            return std::nullopt;
        }
    };
    for (std::size_t i = 0; i < n; ++i) {
        if (tasks[i]) {
            const auto& t = *tasks[i];
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                std::vector<const Document*> docs;
                std::vector<double> s;
                for (std::size_t k = 0; k < t.test.size(); ++k) {
                    if (t.test[k]->domain == rep.domains[j]) {
                        docs.push_back(t.test[k]);
                        s.push_back(scores[i][k]);
                    }
                }
                rep.auc[i][j] = auc_of(docs, s);
            }
        }
        if (tasks[n + i]) rep.all_but_one[i] = auc_of(tasks[n + i]->test, scores[n + i]);
    }
    rep.fingerprint = domains_fingerprint("crossdomain", model_config_lines(features, model), corpus);
    return rep;
}

// ---------------------------------------------------------------------------
// Writers

namespace {

std::string fx(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string fx(const std::optional<double>& v) {
    return v ? fx(*v) : std::string("NA");
}

}  // namespace

void write_report(std::ostream& out, const ExperimentReport& report) {
    out << "# experiment\t" << report.experiment << '\n';
    out << "# fingerprint\t" << report.fingerprint() << '\n';
    out << "# fold_plan\t" << report.fold_plan << '\n';
    for (const auto& [k, v] : report.config) out << "# config\t" << k << '=' << v << '\n';
    for (const auto& n : report.notes) out << "# note\t" << n << '\n';
    out << "fold\tn_train\tn_test\taccuracy\tmacro_f1\troc_auc\tparams\n";
    for (const auto& f : report.folds) {
        out << f.fold << '\t' << f.n_train << '\t' << f.n_test << '\t' << fx(f.metrics.accuracy) << '\t'
            << fx(f.metrics.macro_f1) << '\t' << fx(f.metrics.roc_auc) << '\t' << f.params << '\n';
    }
    out << "mean\t\t\t" << fx(report.mean.accuracy) << '\t' << fx(report.mean.macro_f1) << '\t'
        << fx(report.mean.roc_auc) << "\t\n";
}

void write_domain_table(std::ostream& out, const std::vector<DomainReport>& reports) {
    if (reports.empty()) return;
    out << "# experiment\tdomains\n";
    for (const auto& r : reports) out << "# fingerprint\t" << domain_mode_name(r.mode) << '\t' << r.fingerprint << '\n';
    out << "domain\tn\tpositives\tfolds";
    for (const auto& r : reports) out << '\t' << domain_mode_name(r.mode);
    out << "\tnote\n";
    const auto& base = reports.front();
    for (std::size_t i = 0; i < base.rows.size(); ++i) {
        const auto& row = base.rows[i];
        out << domain_display_name(row.domain) << '\t' << row.n << '\t' << row.positives << '\t' << row.folds;
        std::string note = row.note;
        for (const auto& r : reports) {
            out << '\t' << (i < r.rows.size() ? fx(r.rows[i].macro_f1) : std::string("NA"));
        }
        out << '\t' << note << '\n';
    }
}

void write_crossdomain(std::ostream& out, const CrossDomainReport& report) {
    out << "# experiment\tcrossdomain\n";
    out << "# fingerprint\t" << report.fingerprint << '\n';
    out << "train\\test";
    for (const Domain d : report.domains) out << '\t' << domain_display_name(d);
    out << '\n';
    for (std::size_t i = 0; i < report.domains.size(); ++i) {
        out << domain_display_name(report.domains[i]);
        for (std::size_t j = 0; j < report.domains.size(); ++j) {
            out << '\t' << (i == j ? std::string("-") : fx(report.auc[i][j]));
        }
        out << '\n';
    }
    out << "All";
    for (const auto& v : report.all_but_one) out << '\t' << fx(v);
    out << '\n';
}

}  // namespace complaints
