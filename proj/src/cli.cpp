#include "complaints/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <functional>
#include <istream>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "complaints/analysis.hpp"
#include "complaints/clusters.hpp"
#include "complaints/common.hpp"
#include "complaints/corpus.hpp"
#include "complaints/eval.hpp"
#include "complaints/features.hpp"
#include "complaints/lexicons.hpp"
#include "complaints/models.hpp"
#include "complaints/textproc.hpp"

namespace complaints {

std::map<std::string, std::string> read_config_file(std::istream& in) {
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        auto key = trim(std::string_view(body).substr(0, eq));
        auto value = trim(std::string_view(body).substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        if (key.starts_with("--")) key.erase(0, 2);
        if (!out.emplace(key, value).second) {
            throw ConfigError("config line " + std::to_string(line_no) + ": repeated key '" + key + "'");
        }
    }
    return out;
}

namespace {

struct Options {
    // global
    std::uint64_t seed = 0;
    int jobs = 1;
    std::string config;
    bool dry_run = false;
    bool version = false;

    // data
    std::string corpus;
    std::string splits;
    std::string save_splits;
    std::size_t outer = 10;
    std::size_t inner = 3;
    std::string out;
    std::string schema;

    // resources
    std::string tagger;
    std::string liwc;
    std::string mpqa;
    std::string nrc;
    std::string clusters;
    std::string valence;
    std::string markers;

    // features and model
    std::string features = "bow";
    std::string model = "logreg";
    std::string alphas = "0.0001,0.001,0.01,0.1,1";
    std::string rhos = "0,0.25,0.5,0.75,1";
    double alpha = 1e-2;
    double rho = 0.5;
    double tol = 1e-6;
    int max_epochs = 1000;
    double threshold = 0.5;
    std::size_t mlp_embed = 200;
    std::size_t mlp_hidden = 100;
    double mlp_dropout = 0.2;
    double mlp_lr = 0.01;
    int mlp_epochs = 30;
    std::size_t mlp_batch = 32;

    // distant / domains
    std::string distant;
    std::string distant_pos;
    std::string distant_neg;
    std::string hashtags;
    std::string mode = "all";
    std::size_t folds = 10;

    // analyze
    std::string family = "unigrams";
    std::size_t top = 20;
    double cutoff = 0.01;
    std::string format = "tsv";

    // kappa
    std::string labels_a;
    std::string labels_b;

    // clusters
    std::string embeddings;
    std::size_t k = 0;
    std::size_t min_df = 2;

    // tag
    std::string train_tagged;
    int tag_epochs = 5;
    double heldout = 0.1;
};

std::vector<double> parse_list(std::string_view s, std::string_view what) {
    std::vector<double> v;
    for (const auto& part : split(s, ',')) {
        const auto t = trim(part);
        if (t.empty()) continue;
        try {
            v.push_back(parse_double(t));
        } catch (const Error&) {
            throw ConfigError("bad value '" + t + "' in " + std::string(what));
        }
    }
    if (v.empty()) throw ConfigError(std::string(what) + " must not be empty");
    return v;
}

class Writer {
public:
    Writer(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
            if (!*file_) throw DataError("cannot write " + path);
            stream_ = file_.get();
        }
    }
    std::ostream& operator*() { return *stream_; }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* stream_;
};

FeatureResources load_resources(const Options& o) {
    auto r = FeatureResources::defaults();
    const auto lex = [](const std::string& path) {
        return std::make_shared<const LexiconMatcher>(load_lexicon(path));
    };
    if (!o.tagger.empty()) r.tagger = std::make_shared<const TaggerModel>(load_tagger(o.tagger));
    if (!o.liwc.empty()) r.liwc = lex(o.liwc);
    if (!o.mpqa.empty()) r.mpqa = lex(o.mpqa);
    if (!o.nrc.empty()) r.nrc = lex(o.nrc);
    if (!o.valence.empty()) r.valence = lex(o.valence);
    if (!o.markers.empty()) r.markers = lex(o.markers);
    if (!o.clusters.empty()) r.clusters = std::make_shared<const ClusterMap>(load_cluster_map(o.clusters));
    return r;
}

ModelConfig model_config(const Options& o) {
    ModelConfig m;
    m.kind = parse_model_kind(o.model);
    m.alphas = parse_list(o.alphas, "alphas");
    m.rhos = parse_list(o.rhos, "rhos");
    for (const double a : m.alphas) {
        if (!(a > 0.0)) throw ConfigError("alphas must be positive");
    }
    for (const double r : m.rhos) {
        if (r < 0.0 || r > 1.0) throw ConfigError("rhos must lie in [0, 1]");
    }
    if (o.tol <= 0.0) throw ConfigError("tol must be positive");
    if (o.max_epochs < 1) throw ConfigError("max-epochs must be at least 1");
    if (o.threshold < 0.0 || o.threshold > 1.0) throw ConfigError("threshold must lie in [0, 1]");
    m.logreg.tol = o.tol;
    m.logreg.max_epochs = o.max_epochs;
    m.logreg.seed = o.seed;
    m.mlp.embed_dim = o.mlp_embed;
    m.mlp.hidden = o.mlp_hidden;
    m.mlp.dropout = o.mlp_dropout;
    m.mlp.lr = o.mlp_lr;
    m.mlp.epochs = o.mlp_epochs;
    m.mlp.batch = o.mlp_batch;
    m.mlp.min_df = o.min_df;
    if (m.mlp.dropout < 0.0 || m.mlp.dropout >= 1.0) throw ConfigError("mlp-dropout must lie in [0, 1)");
    if (m.mlp.embed_dim == 0 || m.mlp.hidden == 0 || m.mlp.batch == 0) throw ConfigError("mlp sizes must be positive");
    m.seed = o.seed;
    m.threshold = o.threshold;
    return m;
}

std::vector<int> labels_of(const Corpus& c) {
    std::vector<int> y;
    for (const auto& d : c.documents) {
        if (d.label == Label::unlabeled) throw DataError("document " + d.id + " has no label");
        y.push_back(d.is_complaint() ? 1 : 0);
    }
    return y;
}

std::vector<const Document*> pointers(const Corpus& c) {
    std::vector<const Document*> p;
    for (const auto& d : c.documents) p.push_back(&d);
    return p;
}

int parse_binary_label(std::string_view s) {
    const auto v = to_lower_ascii(trim(s));
    if (v == "1" || v == "complaint") return 1;
    if (v == "0" || v == "not_complaint" || v == "non-complaint" || v == "not") return 0;
    throw DataError("unrecognized label '" + std::string(s) + "'");
}

std::map<std::string, int> read_label_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read " + path);
    std::map<std::string, int> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const auto f = split(line, '\t');
        if (f.size() != 2) throw FormatError(path + ": expected id<TAB>label");
        if (!out.emplace(f[0], parse_binary_label(f[1])).second) {
            throw IntegrityError(path + ": duplicate id " + f[0]);
        }
    }
    return out;
}

std::vector<std::string> split_modes(const std::string& s, const std::vector<std::string>& all) {
    if (to_lower_ascii(trim(s)) == "all") return all;
    std::vector<std::string> out;
    for (const auto& p : split(s, ',')) {
        const auto t = trim(p);
        if (!t.empty()) out.push_back(t);
    }
    if (out.empty()) throw ConfigError("empty mode list");
    return out;
}

// --- subcommands -----------------------------------------------------------

int cmd_featurize(const Options& o, std::ostream& out) {
    const auto cfg = feature_config_from(o.features);
    const auto res = load_resources(o);
    resolve_families(cfg, res);
    Corpus corpus = load_corpus(o.corpus);
    if (o.dry_run) return 0;
    prepare_corpus(corpus, *res.tagger);
    const auto pipeline = FeaturePipeline::fit(pointers(corpus), cfg, res);
    std::vector<std::string> ids;
    std::vector<FeatureVector> vectors;
    for (const auto& d : corpus.documents) {
        ids.push_back(d.id);
        vectors.push_back(pipeline.transform(d));
    }
    Writer w(o.out, out);
    write_feature_matrix(*w, ids, vectors);
    if (!o.schema.empty()) {
        Writer s(o.schema, out);
        write_schema_manifest(*s, FeatureSchema::from_vectors(vectors));
    }
    return 0;
}

int cmd_train(const Options& o, std::ostream& out) {
    const auto cfg = feature_config_from(o.features);
    const auto res = load_resources(o);
    const auto mc = model_config(o);
    if (mc.kind == ModelKind::logreg) resolve_families(cfg, res);
    if (!(o.alpha > 0.0) || o.rho < 0.0 || o.rho > 1.0) throw ConfigError("alpha must be positive, rho in [0, 1]");
    Corpus corpus = load_corpus(o.corpus);
    const auto y = labels_of(corpus);
    if (o.dry_run) return 0;
    prepare_corpus(corpus, *res.tagger);
    AnyModel model;
    switch (mc.kind) {
        case ModelKind::mfc: model = train_mfc(y); break;
        case ModelKind::mlp: {
            std::vector<TokenSeq> docs;
            for (const auto& d : corpus.documents) docs.push_back(*d.tokens);
            model = train_mlp(docs, y, mc.mlp, mc.seed);
            break;
        }
        case ModelKind::logreg: {
            const auto pipeline = FeaturePipeline::fit(pointers(corpus), cfg, res);
            std::vector<FeatureVector> vectors;
            for (const auto& d : corpus.documents) vectors.push_back(pipeline.transform(d));
            model = train_logreg(vectors, y, o.alpha, o.rho, mc.logreg);
            if (!o.schema.empty()) {
                Writer s(o.schema, out);
                write_schema_manifest(*s, FeatureSchema::from_vectors(vectors));
            }
            break;
        }
    }
    Writer w(o.out, out);
    write_model(*w, model);
    return 0;
}

FoldPlan fold_plan_for(const Options& o, const Corpus& corpus) {
    if (o.outer < 2 || o.inner < 2) throw ConfigError("outer and inner fold counts must be at least 2");
    FoldPlan plan = o.splits.empty() ? plan_nested_folds(corpus, o.outer, o.inner, o.seed)
                                     : load_fold_plan(o.splits, corpus, o.inner, o.seed);
    if (!o.save_splits.empty()) save_fold_plan(o.save_splits, plan);
    return plan;
}

int cmd_cv(const Options& o, std::ostream& out) {
    const auto cfg = feature_config_from(o.features);
    const auto res = load_resources(o);
    const auto mc = model_config(o);
    if (mc.kind == ModelKind::logreg) resolve_families(cfg, res);
    const Corpus corpus = load_corpus(o.corpus);
    labels_of(corpus);
    const auto plan = fold_plan_for(o, corpus);
    if (o.dry_run) return 0;
    const auto rep = run_nested_cv(corpus, plan, cfg, res, mc, o.jobs);
    Writer w(o.out, out);
    write_report(*w, rep);
    return 0;
}

int cmd_distant(const Options& o, std::ostream& out) {
    const auto cfg = feature_config_from(o.features);
    const auto res = load_resources(o);
    const auto mc = model_config(o);
    if (mc.kind == ModelKind::logreg) resolve_families(cfg, res);
    std::vector<DistantMode> modes;
    for (const auto& m : split_modes(o.mode, {"annotated", "pooling", "easyadapt"})) modes.push_back(parse_distant_mode(m));
    const Corpus corpus = load_corpus(o.corpus);
    labels_of(corpus);
    Corpus distant;
    if (!o.distant.empty()) {
        distant = load_corpus(o.distant, "distant");
    } else if (!o.distant_pos.empty() && !o.distant_neg.empty()) {
        std::set<std::string> tags = default_trigger_hashtags();
        if (!o.hashtags.empty()) {
            tags.clear();
            for (const auto& h : split(o.hashtags, ',')) {
                auto t = to_lower_ascii(trim(h));
                if (!t.empty() && t.front() != '#') t.insert(t.begin(), '#');
                if (!t.empty()) tags.insert(t);
            }
        }
        distant = ingest_distant(o.distant_pos, o.distant_neg, tags);
    } else {
        throw ConfigError("distant needs --distant or both --distant-pos and --distant-neg");
    }
    const auto plan = fold_plan_for(o, corpus);
    if (o.dry_run) return 0;
    Writer w(o.out, out);
    for (std::size_t i = 0; i < modes.size(); ++i) {
        const auto rep = run_distant_experiment(corpus, distant, modes[i], plan, cfg, res, mc, o.jobs);
        if (i > 0) *w << '\n';
        write_report(*w, rep);
    }
    return 0;
}

int cmd_domains(const Options& o, std::ostream& out) {
    const auto cfg = feature_config_from(o.features);
    const auto res = load_resources(o);
    const auto mc = model_config(o);
    if (mc.kind == ModelKind::logreg) resolve_families(cfg, res);
    std::vector<DomainMode> modes;
    for (const auto& m : split_modes(o.mode, {"in_domain", "pooling", "easyadapt"})) modes.push_back(parse_domain_mode(m));
    if (o.folds < 2) throw ConfigError("folds must be at least 2");
    const Corpus corpus = load_corpus(o.corpus);
    labels_of(corpus);
    if (o.dry_run) return 0;
    std::vector<DomainReport> reports;
    for (const auto m : modes) reports.push_back(run_domain_experiment(corpus, m, cfg, res, mc, o.folds, o.jobs));
    Writer w(o.out, out);
    write_domain_table(*w, reports);
    return 0;
}

int cmd_crossdomain(const Options& o, std::ostream& out) {
    const auto cfg = feature_config_from(o.features);
    const auto res = load_resources(o);
    const auto mc = model_config(o);
    if (mc.kind == ModelKind::logreg) resolve_families(cfg, res);
    const Corpus corpus = load_corpus(o.corpus);
    labels_of(corpus);
    if (o.dry_run) return 0;
    const auto rep = run_crossdomain(corpus, cfg, res, mc, o.jobs);
    Writer w(o.out, out);
    write_crossdomain(*w, rep);
    return 0;
}

int cmd_analyze(const Options& o, std::ostream& out) {
    const auto res = load_resources(o);
    if (o.format != "tsv" && o.format != "text") throw ConfigError("format must be tsv or text");
    if (o.top == 0) throw ConfigError("top must be positive");
    if (!(o.cutoff > 0.0) || o.cutoff > 1.0) throw ConfigError("cutoff must lie in (0, 1]");
    const Corpus corpus = load_corpus(o.corpus);
    labels_of(corpus);
    if (o.dry_run) return 0;
    const auto rep = correlation_report(corpus, o.family, res, o.top, o.cutoff);
    Writer w(o.out, out);
    if (o.format == "tsv") {
        write_correlation_tsv(*w, rep);
    } else {
        write_correlation_text(*w, rep);
    }
    return 0;
}

int cmd_kappa(const Options& o, std::ostream& out) {
    const auto a = read_label_file(o.labels_a);
    const auto b = read_label_file(o.labels_b);
    if (o.dry_run) return 0;
    std::vector<int> va;
    std::vector<int> vb;
    for (const auto& [id, label] : a) {
        const auto it = b.find(id);
        if (it == b.end()) continue;
        va.push_back(label);
        vb.push_back(it->second);
    }
    if (va.empty()) throw DataError("the two label files share no ids");
    Writer w(o.out, out);
    *w << "n\t" << va.size() << '\n';
    *w << "only_a\t" << a.size() - va.size() << '\n';
    *w << "only_b\t" << b.size() - va.size() << '\n';
    *w << "kappa\t" << format_double(cohen_kappa(va, vb)) << '\n';
    return 0;
}

int cmd_clusters(const Options& o, std::ostream& out) {
    if (o.k == 0) throw ConfigError("clusters needs --k > 0");
    const auto emb = load_embeddings(o.embeddings);
    std::vector<std::string> vocab;
    if (!o.corpus.empty()) {
        Corpus corpus = load_corpus(o.corpus);
        std::vector<std::vector<std::string>> units;
        for (const auto& d : corpus.documents) units.push_back(bow_units(tokenize(d.clean_text)));
        for (const auto& word : build_vocab(units, o.min_df).words) {
            if (emb.contains(word)) vocab.push_back(word);
        }
    } else {
        vocab = emb.words();
    }
    std::sort(vocab.begin(), vocab.end());
    if (vocab.size() < o.k) {
        throw ConfigError("k = " + std::to_string(o.k) + " exceeds the " + std::to_string(vocab.size()) + " clusterable words");
    }
    if (o.dry_run) return 0;
    const auto cm = cluster_words(emb, vocab, o.k, o.seed);
    Writer w(o.out, out);
    write_cluster_map(*w, cm);
    return 0;
}

int cmd_tag(const Options& o, std::ostream& out, std::ostream& err) {
    if (!o.train_tagged.empty()) {
        if (o.tag_epochs < 1) throw ConfigError("epochs must be at least 1");
        if (o.heldout < 0.0 || o.heldout >= 1.0) throw ConfigError("heldout must lie in [0, 1)");
        const auto data = read_tagged_sentences(std::filesystem::path(o.train_tagged));
        if (o.dry_run) return 0;
        const auto res = train_pos_tagger(data, o.tag_epochs, o.seed, o.heldout);
        err << "heldout_sentences = " << res.heldout_sentences << '\n';
        err << "heldout_accuracy = " << format_double(res.heldout_accuracy) << '\n';
        Writer w(o.out, out);
        write_tagger(*w, res.model);
        return 0;
    }
    if (o.corpus.empty()) throw ConfigError("tag needs --train or --corpus");
    const auto res = load_resources(o);
    Corpus corpus = load_corpus(o.corpus);
    if (o.dry_run) return 0;
    prepare_corpus(corpus, *res.tagger);
    for (auto& d : corpus.documents) {
        std::vector<std::string> tags;
        for (const auto& t : *d.tokens) tags.push_back(t.pos.value_or("?"));
        d.pos_tags = std::move(tags);
    }
    Writer w(o.out, out);
    write_corpus(*w, corpus);
    return 0;
}

// --- option registration ---------------------------------------------------

void add_resources(CLI::App* s, Options& o) {
    s->add_option("--tagger", o.tagger, "POS tagger model file");
    s->add_option("--liwc", o.liwc, "LIWC-format lexicon");
    s->add_option("--mpqa", o.mpqa, "MPQA subjectivity lexicon");
    s->add_option("--nrc", o.nrc, "NRC emotion lexicon");
    s->add_option("--clusters", o.clusters, "word<TAB>cluster map");
    s->add_option("--valence", o.valence, "scored lexicon for the rule-based sentiment score");
    s->add_option("--markers", o.markers, "complaint marker lexicon (bundled default)");
}

void add_model(CLI::App* s, Options& o) {
    s->add_option("--features", o.features, "feature families, comma separated, or 'all'");
    s->add_option("--model", o.model, "mfc | logreg | mlp");
    s->add_option("--alphas", o.alphas, "regularization strengths searched by inner CV");
    s->add_option("--rhos", o.rhos, "L1 ratios searched by inner CV");
    s->add_option("--tol", o.tol, "coordinate descent tolerance");
    s->add_option("--max-epochs", o.max_epochs, "coordinate descent sweep limit");
    s->add_option("--threshold", o.threshold, "positive iff probability > threshold");
    s->add_option("--mlp-embed", o.mlp_embed, "MLP embedding size");
    s->add_option("--mlp-hidden", o.mlp_hidden, "MLP hidden units");
    s->add_option("--mlp-dropout", o.mlp_dropout, "MLP dropout rate");
    s->add_option("--mlp-lr", o.mlp_lr, "MLP Adam learning rate");
    s->add_option("--mlp-epochs", o.mlp_epochs, "MLP epochs");
    s->add_option("--mlp-batch", o.mlp_batch, "MLP batch size");
    s->add_option("--min-df", o.min_df, "minimum document frequency for MLP and cluster vocabularies");
}

void add_splits(CLI::App* s, Options& o) {
    s->add_option("--splits", o.splits, "fold plan file");
    s->add_option("--save-splits", o.save_splits, "write the fold plan used");
    s->add_option("--outer", o.outer, "outer folds when no plan is given");
    s->add_option("--inner", o.inner, "inner folds");
}

bool is_flag(const CLI::Option* opt) {
    return opt->get_expected_max() == 0;
}

std::string option_value(const CLI::Option* opt) {
    if (is_flag(opt)) return opt->count() > 0 ? "true" : "false";
    if (opt->count() > 0) {
        std::string v;
        for (const auto& r : opt->results()) v += (v.empty() ? "" : ",") + r;
        return v;
    }
    return opt->get_default_str();
}

void emit_resolved(std::ostream& err, const CLI::App& app, const CLI::App* sub) {
    err << "# resolved config: " << sub->get_name() << '\n';
    for (const CLI::App* a : {&app, sub}) {
        for (const CLI::Option* opt : a->get_options()) {
            const auto name = opt->get_single_name();
            if (name == "help" || name == "version" || name == "config") continue;
            err << name << " = " << option_value(opt) << '\n';
        }
    }
}

bool given_on_command_line(const std::vector<std::string>& args, const std::string& key) {
    const std::string flag = "--" + key;
    return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
        return a == flag || a.starts_with(flag + "=");
    });
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Complaint detection toolkit", "complaints"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(0, 1);
    app.fallthrough();
    app.add_option("--seed", o.seed, "seed for every randomized step");
    app.add_option("--jobs", o.jobs, "parallel folds")->check(CLI::PositiveNumber);
    app.add_option("--config", o.config, "key = value file; command-line flags win");
    app.add_flag("--dry-run", o.dry_run, "validate configuration and resources, then stop");
    app.add_flag("--version", o.version, "print toolkit and file format versions");

    std::map<std::string, std::function<int()>> handlers;
    const auto sub = [&](const std::string& name, const std::string& desc) { return app.add_subcommand(name, desc); };

    auto* featurize = sub("featurize", "write the sparse feature matrix of a corpus");
    featurize->add_option("--corpus", o.corpus, "corpus TSV")->required();
    featurize->add_option("--out", o.out, "matrix output (default stdout)");
    featurize->add_option("--schema", o.schema, "schema manifest output");
    add_model(featurize, o);
    add_resources(featurize, o);
    handlers["featurize"] = [&] { return cmd_featurize(o, out); };

    auto* train = sub("train", "fit one model on a whole corpus");
    train->add_option("--corpus", o.corpus, "corpus TSV")->required();
    train->add_option("--out", o.out, "model output (default stdout)");
    train->add_option("--schema", o.schema, "schema manifest output");
    train->add_option("--alpha", o.alpha, "regularization strength");
    train->add_option("--rho", o.rho, "L1 ratio");
    add_model(train, o);
    add_resources(train, o);
    handlers["train"] = [&] { return cmd_train(o, out); };

    auto* cv = sub("cv", "nested cross-validation");
    cv->add_option("--corpus", o.corpus, "corpus TSV")->required();
    cv->add_option("--out", o.out, "report output (default stdout)");
    add_splits(cv, o);
    add_model(cv, o);
    add_resources(cv, o);
    handlers["cv"] = [&] { return cmd_cv(o, out); };

    auto* distant = sub("distant", "distant supervision experiments");
    distant->add_option("--corpus", o.corpus, "annotated corpus TSV")->required();
    distant->add_option("--distant", o.distant, "distant corpus TSV");
    distant->add_option("--distant-pos", o.distant_pos, "raw texts collected by complaint hashtags");
    distant->add_option("--distant-neg", o.distant_neg, "raw random texts");
    distant->add_option("--hashtags", o.hashtags, "trigger hashtags to strip, comma separated");
    distant->add_option("--mode", o.mode, "annotated,pooling,easyadapt or all");
    distant->add_option("--out", o.out, "report output (default stdout)");
    add_splits(distant, o);
    add_model(distant, o);
    add_resources(distant, o);
    handlers["distant"] = [&] { return cmd_distant(o, out); };

    auto* domains = sub("domains", "per-domain in-domain, pooling and EasyAdapt scores");
    domains->add_option("--corpus", o.corpus, "corpus TSV")->required();
    domains->add_option("--mode", o.mode, "in_domain,pooling,easyadapt or all");
    domains->add_option("--folds", o.folds, "folds per domain");
    domains->add_option("--out", o.out, "table output (default stdout)");
    add_model(domains, o);
    add_resources(domains, o);
    handlers["domains"] = [&] { return cmd_domains(o, out); };

    auto* cross = sub("crossdomain", "train on one domain, test on the others");
    cross->add_option("--corpus", o.corpus, "corpus TSV")->required();
    cross->add_option("--out", o.out, "table output (default stdout)");
    add_model(cross, o);
    add_resources(cross, o);
    handlers["crossdomain"] = [&] { return cmd_crossdomain(o, out); };

    auto* analyze = sub("analyze", "features correlated with the complaint label");
    analyze->add_option("--corpus", o.corpus, "corpus TSV")->required();
    analyze->add_option("--family", o.family, "unigrams | pos | liwc | clusters | sent | cmp");
    analyze->add_option("--top", o.top, "entries per side");
    analyze->add_option("--cutoff", o.cutoff, "adjusted p-value cutoff");
    analyze->add_option("--format", o.format, "tsv | text");
    analyze->add_option("--out", o.out, "report output (default stdout)");
    add_resources(analyze, o);
    handlers["analyze"] = [&] { return cmd_analyze(o, out); };

    auto* kappa = sub("kappa", "Cohen's kappa between two id<TAB>label files");
    kappa->add_option("--a", o.labels_a, "first annotator")->required();
    kappa->add_option("--b", o.labels_b, "second annotator")->required();
    kappa->add_option("--out", o.out, "output (default stdout)");
    handlers["kappa"] = [&] { return cmd_kappa(o, out); };

    auto* clusters = sub("clusters", "spectral clustering of word embeddings");
    clusters->add_option("--embeddings", o.embeddings, "text embedding file")->required();
    clusters->add_option("--k", o.k, "number of clusters")->required();
    clusters->add_option("--corpus", o.corpus, "restrict to this corpus's vocabulary");
    clusters->add_option("--min-df", o.min_df, "minimum document frequency");
    clusters->add_option("--out", o.out, "cluster map output (default stdout)");
    handlers["clusters"] = [&] { return cmd_clusters(o, out); };

    auto* tag = sub("tag", "train a POS tagger or tag a corpus");
    tag->add_option("--train", o.train_tagged, "token<TAB>tag training file");
    tag->add_option("--epochs", o.tag_epochs, "perceptron epochs");
    tag->add_option("--heldout", o.heldout, "share of sentences held out for accuracy");
    tag->add_option("--corpus", o.corpus, "corpus TSV to tag");
    tag->add_option("--tagger", o.tagger, "tagger model (rule-based when absent)");
    tag->add_option("--out", o.out, "model or tagged corpus output (default stdout)");
    handlers["tag"] = [&] { return cmd_tag(o, out, err); };

    std::vector<std::string> argv(args.begin() + (args.empty() ? 0 : 1), args.end());
    try {
        // config file values go in right after the subcommand unless the
        // same flag was given explicitly
        const auto cfg_it = std::find(argv.begin(), argv.end(), "--config");
        std::string cfg_path;
        if (cfg_it != argv.end() && cfg_it + 1 != argv.end()) cfg_path = *(cfg_it + 1);
        for (const auto& a : argv) {
            if (a.starts_with("--config=")) cfg_path = a.substr(9);
        }
        if (!cfg_path.empty()) {
            std::ifstream in(cfg_path);
            if (!in) throw ConfigError("cannot read config file " + cfg_path);
            const auto cfg = read_config_file(in);
            const auto sub_pos = std::find_if(argv.begin(), argv.end(),
                                              [&](const std::string& a) { return handlers.contains(a); });
            CLI::App* chosen = sub_pos == argv.end() ? nullptr : app.get_subcommand(*sub_pos);
            std::vector<std::string> injected;
            for (const auto& [key, value] : cfg) {
                const CLI::Option* opt = chosen ? chosen->get_option_no_throw("--" + key) : nullptr;
                if (!opt) opt = app.get_option_no_throw("--" + key);
                if (!opt || key == "config" || key == "help") throw ConfigError("unknown config key '" + key + "'");
                if (given_on_command_line(argv, key)) continue;
                if (is_flag(opt)) {
                    const auto v = to_lower_ascii(value);
                    if (v == "true" || v == "1" || v == "yes") injected.push_back("--" + key);
                    else if (v != "false" && v != "0" && v != "no") throw ConfigError("flag '" + key + "' needs true or false");
                } else {
                    injected.push_back("--" + key);
                    injected.push_back(value);
                }
            }
            const auto at = sub_pos == argv.end() ? argv.end() : sub_pos + 1;
            argv.insert(at, injected.begin(), injected.end());
        }
        std::vector<std::string> reversed(argv.rbegin(), argv.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }

    if (o.version) {
        out << "complaints " << kToolkitVersion << '\n';
        out << "model format v" << kModelFormatVersion << '\n';
        out << "tagger format ppn-tagger v1\n";
        out << "fold plan format v1\n";
        return 0;
    }
    const auto chosen = app.get_subcommands();
    if (chosen.empty()) {
        err << app.help();
        return 1;
    }
    const CLI::App* s = chosen.front();
    try {
        emit_resolved(err, app, s);
        const int rc = handlers.at(s->get_name())();
        if (o.dry_run) err << "# dry run: configuration and resources are valid\n";
        return rc;
    } catch (const InvariantError& e) {
        err << "internal error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace complaints
