#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "complaints/cli.hpp"
#include "complaints/models.hpp"
#include "support/synthetic.hpp"

using namespace complaints;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "complaints");
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

struct Fixture {
    fs::path dir;
    std::string corpus;

    Fixture() {
        dir = synth::temp_dir("cli");
        corpus = synth::write_corpus_file(synth::make_corpus({.n = 120, .seed = 4}), dir / "c.tsv").string();
    }
};

const std::vector<std::string> kFast = {"--alphas", "0.01,0.1", "--rhos", "0.5", "--outer", "4"};

std::vector<std::string> cv_args(const Fixture& f, std::vector<std::string> extra = {}) {
    std::vector<std::string> a = {"cv", "--corpus", f.corpus, "--features", "bow,pos"};
    a.insert(a.end(), kFast.begin(), kFast.end());
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
}

}  // namespace

TEST_CASE("version and usage") {
    const auto v = run({"--version"});
    CHECK(v.code == 0);
    CHECK(v.out.find("model format v1") != std::string::npos);
    CHECK(run({"--help"}).code == 0);
    const auto bad = run({"cv", "--no-such-flag"});
    CHECK(bad.code == 1);
    CHECK_FALSE(bad.err.empty());
    CHECK(run({"nosuchcommand"}).code == 1);
}

TEST_CASE("user errors exit with 1") {
    Fixture f;
    CHECK(run({"cv", "--corpus", (f.dir / "missing.tsv").string()}).code == 1);
    const auto empty = run({"cv", "--corpus", f.corpus, "--features", ""});
    CHECK(empty.code == 1);
    CHECK(empty.err.find("error:") != std::string::npos);
    CHECK(run({"cv", "--corpus", f.corpus, "--features", "liwc"}).code == 1);
    CHECK(run({"cv", "--corpus", f.corpus, "--model", "svm"}).code == 1);
    CHECK(run({"--jobs", "0", "cv", "--corpus", f.corpus}).code == 1);
}

TEST_CASE("cv output is byte-identical across reruns and job counts") {
    Fixture f;
    const auto a = run(cv_args(f));
    REQUIRE(a.code == 0);
    CHECK(a.out.find("# fingerprint\t") != std::string::npos);
    CHECK(a.err.find("# resolved config: cv") != std::string::npos);
    const auto b = run(cv_args(f));
    auto par = cv_args(f);
    par.insert(par.begin(), {"--jobs", "3"});
    const auto c = run(par);
    CHECK(a.out == b.out);
    CHECK(a.out == c.out);
    auto other_seed = cv_args(f);
    other_seed.insert(other_seed.begin(), {"--seed", "99"});
    CHECK(run(other_seed).out != a.out);
}

TEST_CASE("saved splits reproduce the run") {
    Fixture f;
    const auto plan = (f.dir / "plan.tsv").string();
    const auto a = run(cv_args(f, {"--save-splits", plan}));
    REQUIRE(a.code == 0);
    REQUIRE(fs::exists(plan));
    const auto b = run(cv_args(f, {"--splits", plan}));
    REQUIRE(b.code == 0);
    // same fold plan fingerprint line
    const auto plan_line = [](const std::string& s) {
        const auto at = s.find("# fold_plan");
        return s.substr(at, s.find('\n', at) - at);
    };
    CHECK(plan_line(a.out) == plan_line(b.out));
}

TEST_CASE("config files") {
    Fixture f;
    const auto cfg = f.dir / "run.cfg";
    spit(cfg, "# fast grid\nalphas = 0.01\nrhos = 0.5\nouter = 4\nfeatures = bow\n");
    const auto from_file = run({"--config", cfg.string(), "cv", "--corpus", f.corpus});
    REQUIRE(from_file.code == 0);
    const auto direct = run({"cv", "--corpus", f.corpus, "--alphas", "0.01", "--rhos", "0.5", "--outer", "4",
                             "--features", "bow"});
    CHECK(from_file.out == direct.out);

    // command line wins over the file
    const auto override_run = run({"--config", cfg.string(), "cv", "--corpus", f.corpus, "--features", "pos"});
    REQUIRE(override_run.code == 0);
    CHECK(override_run.out.find("# config\tfeatures=pos\n") != std::string::npos);

    spit(cfg, "alphas = 0.01\nbogus_key = 3\n");
    CHECK(run({"--config", cfg.string(), "cv", "--corpus", f.corpus}).code == 1);

    std::istringstream dup("a = 1\na = 2\n");
    CHECK_THROWS_AS(read_config_file(dup), ConfigError);
    std::istringstream bad("just words\n");
    CHECK_THROWS_AS(read_config_file(bad), ConfigError);
    std::istringstream ok("--seed = 5 # trailing\n\n# note\nfeatures=bow,pos\n");
    const auto m = read_config_file(ok);
    CHECK(m.at("seed") == "5");
    CHECK(m.at("features") == "bow,pos");
}

TEST_CASE("dry run validates without writing") {
    Fixture f;
    const auto out = f.dir / "report.tsv";
    const auto r = run({"--dry-run", "cv", "--corpus", f.corpus, "--out", out.string()});
    CHECK(r.code == 0);
    CHECK_FALSE(fs::exists(out));
    CHECK(r.err.find("# resolved config: cv") != std::string::npos);
    CHECK(run({"--dry-run", "cv", "--corpus", f.corpus, "--features", "clusters"}).code == 1);
}

TEST_CASE("train writes a loadable model and featurize writes the matrix") {
    Fixture f;
    const auto model = f.dir / "m.txt";
    const auto schema = f.dir / "schema.txt";
    REQUIRE(run({"train", "--corpus", f.corpus, "--features", "bow", "--alpha", "0.01", "--rho", "0.5", "--out",
                 model.string(), "--schema", schema.string()})
                .code == 0);
    const auto m = load_model(model);
    REQUIRE(std::holds_alternative<LinearModel>(m));
    CHECK_FALSE(std::get<LinearModel>(m).weights.empty());
    CHECK(fs::file_size(schema) > 0);

    const auto fz = run({"featurize", "--corpus", f.corpus, "--features", "bow"});
    REQUIRE(fz.code == 0);
    CHECK(fz.out.find("s00000\t") != std::string::npos);
}

TEST_CASE("experiment subcommands run on a small corpus") {
    Fixture f;
    synth::write_distant_files(f.dir / "p.txt", f.dir / "n.txt", 80, 2);
    const auto d = run({"distant", "--corpus", f.corpus, "--distant-pos", (f.dir / "p.txt").string(), "--distant-neg",
                        (f.dir / "n.txt").string(), "--mode", "easyadapt", "--features", "bow,pos", "--alphas", "0.01",
                        "--rhos", "0.5", "--outer", "3"});
    CHECK(d.code == 0);
    CHECK(d.out.find("easyadapt") != std::string::npos);

    const auto dom = run({"domains", "--corpus", f.corpus, "--features", "bow", "--alphas", "0.01", "--rhos", "0.5",
                          "--folds", "3"});
    CHECK(dom.code == 0);
    const auto cross = run({"crossdomain", "--corpus", f.corpus, "--features", "bow", "--alphas", "0.01", "--rhos",
                            "0.5"});
    CHECK(cross.code == 0);
    CHECK(cross.out.find("All") != std::string::npos);

    const auto an = run({"analyze", "--corpus", f.corpus, "--family", "unigrams", "--top", "5"});
    CHECK(an.code == 0);
    CHECK(an.out.find("bow:") != std::string::npos);
    CHECK(run({"analyze", "--corpus", f.corpus, "--family", "unigrams", "--format", "xml"}).code == 1);
}

TEST_CASE("kappa subcommand") {
    Fixture f;
    spit(f.dir / "a.tsv", "t1\t1\nt2\t1\nt3\t0\nt4\t0\n");
    spit(f.dir / "b.tsv", "t1\t1\nt2\t0\nt3\t1\nt4\t0\n");
    const auto r = run({"kappa", "--a", (f.dir / "a.tsv").string(), "--b", (f.dir / "b.tsv").string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("kappa\t0\n") != std::string::npos);
    spit(f.dir / "c.tsv", "t1\t1\nt9\t0\n");
    CHECK(run({"kappa", "--a", (f.dir / "a.tsv").string(), "--b", (f.dir / "c.tsv").string()}).code == 1);
}

TEST_CASE("tag and clusters subcommands") {
    Fixture f;
    spit(f.dir / "train.txt", "I\tPRP\nbought\tVBD\nit\tPRP\n\nmy\tPRP$\nphone\tNN\n");
    const auto model = f.dir / "tagger.txt";
    REQUIRE(run({"tag", "--train", (f.dir / "train.txt").string(), "--epochs", "3", "--out", model.string()}).code == 0);
    CHECK(slurp(model).rfind("ppn-tagger v1", 0) == 0);
    const auto tagged = run({"tag", "--corpus", f.corpus, "--tagger", model.string()});
    CHECK(tagged.code == 0);
    CHECK(tagged.out.find("pos_tags") != std::string::npos);

    spit(f.dir / "emb.txt", "a 1 0\nb 0.9 0.1\nc 0 1\nd 0.1 0.9\n");
    const auto cl = run({"clusters", "--embeddings", (f.dir / "emb.txt").string(), "--k", "2"});
    REQUIRE(cl.code == 0);
    CHECK(cl.out.find("a\t") != std::string::npos);
    CHECK(run({"clusters", "--embeddings", (f.dir / "emb.txt").string(), "--k", "9"}).code == 1);
}
