#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numeric>
#include <sstream>

#include "complaints/clusters.hpp"
#include "complaints/common.hpp"
#include "complaints/textproc.hpp"
#include "support/oracles.hpp"

using namespace complaints;

namespace {

Matrix random_affinity(std::size_t n, Rng& rng, double density = 1.0) {
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        a(i, i) = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = rng.uniform() < density ? rng.uniform() : 0.0;
            a(i, j) = a(j, i) = v;
        }
    }
    return a;
}

// Two groups with strong inner and weak cross affinities.
Matrix planted(std::size_t n, const std::vector<int>& group, Rng& rng) {
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        a(i, i) = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = group[i] == group[j] ? rng.uniform(0.4, 1.0) : rng.uniform(0.0, 0.15);
            a(i, j) = a(j, i) = v;
        }
    }
    return a;
}

EmbeddingTable table(const std::vector<std::pair<std::string, std::vector<double>>>& rows) {
    EmbeddingTable t(rows.front().second.size());
    for (const auto& [w, v] : rows) t.add(w, v);
    return t;
}

}  // namespace

TEST_CASE("similarity graph examples") {
    const auto t = table({{"a", {1, 0}}, {"b", {1, 1}}, {"c", {0, 1}}, {"d", {1, 0}}, {"e", {-1, 0}}});
    const auto a = similarity_graph(t, {"a", "b", "c", "d", "e"});
    CHECK(a(0, 3) == doctest::Approx(1.0));
    CHECK(a(0, 2) == 0.0);
    CHECK(a(0, 1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(a(0, 4) == 0.0);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(a(i, i) == 1.0);
        for (std::size_t j = 0; j < 5; ++j) CHECK(a(i, j) == a(j, i));
    }
    const auto z = table({{"a", {1, 0}}, {"z", {0, 0}}});
    CHECK_THROWS_AS(similarity_graph(z, {"a", "z"}), UndefinedError);
}

TEST_CASE("embedding and cluster map files") {
    std::istringstream in("3 2\nfoo 1 0\nbar 0.5 0.5\nbaz -1 2\n");
    const auto t = read_embeddings(in);
    CHECK(t.size() == 3);
    CHECK(t.dim() == 2);
    CHECK(t.vector("baz") == std::vector<double>{-1, 2});
    std::istringstream bad("foo 1 0\nbar 1\n");
    CHECK_THROWS_AS(read_embeddings(bad), FormatError);
    std::istringstream dup("foo 1 0\nfoo 1 1\n");
    CHECK_THROWS_AS(read_embeddings(dup), FormatError);

    std::istringstream cm_in("order\t7\nstore\t7\nlol\t2\n");
    const auto cm = read_cluster_map(cm_in);
    CHECK(cm.k == 8);
    CHECK(cm.cluster_of("store") == 7);
    CHECK_FALSE(cm.cluster_of("nope").has_value());
    std::stringstream buf;
    write_cluster_map(buf, cm);
    const auto back = read_cluster_map(buf, 8);
    CHECK(back.assignment == cm.assignment);
    std::istringstream twice("a\t1\na\t2\n");
    CHECK_THROWS_AS(read_cluster_map(twice), FormatError);
    std::istringstream out_of_range("a\t5\n");
    CHECK_THROWS_AS(read_cluster_map(out_of_range, 3), FormatError);
}

TEST_CASE("two disconnected triangles split into the triangles") {
    Matrix a(6, 6);
    for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t j = 0; j < 6; ++j) a(i, j) = (i / 3 == j / 3) ? 1.0 : 0.0;
    }
    const auto labels = spectral_cluster(a, 2, 1);
    CHECK(labels == std::vector<int>{0, 0, 0, 1, 1, 1});
}

TEST_CASE("k = 1 puts every word in one cluster and k > n fails") {
    Rng rng(1);
    const auto a = random_affinity(7, rng);
    const auto labels = spectral_cluster(a, 1, 3);
    CHECK(labels == std::vector<int>(7, 0));
    CHECK_THROWS_AS(spectral_cluster(a, 8, 3), ConfigError);
}

TEST_CASE("planted two-way partitions match exhaustive normalized cut") {
    Rng rng(20);
    int agree = 0;
    const int trials = 40;
    for (int t = 0; t < trials; ++t) {
        const std::size_t n = 4 + rng.below(7);  // 4..10 nodes
        std::vector<int> group(n);
        for (std::size_t i = 0; i < n; ++i) group[i] = rng.uniform() < 0.5 ? 0 : 1;
        group[0] = 0;
        group[n - 1] = 1;
        const auto a = planted(n, group, rng);
        const auto best = oracle::brute_force_ncut(a);
        const auto labels = spectral_cluster(a, 2, static_cast<std::uint64_t>(t));
        if (oracle::same_bipartition(labels, best.side)) ++agree;
    }
    CHECK(agree == trials);
}

TEST_CASE("Laplacian eigenvalues lie in [0, 2] and match a dense solver") {
    Rng rng(4);
    for (int t = 0; t < 15; ++t) {
        const std::size_t n = 3 + rng.below(20);
        const std::size_t k = 1 + rng.below(std::min<std::size_t>(n, 4));
        const auto a = random_affinity(n, rng, 0.6);
        const auto res = laplacian_eigenvectors(a, k, 9);
        CHECK(res.converged);
        const auto lap = normalized_laplacian(a);
        Eigen::MatrixXd m(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) m(i, j) = lap(i, j);
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
            CHECK(es.eigenvalues()(i) >= -1e-8);
            CHECK(es.eigenvalues()(i) <= 2.0 + 1e-8);
        }
        for (std::size_t i = 0; i < k; ++i) {
            CHECK(res.values[i] >= -1e-8);
            CHECK(res.values[i] <= 2.0 + 1e-8);
            CHECK(res.values[i] == doctest::Approx(es.eigenvalues()(static_cast<Eigen::Index>(i))).epsilon(1e-6));
            // L v = lambda v
            double resid = 0.0;
            for (std::size_t r = 0; r < n; ++r) {
                double lv = 0.0;
                for (std::size_t c = 0; c < n; ++c) lv += lap(r, c) * res.vectors(c, i);
                resid = std::max(resid, std::abs(lv - res.values[i] * res.vectors(r, i)));
            }
            CHECK(resid < 1e-6);
        }
    }
}

TEST_CASE("zero-degree nodes get a unit self-loop") {
    Matrix a(3, 3);
    a(0, 1) = a(1, 0) = 1.0;
    const auto lap = normalized_laplacian(a);
    CHECK(lap(2, 2) == doctest::Approx(0.0));
    CHECK(lap(0, 1) == doctest::Approx(-1.0));
}

TEST_CASE("permuting the graph permutes the clustering") {
    Rng rng(8);
    for (int t = 0; t < 10; ++t) {
        const std::size_t n = 6 + rng.below(5);
        std::vector<int> group(n);
        for (std::size_t i = 0; i < n; ++i) group[i] = static_cast<int>(i % 3);
        const auto a = planted(n, group, rng);
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);
        Matrix b(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) b(i, j) = a(perm[i], perm[j]);
        }
        const auto la = spectral_cluster(a, 3, 5);
        const auto lb = spectral_cluster(b, 3, 5);
        // same partition after undoing the permutation, up to label names
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                CHECK((la[perm[i]] == la[perm[j]]) == (lb[i] == lb[j]));
            }
        }
    }
}

TEST_CASE("spectral clustering is deterministic for a seed") {
    Rng rng(12);
    const auto a = random_affinity(25, rng, 0.5);
    CHECK(spectral_cluster(a, 4, 77) == spectral_cluster(a, 4, 77));
}

TEST_CASE("k-means basics") {
    Matrix p(6, 1);
    const double xs[] = {0.0, 0.1, 0.2, 5.0, 5.1, 5.2};
    for (std::size_t i = 0; i < 6; ++i) p(i, 0) = xs[i];
    CHECK(kmeans(p, 2, 1) == std::vector<int>{0, 0, 0, 1, 1, 1});
    CHECK_THROWS_AS(kmeans(p, 7, 1), ConfigError);
}

TEST_CASE("cluster feature examples") {
    ClusterMap cm;
    cm.k = 10;
    cm.assignment = {{"order", 7}, {"store", 7}, {"a", 1}, {"b", 2}};
    auto v = cluster_features(tokenize("order store"), cm);
    REQUIRE(v.size() == 10);
    CHECK(v[7] == 1.0);
    v = cluster_features(tokenize("nothing here"), cm);
    CHECK(std::accumulate(v.begin(), v.end(), 0.0) == 0.0);
    v = cluster_features(tokenize("a a a b zzz"), cm);
    CHECK(v[1] == 0.75);
    CHECK(v[2] == 0.25);
}

TEST_CASE("cluster features sum to one when any token is mapped") {
    ClusterMap cm;
    cm.k = 4;
    cm.assignment = {{"w0", 0}, {"w1", 1}, {"w2", 2}, {"w3", 3}};
    Rng rng(6);
    for (int t = 0; t < 200; ++t) {
        std::string s;
        const auto len = rng.below(8);
        bool mapped = false;
        for (std::size_t i = 0; i < len; ++i) {
            const auto r = rng.below(6);
            s += (r < 4 ? "w" + std::to_string(r) : "x") + " ";
            mapped = mapped || r < 4;
        }
        const auto v = cluster_features(tokenize(s), cm);
        const double sum = std::accumulate(v.begin(), v.end(), 0.0);
        CHECK(sum == doctest::Approx(mapped ? 1.0 : 0.0));
    }
}

TEST_CASE("cluster_words assigns every vocabulary word") {
    Rng rng(3);
    EmbeddingTable t(3);
    std::vector<std::string> vocab;
    for (int i = 0; i < 30; ++i) {
        const int g = i % 3;
        std::vector<double> v(3, 0.05);
        v[static_cast<std::size_t>(g)] = 1.0 + rng.uniform(0.0, 0.1);
        t.add("w" + std::to_string(i), v);
        vocab.push_back("w" + std::to_string(i));
    }
    const auto cm = cluster_words(t, vocab, 3, 1);
    CHECK(cm.k == 3);
    CHECK(cm.assignment.size() == 30);
    for (int i = 0; i < 30; ++i) {
        for (int j = 0; j < 30; ++j) {
            CHECK((*cm.cluster_of("w" + std::to_string(i)) == *cm.cluster_of("w" + std::to_string(j))) ==
                  (i % 3 == j % 3));
        }
    }
}
