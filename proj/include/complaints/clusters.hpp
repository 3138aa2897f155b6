#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "complaints/token.hpp"

namespace complaints {

// Row-major dense matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    const std::vector<double>& data() const { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

class EmbeddingTable {
public:
    EmbeddingTable() = default;
    explicit EmbeddingTable(std::size_t dim) : dim_(dim) {}

    void add(std::string word, std::vector<double> vec);
    std::size_t dim() const { return dim_; }
    std::size_t size() const { return words_.size(); }
    bool contains(std::string_view w) const { return index_.contains(std::string(w)); }
    const std::vector<double>& vector(std::string_view w) const;
    const std::vector<std::string>& words() const { return words_; }

private:
    std::size_t dim_ = 0;
    std::vector<std::string> words_;
    std::vector<std::vector<double>> vectors_;
    std::unordered_map<std::string, std::size_t> index_;
};

// `word v1 ... vd` per line; a leading word2vec "<count> <dim>" line is skipped.
EmbeddingTable read_embeddings(std::istream& in);
EmbeddingTable load_embeddings(const std::filesystem::path& path);

struct ClusterMap {
    std::unordered_map<std::string, int> assignment;
    std::size_t k = 0;

    std::optional<int> cluster_of(std::string_view word) const;
};

// `word<TAB>cluster_id` per line. K defaults to max id + 1.
ClusterMap read_cluster_map(std::istream& in, std::optional<std::size_t> k = std::nullopt);
ClusterMap load_cluster_map(const std::filesystem::path& path,
                            std::optional<std::size_t> k = std::nullopt);
void write_cluster_map(std::ostream& out, const ClusterMap& cm);

// A[i][j] = max(0, cos(v_i, v_j)), unit diagonal.
Matrix similarity_graph(const EmbeddingTable& emb, const std::vector<std::string>& vocab);

// L = I - D^-1/2 A D^-1/2. Zero-degree nodes get a unit self-loop first.
Matrix normalized_laplacian(const Matrix& affinity);

struct EigenResult {
    std::vector<double> values;  // ascending Laplacian eigenvalues
    Matrix vectors;              // n x k, column i pairs with values[i]
    int iterations = 0;
    bool converged = false;
};

// The k smallest eigenpairs of the normalized Laplacian of `affinity`, by
// orthogonal subspace iteration with Rayleigh-Ritz on I + D^-1/2 A D^-1/2.
EigenResult laplacian_eigenvectors(const Matrix& affinity, std::size_t k, std::uint64_t seed,
                                   double tol = 1e-9, int max_iter = 10000);

// Seeded k-means (k-means++ start, restarts, lowest-index tie-break). Labels
// are renumbered by first appearance.
std::vector<int> kmeans(const Matrix& points, std::size_t k, std::uint64_t seed,
                        int max_iter = 300, int restarts = 10);

// Normalized-cut spectral clustering: Laplacian eigenvectors, row
// normalization, k-means. Labels are renumbered by first appearance.
std::vector<int> spectral_cluster(const Matrix& affinity, std::size_t k, std::uint64_t seed);

ClusterMap cluster_words(const EmbeddingTable& emb, const std::vector<std::string>& vocab,
                         std::size_t k, std::uint64_t seed);

// Entry k = share of the mapped tokens that fall in cluster k.
std::vector<double> cluster_features(const TokenSeq& tokens, const ClusterMap& cm);

}  // namespace complaints
