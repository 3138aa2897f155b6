#include "complaints/clusters.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "complaints/common.hpp"

namespace complaints {

void EmbeddingTable::add(std::string word, std::vector<double> vec) {
    if (words_.empty() && dim_ == 0) dim_ = vec.size();
    if (vec.size() != dim_) {
        throw FormatError("embedding for '" + word + "' has dimension " +
                          std::to_string(vec.size()) + ", expected " + std::to_string(dim_));
    }
    if (index_.contains(word)) throw FormatError("duplicate embedding for '" + word + "'");
    index_.emplace(word, words_.size());
    words_.push_back(std::move(word));
    vectors_.push_back(std::move(vec));
}

const std::vector<double>& EmbeddingTable::vector(std::string_view w) const {
    const auto it = index_.find(std::string(w));
    if (it == index_.end()) throw DataError("no embedding for '" + std::string(w) + "'");
    return vectors_[it->second];
}

EmbeddingTable read_embeddings(std::istream& in) {
    EmbeddingTable table;
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        std::istringstream ls(line);
        std::vector<std::string> fields;
        for (std::string f; ls >> f;) fields.push_back(f);
        if (fields.empty()) continue;
        if (line_no == 1 && fields.size() == 2 &&
            std::all_of(fields[0].begin(), fields[0].end(), ::isdigit) &&
            std::all_of(fields[1].begin(), fields[1].end(), ::isdigit)) {
            continue;
        }
        if (fields.size() < 2) {
            throw FormatError("embedding line " + std::to_string(line_no) + " has no vector");
        }
        std::vector<double> v;
        v.reserve(fields.size() - 1);
        for (std::size_t i = 1; i < fields.size(); ++i) v.push_back(parse_double(fields[i]));
        table.add(fields[0], std::move(v));
    }
    return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open embeddings " + path.string());
    return read_embeddings(in);
}

std::optional<int> ClusterMap::cluster_of(std::string_view word) const {
    const auto it = assignment.find(std::string(word));
    if (it == assignment.end()) return std::nullopt;
    return it->second;
}

ClusterMap read_cluster_map(std::istream& in, std::optional<std::size_t> k) {
    ClusterMap cm;
    std::size_t line_no = 0;
    int max_id = -1;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const auto f = split(line, '\t');
        if (f.size() != 2) {
            throw FormatError("cluster map line " + std::to_string(line_no) +
                              ": expected word<TAB>cluster_id");
        }
        const auto id = parse_int(f[1]);
        if (id < 0) throw FormatError("cluster map line " + std::to_string(line_no) + ": negative id");
        const std::string word = to_lower_ascii(f[0]);
        if (!cm.assignment.emplace(word, static_cast<int>(id)).second) {
            throw FormatError("cluster map assigns '" + word + "' twice");
        }
        max_id = std::max(max_id, static_cast<int>(id));
    }
    cm.k = k.value_or(static_cast<std::size_t>(max_id + 1));
    if (max_id >= static_cast<int>(cm.k)) {
        throw FormatError("cluster id " + std::to_string(max_id) + " is outside [0, " +
                          std::to_string(cm.k) + ")");
    }
    return cm;
}

ClusterMap load_cluster_map(const std::filesystem::path& path, std::optional<std::size_t> k) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open cluster map " + path.string());
    return read_cluster_map(in, k);
}

void write_cluster_map(std::ostream& out, const ClusterMap& cm) {
    std::vector<std::pair<std::string, int>> rows(cm.assignment.begin(), cm.assignment.end());
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second < b.second : a.first < b.first;
    });
    for (const auto& [w, c] : rows) out << w << '\t' << c << '\n';
}

Matrix similarity_graph(const EmbeddingTable& emb, const std::vector<std::string>& vocab) {
    const std::size_t n = vocab.size();
    std::vector<const std::vector<double>*> vecs;
    std::vector<double> norms;
    for (const auto& w : vocab) {
        const auto& v = emb.vector(w);
        const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
        if (norm == 0.0) throw UndefinedError("cosine undefined: zero embedding for '" + w + "'");
        vecs.push_back(&v);
        norms.push_back(norm);
    }
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        a(i, i) = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dot =
                std::inner_product(vecs[i]->begin(), vecs[i]->end(), vecs[j]->begin(), 0.0);
            const double c = std::clamp(dot / (norms[i] * norms[j]), -1.0, 1.0);
            a(i, j) = a(j, i) = std::max(0.0, c);
        }
    }
    return a;
}

namespace {

void check_affinity(const Matrix& a) {
    if (a.rows() != a.cols()) throw ConfigError("affinity matrix must be square");
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            if (!(a(i, j) >= 0.0) || !std::isfinite(a(i, j))) {
                throw ConfigError("affinity matrix must be finite and nonnegative");
            }
            if (std::abs(a(i, j) - a(j, i)) > 1e-12 * std::max(1.0, std::abs(a(i, j)))) {
                throw ConfigError("affinity matrix must be symmetric");
            }
        }
    }
}

// D^-1/2 A D^-1/2 after giving isolated nodes a unit self-loop.
Matrix normalized_affinity(const Matrix& affinity) {
    check_affinity(affinity);
    const std::size_t n = affinity.rows();
    Matrix a = affinity;
    std::vector<double> inv_sqrt(n);
    for (std::size_t i = 0; i < n; ++i) {
        double deg = 0.0;
        for (std::size_t j = 0; j < n; ++j) deg += a(i, j);
        if (deg == 0.0) {
            a(i, i) = 1.0;
            deg = 1.0;
        }
        inv_sqrt[i] = 1.0 / std::sqrt(deg);
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) a(i, j) *= inv_sqrt[i] * inv_sqrt[j];
    }
    return a;
}

// Cyclic Jacobi for a small symmetric matrix. Returns eigenvalues and
// eigenvectors as columns of `vecs`.
void jacobi_eigen(Matrix h, std::vector<double>& vals, Matrix& vecs) {
    const std::size_t k = h.rows();
    vecs = Matrix(k, k);
    for (std::size_t i = 0; i < k; ++i) vecs(i, i) = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        double total = 0.0;
        for (std::size_t p = 0; p < k; ++p) {
            for (std::size_t q = 0; q < k; ++q) {
                total += h(p, q) * h(p, q);
                if (p != q) off += h(p, q) * h(p, q);
            }
        }
        if (off <= 1e-30 * std::max(total, 1e-300)) break;
        for (std::size_t p = 0; p + 1 < k; ++p) {
            for (std::size_t q = p + 1; q < k; ++q) {
                if (h(p, q) == 0.0) continue;
                const double theta = (h(q, q) - h(p, p)) / (2.0 * h(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t r = 0; r < k; ++r) {
                    const double hrp = h(r, p);
                    const double hrq = h(r, q);
                    h(r, p) = c * hrp - s * hrq;
                    h(r, q) = s * hrp + c * hrq;
                }
                for (std::size_t r = 0; r < k; ++r) {
                    const double hpr = h(p, r);
                    const double hqr = h(q, r);
                    h(p, r) = c * hpr - s * hqr;
                    h(q, r) = s * hpr + c * hqr;
                }
                for (std::size_t r = 0; r < k; ++r) {
                    const double vrp = vecs(r, p);
                    const double vrq = vecs(r, q);
                    vecs(r, p) = c * vrp - s * vrq;
                    vecs(r, q) = s * vrp + c * vrq;
                }
            }
        }
    }
    vals.resize(k);
    for (std::size_t i = 0; i < k; ++i) vals[i] = h(i, i);
}

// Modified Gram-Schmidt (two passes); degenerate columns are replaced by
// fresh random directions.
void orthonormalize(Matrix& v, Rng& rng) {
    const std::size_t n = v.rows();
    const std::size_t k = v.cols();
    for (std::size_t c = 0; c < k; ++c) {
        for (int attempt = 0;; ++attempt) {
            const auto column_norm = [&] {
                double s = 0.0;
                for (std::size_t r = 0; r < n; ++r) s += v(r, c) * v(r, c);
                return std::sqrt(s);
            };
            const double before = column_norm();
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t p = 0; p < c; ++p) {
                    double dot = 0.0;
                    for (std::size_t r = 0; r < n; ++r) dot += v(r, p) * v(r, c);
                    for (std::size_t r = 0; r < n; ++r) v(r, c) -= dot * v(r, p);
                }
            }
            const double norm = column_norm();
            if (norm > 1e-10 * std::max(before, 1e-300) && norm > 1e-300) {
                for (std::size_t r = 0; r < n; ++r) v(r, c) /= norm;
                break;
            }
            if (attempt > 20) throw InvariantError("orthonormalize: cannot complete basis");
            for (std::size_t r = 0; r < n; ++r) v(r, c) = rng.normal();
        }
    }
}

}  // namespace

Matrix normalized_laplacian(const Matrix& affinity) {
    Matrix m = normalized_affinity(affinity);
    const std::size_t n = m.rows();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) m(i, j) = (i == j ? 1.0 : 0.0) - m(i, j);
    }
    return m;
}

EigenResult laplacian_eigenvectors(const Matrix& affinity, std::size_t k, std::uint64_t seed,
                                   double tol, int max_iter) {
    const std::size_t n = affinity.rows();
    if (k == 0 || k > n) {
        throw ConfigError("eigenvector count " + std::to_string(k) + " outside [1, " +
                          std::to_string(n) + "]");
    }
    // S = I + M has the spectrum of 2I - L, so its top-k subspace is the
    // bottom-k subspace of L.
    Matrix s = normalized_affinity(affinity);
    for (std::size_t i = 0; i < n; ++i) s(i, i) += 1.0;

    Rng rng(seed);
    Matrix v(n, k);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < k; ++c) v(r, c) = rng.normal();
    }
    orthonormalize(v, rng);

    EigenResult result;
    Matrix w(n, k);
    std::vector<double> theta;
    Matrix q;
    for (int iter = 1; iter <= max_iter; ++iter) {
        result.iterations = iter;
        // W = S V
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < k; ++c) {
                double acc = 0.0;
                for (std::size_t t = 0; t < n; ++t) acc += s(r, t) * v(t, c);
                w(r, c) = acc;
            }
        }
        // Rayleigh-Ritz: H = V^T W
        Matrix h(k, k);
        for (std::size_t a = 0; a < k; ++a) {
            for (std::size_t b = 0; b < k; ++b) {
                double acc = 0.0;
                for (std::size_t r = 0; r < n; ++r) acc += v(r, a) * w(r, b);
                h(a, b) = acc;
            }
        }
        for (std::size_t a = 0; a < k; ++a) {
            for (std::size_t b = a + 1; b < k; ++b) h(a, b) = h(b, a) = 0.5 * (h(a, b) + h(b, a));
        }
        jacobi_eigen(h, theta, q);
        // order Ritz pairs by descending theta (ascending Laplacian eigenvalue)
        std::vector<std::size_t> order(k);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return theta[a] > theta[b]; });
        Matrix vq(n, k);
        Matrix wq(n, k);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < k; ++c) {
                double av = 0.0;
                double aw = 0.0;
                for (std::size_t t = 0; t < k; ++t) {
                    av += v(r, t) * q(t, order[c]);
                    aw += w(r, t) * q(t, order[c]);
                }
                vq(r, c) = av;
                wq(r, c) = aw;
            }
        }
        double residual = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            double acc = 0.0;
            for (std::size_t r = 0; r < n; ++r) {
                const double d = wq(r, c) - theta[order[c]] * vq(r, c);
                acc += d * d;
            }
            residual = std::max(residual, std::sqrt(acc));
        }
        result.values.resize(k);
        for (std::size_t c = 0; c < k; ++c) result.values[c] = 2.0 - theta[order[c]];
        result.vectors = vq;
        if (residual < tol) {
            result.converged = true;
            break;
        }
        v = std::move(wq);
        orthonormalize(v, rng);
    }
    return result;
}

std::vector<int> kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, int max_iter,
                        int restarts) {
    const std::size_t n = points.rows();
    const std::size_t d = points.cols();
    if (k == 0 || k > n) throw ConfigError("k-means needs 1 <= k <= number of points");
    const auto dist2 = [&](std::size_t i, const std::vector<double>& c) {
        double s = 0.0;
        for (std::size_t t = 0; t < d; ++t) {
            const double diff = points(i, t) - c[t];
            s += diff * diff;
        }
        return s;
    };
    const auto point = [&](std::size_t i) {
        std::vector<double> p(d);
        for (std::size_t t = 0; t < d; ++t) p[t] = points(i, t);
        return p;
    };

    Rng rng(seed);
    std::vector<int> best_labels(n, 0);
    double best_inertia = std::numeric_limits<double>::infinity();
    for (int run = 0; run < std::max(1, restarts); ++run) {
        // k-means++ seeding
        std::vector<std::vector<double>> centers;
        centers.push_back(point(rng.below(n)));
        std::vector<double> closest(n);
        for (std::size_t i = 0; i < n; ++i) closest[i] = dist2(i, centers[0]);
        while (centers.size() < k) {
            const double total = std::accumulate(closest.begin(), closest.end(), 0.0);
            std::size_t pick = 0;
            if (total <= 0.0) {
                pick = rng.below(n);
            } else {
                double target = rng.uniform() * total;
                for (pick = 0; pick + 1 < n; ++pick) {
                    target -= closest[pick];
                    if (target < 0.0) break;
                }
            }
            centers.push_back(point(pick));
            for (std::size_t i = 0; i < n; ++i) closest[i] = std::min(closest[i], dist2(i, centers.back()));
        }

        std::vector<int> labels(n, -1);
        for (int iter = 0; iter < max_iter; ++iter) {
            bool changed = false;
            for (std::size_t i = 0; i < n; ++i) {
                int best = 0;
                double bd = dist2(i, centers[0]);
                for (std::size_t c = 1; c < k; ++c) {
                    const double dc = dist2(i, centers[c]);
                    if (dc < bd) {
                        bd = dc;
                        best = static_cast<int>(c);
                    }
                }
                if (labels[i] != best) {
                    labels[i] = best;
                    changed = true;
                }
            }
            if (!changed) break;
            std::vector<std::vector<double>> sums(k, std::vector<double>(d, 0.0));
            std::vector<std::size_t> counts(k, 0);
            for (std::size_t i = 0; i < n; ++i) {
                const auto c = static_cast<std::size_t>(labels[i]);
                ++counts[c];
                for (std::size_t t = 0; t < d; ++t) sums[c][t] += points(i, t);
            }
            for (std::size_t c = 0; c < k; ++c) {
                if (counts[c] == 0) {
                    // reseed an empty cluster at the point farthest from its center
                    std::size_t far = 0;
                    double fd = -1.0;
                    for (std::size_t i = 0; i < n; ++i) {
                        const double di = dist2(i, centers[static_cast<std::size_t>(labels[i])]);
                        if (di > fd) {
                            fd = di;
                            far = i;
                        }
                    }
                    centers[c] = point(far);
                    labels[far] = static_cast<int>(c);
                    continue;
                }
                for (std::size_t t = 0; t < d; ++t) centers[c][t] = sums[c][t] / static_cast<double>(counts[c]);
            }
        }
        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) inertia += dist2(i, centers[static_cast<std::size_t>(labels[i])]);
        if (inertia < best_inertia - 1e-12) {
            best_inertia = inertia;
            best_labels = labels;
        }
    }

    // renumber by first appearance
    std::vector<int> remap(k, -1);
    int next = 0;
    for (auto& l : best_labels) {
        auto& m = remap[static_cast<std::size_t>(l)];
        if (m < 0) m = next++;
        l = m;
    }
    return best_labels;
}

std::vector<int> spectral_cluster(const Matrix& affinity, std::size_t k, std::uint64_t seed) {
    const std::size_t n = affinity.rows();
    check_affinity(affinity);
    if (k == 0 || k > n) {
        throw ConfigError("cluster count " + std::to_string(k) + " exceeds matrix size " +
                          std::to_string(n));
    }
    if (k == 1) return std::vector<int>(n, 0);
    auto eig = laplacian_eigenvectors(affinity, k, seed);
    Matrix& u = eig.vectors;
    for (std::size_t r = 0; r < n; ++r) {
        double norm = 0.0;
        for (std::size_t c = 0; c < k; ++c) norm += u(r, c) * u(r, c);
        norm = std::sqrt(norm);
        if (norm > 0.0) {
            for (std::size_t c = 0; c < k; ++c) u(r, c) /= norm;
        }
    }
    return kmeans(u, k, mix64(seed + 1));
}

ClusterMap cluster_words(const EmbeddingTable& emb, const std::vector<std::string>& vocab,
                         std::size_t k, std::uint64_t seed) {
    const auto labels = spectral_cluster(similarity_graph(emb, vocab), k, seed);
    ClusterMap cm;
    cm.k = k;
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        cm.assignment[to_lower_ascii(vocab[i])] = labels[i];
    }
    return cm;
}

std::vector<double> cluster_features(const TokenSeq& tokens, const ClusterMap& cm) {
    std::vector<double> out(cm.k, 0.0);
    std::size_t found = 0;
    for (const auto& t : tokens) {
        if (const auto c = cm.cluster_of(t.lower)) {
            out[static_cast<std::size_t>(*c)] += 1.0;
            ++found;
        }
    }
    if (found > 0) {
        for (auto& v : out) v /= static_cast<double>(found);
    }
    return out;
}

}  // namespace complaints
