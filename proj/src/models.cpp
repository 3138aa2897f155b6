#include "complaints/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "complaints/common.hpp"

namespace complaints {

SparseMatrix build_matrix(const std::vector<FeatureVector>& vectors, const FeatureSchema& schema) {
    SparseMatrix m;
    m.rows = vectors.size();
    m.cols = schema.size();
    m.row_ptr.reserve(vectors.size() + 1);
    for (const auto& v : vectors) {
        std::vector<std::pair<std::uint32_t, double>> row;
        for (const auto& [name, x] : v.entries) {
            if (!std::isfinite(x)) throw DataError("non-finite value for feature '" + name + "'");
            if (const auto j = schema.find(name)) row.emplace_back(static_cast<std::uint32_t>(*j), x);
        }
        std::sort(row.begin(), row.end());
        for (const auto& [j, x] : row) {
            m.col.push_back(j);
            m.val.push_back(x);
        }
        m.row_ptr.push_back(m.col.size());
    }
    return m;
}

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

namespace {

double softplus(double t) {
    return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

// log(1 + exp(z)) - y z
double logloss(double z, int y) {
    return softplus(z) - (y == 1 ? z : 0.0);
}

void check_labels(const std::vector<int>& y, std::size_t rows) {
    if (y.size() != rows) throw DataError("label count does not match example count");
    if (y.size() < 2) throw DataError("training needs at least two examples");
    bool pos = false;
    bool neg = false;
    for (const int v : y) {
        if (v == 1) {
            pos = true;
        } else if (v == 0) {
            neg = true;
        } else {
            throw DataError("labels must be 0 or 1");
        }
    }
    if (!pos || !neg) throw DataError("training labels contain a single class");
}

struct Csc {
    std::vector<std::size_t> col_ptr;
    std::vector<std::uint32_t> row;
    std::vector<double> val;
};

Csc to_csc(const SparseMatrix& x) {
    Csc c;
    c.col_ptr.assign(x.cols + 1, 0);
    for (const auto j : x.col) ++c.col_ptr[j + 1];
    for (std::size_t j = 0; j < x.cols; ++j) c.col_ptr[j + 1] += c.col_ptr[j];
    c.row.resize(x.col.size());
    c.val.resize(x.col.size());
    std::vector<std::size_t> next(c.col_ptr.begin(), c.col_ptr.end() - 1);
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t k = x.row_ptr[i]; k < x.row_ptr[i + 1]; ++k) {
            const auto pos = next[x.col[k]]++;
            c.row[pos] = static_cast<std::uint32_t>(i);
            c.val[pos] = x.val[k];
        }
    }
    return c;
}

double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

}  // namespace

double logreg_objective(const SparseMatrix& x, const std::vector<int>& y, const std::vector<double>& w,
                        double b, double alpha, double rho) {
    double loss = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) {
        double z = b;
        for (std::size_t k = x.row_ptr[i]; k < x.row_ptr[i + 1]; ++k) z += w[x.col[k]] * x.val[k];
        loss += logloss(z, y[i]);
    }
    double l1 = 0.0;
    double l2 = 0.0;
    for (const double v : w) {
        l1 += std::abs(v);
        l2 += v * v;
    }
    return loss / static_cast<double>(x.rows) + alpha * (rho * l1 + 0.5 * (1.0 - rho) * l2);
}

LogregFit fit_logreg(const SparseMatrix& x, const std::vector<int>& y, double alpha, double rho,
                     const LogregOptions& opts, const LogregFit* warm) {
    check_labels(y, x.rows);
    if (!(alpha >= 0.0) || !(rho >= 0.0 && rho <= 1.0)) {
        throw ConfigError("alpha must be >= 0 and rho in [0, 1]");
    }
    for (const double v : x.val) {
        if (!std::isfinite(v)) throw DataError("non-finite feature value");
    }
    const std::size_t n = x.rows;
    const std::size_t p = x.cols;
    const double inv_n = 1.0 / static_cast<double>(n);
    const double l1 = alpha * rho;
    const double l2 = alpha * (1.0 - rho);
    const Csc c = to_csc(x);

    LogregFit fit;
    fit.w.assign(p, 0.0);
    if (warm && warm->w.size() == p) {
        fit.w = warm->w;
        fit.b = warm->b;
    } else {
        const double pos = static_cast<double>(std::count(y.begin(), y.end(), 1));
        fit.b = std::log(pos / (static_cast<double>(n) - pos));
    }
    std::vector<double> z(n, fit.b);
    for (std::size_t j = 0; j < p; ++j) {
        if (fit.w[j] == 0.0) continue;
        for (std::size_t k = c.col_ptr[j]; k < c.col_ptr[j + 1]; ++k) z[c.row[k]] += fit.w[j] * c.val[k];
    }

    const auto penalty = [&](const std::vector<double>& w) {
        double a1 = 0.0;
        double a2 = 0.0;
        for (const double v : w) {
            a1 += std::abs(v);
            a2 += v * v;
        }
        return l1 * a1 + 0.5 * l2 * a2;
    };
    const auto loss_at = [&](const std::vector<double>& zz) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += logloss(zz[i], y[i]);
        return s * inv_n;
    };

    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), 0);
    if (opts.seed != 0) {
        Rng rng(opts.seed);
        rng.shuffle(order);
    }

    // Proximal Newton: each outer step minimizes the penalized quadratic
    // model of the log-loss by coordinate descent, then backtracks on the
    // true objective.
    std::vector<double> v(n);
    std::vector<double> res(n);
    std::vector<double> hess(p);
    std::vector<double> wn(p);
    std::vector<double> dz(n);
    std::vector<double> zt(n);
    std::vector<double> wt(p);
    double f = loss_at(z) + penalty(fit.w);
    const double inner_tol = opts.tol * 0.1;
    const int max_inner = std::max(100, opts.max_epochs);

    for (int outer = 1; outer <= opts.max_epochs; ++outer) {
        fit.epochs = outer;
        double sv = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double pr = sigmoid(z[i]);
            v[i] = std::max(pr * (1.0 - pr), 1e-5);
            res[i] = (static_cast<double>(y[i]) - pr) / v[i];
            sv += v[i];
        }
        for (std::size_t j = 0; j < p; ++j) {
            double h = 0.0;
            for (std::size_t k = c.col_ptr[j]; k < c.col_ptr[j + 1]; ++k) h += v[c.row[k]] * c.val[k] * c.val[k];
            hess[j] = h * inv_n;
        }
        wn = fit.w;
        double bn = fit.b;
        bool full_sweep = true;
        for (int sweep = 0; sweep < max_inner; ++sweep) {
            double max_step = 0.0;
            double num = 0.0;
            for (std::size_t i = 0; i < n; ++i) num += v[i] * res[i];
            const double db = num / sv;
            if (db != 0.0) {
                bn += db;
                for (std::size_t i = 0; i < n; ++i) res[i] -= db;
                max_step = sv * inv_n * db * db;
            }
            for (const auto j : order) {
                if (!full_sweep && wn[j] == 0.0) continue;
                const double h = hess[j];
                if (c.col_ptr[j] == c.col_ptr[j + 1]) {
                    wn[j] = 0.0;
                    continue;
                }
                double g = 0.0;
                for (std::size_t k = c.col_ptr[j]; k < c.col_ptr[j + 1]; ++k) g += v[c.row[k]] * c.val[k] * res[c.row[k]];
                g *= inv_n;
                const double u = soft_threshold(h * wn[j] + g, l1) / (h + l2);
                const double d = u - wn[j];
                if (d != 0.0) {
                    for (std::size_t k = c.col_ptr[j]; k < c.col_ptr[j + 1]; ++k) res[c.row[k]] -= d * c.val[k];
                    wn[j] = u;
                    max_step = std::max(max_step, h * d * d);
                }
            }
            if (max_step < inner_tol) {
                if (full_sweep) break;
                full_sweep = true;
            } else {
                full_sweep = false;
            }
        }

        // dz = change of the linear predictor implied by the model step
        double decrease = 0.0;
        double step_size = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double pr = sigmoid(z[i]);
            dz[i] = (static_cast<double>(y[i]) - pr) / v[i] - res[i];
            decrease += (pr - y[i]) * dz[i];
        }
        decrease = decrease * inv_n + penalty(wn) - penalty(fit.w);
        const double db = bn - fit.b;
        double t = 1.0;
        bool accepted = false;
        double f_new = f;
        for (int ls = 0; ls < 40; ++ls) {
            for (std::size_t i = 0; i < n; ++i) zt[i] = z[i] + t * dz[i];
            for (std::size_t j = 0; j < p; ++j) wt[j] = fit.w[j] + t * (wn[j] - fit.w[j]);
            f_new = loss_at(zt) + penalty(wt);
            if (f_new <= f + 1e-4 * t * std::min(decrease, 0.0)) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            // no further decrease representable
            fit.converged = true;
            break;
        }
        for (std::size_t j = 0; j < p; ++j) {
            const double d = wt[j] - fit.w[j];
            step_size = std::max(step_size, hess[j] * d * d);
        }
        step_size = std::max(step_size, sv * inv_n * (t * db) * (t * db));
        fit.w.swap(wt);
        fit.b += t * db;
        z.swap(zt);
        const double f_change = f - f_new;
        f = f_new;
        if (step_size < opts.tol && f_change < opts.tol) {
            fit.converged = true;
            break;
        }
    }
    return fit;
}

std::vector<double> predict_proba(const LogregFit& fit, const SparseMatrix& x) {
    std::vector<double> out(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) {
        double z = fit.b;
        for (std::size_t k = x.row_ptr[i]; k < x.row_ptr[i + 1]; ++k) z += fit.w[x.col[k]] * x.val[k];
        out[i] = sigmoid(z);
    }
    return out;
}

LinearModel to_linear_model(const LogregFit& fit, const FeatureSchema& schema, double alpha, double rho) {
    if (fit.w.size() != schema.size()) throw InvariantError("weight vector does not match schema");
    LinearModel m;
    m.schema_id = schema.id;
    for (std::size_t j = 0; j < fit.w.size(); ++j) {
        if (!std::isfinite(fit.w[j])) throw InvariantError("non-finite weight");
        if (fit.w[j] != 0.0) m.weights.emplace(schema.names[j], fit.w[j]);
    }
    m.bias = fit.b;
    m.alpha = alpha;
    m.rho = rho;
    m.epochs = fit.epochs;
    m.converged = fit.converged;
    return m;
}

LinearModel train_logreg(const std::vector<FeatureVector>& x, const std::vector<int>& y, double alpha,
                         double rho, const LogregOptions& opts) {
    const auto schema = FeatureSchema::from_vectors(x);
    const auto m = build_matrix(x, schema);
    return to_linear_model(fit_logreg(m, y, alpha, rho, opts), schema, alpha, rho);
}

double linear_score(const LinearModel& m, const FeatureVector& x) {
    if (!x.schema_id.empty() && !m.schema_id.empty() && x.schema_id != m.schema_id) {
        throw SchemaError("feature vector schema " + x.schema_id + " does not match model schema " +
                          m.schema_id);
    }
    double z = m.bias;
    for (const auto& [name, v] : x.entries) {
        if (const auto it = m.weights.find(name); it != m.weights.end()) z += it->second * v;
    }
    return z;
}

double predict_proba(const LinearModel& m, const FeatureVector& x) {
    return sigmoid(linear_score(m, x));
}

BaselineModel train_mfc(const std::vector<int>& y) {
    if (y.empty()) throw DataError("cannot fit a baseline on no labels");
    const auto pos = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
    BaselineModel m;
    m.prior = static_cast<double>(pos) / static_cast<double>(y.size());
    m.majority = 2 * pos > y.size() ? 1 : 0;
    return m;
}

double predict_proba(const BaselineModel& m) {
    return m.prior;
}

// ---------------------------------------------------------------------------
// MLP

std::vector<std::size_t> MlpModel::word_ids(const TokenSeq& tokens) const {
    std::vector<std::size_t> ids;
    for (const auto& t : tokens) {
        if (const auto it = index.find(t.lower); it != index.end()) ids.push_back(it->second);
    }
    return ids;
}

MlpModel init_mlp(std::vector<std::string> vocab, const MlpConfig& config, std::uint64_t seed) {
    if (config.embed_dim == 0 || config.hidden == 0) throw ConfigError("MLP dimensions must be positive");
    if (!(config.dropout >= 0.0 && config.dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
    MlpModel m;
    m.config = config;
    m.vocab = std::move(vocab);
    for (std::size_t i = 0; i < m.vocab.size(); ++i) {
        if (!m.index.emplace(m.vocab[i], i).second) throw ConfigError("duplicate MLP vocabulary word");
    }
    const std::size_t e = config.embed_dim;
    const std::size_t d = config.hidden;
    Rng rng(seed);
    const auto fill = [&](std::vector<double>& v, std::size_t size, std::size_t fan_in) {
        const double r = 1.0 / std::sqrt(static_cast<double>(fan_in));
        v.resize(size);
        for (auto& x : v) x = rng.uniform(-r, r);
    };
    fill(m.emb, m.vocab.size() * e, e);
    fill(m.w1, d * e, e);
    fill(m.b1, d, e);
    fill(m.w2, d, d);
    fill(m.b2, 1, d);
    return m;
}

double mlp_loss(const MlpModel& m, const std::vector<std::vector<std::size_t>>& docs,
                const std::vector<int>& y, MlpModel* grads,
                const std::vector<std::vector<double>>* masks) {
    const std::size_t e = m.config.embed_dim;
    const std::size_t d = m.config.hidden;
    if (docs.size() != y.size() || docs.empty()) throw DataError("MLP batch is empty or mismatched");
    if (grads) {
        auto src = m.groups();
        auto dst = grads->groups();
        for (std::size_t g = 0; g < src.size(); ++g) dst[g]->assign(src[g]->size(), 0.0);
    }
    const double inv_b = 1.0 / static_cast<double>(docs.size());
    std::vector<double> mean(e);
    std::vector<double> h(d);
    std::vector<double> a(d);
    std::vector<double> dh(d);
    std::vector<double> dm(e);
    double total = 0.0;
    for (std::size_t ex = 0; ex < docs.size(); ++ex) {
        const auto& ids = docs[ex];
        std::fill(mean.begin(), mean.end(), 0.0);
        for (const auto w : ids) {
            for (std::size_t k = 0; k < e; ++k) mean[k] += m.emb[w * e + k];
        }
        if (!ids.empty()) {
            for (auto& v : mean) v /= static_cast<double>(ids.size());
        }
        double z = m.b2[0];
        for (std::size_t u = 0; u < d; ++u) {
            double acc = m.b1[u];
            const double* row = &m.w1[u * e];
            for (std::size_t k = 0; k < e; ++k) acc += row[k] * mean[k];
            h[u] = acc;
            a[u] = acc > 0.0 ? acc : 0.0;
            if (masks) a[u] *= (*masks)[ex][u];
            z += m.w2[u] * a[u];
        }
        total += logloss(z, y[ex]);
        if (!grads) continue;
        const double dz = (sigmoid(z) - y[ex]) * inv_b;
        grads->b2[0] += dz;
        for (std::size_t u = 0; u < d; ++u) {
            grads->w2[u] += dz * a[u];
            double g = dz * m.w2[u];
            if (masks) g *= (*masks)[ex][u];
            dh[u] = h[u] > 0.0 ? g : 0.0;
        }
        std::fill(dm.begin(), dm.end(), 0.0);
        for (std::size_t u = 0; u < d; ++u) {
            if (dh[u] == 0.0) continue;
            grads->b1[u] += dh[u];
            double* grow = &grads->w1[u * e];
            const double* row = &m.w1[u * e];
            for (std::size_t k = 0; k < e; ++k) {
                grow[k] += dh[u] * mean[k];
                dm[k] += dh[u] * row[k];
            }
        }
        if (!ids.empty()) {
            const double share = 1.0 / static_cast<double>(ids.size());
            for (const auto w : ids) {
                for (std::size_t k = 0; k < e; ++k) grads->emb[w * e + k] += dm[k] * share;
            }
        }
    }
    return total * inv_b;
}

MlpModel train_mlp(const std::vector<TokenSeq>& docs, const std::vector<int>& y,
                   const MlpConfig& config, std::uint64_t seed) {
    check_labels(y, docs.size());
    if (config.batch == 0 || config.epochs < 0) throw ConfigError("MLP batch size must be positive");
    std::vector<std::vector<std::string>> units;
    units.reserve(docs.size());
    for (const auto& d : docs) units.push_back(bow_units(d));
    const auto vocab = build_vocab(units, config.min_df);
    MlpModel m = init_mlp(vocab.words, config, mix64(seed));
    std::vector<std::vector<std::size_t>> ids;
    ids.reserve(docs.size());
    for (const auto& d : docs) ids.push_back(m.word_ids(d));

    MlpModel grads = m;
    auto params = m.groups();
    auto gparams = grads.groups();
    std::array<std::vector<double>, 5> m1;
    std::array<std::vector<double>, 5> m2;
    for (std::size_t g = 0; g < params.size(); ++g) {
        m1[g].assign(params[g]->size(), 0.0);
        m2[g].assign(params[g]->size(), 0.0);
    }
    Rng rng(mix64(seed ^ 0x6d6c70ULL));
    std::vector<std::size_t> order(docs.size());
    std::iota(order.begin(), order.end(), 0);
    const double keep = 1.0 - config.dropout;
    long step = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += config.batch) {
            const std::size_t end = std::min(order.size(), start + config.batch);
            std::vector<std::vector<std::size_t>> bx;
            std::vector<int> by;
            std::vector<std::vector<double>> masks;
            for (std::size_t k = start; k < end; ++k) {
                bx.push_back(ids[order[k]]);
                by.push_back(y[order[k]]);
                std::vector<double> mask(config.hidden, 1.0);
                if (config.dropout > 0.0) {
                    for (auto& v : mask) v = rng.uniform() < keep ? 1.0 / keep : 0.0;
                }
                masks.push_back(std::move(mask));
            }
            mlp_loss(m, bx, by, &grads, &masks);
            ++step;
            const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
            for (std::size_t g = 0; g < params.size(); ++g) {
                auto& p = *params[g];
                const auto& gr = *gparams[g];
                for (std::size_t i = 0; i < p.size(); ++i) {
                    m1[g][i] = config.beta1 * m1[g][i] + (1.0 - config.beta1) * gr[i];
                    m2[g][i] = config.beta2 * m2[g][i] + (1.0 - config.beta2) * gr[i] * gr[i];
                    p[i] -= config.lr * (m1[g][i] / c1) / (std::sqrt(m2[g][i] / c2) + config.eps);
                }
            }
        }
    }
    return m;
}

double predict_proba(const MlpModel& m, const TokenSeq& tokens) {
    const std::vector<std::vector<std::size_t>> docs = {m.word_ids(tokens)};
    const std::vector<int> y = {1};
    // the loss for label 1 is -log p
    return std::exp(-mlp_loss(m, docs, y));
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

std::string kind_of(const AnyModel& model) {
    switch (model.index()) {
        case 0: return "mfc";
        case 1: return "logreg";
        default: return "mlp";
    }
}

std::string mlp_vocab_id(const MlpModel& m) {
    std::uint64_t h = fnv1a("mlp");
    for (const auto& w : m.vocab) h = fnv1a(w, mix64(h));
    return hex64(h);
}

void write_row(std::ostream& out, std::string_view tag, const double* data, std::size_t n) {
    out << tag;
    for (std::size_t i = 0; i < n; ++i) out << ' ' << format_double(data[i]);
    out << '\n';
}

std::vector<double> read_row(std::istream& in, std::string_view tag, std::size_t n) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError("model file ends before '" + std::string(tag) + "'");
    std::istringstream ls(line);
    std::string got;
    ls >> got;
    if (got != tag) throw FormatError("expected '" + std::string(tag) + "' row, found '" + got + "'");
    std::vector<double> v;
    v.reserve(n);
    for (std::string f; ls >> f;) v.push_back(parse_double(f));
    if (v.size() != n) throw FormatError("'" + std::string(tag) + "' row has the wrong length");
    return v;
}

std::string expect_key(std::istream& in, std::string_view key) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError("model file ends before '" + std::string(key) + "'");
    const auto sp = line.find(' ');
    if (line.substr(0, sp) != key) throw FormatError("expected '" + std::string(key) + "' in model file");
    return sp == std::string::npos ? std::string() : line.substr(sp + 1);
}

}  // namespace

void write_model(std::ostream& out, const AnyModel& model) {
    const std::string kind = kind_of(model);
    if (const auto* b = std::get_if<BaselineModel>(&model)) {
        out << "model v" << kModelFormatVersion << ' ' << kind << " -\n";
        out << "majority " << b->majority << '\n';
        out << "prior " << format_double(b->prior) << '\n';
    } else if (const auto* l = std::get_if<LinearModel>(&model)) {
        out << "model v" << kModelFormatVersion << ' ' << kind << ' '
            << (l->schema_id.empty() ? "-" : l->schema_id) << '\n';
        out << "alpha " << format_double(l->alpha) << '\n';
        out << "rho " << format_double(l->rho) << '\n';
        out << "bias " << format_double(l->bias) << '\n';
        out << "epochs " << l->epochs << '\n';
        out << "converged " << (l->converged ? 1 : 0) << '\n';
        out << "weights " << l->weights.size() << '\n';
        for (const auto& [name, w] : l->weights) out << name << '\t' << format_double(w) << '\n';
    } else {
        const auto& m = std::get<MlpModel>(model);
        const auto& c = m.config;
        out << "model v" << kModelFormatVersion << ' ' << kind << ' ' << mlp_vocab_id(m) << '\n';
        out << "config " << c.embed_dim << ' ' << c.hidden << ' ' << format_double(c.dropout) << ' '
            << format_double(c.lr) << ' ' << c.epochs << ' ' << c.batch << ' ' << format_double(c.beta1)
            << ' ' << format_double(c.beta2) << ' ' << format_double(c.eps) << ' ' << c.min_df << '\n';
        out << "vocab " << m.vocab.size() << '\n';
        for (const auto& w : m.vocab) out << w << '\n';
        for (std::size_t i = 0; i < m.vocab.size(); ++i) write_row(out, "emb", &m.emb[i * c.embed_dim], c.embed_dim);
        for (std::size_t u = 0; u < c.hidden; ++u) write_row(out, "w1", &m.w1[u * c.embed_dim], c.embed_dim);
        write_row(out, "b1", m.b1.data(), m.b1.size());
        write_row(out, "w2", m.w2.data(), m.w2.size());
        write_row(out, "b2", m.b2.data(), m.b2.size());
    }
}

AnyModel read_model(std::istream& in) {
    std::string header;
    if (!std::getline(in, header)) throw FormatError("empty model file");
    std::istringstream hs(header);
    std::string magic;
    std::string version;
    std::string kind;
    std::string schema;
    hs >> magic >> version >> kind >> schema;
    if (magic != "model" || kind.empty() || schema.empty()) throw FormatError("corrupted model header");
    if (version != "v" + std::to_string(kModelFormatVersion)) {
        throw FormatError("unsupported model format version '" + version + "'");
    }
    if (kind == "mfc") {
        BaselineModel b;
        b.majority = static_cast<int>(parse_int(expect_key(in, "majority")));
        b.prior = parse_double(expect_key(in, "prior"));
        if (b.majority != 0 && b.majority != 1) throw FormatError("baseline majority must be 0 or 1");
        return b;
    }
    if (kind == "logreg") {
        LinearModel l;
        l.schema_id = schema == "-" ? "" : schema;
        l.alpha = parse_double(expect_key(in, "alpha"));
        l.rho = parse_double(expect_key(in, "rho"));
        l.bias = parse_double(expect_key(in, "bias"));
        l.epochs = static_cast<int>(parse_int(expect_key(in, "epochs")));
        l.converged = parse_int(expect_key(in, "converged")) != 0;
        const auto count = parse_int(expect_key(in, "weights"));
        for (long long i = 0; i < count; ++i) {
            std::string line;
            if (!std::getline(in, line)) throw FormatError("model file ends inside the weights");
            const auto tab = line.rfind('\t');
            if (tab == std::string::npos) throw FormatError("malformed weight line");
            const double w = parse_double(line.substr(tab + 1));
            if (!std::isfinite(w)) throw FormatError("non-finite weight in model file");
            l.weights.emplace(line.substr(0, tab), w);
        }
        return l;
    }
    if (kind == "mlp") {
        MlpConfig c;
        std::istringstream cs(expect_key(in, "config"));
        std::string f[10];
        for (auto& x : f) {
            if (!(cs >> x)) throw FormatError("malformed MLP config line");
        }
        c.embed_dim = static_cast<std::size_t>(parse_int(f[0]));
        c.hidden = static_cast<std::size_t>(parse_int(f[1]));
        c.dropout = parse_double(f[2]);
        c.lr = parse_double(f[3]);
        c.epochs = static_cast<int>(parse_int(f[4]));
        c.batch = static_cast<std::size_t>(parse_int(f[5]));
        c.beta1 = parse_double(f[6]);
        c.beta2 = parse_double(f[7]);
        c.eps = parse_double(f[8]);
        c.min_df = static_cast<std::size_t>(parse_int(f[9]));
        const auto v = static_cast<std::size_t>(parse_int(expect_key(in, "vocab")));
        std::vector<std::string> vocab(v);
        for (auto& w : vocab) {
            if (!std::getline(in, w)) throw FormatError("model file ends inside the vocabulary");
        }
        MlpModel m = init_mlp(std::move(vocab), c, 0);
        if (mlp_vocab_id(m) != schema) throw FormatError("MLP vocabulary does not match its header id");
        for (std::size_t i = 0; i < v; ++i) {
            const auto row = read_row(in, "emb", c.embed_dim);
            std::copy(row.begin(), row.end(), m.emb.begin() + static_cast<std::ptrdiff_t>(i * c.embed_dim));
        }
        for (std::size_t u = 0; u < c.hidden; ++u) {
            const auto row = read_row(in, "w1", c.embed_dim);
            std::copy(row.begin(), row.end(), m.w1.begin() + static_cast<std::ptrdiff_t>(u * c.embed_dim));
        }
        m.b1 = read_row(in, "b1", c.hidden);
        m.w2 = read_row(in, "w2", c.hidden);
        m.b2 = read_row(in, "b2", 1);
        return m;
    }
    throw FormatError("unknown model kind '" + kind + "'");
}

void save_model(const std::filesystem::path& path, const AnyModel& model) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write model " + path.string());
    write_model(out, model);
}

AnyModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model " + path.string());
    return read_model(in);
}

}  // namespace complaints
