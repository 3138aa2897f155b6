#include "complaints/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "complaints/common.hpp"

namespace complaints {

namespace {

// Continued fraction for I_x(a, b), valid for x < (a + 1) / (a + b + 2).
double beta_cf(double a, double b, double x) {
    constexpr double kTiny = 1e-300;
    constexpr double kEps = 1e-15;
    double c = 1.0;
    double d = 1.0 - (a + b) * x / (a + 1.0);
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 10000; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) return h;
    }
    throw InvariantError("incomplete beta continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw ConfigError("incomplete beta needs a, b > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                             b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_tailed(double t, double df) {
    if (!(df > 0.0)) throw ConfigError("t distribution needs df > 0");
    if (std::isinf(t)) return 0.0;
    if (std::isnan(t)) throw UndefinedError("t statistic is NaN");
    return incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

double pearson_r(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw DataError("pearson_r needs equal-length inputs");
    if (x.size() < 3) throw DataError("pearson_r needs at least three observations");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw UndefinedError("correlation undefined for a constant input");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double pearson_p(double r, std::size_t n) {
    if (n < 3) throw DataError("pearson_p needs n >= 3");
    if (std::abs(r) >= 1.0) return 0.0;
    const double df = static_cast<double>(n) - 2.0;
    const double t = r * std::sqrt(df / (1.0 - r * r));
    return student_t_two_tailed(t, df);
}

std::vector<double> simes_adjust(const std::vector<double>& p) {
    const std::size_t m = p.size();
    for (const double v : p) {
        if (!(v >= 0.0 && v <= 1.0)) throw DataError("p-values must lie in [0, 1]");
    }
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
    std::vector<double> adj(m);
    double running = 1.0;
    for (std::size_t k = m; k-- > 0;) {
        const double v = static_cast<double>(m) * p[order[k]] / static_cast<double>(k + 1);
        running = std::min(running, v);
        // m * p / m can round below p
        adj[order[k]] = std::min(1.0, std::max(running, p[order[k]]));
    }
    return adj;
}

double cohen_kappa(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) throw DataError("kappa needs equal-length label sequences");
    if (a.empty()) throw DataError("kappa needs at least one item");
    const double n = static_cast<double>(a.size());
    double agree = 0.0;
    double a1 = 0.0;
    double b1 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if ((a[i] != 0 && a[i] != 1) || (b[i] != 0 && b[i] != 1)) {
            throw DataError("kappa labels must be 0 or 1");
        }
        if (a[i] == b[i]) agree += 1.0;
        a1 += a[i];
        b1 += b[i];
    }
    const double po = agree / n;
    const double pe = (a1 / n) * (b1 / n) + (1.0 - a1 / n) * (1.0 - b1 / n);
    if (pe >= 1.0) throw UndefinedError("kappa undefined: chance agreement is 1");
    return (po - pe) / (1.0 - pe);
}

PairedTTest paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2) throw DataError("paired t test needs two equal samples of size >= 2");
    const double n = static_cast<double>(a.size());
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / n;
    double ss = 0.0;
    for (const double v : d) ss += (v - mean) * (v - mean);
    PairedTTest r;
    r.mean_diff = mean;
    r.df = n - 1.0;
    const double se = std::sqrt(ss / (n - 1.0) / n);
    if (se == 0.0) {
        if (mean == 0.0) {
            r.t = 0.0;
            r.p = 1.0;
            return r;
        }
        throw UndefinedError("paired t test undefined: differences are constant and nonzero");
    }
    r.t = mean / se;
    r.p = student_t_two_tailed(r.t, r.df);
    return r;
}

CorrelationReport correlate_features(const std::vector<FeatureVector>& features,
                                     const std::vector<int>& labels, std::string family,
                                     std::size_t top_k, double cutoff) {
    if (features.size() != labels.size()) throw DataError("feature and label counts differ");
    CorrelationReport rep;
    rep.family = std::move(family);
    rep.cutoff = cutoff;
    std::set<std::string> names;
    for (const auto& v : features) {
        for (const auto& [k, _] : v.entries) names.insert(k);
    }
    std::vector<double> y(labels.begin(), labels.end());
    std::vector<double> x(features.size());
    for (const auto& name : names) {
        for (std::size_t i = 0; i < features.size(); ++i) x[i] = features[i].get(name);
        CorrelationEntry e;
        e.feature = name;
        e.n = features.size();
        try {
            e.r = pearson_r(x, y);
        } catch (const UndefinedError&) {
            rep.skipped.push_back(name);
            continue;
        }
        e.p = pearson_p(e.r, e.n);
        rep.entries.push_back(std::move(e));
    }
    std::vector<double> ps;
    ps.reserve(rep.entries.size());
    for (const auto& e : rep.entries) ps.push_back(e.p);
    const auto adj = simes_adjust(ps);
    for (std::size_t i = 0; i < adj.size(); ++i) rep.entries[i].p_adjusted = std::max(adj[i], rep.entries[i].p);
    std::stable_sort(rep.entries.begin(), rep.entries.end(), [](const CorrelationEntry& a, const CorrelationEntry& b) {
        return a.r != b.r ? a.r > b.r : a.feature < b.feature;
    });
    for (const auto& e : rep.entries) {
        if (rep.positive.size() < top_k && e.r > 0 && e.p_adjusted < cutoff) rep.positive.push_back(e);
    }
    for (auto it = rep.entries.rbegin(); it != rep.entries.rend(); ++it) {
        if (rep.negative.size() < top_k && it->r < 0 && it->p_adjusted < cutoff) rep.negative.push_back(*it);
    }
    return rep;
}

CorrelationReport correlation_report(const Corpus& corpus, std::string_view family,
                                     const FeatureResources& resources, std::size_t top_k,
                                     double cutoff) {
    std::string fam = to_lower_ascii(family);
    if (fam == "bow") fam = "unigrams";
    if (fam == "cl") fam = "clusters";
    static const std::set<std::string> known = {"unigrams", "pos", "liwc", "clusters", "sent", "cmp"};
    if (!known.contains(fam)) throw ConfigError("unknown analysis family '" + std::string(family) + "'");

    std::vector<const Document*> docs;
    std::vector<int> labels;
    for (const auto& d : corpus.documents) {
        if (d.label == Label::unlabeled) continue;
        docs.push_back(&d);
        labels.push_back(d.is_complaint() ? 1 : 0);
    }
    if (docs.size() < 3) throw DataError("correlation analysis needs at least three labeled documents");

    FeatureConfig config;
    config.families = {fam == "unigrams" ? std::string("bow") : fam};
    const auto pipeline = FeaturePipeline::fit(docs, config, resources);
    std::vector<FeatureVector> features;
    features.reserve(docs.size());
    for (const Document* d : docs) {
        if (fam == "unigrams") {
            // relative frequency of each vocabulary word
            TokenSeq toks = d->tokens ? *d->tokens : tokenize(d->clean_text);
            FeatureVector v;
            for (const auto& t : toks) {
                if (pipeline.vocab().contains(t.lower)) v.add("bow:" + t.lower, 1.0);
            }
            features.push_back(normalize_unit_sum(v));
            continue;
        }
        FeatureVector v = pipeline.base_features(*d);
        if (fam != "cmp" && fam != "sent") v = normalize_unit_sum_per_family(v);
        features.push_back(std::move(v));
    }
    return correlate_features(features, labels, fam, top_k, cutoff);
}

namespace {

std::string fixed(double v, int digits) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

std::string sci(double v) {
    std::ostringstream s;
    s << std::scientific << std::setprecision(3) << v;
    return s.str();
}

}  // namespace

void write_correlation_tsv(std::ostream& out, const CorrelationReport& report) {
    out << "# family: " << report.family << '\n';
    out << "# cutoff: p_adjusted < " << format_double(report.cutoff) << " (Simes)\n";
    out << "side\trank\tfeature\tr\tp\tp_adjusted\n";
    for (std::size_t i = 0; i < report.positive.size(); ++i) {
        const auto& e = report.positive[i];
        out << "complaint\t" << i + 1 << '\t' << e.feature << '\t' << fixed(e.r, 4) << '\t' << sci(e.p) << '\t'
            << sci(e.p_adjusted) << '\n';
    }
    for (std::size_t i = 0; i < report.negative.size(); ++i) {
        const auto& e = report.negative[i];
        out << "not_complaint\t" << i + 1 << '\t' << e.feature << '\t' << fixed(e.r, 4) << '\t' << sci(e.p)
            << '\t' << sci(e.p_adjusted) << '\n';
    }
}

void write_correlation_text(std::ostream& out, const CorrelationReport& report) {
    out << "Features associated with complaints (" << report.family << ")\n";
    const std::size_t rows = std::max(report.positive.size(), report.negative.size());
    out << std::left << std::setw(28) << "Complaints" << std::setw(8) << "r" << std::setw(28)
        << "Not complaints" << "r\n";
    for (std::size_t i = 0; i < rows; ++i) {
        if (i < report.positive.size()) {
            out << std::setw(28) << report.positive[i].feature << std::setw(8) << fixed(report.positive[i].r, 3);
        } else {
            out << std::setw(36) << "";
        }
        if (i < report.negative.size()) {
            out << std::setw(28) << report.negative[i].feature << fixed(-report.negative[i].r, 3);
        }
        out << '\n';
    }
    if (!report.skipped.empty()) out << "(" << report.skipped.size() << " constant features skipped)\n";
}

}  // namespace complaints
