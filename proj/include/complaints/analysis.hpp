#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "complaints/corpus.hpp"
#include "complaints/features.hpp"

namespace complaints {

// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
double incomplete_beta(double a, double b, double x);
// Two-tailed P(|T| >= |t|) for Student's t with `df` degrees of freedom.
double student_t_two_tailed(double t, double df);

double pearson_r(const std::vector<double>& x, const std::vector<double>& y);
// Two-tailed p-value of r for a sample of size n (t test, n - 2 df).
double pearson_p(double r, std::size_t n);

std::vector<double> simes_adjust(const std::vector<double>& p);

double cohen_kappa(const std::vector<int>& a, const std::vector<int>& b);

struct PairedTTest {
    double mean_diff = 0.0;
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;
};

// Two-tailed paired t test on a - b. Throws UndefinedError when the
// differences have zero variance but a nonzero mean is impossible to test.
PairedTTest paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

struct CorrelationEntry {
    std::string feature;
    double r = 0.0;
    double p = 1.0;
    double p_adjusted = 1.0;
    std::size_t n = 0;
};

struct CorrelationReport {
    std::string family;
    std::vector<CorrelationEntry> entries;   // all tested features, by descending r
    std::vector<CorrelationEntry> positive;  // p_adjusted < cutoff, r > 0, top_k by r
    std::vector<CorrelationEntry> negative;  // p_adjusted < cutoff, r < 0, top_k by -r
    std::vector<std::string> skipped;        // constant across documents
    double cutoff = 0.01;
};

// Correlates each feature with the 0/1 label over per-document features.
CorrelationReport correlate_features(const std::vector<FeatureVector>& features,
                                     const std::vector<int>& labels, std::string family,
                                     std::size_t top_k, double cutoff = 0.01);

// Extracts one family over the whole labeled corpus, normalizes each
// document's values to unit sum per namespace (cmp and sent are left raw),
// and correlates. Families: unigrams, pos, liwc, clusters, sent, cmp.
CorrelationReport correlation_report(const Corpus& corpus, std::string_view family,
                                     const FeatureResources& resources, std::size_t top_k,
                                     double cutoff = 0.01);

// feature<TAB>r<TAB>p<TAB>p_adjusted rows for the reported lists.
void write_correlation_tsv(std::ostream& out, const CorrelationReport& report);
void write_correlation_text(std::ostream& out, const CorrelationReport& report);

}  // namespace complaints
