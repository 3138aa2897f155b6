#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "complaints/corpus.hpp"
#include "complaints/features.hpp"
#include "complaints/models.hpp"

namespace complaints {

struct Metrics {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    std::optional<double> roc_auc;  // undefined for single-class folds
};

// Predictions are positive iff score > threshold.
std::vector<int> threshold_scores(const std::vector<double>& scores, double threshold = 0.5);
double accuracy(const std::vector<int>& y, const std::vector<int>& pred);
// A class with no true and no predicted members contributes F1 = 0.
double macro_f1(const std::vector<int>& y, const std::vector<int>& pred);
// Mann-Whitney statistic from average ranks; ties get half credit. Throws
// UndefinedError when y holds a single class.
double roc_auc(const std::vector<int>& y, const std::vector<double>& scores);
Metrics compute_metrics(const std::vector<int>& y, const std::vector<double>& scores,
                        double threshold = 0.5);

enum class ModelKind { mfc, logreg, mlp };
std::string_view model_kind_name(ModelKind k);
ModelKind parse_model_kind(std::string_view s);

struct ModelConfig {
    ModelKind kind = ModelKind::logreg;
    std::vector<double> alphas = {1e-4, 1e-3, 1e-2, 1e-1, 1.0};
    std::vector<double> rhos = {0.0, 0.25, 0.5, 0.75, 1.0};
    // used when a training set is too small for inner cross-validation
    double fallback_alpha = 1e-2;
    double fallback_rho = 0.5;
    LogregOptions logreg;
    MlpConfig mlp;
    std::uint64_t seed = 0;
    double threshold = 0.5;
};

// One train/test split with its inner folds for hyperparameter search.
struct SplitTask {
    std::vector<const Document*> train;
    std::vector<int> inner_fold;  // per train doc; -1 = always in inner training
    std::size_t inner_folds = 3;
    std::vector<const Document*> test;
    // EasyAdapt: domain of each document (empty = no augmentation)
    std::function<std::string(const Document&)> domain_of;
    std::vector<std::string> domains;
};

struct SplitResult {
    std::vector<double> scores;  // aligned with task.test
    std::string params;
    std::string pipeline_fingerprint;
    std::vector<std::string> active_families;
};

SplitResult run_split(const SplitTask& task, const FeatureConfig& features,
                      const FeatureResources& resources, const ModelConfig& model);

// Runs fn(0..n-1) on up to `jobs` threads. Results must be written to
// per-index slots; the first exception by index is rethrown.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

struct FoldResult {
    std::size_t fold = 0;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    Metrics metrics;
    std::string params;
    std::string pipeline_fingerprint;
};

struct ExperimentReport {
    std::string experiment;
    std::vector<std::pair<std::string, std::string>> config;
    std::string fold_plan;
    std::vector<std::string> active_families;
    std::vector<FoldResult> folds;
    Metrics mean;
    std::vector<std::string> notes;

    std::string fingerprint() const;
};

Metrics mean_metrics(const std::vector<FoldResult>& folds);

// Copies the corpus and fills tokens and POS tags once.
Corpus prepared_copy(const Corpus& corpus, const FeatureResources& resources);

// Family list with the sentiment sources spelled out, e.g. "bow,sent(rule+mpqa)".
std::string describe_families(const std::vector<std::string>& families, const FeatureResources& resources);

ExperimentReport run_nested_cv(const Corpus& corpus, const FoldPlan& plan, const FeatureConfig& features,
                               const FeatureResources& resources, const ModelConfig& model, int jobs = 1);

enum class DistantMode { annotated_only, pooling, easyadapt };
std::string_view distant_mode_name(DistantMode m);
DistantMode parse_distant_mode(std::string_view s);

// Distant documents join every training set (and every inner training set);
// test folds stay annotated-only.
ExperimentReport run_distant_experiment(const Corpus& annotated, const Corpus& distant, DistantMode mode,
                                        const FoldPlan& plan, const FeatureConfig& features,
                                        const FeatureResources& resources, const ModelConfig& model,
                                        int jobs = 1);

enum class DomainMode { in_domain, pooling, easyadapt };
std::string_view domain_mode_name(DomainMode m);
DomainMode parse_domain_mode(std::string_view s);

struct DomainRow {
    Domain domain = Domain::unknown;
    std::size_t n = 0;
    std::size_t positives = 0;
    std::size_t folds = 0;
    std::optional<double> macro_f1;
    std::string note;
};

struct DomainReport {
    DomainMode mode = DomainMode::in_domain;
    std::vector<DomainRow> rows;
    std::string fingerprint;
};

DomainReport run_domain_experiment(const Corpus& corpus, DomainMode mode, const FeatureConfig& features,
                                   const FeatureResources& resources, const ModelConfig& model,
                                   std::size_t folds = 10, int jobs = 1);

struct CrossDomainReport {
    std::vector<Domain> domains;
    // auc[i][j]: trained on domains[i], tested on domains[j]; diagonal empty
    std::vector<std::vector<std::optional<double>>> auc;
    // trained on every domain except domains[j]
    std::vector<std::optional<double>> all_but_one;
    std::string fingerprint;
};

CrossDomainReport run_crossdomain(const Corpus& corpus, const FeatureConfig& features,
                                  const FeatureResources& resources, const ModelConfig& model, int jobs = 1);

void write_report(std::ostream& out, const ExperimentReport& report);
void write_domain_table(std::ostream& out, const std::vector<DomainReport>& reports);
void write_crossdomain(std::ostream& out, const CrossDomainReport& report);

}  // namespace complaints
