#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "complaints/features.hpp"
#include "complaints/token.hpp"

namespace complaints {

// Compressed sparse rows over a schema's column order.
struct SparseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> row_ptr{0};
    std::vector<std::uint32_t> col;
    std::vector<double> val;
};

// Features missing from the schema are dropped.
SparseMatrix build_matrix(const std::vector<FeatureVector>& vectors, const FeatureSchema& schema);

struct LogregOptions {
    double tol = 1e-6;
    int max_epochs = 1000;
    std::uint64_t seed = 0;  // fixes the coordinate visiting order
};

// Dense solver state, aligned with the matrix columns.
struct LogregFit {
    std::vector<double> w;
    double b = 0.0;
    int epochs = 0;
    bool converged = false;
};

// mean log-loss + alpha * (rho * |w|_1 + (1 - rho) / 2 * |w|_2^2); b is not penalized.
double logreg_objective(const SparseMatrix& x, const std::vector<int>& y, const std::vector<double>& w,
                        double b, double alpha, double rho);

// Proximal Newton: each outer iteration solves the weighted least-squares
// model of the loss by soft-thresholded coordinate descent, then backtracks
// on the true objective. `epochs` counts outer iterations. `warm` seeds the
// weights.
LogregFit fit_logreg(const SparseMatrix& x, const std::vector<int>& y, double alpha, double rho,
                     const LogregOptions& opts = {}, const LogregFit* warm = nullptr);

std::vector<double> predict_proba(const LogregFit& fit, const SparseMatrix& x);

struct LinearModel {
    std::string schema_id;
    std::map<std::string, double> weights;  // nonzero only
    double bias = 0.0;
    double alpha = 0.0;
    double rho = 0.0;
    int epochs = 0;
    bool converged = false;

    bool operator==(const LinearModel&) const = default;
};

LinearModel to_linear_model(const LogregFit& fit, const FeatureSchema& schema, double alpha, double rho);
LinearModel train_logreg(const std::vector<FeatureVector>& x, const std::vector<int>& y, double alpha,
                         double rho, const LogregOptions& opts = {});

double linear_score(const LinearModel& m, const FeatureVector& x);
double predict_proba(const LinearModel& m, const FeatureVector& x);

double sigmoid(double z);

struct BaselineModel {
    int majority = 0;
    double prior = 0.0;  // training share of the positive class

    bool operator==(const BaselineModel&) const = default;
};

// Ties go to label 0. Scores are the constant prior; predicted positive iff
// prior > 0.5, which agrees with `majority`.
BaselineModel train_mfc(const std::vector<int>& y);
double predict_proba(const BaselineModel& m);

struct MlpConfig {
    std::size_t embed_dim = 200;
    std::size_t hidden = 100;
    double dropout = 0.2;
    double lr = 0.01;
    int epochs = 30;
    std::size_t batch = 32;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t min_df = 2;

    bool operator==(const MlpConfig&) const = default;
};

struct MlpModel {
    MlpConfig config;
    std::vector<std::string> vocab;
    std::unordered_map<std::string, std::size_t> index;
    std::vector<double> emb;  // V x E
    std::vector<double> w1;   // D x E
    std::vector<double> b1;   // D
    std::vector<double> w2;   // D
    std::vector<double> b2;   // 1

    std::array<std::vector<double>*, 5> groups() { return {&emb, &w1, &b1, &w2, &b2}; }
    std::array<const std::vector<double>*, 5> groups() const { return {&emb, &w1, &b1, &w2, &b2}; }
    static constexpr std::array<const char*, 5> kGroupNames = {"emb", "w1", "b1", "w2", "b2"};
    std::vector<std::size_t> word_ids(const TokenSeq& tokens) const;
    bool operator==(const MlpModel&) const = default;
};

// Seeded uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization.
MlpModel init_mlp(std::vector<std::string> vocab, const MlpConfig& config, std::uint64_t seed);

// Mean binary cross-entropy over the examples. `masks` (one hidden-size
// vector per example, entries 0 or 1/(1-p)) applies dropout; without it the
// network runs in inference mode. Fills `grads` (same shapes as the model)
// when non-null.
double mlp_loss(const MlpModel& m, const std::vector<std::vector<std::size_t>>& docs,
                const std::vector<int>& y, MlpModel* grads = nullptr,
                const std::vector<std::vector<double>>* masks = nullptr);

MlpModel train_mlp(const std::vector<TokenSeq>& docs, const std::vector<int>& y,
                   const MlpConfig& config, std::uint64_t seed);
double predict_proba(const MlpModel& m, const TokenSeq& tokens);

using AnyModel = std::variant<BaselineModel, LinearModel, MlpModel>;

inline constexpr int kModelFormatVersion = 1;

void write_model(std::ostream& out, const AnyModel& model);
AnyModel read_model(std::istream& in);
void save_model(const std::filesystem::path& path, const AnyModel& model);
AnyModel load_model(const std::filesystem::path& path);

}  // namespace complaints
