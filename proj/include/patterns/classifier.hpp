#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "patterns/metrics.hpp"

namespace patterns {

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct ClassWeights {
    double positive{};
    double negative{};
};

// Balanced weights: N/(2*N_pos) and N/(2*N_neg). Throws when either class
// is empty.
ClassWeights class_weights(std::int64_t n_total, std::int64_t n_positive);

struct TrainConfig {
    double reg_strength = 1.0;  // L2 on the weights, not the bias
    double grad_tolerance = 1e-4;
    int max_iterations = 1000;
    int lbfgs_history = 10;
};

struct ConvergenceReport {
    int iterations{};
    double final_grad_norm{};
    bool converged{};
    std::vector<double> loss_trace;  // objective after each accepted step
};

struct LabelModel {
    std::string label;
    Eigen::VectorXd weights;
    double bias{};
    ConvergenceReport report;
};

// Weighted L2-regularized logistic objective over the stacked [w; b]:
//   sum_i s_i * log(1 + exp(-y_i * (w.x_i + b))) + reg/2 * ||w||^2
// with y_i in {-1,+1}. Fills *grad when non-null.
double logistic_loss(const SparseRowMatrix& X, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& sample_weights, double reg,
                     const Eigen::VectorXd& wb, Eigen::VectorXd* grad = nullptr);

// One-vs-rest binary trainer: L-BFGS with backtracking line search, so the
// objective never increases. Stops when the gradient max-norm drops under
// grad_tolerance or at max_iterations; non-convergence is flagged on the
// report, never thrown. positives[i] marks row i as a positive example.
LabelModel train_label(const SparseRowMatrix& X, const std::vector<std::uint8_t>& positives,
                       std::string label, const TrainConfig& cfg);

// Per-row multi-label targets, column-major by label.
struct LabelMatrix {
    std::vector<std::string> names;
    std::vector<std::vector<std::uint8_t>> columns;  // columns[l][row]

    std::size_t label_count() const { return names.size(); }
};

struct TrainedModel {
    double reg_strength{};
    std::uint64_t vocabulary_hash{};
    std::vector<LabelModel> labels;
    std::vector<std::string> skipped_labels;  // no positives (or no negatives)

    // Text artifact with hexfloat values; round-trips bit-exactly.
    void save(const std::filesystem::path& path) const;
    static TrainedModel load(const std::filesystem::path& path);
};

TrainedModel train(const SparseRowMatrix& X, const LabelMatrix& labels,
                   const TrainConfig& cfg, std::uint64_t vocabulary_hash = 0);

// Logistic probabilities, clamped to the open interval (0,1). Throws on a
// column-count mismatch.
Eigen::VectorXd predict_scores(const LabelModel& model, const SparseRowMatrix& X);

struct FoldPlan {
    std::uint64_t seed{};
    std::vector<int> fold_of_row;

    // Seeded Fisher-Yates over row indices, then round-robin assignment:
    // fold sizes differ by at most one and the plan depends only on (rows,
    // seed, n_folds).
    static FoldPlan make(std::size_t rows, std::uint64_t seed, int n_folds = 5);
};

struct CrossValConfig {
    int n_folds = 5;
    std::uint64_t seed = 1;
    double threshold = 0.5;
    int workers = 1;  // concurrent per-label training; results are
                      // collected per label slot, so the output does not
                      // depend on this
    TrainConfig train;
};

struct MetricSummary {
    double mean{};
    double stddev{};  // sample standard deviation across folds
};

struct CrossValResult {
    std::vector<FoldMetrics> folds;
    MetricSummary auc;
    MetricSummary f1;
    MetricSummary accuracy;
};

// 5-fold (by default) one-vs-rest cross-validation. Labels that are
// degenerate in a fold's training or test rows are skipped there and
// excluded from that fold's macro averages.
CrossValResult cross_validate(const SparseRowMatrix& X, const LabelMatrix& labels,
                              const CrossValConfig& cfg);

SparseRowMatrix select_rows(const SparseRowMatrix& X, const std::vector<int>& rows);

}  // namespace patterns
