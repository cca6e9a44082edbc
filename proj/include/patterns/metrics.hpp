#pragma once

#include <span>
#include <string>
#include <vector>

namespace patterns {

// Rank-based (Mann-Whitney) AUC; tied scores contribute half per tied
// positive-negative pair. Labels are 0/1. Throws std::invalid_argument when
// either class is empty.
double auc_roc(std::span<const double> scores, std::span<const int> labels);

struct F1Accuracy {
    double f1{};
    double balanced_accuracy{};  // mean of the two per-class recalls
    double plain_accuracy{};     // fraction of correct predictions
};

// Binarizes scores (positive iff score > threshold) and computes per-label
// F1 and accuracies from the confusion matrix. F1 is 0 when precision and
// recall are both 0.
F1Accuracy f1_and_accuracy(std::span<const double> scores, std::span<const int> labels,
                           double threshold = 0.5);

struct LabelMetrics {
    std::string label;
    double auc{};
    double f1{};
    double balanced_accuracy{};
    double plain_accuracy{};
    int positives{};
    int negatives{};
};

// One cross-validation fold: macro averages over the labels that had at
// least one positive and one negative test example.
struct FoldMetrics {
    double auc_roc{};
    double f1{};
    double accuracy{};  // macro balanced accuracy
    std::vector<LabelMetrics> per_label;
    std::vector<std::string> skipped_labels;  // degenerate in this fold
};

}  // namespace patterns
