#include "patterns/metrics.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>

namespace patterns {

double auc_roc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size())
        throw std::invalid_argument("auc_roc: scores and labels differ in length");
    std::size_t positives = 0;
    for (int y : labels) positives += (y != 0);
    const std::size_t negatives = labels.size() - positives;
    if (positives == 0 || negatives == 0)
        throw std::invalid_argument("auc_roc: labels are degenerate (single class)");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Sum of average ranks of the positives; ties share the mean rank of
    // their group, which yields exactly 0.5 per tied positive-negative pair.
    double positive_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double mean_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]] != 0) positive_rank_sum += mean_rank;
        i = j;
    }
    const double p = static_cast<double>(positives);
    const double n = static_cast<double>(negatives);
    return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

F1Accuracy f1_and_accuracy(std::span<const double> scores, std::span<const int> labels,
                           double threshold) {
    if (scores.size() != labels.size())
        throw std::invalid_argument("f1_and_accuracy: scores and labels differ in length");
    if (scores.empty())
        throw std::invalid_argument("f1_and_accuracy: empty input");

    std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
    std::size_t positives = 0;
    for (int y : labels) positives += (y != 0);
    if (positives == 0 || positives == labels.size())
        throw std::invalid_argument("f1_and_accuracy: labels are degenerate (single class)");
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = scores[i] > threshold;
        const bool actual = labels[i] != 0;
        if (predicted && actual) ++tp;
        else if (predicted) ++fp;
        else if (actual) ++fn;
        else ++tn;
    }

    F1Accuracy out;
    const double precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    const double recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    out.f1 = precision + recall > 0.0
                 ? 2.0 * precision * recall / (precision + recall)
                 : 0.0;
    const double recall_neg = tn + fp > 0 ? static_cast<double>(tn) / (tn + fp) : 0.0;
    out.balanced_accuracy = 0.5 * (recall + recall_neg);
    out.plain_accuracy =
        static_cast<double>(tp + tn) / static_cast<double>(scores.size());
    return out;
}

}  // namespace patterns
