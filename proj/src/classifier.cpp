#include "patterns/classifier.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <limits>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace patterns {

namespace {

double softplus(double a) {
    // log(1 + exp(a)) without overflow
    return a > 0.0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a));
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// Sigmoid clamped into the open interval (0,1); saturated doubles would
// otherwise round to exactly 0 or 1.
double sigmoid_open(double z) {
    const double p = sigmoid(z);
    if (p <= 0.0) return std::numeric_limits<double>::min();
    if (p >= 1.0) return 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
    return p;
}

std::string hexdouble(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

double parse_hexdouble(const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size())
        throw std::runtime_error("model file: bad float '" + s + "'");
    return v;
}

}  // namespace

ClassWeights class_weights(std::int64_t n_total, std::int64_t n_positive) {
    if (n_positive <= 0 || n_positive >= n_total)
        throw std::invalid_argument("class_weights: need at least one positive and one "
                                    "negative example");
    const double n = static_cast<double>(n_total);
    return {n / (2.0 * static_cast<double>(n_positive)),
            n / (2.0 * static_cast<double>(n_total - n_positive))};
}

double logistic_loss(const SparseRowMatrix& X, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& sample_weights, double reg,
                     const Eigen::VectorXd& wb, Eigen::VectorXd* grad) {
    const Eigen::Index rows = X.rows();
    const Eigen::Index dim = X.cols();
    if (wb.size() != dim + 1)
        throw std::invalid_argument("logistic_loss: parameter size mismatch");
    if (y.size() != rows || sample_weights.size() != rows)
        throw std::invalid_argument("logistic_loss: row count mismatch");

    const Eigen::VectorXd w = wb.head(dim);
    const double b = wb(dim);

    Eigen::VectorXd z = X * w;
    z.array() += b;

    double loss = 0.5 * reg * w.squaredNorm();
    for (Eigen::Index i = 0; i < rows; ++i)
        loss += sample_weights(i) * softplus(-y(i) * z(i));

    if (grad) {
        Eigen::VectorXd residual(rows);
        for (Eigen::Index i = 0; i < rows; ++i) {
            const double target = y(i) > 0.0 ? 1.0 : 0.0;
            residual(i) = sample_weights(i) * (sigmoid(z(i)) - target);
        }
        grad->resize(dim + 1);
        grad->head(dim) = X.transpose() * residual + reg * w;
        (*grad)(dim) = residual.sum();
    }
    return loss;
}

LabelModel train_label(const SparseRowMatrix& X, const std::vector<std::uint8_t>& positives,
                       std::string label, const TrainConfig& cfg) {
    const Eigen::Index rows = X.rows();
    const Eigen::Index dim = X.cols();
    if (std::ssize(positives) != rows)
        throw std::invalid_argument("train_label: label vector length mismatch");

    std::int64_t n_pos = 0;
    for (std::uint8_t p : positives) n_pos += (p != 0);
    const ClassWeights cw = class_weights(rows, n_pos);

    Eigen::VectorXd y(rows), sw(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        y(i) = positives[i] ? 1.0 : -1.0;
        sw(i) = positives[i] ? cw.positive : cw.negative;
    }

    LabelModel model;
    model.label = std::move(label);

    Eigen::VectorXd wb = Eigen::VectorXd::Zero(dim + 1);
    Eigen::VectorXd grad;
    double loss = logistic_loss(X, y, sw, cfg.reg_strength, wb, &grad);
    model.report.loss_trace.push_back(loss);

    std::deque<Eigen::VectorXd> s_hist, y_hist;
    std::deque<double> rho_hist;

    int iter = 0;
    bool converged = false;
    while (iter < cfg.max_iterations) {
        if (grad.lpNorm<Eigen::Infinity>() < cfg.grad_tolerance) {
            converged = true;
            break;
        }

        // L-BFGS two-loop recursion
        Eigen::VectorXd direction = grad;
        std::vector<double> alpha(s_hist.size());
        for (std::size_t k = s_hist.size(); k-- > 0;) {
            alpha[k] = rho_hist[k] * s_hist[k].dot(direction);
            direction -= alpha[k] * y_hist[k];
        }
        if (!s_hist.empty()) {
            const double gamma =
                s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
            direction *= gamma;
        }
        for (std::size_t k = 0; k < s_hist.size(); ++k) {
            const double beta = rho_hist[k] * y_hist[k].dot(direction);
            direction += (alpha[k] - beta) * s_hist[k];
        }
        direction = -direction;

        double g_dot_d = grad.dot(direction);
        if (g_dot_d >= 0.0) {  // not a descent direction; fall back
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            direction = -grad;
            g_dot_d = -grad.squaredNorm();
        }

        // Armijo backtracking keeps the objective non-increasing.
        constexpr double c1 = 1e-4;
        double step = 1.0;
        Eigen::VectorXd cand, cand_grad;
        double cand_loss = 0.0;
        bool accepted = false;
        while (step >= 1e-20) {
            cand = wb + step * direction;
            cand_loss = logistic_loss(X, y, sw, cfg.reg_strength, cand, &cand_grad);
            if (cand_loss <= loss + c1 * step * g_dot_d) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;  // stuck; report non-convergence below

        Eigen::VectorXd s = cand - wb;
        Eigen::VectorXd yg = cand_grad - grad;
        const double sy = s.dot(yg);
        if (sy > 1e-12 * s.norm() * yg.norm()) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(yg));
            rho_hist.push_back(1.0 / sy);
            if (std::ssize(s_hist) > cfg.lbfgs_history) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }
        wb = std::move(cand);
        grad = std::move(cand_grad);
        loss = cand_loss;
        model.report.loss_trace.push_back(loss);
        ++iter;
    }

    model.report.iterations = iter;
    model.report.final_grad_norm = grad.lpNorm<Eigen::Infinity>();
    model.report.converged =
        converged || model.report.final_grad_norm < cfg.grad_tolerance;
    model.weights = wb.head(dim);
    model.bias = wb(dim);
    return model;
}

TrainedModel train(const SparseRowMatrix& X, const LabelMatrix& labels,
                   const TrainConfig& cfg, std::uint64_t vocabulary_hash) {
    TrainedModel model;
    model.reg_strength = cfg.reg_strength;
    model.vocabulary_hash = vocabulary_hash;
    for (std::size_t l = 0; l < labels.label_count(); ++l) {
        const std::vector<std::uint8_t>& column = labels.columns[l];
        const std::int64_t n_pos =
            std::count_if(column.begin(), column.end(), [](std::uint8_t v) { return v != 0; });
        if (n_pos == 0 || n_pos == std::ssize(column)) {
            model.skipped_labels.push_back(labels.names[l]);
            continue;
        }
        model.labels.push_back(train_label(X, column, labels.names[l], cfg));
    }
    return model;
}

Eigen::VectorXd predict_scores(const LabelModel& model, const SparseRowMatrix& X) {
    if (X.cols() != model.weights.size())
        throw std::invalid_argument("predict_scores: feature dimension mismatch");
    Eigen::VectorXd z = X * model.weights;
    z.array() += model.bias;
    Eigen::VectorXd p(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) p(i) = sigmoid_open(z(i));
    return p;
}

FoldPlan FoldPlan::make(std::size_t rows, std::uint64_t seed, int n_folds) {
    if (n_folds < 2) throw std::invalid_argument("FoldPlan: need at least 2 folds");
    if (rows < static_cast<std::size_t>(n_folds))
        throw std::invalid_argument("FoldPlan: fewer rows than folds");

    std::vector<std::size_t> order(rows);
    for (std::size_t i = 0; i < rows; ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = rows - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
        std::swap(order[i], order[j]);
    }

    FoldPlan plan;
    plan.seed = seed;
    plan.fold_of_row.resize(rows);
    for (std::size_t i = 0; i < rows; ++i)
        plan.fold_of_row[order[i]] = static_cast<int>(i % n_folds);
    return plan;
}

SparseRowMatrix select_rows(const SparseRowMatrix& X, const std::vector<int>& rows) {
    SparseRowMatrix out(static_cast<Eigen::Index>(rows.size()), X.cols());
    std::vector<Eigen::Triplet<double>> triplets;
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (SparseRowMatrix::InnerIterator it(X, rows[r]); it; ++it)
            triplets.emplace_back(static_cast<Eigen::Index>(r), it.col(), it.value());
    out.setFromTriplets(triplets.begin(), triplets.end());
    return out;
}

namespace {

MetricSummary summarize(const std::vector<double>& values) {
    MetricSummary s;
    const double n = static_cast<double>(values.size());
    for (double v : values) s.mean += v;
    s.mean /= n;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(ss / (n - 1.0));
    }
    return s;
}

}  // namespace

CrossValResult cross_validate(const SparseRowMatrix& X, const LabelMatrix& labels,
                              const CrossValConfig& cfg) {
    const std::size_t rows = static_cast<std::size_t>(X.rows());
    if (rows < static_cast<std::size_t>(cfg.n_folds))
        throw std::invalid_argument("cross_validate: need at least as many pieces as folds");
    for (const auto& column : labels.columns)
        if (column.size() != rows)
            throw std::invalid_argument("cross_validate: label column length mismatch");

    const FoldPlan plan = FoldPlan::make(rows, cfg.seed, cfg.n_folds);

    CrossValResult result;
    std::vector<double> aucs, f1s, accs;
    for (int fold = 0; fold < cfg.n_folds; ++fold) {
        std::vector<int> train_rows, test_rows;
        for (std::size_t r = 0; r < rows; ++r)
            (plan.fold_of_row[r] == fold ? test_rows : train_rows)
                .push_back(static_cast<int>(r));

        const SparseRowMatrix x_train = select_rows(X, train_rows);
        const SparseRowMatrix x_test = select_rows(X, test_rows);

        // Degeneracy screening is cheap and sequential; training of the
        // surviving labels runs on a slot-per-label pool so the collected
        // results do not depend on scheduling.
        struct LabelTask {
            std::size_t label{};
            std::vector<std::uint8_t> y_train;
            std::vector<int> y_test;
            int test_pos{};
            Eigen::VectorXd probs;
        };
        FoldMetrics fm;
        std::vector<LabelTask> tasks;
        for (std::size_t l = 0; l < labels.label_count(); ++l) {
            const std::vector<std::uint8_t>& column = labels.columns[l];
            LabelTask task;
            task.label = l;
            task.y_train.resize(train_rows.size());
            task.y_test.resize(test_rows.size());
            std::int64_t train_pos = 0;
            for (std::size_t i = 0; i < train_rows.size(); ++i)
                train_pos += (task.y_train[i] = column[train_rows[i]]) != 0;
            for (std::size_t i = 0; i < test_rows.size(); ++i)
                task.test_pos += (task.y_test[i] = column[test_rows[i]]) != 0;

            const bool train_degenerate =
                train_pos == 0 || train_pos == std::ssize(train_rows);
            const bool test_degenerate =
                task.test_pos == 0 || task.test_pos == std::ssize(test_rows);
            if (train_degenerate || test_degenerate) {
                fm.skipped_labels.push_back(labels.names[l]);
                continue;
            }
            tasks.push_back(std::move(task));
        }

        const auto run_task = [&](LabelTask& task) {
            const LabelModel model =
                train_label(x_train, task.y_train, labels.names[task.label], cfg.train);
            task.probs = predict_scores(model, x_test);
        };
        const int pool = std::min<int>(std::max(cfg.workers, 1),
                                       static_cast<int>(tasks.size()));
        if (pool <= 1) {
            for (LabelTask& task : tasks) run_task(task);
        } else {
            std::atomic<std::size_t> next{0};
            std::vector<std::thread> threads;
            threads.reserve(pool);
            for (int t = 0; t < pool; ++t)
                threads.emplace_back([&] {
                    for (std::size_t i = next.fetch_add(1); i < tasks.size();
                         i = next.fetch_add(1))
                        run_task(tasks[i]);
                });
            for (std::thread& t : threads) t.join();
        }

        double auc_sum = 0.0, f1_sum = 0.0, acc_sum = 0.0;
        int valid_labels = 0;
        for (const LabelTask& task : tasks) {
            const std::span<const double> scores(
                task.probs.data(), static_cast<std::size_t>(task.probs.size()));
            LabelMetrics lm;
            lm.label = labels.names[task.label];
            lm.positives = task.test_pos;
            lm.negatives = static_cast<int>(test_rows.size()) - task.test_pos;
            lm.auc = auc_roc(scores, task.y_test);
            const F1Accuracy fa = f1_and_accuracy(scores, task.y_test, cfg.threshold);
            lm.f1 = fa.f1;
            lm.balanced_accuracy = fa.balanced_accuracy;
            lm.plain_accuracy = fa.plain_accuracy;

            auc_sum += lm.auc;
            f1_sum += lm.f1;
            acc_sum += lm.balanced_accuracy;
            ++valid_labels;
            fm.per_label.push_back(std::move(lm));
        }
        if (valid_labels == 0)
            throw std::runtime_error("cross_validate: fold " + std::to_string(fold) +
                                     " has no label with both classes present");
        fm.auc_roc = auc_sum / valid_labels;
        fm.f1 = f1_sum / valid_labels;
        fm.accuracy = acc_sum / valid_labels;
        aucs.push_back(fm.auc_roc);
        f1s.push_back(fm.f1);
        accs.push_back(fm.accuracy);
        result.folds.push_back(std::move(fm));
    }

    result.auc = summarize(aucs);
    result.f1 = summarize(f1s);
    result.accuracy = summarize(accs);
    return result;
}

void TrainedModel::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << "patterns-model 1\n";
    out << "reg " << hexdouble(reg_strength) << '\n';
    char hashbuf[24];
    std::snprintf(hashbuf, sizeof hashbuf, "%016llx",
                  static_cast<unsigned long long>(vocabulary_hash));
    out << "vocab " << hashbuf << '\n';
    out << "skipped " << skipped_labels.size() << '\n';
    for (const std::string& name : skipped_labels) out << name << '\n';
    out << "labels " << labels.size() << '\n';
    for (const LabelModel& m : labels) {
        out << "label " << m.report.iterations << ' ' << (m.report.converged ? 1 : 0)
            << ' ' << hexdouble(m.report.final_grad_norm) << ' ' << hexdouble(m.bias)
            << ' ' << m.weights.size() << ' ' << m.label << '\n';
        for (Eigen::Index i = 0; i < m.weights.size(); ++i) {
            if (i) out << ' ';
            out << hexdouble(m.weights(i));
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

TrainedModel TrainedModel::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    auto fail = [&path](const std::string& why) -> std::runtime_error {
        return std::runtime_error("model file " + path.string() + ": " + why);
    };

    std::string line;
    if (!std::getline(in, line) || line != "patterns-model 1")
        throw fail("unknown format line '" + line + "'");

    TrainedModel model;
    std::string word;
    if (!(in >> word >> line) || word != "reg") throw fail("missing reg");
    model.reg_strength = parse_hexdouble(line);
    if (!(in >> word >> line) || word != "vocab") throw fail("missing vocab hash");
    model.vocabulary_hash = std::stoull(line, nullptr, 16);

    std::size_t n_skipped = 0;
    if (!(in >> word >> n_skipped) || word != "skipped") throw fail("missing skipped");
    std::getline(in, line);  // trailing newline
    for (std::size_t i = 0; i < n_skipped; ++i) {
        if (!std::getline(in, line)) throw fail("truncated skipped list");
        model.skipped_labels.push_back(line);
    }

    std::size_t n_labels = 0;
    if (!(in >> word >> n_labels) || word != "labels") throw fail("missing labels");
    std::getline(in, line);
    for (std::size_t l = 0; l < n_labels; ++l) {
        if (!std::getline(in, line)) throw fail("truncated label header");
        std::istringstream header(line);
        LabelModel m;
        std::string tag, grad_s, bias_s;
        Eigen::Index dim = 0;
        int converged = 0;
        if (!(header >> tag >> m.report.iterations >> converged >> grad_s >> bias_s >> dim) ||
            tag != "label")
            throw fail("bad label header '" + line + "'");
        m.report.converged = converged != 0;
        m.report.final_grad_norm = parse_hexdouble(grad_s);
        m.bias = parse_hexdouble(bias_s);
        std::getline(header >> std::ws, m.label);
        if (m.label.empty()) throw fail("label name missing");

        if (!std::getline(in, line)) throw fail("truncated weight line");
        std::istringstream weights(line);
        m.weights.resize(dim);
        for (Eigen::Index i = 0; i < dim; ++i) {
            if (!(weights >> word)) throw fail("short weight vector");
            m.weights(i) = parse_hexdouble(word);
        }
        model.labels.push_back(std::move(m));
    }
    return model;
}

}  // namespace patterns
