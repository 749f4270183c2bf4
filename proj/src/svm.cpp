#include "segclf/svm.hpp"

#include "segclf/error.hpp"

#include <algorithm>
#include <limits>

namespace segclf::svm {

namespace {

// Floor for the curvature along the update direction (duplicate points give 0).
constexpr double kMinCurvature = 1e-12;

bool in_up_set(int y, double a, double c) { return (y > 0 && a < c) || (y < 0 && a > 0.0); }
bool in_low_set(int y, double a, double c) { return (y > 0 && a > 0.0) || (y < 0 && a < c); }

// Bias from the gradient G = Q a - e at the current point.
double compute_bias(std::span<const int> y, std::span<const double> alpha, std::span<const double> grad, double c) {
    double upper = std::numeric_limits<double>::infinity();
    double lower = -std::numeric_limits<double>::infinity();
    double free_sum = 0.0;
    std::size_t free_count = 0;
    for (std::size_t t = 0; t < y.size(); ++t) {
        const double yg = y[t] * grad[t];
        if (alpha[t] >= c) {
            if (y[t] < 0) upper = std::min(upper, yg);
            else lower = std::max(lower, yg);
        } else if (alpha[t] <= 0.0) {
            if (y[t] > 0) upper = std::min(upper, yg);
            else lower = std::max(lower, yg);
        } else {
            ++free_count;
            free_sum += yg;
        }
    }
    double r = 0.0;
    if (free_count > 0) r = free_sum / static_cast<double>(free_count);
    else if (std::isfinite(upper) && std::isfinite(lower)) r = 0.5 * (upper + lower);
    else if (std::isfinite(upper)) r = upper;
    else if (std::isfinite(lower)) r = lower;
    return -r;
}

}  // namespace

std::string to_string(Gamma::Mode mode) {
    switch (mode) {
        case Gamma::Mode::automatic: return "auto";
        case Gamma::Mode::scale: return "scale";
        case Gamma::Mode::fixed: return "fixed";
    }
    return "auto";
}

Gamma::Mode parse_gamma_mode(const std::string& text) {
    if (text == "auto" || text == "automatic") return Gamma::Mode::automatic;
    if (text == "scale") return Gamma::Mode::scale;
    if (text == "fixed") return Gamma::Mode::fixed;
    throw ConfigError("unknown gamma mode '" + text + "'");
}

void SvmConfig::validate() const {
    if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("svm: C must be a positive finite number");
    if (!(tolerance > 0.0)) throw ConfigError("svm: tolerance must be positive");
    if (max_passes == 0) throw ConfigError("svm: max_passes must be positive");
    if (gamma.mode == Gamma::Mode::fixed && !(gamma.value > 0.0 && std::isfinite(gamma.value))) {
        throw ConfigError("svm: explicit gamma must be positive");
    }
}

double resolve_gamma(const Gamma& gamma, const Matrix& x) {
    const auto d = static_cast<double>(x.cols());
    if (x.cols() == 0) throw DataError("svm: no feature columns");
    switch (gamma.mode) {
        case Gamma::Mode::fixed: return gamma.value;
        case Gamma::Mode::automatic: return 1.0 / d;
        case Gamma::Mode::scale: {
            const auto& v = x.data();
            if (v.empty()) return 1.0 / d;
            double mean = 0.0;
            for (double e : v) mean += e;
            mean /= static_cast<double>(v.size());
            double var = 0.0;
            for (double e : v) var += (e - mean) * (e - mean);
            var /= static_cast<double>(v.size());
            return var > 0.0 ? 1.0 / (d * var) : 1.0 / d;
        }
    }
    return 1.0 / d;
}

Matrix rbf_gram(const Matrix& x, double gamma) {
    const auto n = x.rows();
    Matrix k(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        k(i, i) = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = rbf_kernel(x.row(i), x.row(j), gamma);
            if (!std::isfinite(v)) throw NumericError("svm: non-finite kernel value");
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

DualSolution solve_dual(const Matrix& gram, std::span<const int> y, double c, double tolerance,
                        std::size_t max_iterations) {
    const std::size_t n = y.size();
    DualSolution sol;
    sol.alpha.assign(n, 0.0);
    std::vector<double> grad(n, -1.0);
    auto& a = sol.alpha;
    auto q = [&](std::size_t i, std::size_t j) { return y[i] * y[j] * gram(i, j); };

    while (true) {
        // maximal violating pair
        std::size_t i = n;
        std::size_t j = n;
        double g_max = -std::numeric_limits<double>::infinity();
        double g_min = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < n; ++t) {
            const double v = -y[t] * grad[t];
            if (in_up_set(y[t], a[t], c) && v > g_max) {
                g_max = v;
                i = t;
            }
            if (in_low_set(y[t], a[t], c) && v < g_min) {
                g_min = v;
                j = t;
            }
        }
        sol.max_violation = (i == n || j == n) ? 0.0 : g_max - g_min;
        if (i == n || j == n || sol.max_violation < tolerance) {
            sol.converged = true;
            break;
        }
        if (sol.iterations >= max_iterations) break;
        ++sol.iterations;

        const double old_ai = a[i];
        const double old_aj = a[j];
        if (y[i] != y[j]) {
            const double curvature = std::max(gram(i, i) + gram(j, j) + 2.0 * q(i, j), kMinCurvature);
            const double delta = (-grad[i] - grad[j]) / curvature;
            const double diff = a[i] - a[j];
            a[i] += delta;
            a[j] += delta;
            if (diff > 0.0) {
                if (a[j] < 0.0) {
                    a[j] = 0.0;
                    a[i] = diff;
                }
            } else if (a[i] < 0.0) {
                a[i] = 0.0;
                a[j] = -diff;
            }
            if (diff > 0.0) {
                if (a[i] > c) {
                    a[i] = c;
                    a[j] = c - diff;
                }
            } else if (a[j] > c) {
                a[j] = c;
                a[i] = c + diff;
            }
        } else {
            const double curvature = std::max(gram(i, i) + gram(j, j) - 2.0 * q(i, j), kMinCurvature);
            const double delta = (grad[i] - grad[j]) / curvature;
            const double sum = a[i] + a[j];
            a[i] -= delta;
            a[j] += delta;
            if (sum > c) {
                if (a[i] > c) {
                    a[i] = c;
                    a[j] = sum - c;
                }
            } else if (a[j] < 0.0) {
                a[j] = 0.0;
                a[i] = sum;
            }
            if (sum > c) {
                if (a[j] > c) {
                    a[j] = c;
                    a[i] = sum - c;
                }
            } else if (a[i] < 0.0) {
                a[i] = 0.0;
                a[j] = sum;
            }
        }

        const double d_ai = a[i] - old_ai;
        const double d_aj = a[j] - old_aj;
        for (std::size_t t = 0; t < n; ++t) grad[t] += q(i, t) * d_ai + q(j, t) * d_aj;
    }

    sol.bias = compute_bias(y, a, grad, c);
    double quad = 0.0;
    double lin = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        quad += a[t] * (grad[t] + 1.0);
        lin += a[t];
    }
    sol.objective = lin - 0.5 * quad;
    if (!std::isfinite(sol.objective) || !std::isfinite(sol.bias)) throw NumericError("svm: solver diverged");
    return sol;
}

double dual_objective(const Matrix& gram, std::span<const int> y, std::span<const double> alpha) {
    double lin = 0.0;
    double quad = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        lin += alpha[i];
        for (std::size_t j = 0; j < y.size(); ++j) quad += alpha[i] * alpha[j] * y[i] * y[j] * gram(i, j);
    }
    return lin - 0.5 * quad;
}

KktAudit audit_kkt(const Matrix& gram, std::span<const int> y, std::span<const double> alpha, double bias, double c,
                   double tol) {
    KktAudit audit;
    for (std::size_t i = 0; i < y.size(); ++i) {
        double f = bias;
        for (std::size_t j = 0; j < y.size(); ++j) f += alpha[j] * y[j] * gram(i, j);
        const double margin = y[i] * f;
        double miss = 0.0;
        if (alpha[i] <= 0.0) miss = (1.0 - tol) - margin;
        else if (alpha[i] >= c) miss = margin - (1.0 + tol);
        else miss = std::abs(margin - 1.0) - tol;
        if (miss > 0.0) {
            ++audit.violations;
            audit.worst = std::max(audit.worst, miss);
        }
    }
    return audit;
}

double svm_decision(const BinaryMachine& machine, std::span<const double> x) {
    if (machine.support_vectors.rows() > 0 && x.size() != machine.support_vectors.cols()) {
        throw DataError("svm: input has " + std::to_string(x.size()) + " features, machine expects " +
                        std::to_string(machine.support_vectors.cols()));
    }
    double f = machine.bias;
    for (std::size_t s = 0; s < machine.dual_coeffs.size(); ++s) {
        f += machine.dual_coeffs[s] * rbf_kernel(machine.support_vectors.row(s), x, machine.gamma);
    }
    return f;
}

SvmModel::SvmModel(ClassVocabulary vocab, std::size_t dims, double gamma, SvmConfig config,
                   std::vector<BinaryMachine> machines)
    : vocab_(std::move(vocab)), dims_(dims), gamma_(gamma), config_(config), machines_(std::move(machines)) {
    const auto k = vocab_.size();
    if (machines_.size() != k * (k - 1) / 2) throw DataError("svm model: expected one machine per class pair");
    std::vector<char> seen(k * k, 0);
    for (const auto& m : machines_) {
        if (m.negative >= m.positive || m.positive >= k) throw DataError("svm model: invalid class pair");
        if (seen[m.negative * k + m.positive]++) throw DataError("svm model: duplicate class pair");
        if (m.support_vectors.rows() != m.dual_coeffs.size() ||
            (m.support_vectors.rows() > 0 && m.support_vectors.cols() != dims_)) {
            throw DataError("svm model: support vector shape mismatch");
        }
    }
}

std::vector<double> SvmModel::score_row(std::span<const double> x) const {
    if (x.size() != dims_) {
        throw DataError("svm: input has " + std::to_string(x.size()) + " features, model expects " +
                        std::to_string(dims_));
    }
    const auto k = vocab_.size();
    std::vector<double> votes(k, 0.0);
    std::vector<double> summed(k, 0.0);
    for (const auto& m : machines_) {
        const double d = svm_decision(m, x);
        if (d > 0.0) votes[m.positive] += 1.0;
        else if (d < 0.0) votes[m.negative] += 1.0;
        else {
            votes[m.positive] += 0.5;
            votes[m.negative] += 0.5;
        }
        summed[m.positive] += d;
        summed[m.negative] -= d;
    }
    const double top = *std::max_element(summed.begin(), summed.end());
    double z = 0.0;
    for (auto& s : summed) {
        s = std::exp(s - top);
        z += s;
    }
    const double normalizer = static_cast<double>(machines_.size()) + 1.0;
    std::vector<double> row(k);
    for (std::size_t c = 0; c < k; ++c) row[c] = (votes[c] + summed[c] / z) / normalizer;
    return row;
}

SvmFit svm_fit(const FeatureTable& x, const LabelVector& y, const SvmConfig& config) {
    config.validate();
    if (x.segment_ids() != y.segment_ids()) throw DataError("svm: features and labels are not aligned");
    const auto k = y.vocab().size();
    const auto counts = y.class_counts();
    std::size_t present = 0;
    for (auto n : counts) present += n > 0 ? 1 : 0;
    if (present < 2) throw DataError("svm: training data must contain at least two classes");
    for (ClassIndex c = 0; c < k; ++c) {
        if (counts[c] == 0) throw DataError("svm: class '" + y.vocab().name(c) + "' has no training samples");
    }
    const double gamma = resolve_gamma(config.gamma, x.values());

    std::vector<BinaryMachine> machines;
    std::vector<PairDiagnostics> diagnostics;
    for (ClassIndex p = 0; p < k; ++p) {
        for (ClassIndex q = p + 1; q < k; ++q) {
            PairDiagnostics diag;
            diag.positive = q;
            diag.negative = p;
            for (std::size_t r = 0; r < y.size(); ++r) {
                const auto label = y.labels()[r];
                if (label == p || label == q) {
                    diag.rows.push_back(r);
                    diag.y.push_back(label == q ? 1 : -1);
                }
            }
            const auto& sub = x.values();
            Matrix points(0, x.cols());
            for (auto r : diag.rows) points.append_row(sub.row(r));
            const Matrix gram = rbf_gram(points, gamma);
            const std::size_t n = diag.rows.size();
            diag.solution = solve_dual(gram, diag.y, config.c, config.tolerance, config.max_passes * n);

            BinaryMachine m;
            m.positive = q;
            m.negative = p;
            m.gamma = gamma;
            m.bias = diag.solution.bias;
            m.support_vectors = Matrix(0, x.cols());
            for (std::size_t t = 0; t < n; ++t) {
                if (diag.solution.alpha[t] > 0.0) {
                    m.support_vectors.append_row(points.row(t));
                    m.dual_coeffs.push_back(diag.solution.alpha[t] * diag.y[t]);
                }
            }
            machines.push_back(std::move(m));
            diagnostics.push_back(std::move(diag));
        }
    }
    return {SvmModel(y.vocab(), x.cols(), gamma, config, std::move(machines)), std::move(diagnostics)};
}

SvmModel svm_train(const FeatureTable& x, const LabelVector& y, const SvmConfig& config) {
    return svm_fit(x, y, config).model;
}

ProbabilityMatrix svm_scores(const SvmModel& model, const FeatureTable& t) {
    if (t.cols() != model.dims()) {
        throw DataError("svm: table has " + std::to_string(t.cols()) + " features, model expects " +
                        std::to_string(model.dims()));
    }
    Matrix probs(0, model.vocab().size());
    for (std::size_t r = 0; r < t.rows(); ++r) probs.append_row(model.score_row(t.row(r)));
    return ProbabilityMatrix(t.segment_ids(), model.vocab(), std::move(probs));
}

LabelVector svm_predict(const SvmModel& model, const FeatureTable& t) {
    const auto scores = svm_scores(model, t);
    std::vector<ClassIndex> labels;
    labels.reserve(t.rows());
    for (std::size_t r = 0; r < t.rows(); ++r) labels.push_back(argmax(scores.row(r)));
    return LabelVector(model.vocab(), t.segment_ids(), std::move(labels));
}

}  // namespace segclf::svm
