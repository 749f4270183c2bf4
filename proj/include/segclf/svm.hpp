#pragma once

#include "segclf/dataset.hpp"
#include "segclf/matrix.hpp"
#include "segclf/probability_matrix.hpp"

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace segclf::svm {

/// RBF width. `automatic` resolves to 1/D, `scale` to 1/(D * Var(X)) over all
/// training entries, `fixed` uses the stored value.
struct Gamma {
    enum class Mode { automatic, scale, fixed };
    Mode mode = Mode::automatic;
    double value = 0.0;

    static Gamma automatic() { return {}; }
    static Gamma scale() { return {Mode::scale, 0.0}; }
    static Gamma fixed(double v) { return {Mode::fixed, v}; }

    friend bool operator==(const Gamma&, const Gamma&) = default;
};

std::string to_string(Gamma::Mode mode);
Gamma::Mode parse_gamma_mode(const std::string& text);

struct SvmConfig {
    double c = 0.0538;
    Gamma gamma;
    double tolerance = 1e-3;
    /// Cap on solver work: at most max_passes * n pair updates per binary problem of n points.
    std::size_t max_passes = 10'000;

    void validate() const;
    friend bool operator==(const SvmConfig&, const SvmConfig&) = default;
};

double resolve_gamma(const Gamma& gamma, const Matrix& x);

inline double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) noexcept {
    return std::exp(-gamma * squared_distance(a, b));
}

/// Gram matrix K(x_i, x_j) over the rows of x. Throws NumericError on a non-finite entry.
Matrix rbf_gram(const Matrix& x, double gamma);

struct DualSolution {
    std::vector<double> alpha;
    double bias = 0.0;
    double objective = 0.0;       ///< sum(alpha) - 1/2 alpha' Q alpha
    double max_violation = 0.0;   ///< KKT gap at termination
    std::size_t iterations = 0;
    bool converged = false;
};

/// Solves the C-SVC dual
///     max  sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K_ij
///     s.t. 0 <= a_i <= c,  sum_i a_i y_i = 0
/// by two-variable analytic updates on the maximal violating pair until the
/// KKT gap falls below `tolerance` or `max_iterations` updates were made.
/// Labels are +1 / -1.
DualSolution solve_dual(const Matrix& gram, std::span<const int> y, double c, double tolerance,
                        std::size_t max_iterations);

double dual_objective(const Matrix& gram, std::span<const int> y, std::span<const double> alpha);

struct KktAudit {
    std::size_t violations = 0;
    double worst = 0.0;  ///< largest amount by which any condition is missed
    bool passed() const noexcept { return violations == 0; }
};

/// Checks y f(x) >= 1 - tol at a = 0, |y f(x) - 1| <= tol for 0 < a < c, and
/// y f(x) <= 1 + tol at a = c.
KktAudit audit_kkt(const Matrix& gram, std::span<const int> y, std::span<const double> alpha, double bias, double c,
                   double tol);

/// One machine of the one-vs-one ensemble. Positive decisions favour `positive`,
/// always the higher class index of the pair.
struct BinaryMachine {
    ClassIndex positive = 1;
    ClassIndex negative = 0;
    Matrix support_vectors;
    std::vector<double> dual_coeffs;  ///< alpha_i * y_i
    double bias = 0.0;
    double gamma = 1.0;

    friend bool operator==(const BinaryMachine&, const BinaryMachine&) = default;
};

double svm_decision(const BinaryMachine& machine, std::span<const double> x);

class SvmModel {
public:
    SvmModel(ClassVocabulary vocab, std::size_t dims, double gamma, SvmConfig config,
             std::vector<BinaryMachine> machines);

    const ClassVocabulary& vocab() const noexcept { return vocab_; }
    std::size_t dims() const noexcept { return dims_; }
    double gamma() const noexcept { return gamma_; }
    const SvmConfig& config() const noexcept { return config_; }
    const std::vector<BinaryMachine>& machines() const noexcept { return machines_; }

    /// Class distribution for one input: (votes + softmax(summed decisions)) / (pairs + 1).
    std::vector<double> score_row(std::span<const double> x) const;

    friend bool operator==(const SvmModel&, const SvmModel&) = default;

private:
    ClassVocabulary vocab_;
    std::size_t dims_;
    double gamma_;
    SvmConfig config_;
    std::vector<BinaryMachine> machines_;
};

/// Solver record for one class pair, kept for auditing.
struct PairDiagnostics {
    ClassIndex positive = 1;
    ClassIndex negative = 0;
    std::vector<std::size_t> rows;  ///< training rows of the pair, in table order
    std::vector<int> y;
    DualSolution solution;
};

struct SvmFit {
    SvmModel model;
    std::vector<PairDiagnostics> diagnostics;
};

SvmFit svm_fit(const FeatureTable& x, const LabelVector& y, const SvmConfig& config);
SvmModel svm_train(const FeatureTable& x, const LabelVector& y, const SvmConfig& config);

/// One-vs-one vote; ties go to the class with the larger summed decision, then the lowest index.
LabelVector svm_predict(const SvmModel& model, const FeatureTable& t);
ProbabilityMatrix svm_scores(const SvmModel& model, const FeatureTable& t);

}  // namespace segclf::svm
