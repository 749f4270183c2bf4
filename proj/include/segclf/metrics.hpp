#pragma once

#include "segclf/dataset.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace segclf::metrics {

/// K x K tally; rows are reference classes, columns predicted classes.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(ClassVocabulary vocab);
    ConfusionMatrix(ClassVocabulary vocab, std::vector<std::uint64_t> counts);

    const ClassVocabulary& vocab() const noexcept { return vocab_; }
    std::size_t classes() const noexcept { return vocab_.size(); }
    std::uint64_t operator()(ClassIndex reference, ClassIndex predicted) const {
        return counts_[reference * classes() + predicted];
    }
    void add(ClassIndex reference, ClassIndex predicted, std::uint64_t n = 1);
    std::uint64_t total() const noexcept;
    std::uint64_t trace() const noexcept;

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

private:
    ClassVocabulary vocab_;
    std::vector<std::uint64_t> counts_;
};

/// Requires both vectors to cover the same segment ids (in any order).
ConfusionMatrix confusion(const LabelVector& reference, const LabelVector& predicted);

struct CombinedWeights {
    double f1 = 0.66;
    double uar = 0.34;
};

struct ScoreReport {
    double micro_f1 = 0.0;
    double macro_f1 = 0.0;
    double uar = 0.0;
    double combined = 0.0;
    CombinedWeights weights;
    std::vector<double> recall;     ///< per class; NaN for excluded classes
    std::vector<double> precision;  ///< per class; 0 when nothing was predicted as the class
    std::vector<ClassIndex> excluded_classes;  ///< classes with no reference segment
};

/// micro-F1 (= accuracy), macro-F1 and UAR over classes that occur in the
/// reference, and combined = w_f1 * micro_f1 + w_uar * uar.
ScoreReport score(const ConfusionMatrix& cm, const CombinedWeights& weights = {});

/// `metric,value` table.
std::string score_report_to_text(const ScoreReport& report);
/// Multi-line summary for terminals.
std::string score_report_to_human(const ScoreReport& report, const ClassVocabulary& vocab);
/// K x K table with class names along both axes.
std::string confusion_to_text(const ConfusionMatrix& cm);

}  // namespace segclf::metrics
