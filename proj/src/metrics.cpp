#include "segclf/metrics.hpp"

#include "segclf/error.hpp"
#include "segclf/text_table.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace segclf::metrics {

ConfusionMatrix::ConfusionMatrix(ClassVocabulary vocab)
    : vocab_(std::move(vocab)), counts_(vocab_.size() * vocab_.size(), 0) {}

ConfusionMatrix::ConfusionMatrix(ClassVocabulary vocab, std::vector<std::uint64_t> counts)
    : vocab_(std::move(vocab)), counts_(std::move(counts)) {
    if (counts_.size() != vocab_.size() * vocab_.size()) throw DataError("confusion matrix: expected K*K counts");
}

void ConfusionMatrix::add(ClassIndex reference, ClassIndex predicted, std::uint64_t n) {
    counts_.at(reference * classes() + predicted) += n;
}

std::uint64_t ConfusionMatrix::total() const noexcept {
    std::uint64_t t = 0;
    for (auto c : counts_) t += c;
    return t;
}

std::uint64_t ConfusionMatrix::trace() const noexcept {
    std::uint64_t t = 0;
    for (std::size_t c = 0; c < classes(); ++c) t += counts_[c * classes() + c];
    return t;
}

ConfusionMatrix confusion(const LabelVector& reference, const LabelVector& predicted) {
    if (!(reference.vocab() == predicted.vocab())) throw DataError("confusion: vocabularies differ");
    if (reference.size() != predicted.size()) {
        throw DataError("confusion: " + std::to_string(reference.size()) + " reference vs " +
                        std::to_string(predicted.size()) + " predicted segments");
    }
    std::unordered_map<std::string_view, ClassIndex> pred;
    for (std::size_t i = 0; i < predicted.size(); ++i) pred.emplace(predicted.segment_ids()[i], predicted.labels()[i]);
    ConfusionMatrix cm(reference.vocab());
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const auto it = pred.find(reference.segment_ids()[i]);
        if (it == pred.end()) throw DataError("confusion: no prediction for segment '" + reference.segment_ids()[i] + "'");
        cm.add(reference.labels()[i], it->second);
    }
    return cm;
}

ScoreReport score(const ConfusionMatrix& cm, const CombinedWeights& weights) {
    if (cm.total() == 0) throw DataError("score: confusion matrix is empty");
    if (weights.f1 < 0.0 || weights.uar < 0.0 || std::abs(weights.f1 + weights.uar - 1.0) > 1e-9) {
        throw ConfigError("score: combined weights must be non-negative and sum to 1");
    }
    const auto k = cm.classes();
    ScoreReport report;
    report.weights = weights;
    report.recall.assign(k, std::numeric_limits<double>::quiet_NaN());
    report.precision.assign(k, 0.0);
    report.micro_f1 = static_cast<double>(cm.trace()) / static_cast<double>(cm.total());

    double recall_sum = 0.0;
    double f1_sum = 0.0;
    std::size_t included = 0;
    for (ClassIndex c = 0; c < k; ++c) {
        std::uint64_t row = 0;
        std::uint64_t col = 0;
        for (ClassIndex o = 0; o < k; ++o) {
            row += cm(c, o);
            col += cm(o, c);
        }
        const auto hit = static_cast<double>(cm(c, c));
        if (col > 0) report.precision[c] = hit / static_cast<double>(col);
        if (row == 0) {
            report.excluded_classes.push_back(c);
            continue;
        }
        const double r = hit / static_cast<double>(row);
        const double p = report.precision[c];
        report.recall[c] = r;
        recall_sum += r;
        f1_sum += (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
        ++included;
    }
    report.uar = recall_sum / static_cast<double>(included);
    report.macro_f1 = f1_sum / static_cast<double>(included);
    report.combined = weights.f1 * report.micro_f1 + weights.uar * report.uar;
    return report;
}

std::string score_report_to_text(const ScoreReport& report) {
    std::string out = "metric,value\n";
    out += "micro_f1," + format_real(report.micro_f1) + "\n";
    out += "macro_f1," + format_real(report.macro_f1) + "\n";
    out += "uar," + format_real(report.uar) + "\n";
    out += "combined," + format_real(report.combined) + "\n";
    out += "combined_weight_f1," + format_real(report.weights.f1) + "\n";
    out += "combined_weight_uar," + format_real(report.weights.uar) + "\n";
    return out;
}

std::string score_report_to_human(const ScoreReport& report, const ClassVocabulary& vocab) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(4);
    os << "micro-F1 (accuracy): " << report.micro_f1 << "\n"
       << "macro-F1:            " << report.macro_f1 << "\n"
       << "UAR:                 " << report.uar << "\n"
       << "combined (" << report.weights.f1 << "*F1 + " << report.weights.uar << "*UAR): " << report.combined
       << "\n\nper class (recall / precision):\n";
    for (ClassIndex c = 0; c < vocab.size(); ++c) {
        os << "  " << vocab.name(c) << ": ";
        if (std::isnan(report.recall[c])) os << "excluded (no reference segments)";
        else os << report.recall[c] << " / " << report.precision[c];
        os << "\n";
    }
    return os.str();
}

std::string confusion_to_text(const ConfusionMatrix& cm) {
    std::string out = "reference\\predicted";
    for (const auto& n : cm.vocab().names()) out += "," + n;
    out += '\n';
    for (ClassIndex r = 0; r < cm.classes(); ++r) {
        out += cm.vocab().name(r);
        for (ClassIndex p = 0; p < cm.classes(); ++p) out += "," + std::to_string(cm(r, p));
        out += '\n';
    }
    return out;
}

}  // namespace segclf::metrics
