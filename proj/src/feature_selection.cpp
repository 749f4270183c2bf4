#include "segclf/feature_selection.hpp"

#include "segclf/error.hpp"
#include "segclf/text_table.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace segclf {

namespace {

// SSB below this fraction of the total scatter is rounding noise from the mean computation.
constexpr double kRelativeZero = 1e-13;

SelectionReport make_report(const FeatureTable& features, FScores scores, std::size_t k) {
    const std::size_t d = features.cols();
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores.scores[a] > scores.scores[b]; });
    SelectionReport report;
    report.feature_names = features.feature_names();
    report.f_scores = std::move(scores.scores);
    report.selected.assign(d, false);
    for (std::size_t i = 0; i < k; ++i) report.selected[order[i]] = true;
    report.k = k;
    report.absent_classes = std::move(scores.absent);
    return report;
}

}  // namespace

FScores anova_f_scores(const FeatureTable& features, const LabelVector& labels) {
    if (features.segment_ids() != labels.segment_ids()) {
        throw DataError("anova: features and labels are not aligned");
    }
    const std::size_t n = features.rows();
    const std::size_t d = features.cols();
    const std::size_t k = labels.vocab().size();
    const auto counts = labels.class_counts();

    FScores out;
    std::vector<ClassIndex> present;
    for (ClassIndex c = 0; c < k; ++c) {
        if (counts[c] == 0) out.absent.push_back(c);
        else present.push_back(c);
    }
    const std::size_t groups = present.size();
    if (groups < 2) throw DataError("anova: at least two classes must be present");
    if (n <= groups) {
        throw DataError("anova: need more samples (" + std::to_string(n) + ") than classes present (" +
                        std::to_string(groups) + ")");
    }

    const auto& y = labels.labels();
    std::vector<double> class_sum(k);
    std::vector<double> class_mean(k);
    std::vector<double> first_value(k);
    std::vector<char> class_constant(k);
    out.scores.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
        std::fill(class_sum.begin(), class_sum.end(), 0.0);
        std::fill(class_constant.begin(), class_constant.end(), 1);
        std::vector<char> seen(k, 0);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = features.values()(i, j);
            class_sum[y[i]] += v;
            total += v;
            if (!seen[y[i]]) {
                seen[y[i]] = 1;
                first_value[y[i]] = v;
            } else if (v != first_value[y[i]]) {
                class_constant[y[i]] = 0;
            }
        }
        const double grand_mean = total / static_cast<double>(n);
        for (auto c : present) class_mean[c] = class_sum[c] / static_cast<double>(counts[c]);

        double ssb = 0.0;
        for (auto c : present) {
            const double dev = class_mean[c] - grand_mean;
            ssb += static_cast<double>(counts[c]) * dev * dev;
        }
        double ssw = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dev = features.values()(i, j) - class_mean[y[i]];
            ssw += dev * dev;
        }
        const bool within_constant =
            std::all_of(present.begin(), present.end(), [&](ClassIndex c) { return class_constant[c] != 0; });
        if (within_constant) ssw = 0.0;

        double f = 0.0;
        const double sst = ssb + ssw;
        if (ssb <= kRelativeZero * sst || ssb == 0.0) {
            f = 0.0;
        } else if (ssw == 0.0) {
            f = kSeparableFScore;
        } else {
            f = (ssb / static_cast<double>(groups - 1)) / (ssw / static_cast<double>(n - groups));
        }
        if (!std::isfinite(f)) throw NumericError("anova: non-finite F for column '" + features.feature_names()[j] + "'");
        out.scores[j] = f;
    }
    return out;
}

std::vector<std::size_t> SelectionReport::selected_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < selected.size(); ++j) {
        if (selected[j]) out.push_back(j);
    }
    return out;
}

SelectionReport select_top_k(const FeatureTable& features, const LabelVector& labels, std::size_t k) {
    if (k < 1 || k > features.cols()) {
        throw ConfigError("selection: k = " + std::to_string(k) + " outside [1, " + std::to_string(features.cols()) +
                          "]");
    }
    return make_report(features, anova_f_scores(features, labels), k);
}

std::size_t percentile_count(std::size_t dims, double percent) {
    if (!(percent > 0.0 && percent <= 100.0)) throw ConfigError("selection: percentile must lie in (0, 100]");
    if (dims == 0) throw ConfigError("selection: table has no feature columns");
    const double raw = static_cast<double>(dims) * percent / 100.0;
    auto k = static_cast<std::size_t>(std::ceil(raw - 1e-9));
    return std::clamp<std::size_t>(k, 1, dims);
}

SelectionReport select_percentile(const FeatureTable& features, const LabelVector& labels, double percent) {
    return select_top_k(features, labels, percentile_count(features.cols(), percent));
}

FeatureTable apply_selection(const SelectionReport& report, const FeatureTable& table) {
    if (table.feature_names() != report.feature_names) {
        const auto& a = table.feature_names();
        const auto& b = report.feature_names;
        for (std::size_t j = 0; j < std::min(a.size(), b.size()); ++j) {
            if (a[j] != b[j]) {
                throw DataError("selection: column " + std::to_string(j) + " is '" + a[j] + "', expected '" + b[j] + "'");
            }
        }
        throw DataError("selection: table has " + std::to_string(a.size()) + " columns, report has " +
                        std::to_string(b.size()));
    }
    return table.select_columns(report.selected_indices());
}

std::string selection_report_to_text(const SelectionReport& report) {
    std::string out = "feature_index,feature_name,f_score,selected\n";
    for (std::size_t j = 0; j < report.feature_names.size(); ++j) {
        out += std::to_string(j) + "," + report.feature_names[j] + "," + format_real(report.f_scores[j]) + "," +
               (report.selected[j] ? "1" : "0") + "\n";
    }
    return out;
}

void export_scores(const SelectionReport& report, const std::filesystem::path& path) {
    write_file_atomic(path, selection_report_to_text(report));
}

}  // namespace segclf
