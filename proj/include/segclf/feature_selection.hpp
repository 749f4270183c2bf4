#pragma once

#include "segclf/dataset.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace segclf {

/// F assigned to a column whose classes are perfectly separated (zero
/// within-class scatter, positive between-class scatter). Finite so that score
/// exports remain plain numbers.
inline constexpr double kSeparableFScore = 1e12;

struct FScores {
    std::vector<double> scores;          ///< one per feature column, in column order
    std::vector<ClassIndex> absent;      ///< vocabulary classes with no sample; excluded from the group count
};

/// One-way ANOVA F statistic of every column against the class labels.
///
/// F = [SSB / (g - 1)] / [SSW / (N - g)], where g counts the classes actually
/// present. A column with SSB = 0 scores 0; a column with SSW = 0 and SSB > 0
/// scores kSeparableFScore.
FScores anova_f_scores(const FeatureTable& features, const LabelVector& labels);

struct SelectionReport {
    std::vector<std::string> feature_names;
    std::vector<double> f_scores;
    std::vector<bool> selected;
    std::size_t k = 0;
    std::vector<ClassIndex> absent_classes;

    std::vector<std::size_t> selected_indices() const;
};

/// Keeps the k highest-scoring columns; equal scores favour the lower column index.
SelectionReport select_top_k(const FeatureTable& features, const LabelVector& labels, std::size_t k);

/// Number of columns retained by the percentile mode: ceil(D * percent / 100), at least 1.
std::size_t percentile_count(std::size_t dims, double percent);
SelectionReport select_percentile(const FeatureTable& features, const LabelVector& labels, double percent);

/// Projects `table` onto the selected columns. Column names must match the report in order.
FeatureTable apply_selection(const SelectionReport& report, const FeatureTable& table);

/// Text table `feature_index,feature_name,f_score,selected`.
std::string selection_report_to_text(const SelectionReport& report);
void export_scores(const SelectionReport& report, const std::filesystem::path& path);

}  // namespace segclf
