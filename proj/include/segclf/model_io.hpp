#pragma once

#include "segclf/dataset.hpp"
#include "segclf/forest.hpp"
#include "segclf/knn.hpp"
#include "segclf/probability_matrix.hpp"
#include "segclf/svm.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace segclf {

inline constexpr int kModelFormatVersion = 1;

using Classifier = std::variant<svm::SvmModel, forest::ForestModel, knn::KnnModel>;

/// A trained classifier bundled with the preprocessing it was trained behind, so
/// prediction needs nothing but the raw feature file.
struct PipelineModel {
    ClassVocabulary vocab;
    std::vector<std::string> input_features;  ///< raw columns, before selection
    std::optional<Standardizer> standardizer;  ///< over input_features
    std::optional<std::vector<bool>> selection;  ///< mask over input_features
    Classifier classifier;

    std::string model_type() const;

    /// Reorders columns by name to match training, then standardizes and selects.
    /// Unknown or missing columns raise DataError naming the column.
    FeatureTable prepare(const FeatureTable& raw) const;
    LabelVector predict(const FeatureTable& raw) const;
    ProbabilityMatrix scores(const FeatureTable& raw) const;
};

std::string model_to_json(const PipelineModel& model);
PipelineModel model_from_json(const std::string& text);
void save_model(const PipelineModel& model, const std::filesystem::path& path);
PipelineModel load_model(const std::filesystem::path& path);

}  // namespace segclf
