#pragma once

#include "segclf/dataset.hpp"
#include "segclf/probability_matrix.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace segclf::knn {

struct KnnConfig {
    std::size_t k_neighbors = 5;

    friend bool operator==(const KnnConfig&, const KnnConfig&) = default;
};

/// Memorised training set; queries use Euclidean distance.
class KnnModel {
public:
    KnnModel(ClassVocabulary vocab, KnnConfig config, Matrix points, std::vector<ClassIndex> labels);

    const ClassVocabulary& vocab() const noexcept { return vocab_; }
    const KnnConfig& config() const noexcept { return config_; }
    const Matrix& points() const noexcept { return points_; }
    const std::vector<ClassIndex>& labels() const noexcept { return labels_; }
    std::size_t dims() const noexcept { return points_.cols(); }

    /// Training rows of the k nearest points; equal distances favour the lower row.
    std::vector<std::size_t> neighbors(std::span<const double> x) const;
    /// Fraction of the k neighbours in each class.
    std::vector<double> score_row(std::span<const double> x) const;

    friend bool operator==(const KnnModel&, const KnnModel&) = default;

private:
    ClassVocabulary vocab_;
    KnnConfig config_;
    Matrix points_;
    std::vector<ClassIndex> labels_;
};

KnnModel knn_train(const FeatureTable& x, const LabelVector& y, const KnnConfig& config);
/// Majority class among the k neighbours; class ties go to the lowest index.
LabelVector knn_predict(const KnnModel& model, const FeatureTable& t);
ProbabilityMatrix knn_scores(const KnnModel& model, const FeatureTable& t);

}  // namespace segclf::knn
