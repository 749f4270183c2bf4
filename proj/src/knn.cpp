#include "segclf/knn.hpp"

#include "segclf/error.hpp"

#include <algorithm>
#include <numeric>

namespace segclf::knn {

KnnModel::KnnModel(ClassVocabulary vocab, KnnConfig config, Matrix points, std::vector<ClassIndex> labels)
    : vocab_(std::move(vocab)), config_(config), points_(std::move(points)), labels_(std::move(labels)) {
    if (config_.k_neighbors == 0) throw ConfigError("knn: k_neighbors must be positive");
    if (points_.rows() != labels_.size()) throw DataError("knn: point and label counts differ");
    if (config_.k_neighbors > points_.rows()) {
        throw ConfigError("knn: k_neighbors = " + std::to_string(config_.k_neighbors) + " exceeds training size " +
                          std::to_string(points_.rows()));
    }
    for (auto l : labels_) {
        if (l >= vocab_.size()) throw DataError("knn: label out of range");
    }
}

std::vector<std::size_t> KnnModel::neighbors(std::span<const double> x) const {
    if (x.size() != dims()) {
        throw DataError("knn: input has " + std::to_string(x.size()) + " features, model expects " +
                        std::to_string(dims()));
    }
    std::vector<std::pair<double, std::size_t>> dist(points_.rows());
    for (std::size_t r = 0; r < points_.rows(); ++r) dist[r] = {squared_distance(points_.row(r), x), r};
    const auto k = config_.k_neighbors;
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    std::vector<std::size_t> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = dist[i].second;
    return out;
}

std::vector<double> KnnModel::score_row(std::span<const double> x) const {
    std::vector<double> row(vocab_.size(), 0.0);
    const auto near = neighbors(x);
    for (auto r : near) row[labels_[r]] += 1.0;
    for (auto& v : row) v /= static_cast<double>(near.size());
    return row;
}

KnnModel knn_train(const FeatureTable& x, const LabelVector& y, const KnnConfig& config) {
    if (x.segment_ids() != y.segment_ids()) throw DataError("knn: features and labels are not aligned");
    if (x.rows() == 0) throw DataError("knn: empty training set");
    return KnnModel(y.vocab(), config, x.values(), y.labels());
}

ProbabilityMatrix knn_scores(const KnnModel& model, const FeatureTable& t) {
    if (t.cols() != model.dims()) {
        throw DataError("knn: table has " + std::to_string(t.cols()) + " features, model expects " +
                        std::to_string(model.dims()));
    }
    Matrix probs(0, model.vocab().size());
    for (std::size_t r = 0; r < t.rows(); ++r) probs.append_row(model.score_row(t.row(r)));
    return ProbabilityMatrix(t.segment_ids(), model.vocab(), std::move(probs));
}

LabelVector knn_predict(const KnnModel& model, const FeatureTable& t) {
    const auto scores = knn_scores(model, t);
    std::vector<ClassIndex> labels;
    labels.reserve(t.rows());
    for (std::size_t r = 0; r < t.rows(); ++r) labels.push_back(argmax(scores.row(r)));
    return LabelVector(model.vocab(), t.segment_ids(), std::move(labels));
}

}  // namespace segclf::knn
