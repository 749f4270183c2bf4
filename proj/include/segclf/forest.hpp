#pragma once

#include "segclf/dataset.hpp"
#include "segclf/probability_matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace segclf::forest {

struct FeaturesPerSplit {
    enum class Mode { sqrt, all, fixed };
    Mode mode = Mode::sqrt;
    std::size_t count = 0;  ///< used when mode == fixed

    std::size_t resolve(std::size_t dims) const;
    friend bool operator==(const FeaturesPerSplit&, const FeaturesPerSplit&) = default;
};

std::string to_string(const FeaturesPerSplit& f);
FeaturesPerSplit parse_features_per_split(const std::string& text);

struct ForestConfig {
    std::size_t n_trees = 100;
    /// Depth as configured; may be fractional (e.g. the output of a hyperparameter search).
    double max_depth = 7.4008;
    std::size_t min_samples_split = 2;
    FeaturesPerSplit features_per_split;
    std::uint64_t seed = 0;

    /// floor(max_depth); the depth actually enforced.
    std::size_t effective_max_depth() const;
    void validate() const;
    friend bool operator==(const ForestConfig&, const ForestConfig&) = default;
};

/// Flattened CART tree. Internal nodes route `x[feature] <= threshold` to `left`.
struct Node {
    std::int32_t feature = -1;  ///< -1 marks a leaf
    double threshold = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    std::vector<std::uint32_t> class_counts;  ///< leaves only: bootstrap samples per class

    bool is_leaf() const noexcept { return feature < 0; }
    friend bool operator==(const Node&, const Node&) = default;
};

struct Tree {
    std::vector<Node> nodes;  ///< nodes[0] is the root

    const Node& leaf_for(std::span<const double> x) const;
    std::size_t depth() const;
    friend bool operator==(const Tree&, const Tree&) = default;
};

class ForestModel {
public:
    ForestModel(ClassVocabulary vocab, std::size_t dims, ForestConfig config, std::vector<Tree> trees);

    const ClassVocabulary& vocab() const noexcept { return vocab_; }
    std::size_t dims() const noexcept { return dims_; }
    const ForestConfig& config() const noexcept { return config_; }
    const std::vector<Tree>& trees() const noexcept { return trees_; }

    ClassIndex predict_row(std::span<const double> x) const;
    std::vector<double> score_row(std::span<const double> x) const;

    friend bool operator==(const ForestModel&, const ForestModel&) = default;

private:
    void check_dims(std::size_t d) const;

    ClassVocabulary vocab_;
    std::size_t dims_;
    ForestConfig config_;
    std::vector<Tree> trees_;
};

/// Bagged Gini trees: each tree sees N bootstrap draws and picks the best split
/// over a random feature subset at every node. Deterministic given the seed.
ForestModel forest_train(const FeatureTable& x, const LabelVector& y, const ForestConfig& config);

/// Plurality of per-tree leaf majorities; ties go to the lowest class index.
LabelVector forest_predict(const ForestModel& model, const FeatureTable& t);
/// Mean of the per-tree leaf class frequencies.
ProbabilityMatrix forest_scores(const ForestModel& model, const FeatureTable& t);

}  // namespace segclf::forest
