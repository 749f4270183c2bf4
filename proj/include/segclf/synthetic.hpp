#pragma once

#include "segclf/dataset.hpp"

#include <cstdint>
#include <optional>

namespace segclf {

/// Gaussian-blob classification task: class centres are drawn on a random
/// subset of `informative` columns, every other column is pure N(0, 1) noise.
struct BlobSpec {
    std::size_t n_train = 600;
    std::size_t n_test = 200;
    std::size_t n_unlabeled = 0;
    std::size_t dims = 500;
    std::size_t informative = 20;
    double separation = 1.0;  ///< std-dev of the class centre coordinates
    double noise = 1.0;       ///< within-class std-dev on informative columns
};

struct BlobTask {
    FeatureTable train_x;
    LabelVector train_y;
    FeatureTable test_x;
    LabelVector test_y;
    FeatureTable unlabeled_x;
    LabelVector unlabeled_y;  ///< hidden truth for the unlabeled rows
    std::vector<std::size_t> informative_columns;
};

/// Labels cycle through the classes so every partition is balanced. Segment ids
/// are `train_00001`, `test_00001`, `unlab_00001`; features `f000`...
BlobTask make_blobs(const BlobSpec& spec, std::uint64_t seed, const ClassVocabulary& vocab);

}  // namespace segclf
