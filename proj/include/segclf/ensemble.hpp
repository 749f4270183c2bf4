#pragma once

#include "segclf/dataset.hpp"
#include "segclf/probability_matrix.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace segclf::ensemble {

/// Reads `segment_id,<class_1>,...,<class_K>` with class columns in vocabulary
/// order. Rows within 1e-3 of summing to one are renormalised; anything else
/// is rejected.
ProbabilityMatrix load_probabilities(const std::filesystem::path& path, const ClassVocabulary& vocab);
std::string probabilities_to_text(const ProbabilityMatrix& p);
void write_probabilities(const ProbabilityMatrix& p, const std::filesystem::path& path);

struct EnsembleConfig {
    std::vector<double> weights{0.5, 0.5};
};

/// Weighted soft vote: each output row is sum_m w_m * row_m renormalised to one.
ProbabilityMatrix soft_vote(const std::vector<ProbabilityMatrix>& inputs, const EnsembleConfig& config);

/// Row-wise argmax, ties to the lowest class index.
LabelVector predict_from_probs(const ProbabilityMatrix& p);

}  // namespace segclf::ensemble
