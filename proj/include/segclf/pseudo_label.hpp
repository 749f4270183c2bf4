#pragma once

#include "segclf/dataset.hpp"
#include "segclf/probability_matrix.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace segclf::ensemble {

struct PseudoLabelConfig {
    double confidence_threshold = 0.9;
    std::size_t max_rounds = 1;

    /// Requires 1/K < threshold <= 1 and at least one round.
    void validate(std::size_t classes) const;
};

struct PseudoLabelReport {
    std::uint32_t round = 0;
    std::size_t added = 0;
    std::vector<std::size_t> added_per_class;
    std::vector<std::string> added_ids;
    std::size_t skipped_already_labeled = 0;
};

struct PseudoLabelRound {
    FeatureTable features;
    LabelVector labels;  ///< always carries provenance
    PseudoLabelReport report;
};

/// One self-training round: every unlabeled segment whose top class probability
/// reaches the threshold is appended to the training set with its argmax label.
///
/// The round number is one past the highest provenance round already present in
/// `train_y`. Unlabeled segments that were pseudo-labelled in an earlier round
/// are skipped; an unlabeled segment that carries a reference label is a leak
/// and raises DataError. `scores` must cover exactly the unlabeled segments.
PseudoLabelRound pseudo_label_round(const FeatureTable& train_x, const LabelVector& train_y,
                                    const FeatureTable& unlabeled_x, const ProbabilityMatrix& scores,
                                    const PseudoLabelConfig& config);

/// Fits a model on (train, labels) and scores the given unlabeled rows.
using FitAndScore = std::function<ProbabilityMatrix(const FeatureTable&, const LabelVector&, const FeatureTable&)>;

struct SelfTrainingResult {
    FeatureTable features;
    LabelVector labels;
    std::vector<PseudoLabelReport> rounds;
};

/// Repeats fit -> score -> pseudo_label_round up to max_rounds times, each round
/// scoring only the segments not yet added. Stops early when a round adds nothing.
SelfTrainingResult self_train(const FeatureTable& train_x, const LabelVector& train_y, const FeatureTable& unlabeled_x,
                              const PseudoLabelConfig& config, const FitAndScore& fit_and_score);

/// Text table `round,segments_added,class,count`, one row per class per round.
std::string pseudo_label_report_to_text(const std::vector<PseudoLabelReport>& rounds, const ClassVocabulary& vocab);

}  // namespace segclf::ensemble
