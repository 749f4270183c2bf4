#include "segclf/pseudo_label.hpp"

#include "segclf/error.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

namespace segclf::ensemble {

void PseudoLabelConfig::validate(std::size_t classes) const {
    if (!(confidence_threshold <= 1.0) || !(confidence_threshold > 1.0 / static_cast<double>(classes))) {
        throw ConfigError("pseudo-label: threshold must lie in (1/K, 1] = (" +
                          std::to_string(1.0 / static_cast<double>(classes)) + ", 1]");
    }
    if (max_rounds == 0) throw ConfigError("pseudo-label: max_rounds must be positive");
}

PseudoLabelRound pseudo_label_round(const FeatureTable& train_x, const LabelVector& train_y,
                                    const FeatureTable& unlabeled_x, const ProbabilityMatrix& scores,
                                    const PseudoLabelConfig& config) {
    const auto& vocab = train_y.vocab();
    config.validate(vocab.size());
    if (train_x.segment_ids() != train_y.segment_ids()) {
        throw DataError("pseudo-label: training features and labels are not aligned");
    }
    if (!(scores.vocab() == vocab)) throw DataError("pseudo-label: score vocabulary differs from label vocabulary");

    std::unordered_map<std::string_view, std::size_t> score_row;
    for (std::size_t r = 0; r < scores.rows(); ++r) score_row.emplace(scores.segment_ids()[r], r);
    if (score_row.size() != unlabeled_x.rows()) {
        throw DataError("pseudo-label: scores cover " + std::to_string(scores.rows()) + " segments, unlabeled set has " +
                        std::to_string(unlabeled_x.rows()));
    }
    for (const auto& id : unlabeled_x.segment_ids()) {
        if (!score_row.contains(id)) throw DataError("pseudo-label: no scores for unlabeled segment '" + id + "'");
    }

    std::vector<std::uint32_t> rounds = train_y.origin_rounds();
    if (rounds.empty()) rounds.assign(train_y.size(), 0);
    std::unordered_map<std::string_view, std::uint32_t> train_round;
    for (std::size_t i = 0; i < train_y.size(); ++i) train_round.emplace(train_y.segment_ids()[i], rounds[i]);
    const std::uint32_t round = (rounds.empty() ? 0 : *std::max_element(rounds.begin(), rounds.end())) + 1;

    PseudoLabelReport report;
    report.round = round;
    report.added_per_class.assign(vocab.size(), 0);
    std::vector<std::size_t> take;
    std::vector<ClassIndex> new_labels;
    for (std::size_t r = 0; r < unlabeled_x.rows(); ++r) {
        const auto& id = unlabeled_x.segment_ids()[r];
        if (const auto it = train_round.find(id); it != train_round.end()) {
            if (it->second == 0) {
                throw DataError("pseudo-label: unlabeled segment '" + id + "' is part of the labelled training set");
            }
            ++report.skipped_already_labeled;
            continue;
        }
        const auto probs = scores.row(score_row.at(id));
        const auto best = argmax(probs);
        if (probs[best] >= config.confidence_threshold) {
            take.push_back(r);
            new_labels.push_back(best);
            ++report.added_per_class[best];
            report.added_ids.push_back(id);
        }
    }
    report.added = take.size();

    auto ids = train_y.segment_ids();
    auto labels = train_y.labels();
    const auto added_rows = unlabeled_x.select_rows(take);
    for (std::size_t i = 0; i < take.size(); ++i) {
        ids.push_back(added_rows.segment_ids()[i]);
        labels.push_back(new_labels[i]);
        rounds.push_back(round);
    }
    return {train_x.concat_rows(added_rows), LabelVector(vocab, std::move(ids), std::move(labels), std::move(rounds)),
            std::move(report)};
}

SelfTrainingResult self_train(const FeatureTable& train_x, const LabelVector& train_y, const FeatureTable& unlabeled_x,
                              const PseudoLabelConfig& config, const FitAndScore& fit_and_score) {
    config.validate(train_y.vocab().size());
    SelfTrainingResult result{train_x, train_y, {}};
    FeatureTable remaining = unlabeled_x;
    for (std::size_t i = 0; i < config.max_rounds && remaining.rows() > 0; ++i) {
        const auto scores = fit_and_score(result.features, result.labels, remaining);
        auto step = pseudo_label_round(result.features, result.labels, remaining, scores, config);
        const std::unordered_set<std::string> added(step.report.added_ids.begin(), step.report.added_ids.end());
        const bool progress = step.report.added > 0;
        result.features = std::move(step.features);
        result.labels = std::move(step.labels);
        result.rounds.push_back(std::move(step.report));
        if (!progress) break;

        std::vector<std::size_t> keep;
        for (std::size_t r = 0; r < remaining.rows(); ++r) {
            if (!added.contains(remaining.segment_ids()[r])) keep.push_back(r);
        }
        remaining = remaining.select_rows(keep);
    }
    return result;
}

std::string pseudo_label_report_to_text(const std::vector<PseudoLabelReport>& rounds, const ClassVocabulary& vocab) {
    std::string out = "round,segments_added,class,count\n";
    for (const auto& r : rounds) {
        for (ClassIndex c = 0; c < vocab.size(); ++c) {
            out += std::to_string(r.round) + "," + std::to_string(r.added) + "," + vocab.name(c) + "," +
                   std::to_string(r.added_per_class.at(c)) + "\n";
        }
    }
    return out;
}

}  // namespace segclf::ensemble
