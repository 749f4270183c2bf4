#pragma once

#include "segclf/config.hpp"
#include "segclf/feature_selection.hpp"
#include "segclf/model_io.hpp"
#include "segclf/synthetic.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace segclf {

struct CommandResult {
    std::vector<std::filesystem::path> written;
    std::vector<std::string> notes;  ///< human-readable summary lines
};

struct LabeledData {
    FeatureTable x;
    LabelVector y;
    std::vector<std::string> notes;
};

/// Loads and aligns one labelled partition from either path layout of the config.
/// Throws ConfigError when the partition is not configured.
LabeledData load_labeled(const RunConfig& config, Partition partition);
/// Unlabeled features, or the features of a partition, as configured.
FeatureTable load_unlabeled(const RunConfig& config);

/// Fits the configured feature selection on (x, y); nullopt when selection is off.
std::optional<SelectionReport> fit_selection(const RunConfig& config, const FeatureTable& x, const LabelVector& y);

/// standardize -> select -> fit. Stage failures are re-raised with the stage name prefixed.
PipelineModel fit_pipeline(const RunConfig& config, const FeatureTable& x, const LabelVector& y,
                           std::optional<SelectionReport>* selection_out = nullptr);

CommandResult cmd_select(const RunConfig& config);
CommandResult cmd_train(const RunConfig& config);
CommandResult cmd_predict(const std::filesystem::path& model_path, const std::filesystem::path& features_path,
                          const std::filesystem::path& out_dir);
CommandResult cmd_ensemble(const RunConfig& config);
CommandResult cmd_evaluate(const std::filesystem::path& predictions_path, const std::filesystem::path& labels_path,
                           const ClassVocabulary& vocab, const metrics::CombinedWeights& weights,
                           const std::filesystem::path& out_dir);
CommandResult cmd_pseudo_label(const RunConfig& config);
/// Writes a blob task as feature/label files plus ready-to-run example configs.
CommandResult cmd_gen_synthetic(const BlobSpec& spec, std::uint64_t seed, Task task,
                                const std::filesystem::path& out_dir);

}  // namespace segclf
