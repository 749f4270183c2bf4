#pragma once

#include "segclf/dataset.hpp"
#include "segclf/ensemble.hpp"
#include "segclf/forest.hpp"
#include "segclf/knn.hpp"
#include "segclf/metrics.hpp"
#include "segclf/pseudo_label.hpp"
#include "segclf/svm.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace segclf {

enum class Task { topic, arousal, valence };

std::string_view to_string(Task task);
Task parse_task(const std::string& text);
/// Default vocabulary of a task: ten topics, or three levels for arousal/valence.
ClassVocabulary default_vocabulary(Task task);

enum class SelectionMode { none, top_k, percentile };

struct SelectionConfig {
    SelectionMode mode = SelectionMode::none;
    std::size_t k = 0;
    double percentile = 0.0;
};

/// `automatic` standardizes for SVM and KNN and leaves forests on raw features.
enum class StandardizeMode { automatic, on, off };

struct DataPaths {
    using Path = std::optional<std::filesystem::path>;
    Path train_features, train_labels;
    Path devel_features, devel_labels;
    Path test_features, test_labels;
    Path unlabeled_features;
    /// Alternative layout: one feature file and one label file split by a partition file.
    Path features, labels, partitions;
};

using ClassifierConfig = std::variant<svm::SvmConfig, forest::ForestConfig, knn::KnnConfig>;

struct EnsembleSection {
    std::vector<std::filesystem::path> inputs;
    ensemble::EnsembleConfig config;
};

struct PseudoLabelSection {
    ensemble::PseudoLabelConfig config;
    std::optional<std::filesystem::path> scores;  ///< probability file over the unlabeled segments
    std::optional<std::filesystem::path> model;   ///< or a model file to score them with
};

struct RunConfig {
    Task task = Task::arousal;
    ClassVocabulary vocab = default_vocabulary(Task::arousal);
    DataPaths data;
    StandardizeMode standardize = StandardizeMode::automatic;
    SelectionConfig selection;
    std::optional<ClassifierConfig> classifier;
    std::optional<EnsembleSection> ensemble;
    std::optional<PseudoLabelSection> pseudo_label;
    metrics::CombinedWeights combined_weights;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "out";

    bool standardize_for_classifier() const;
    /// Checks section exclusivity and that every referenced input path exists.
    void validate() const;
};

/// Parses the INI-style run configuration. Relative paths resolve against `base_dir`.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace segclf
