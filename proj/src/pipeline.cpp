#include "segclf/pipeline.hpp"

#include "segclf/ensemble.hpp"
#include "segclf/error.hpp"
#include "segclf/metrics.hpp"
#include "segclf/pseudo_label.hpp"
#include "segclf/text_table.hpp"

#include <utility>

namespace segclf {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void raise(ErrorKind kind, const std::string& what) {
    switch (kind) {
        case ErrorKind::config: throw ConfigError(what);
        case ErrorKind::data: throw DataError(what);
        case ErrorKind::numeric: throw NumericError(what);
    }
    throw DataError(what);
}

template <class F>
auto staged(const std::string& stage, F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        raise(e.kind(), stage + ": " + e.what());
    }
}

/// Collects file contents first and writes them only once everything was computed.
class Outputs {
public:
    explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}
    void add(const std::string& name, std::string content) { files_.emplace_back(dir_ / name, std::move(content)); }
    CommandResult commit(std::vector<std::string> notes = {}) {
        CommandResult result;
        for (const auto& [path, content] : files_) {
            write_file_atomic(path, content);
            result.written.push_back(path);
        }
        result.notes = std::move(notes);
        return result;
    }

private:
    fs::path dir_;
    std::vector<std::pair<fs::path, std::string>> files_;
};

struct PartitionPaths {
    DataPaths::Path features, labels;
};

PartitionPaths paths_for(const DataPaths& data, Partition p) {
    switch (p) {
        case Partition::train: return {data.train_features, data.train_labels};
        case Partition::devel: return {data.devel_features, data.devel_labels};
        case Partition::test: return {data.test_features, data.test_labels};
    }
    return {};
}

std::string label_text(const LabelVector& y) {
    // predictions never carry provenance
    return labels_to_text(LabelVector(y.vocab(), y.segment_ids(), y.labels()));
}

}  // namespace

LabeledData load_labeled(const RunConfig& config, Partition partition) {
    const auto name = std::string(to_string(partition));
    FeatureTable features;
    std::optional<LabelVector> labels;
    if (config.data.features) {
        if (!config.data.labels) throw ConfigError("data.labels is required with data.features");
        const auto map = load_partitions(*config.data.partitions);
        features = select_partition(load_feature_table(*config.data.features), map, partition);
        labels = load_labels(*config.data.labels, config.vocab);
    } else {
        const auto paths = paths_for(config.data, partition);
        if (!paths.features) throw ConfigError("data." + name + "_features is not configured");
        if (!paths.labels) throw ConfigError("data." + name + "_labels is not configured");
        features = load_feature_table(*paths.features);
        labels = load_labels(*paths.labels, config.vocab);
    }
    auto aligned = align(features, *labels);
    LabeledData out{std::move(aligned.features), std::move(aligned.labels), {}};
    if (aligned.dropped_features > 0) {
        out.notes.push_back(name + ": " + std::to_string(aligned.dropped_features) + " feature rows have no label");
    }
    if (aligned.dropped_labels > 0) {
        out.notes.push_back(name + ": " + std::to_string(aligned.dropped_labels) + " labels have no feature row");
    }
    return out;
}

FeatureTable load_unlabeled(const RunConfig& config) {
    if (!config.data.unlabeled_features) throw ConfigError("data.unlabeled_features is not configured");
    return load_feature_table(*config.data.unlabeled_features);
}

std::optional<SelectionReport> fit_selection(const RunConfig& config, const FeatureTable& x, const LabelVector& y) {
    switch (config.selection.mode) {
        case SelectionMode::none: return std::nullopt;
        case SelectionMode::top_k: return select_top_k(x, y, config.selection.k);
        case SelectionMode::percentile: return select_percentile(x, y, config.selection.percentile);
    }
    return std::nullopt;
}

PipelineModel fit_pipeline(const RunConfig& config, const FeatureTable& x, const LabelVector& y,
                           std::optional<SelectionReport>* selection_out) {
    if (!config.classifier) throw ConfigError("train: the configuration has no [classifier] section");
    if (x.rows() == 0) throw DataError("train: the training partition is empty");

    std::optional<Standardizer> standardizer;
    FeatureTable work = x;
    if (config.standardize_for_classifier()) {
        standardizer = staged("standardize", [&] { return fit_standardizer(x); });
        work = standardizer->apply(x);
    }

    const auto selection = staged("select", [&] { return fit_selection(config, x, y); });
    std::optional<std::vector<bool>> mask;
    if (selection) {
        mask = selection->selected;
        work = work.select_columns(selection->selected_indices());
    }
    if (selection_out) *selection_out = selection;

    auto classifier = staged("fit", [&]() -> Classifier {
        return std::visit(
            [&](const auto& c) -> Classifier {
                using T = std::decay_t<decltype(c)>;
                if constexpr (std::is_same_v<T, svm::SvmConfig>) {
                    return svm::svm_train(work, y, c);
                } else if constexpr (std::is_same_v<T, forest::ForestConfig>) {
                    auto seeded = c;
                    seeded.seed = config.seed;
                    return forest::forest_train(work, y, seeded);
                } else {
                    return knn::knn_train(work, y, c);
                }
            },
            *config.classifier);
    });
    return PipelineModel{config.vocab, x.feature_names(), std::move(standardizer), std::move(mask),
                         std::move(classifier)};
}

CommandResult cmd_select(const RunConfig& config) {
    if (config.selection.mode == SelectionMode::none) {
        throw ConfigError("select: preprocess.selection is 'none'; set top_k or percentile");
    }
    auto data = staged("load", [&] { return load_labeled(config, Partition::train); });
    const auto report = staged("select", [&] { return *fit_selection(config, data.x, data.y); });
    Outputs out(config.output_dir);
    out.add("feature_scores.csv", selection_report_to_text(report));
    data.notes.push_back("selected " + std::to_string(report.k) + " of " + std::to_string(report.f_scores.size()) +
                         " features");
    for (auto c : report.absent_classes) {
        data.notes.push_back("class '" + config.vocab.name(c) + "' has no training segment");
    }
    return out.commit(std::move(data.notes));
}

CommandResult cmd_train(const RunConfig& config) {
    if (!config.classifier) throw ConfigError("train: the configuration has no [classifier] section");
    auto data = staged("load", [&] { return load_labeled(config, Partition::train); });
    std::optional<SelectionReport> selection;
    const auto model = fit_pipeline(config, data.x, data.y, &selection);
    Outputs out(config.output_dir);
    out.add("model.json", model_to_json(model));
    if (selection) out.add("feature_scores.csv", selection_report_to_text(*selection));
    data.notes.push_back("trained " + model.model_type() + " on " + std::to_string(data.x.rows()) + " segments");
    return out.commit(std::move(data.notes));
}

CommandResult cmd_predict(const fs::path& model_path, const fs::path& features_path, const fs::path& out_dir) {
    const auto model = staged("load model", [&] { return load_model(model_path); });
    const auto raw = staged("load features", [&] { return load_feature_table(features_path); });
    const auto probs = staged("predict", [&] { return model.scores(raw); });
    const auto labels = staged("predict", [&] { return model.predict(raw); });
    Outputs out(out_dir);
    out.add("predictions.csv", label_text(labels));
    out.add("probabilities.csv", ensemble::probabilities_to_text(probs));
    return out.commit({"predicted " + std::to_string(raw.rows()) + " segments"});
}

CommandResult cmd_ensemble(const RunConfig& config) {
    if (!config.ensemble) throw ConfigError("ensemble: the configuration has no [ensemble] section");
    std::vector<ProbabilityMatrix> inputs;
    for (const auto& p : config.ensemble->inputs) {
        inputs.push_back(staged("load " + p.string(), [&] { return ensemble::load_probabilities(p, config.vocab); }));
    }
    const auto combined = staged("vote", [&] { return ensemble::soft_vote(inputs, config.ensemble->config); });
    Outputs out(config.output_dir);
    out.add("ensemble_probabilities.csv", ensemble::probabilities_to_text(combined));
    out.add("ensemble_predictions.csv", label_text(ensemble::predict_from_probs(combined)));
    return out.commit({"combined " + std::to_string(inputs.size()) + " probability files over " +
                       std::to_string(combined.rows()) + " segments"});
}

CommandResult cmd_evaluate(const fs::path& predictions_path, const fs::path& labels_path, const ClassVocabulary& vocab,
                           const metrics::CombinedWeights& weights, const fs::path& out_dir) {
    const auto predicted = staged("load predictions", [&] { return load_labels(predictions_path, vocab); });
    const auto reference = staged("load labels", [&] { return load_labels(labels_path, vocab); });

    std::unordered_map<std::string_view, std::size_t> pred_rows;
    for (std::size_t i = 0; i < predicted.size(); ++i) pred_rows.emplace(predicted.segment_ids()[i], i);
    std::vector<std::size_t> ref_keep;
    std::vector<std::size_t> pred_keep;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const auto it = pred_rows.find(reference.segment_ids()[i]);
        if (it == pred_rows.end()) continue;
        ref_keep.push_back(i);
        pred_keep.push_back(it->second);
    }
    if (ref_keep.empty()) throw DataError("evaluate: predictions and labels share no segment id");

    const auto cm = metrics::confusion(reference.select(ref_keep), predicted.select(pred_keep));
    const auto report = metrics::score(cm, weights);
    Outputs out(out_dir);
    out.add("scores.csv", metrics::score_report_to_text(report));
    out.add("scores.txt", metrics::score_report_to_human(report, vocab));
    out.add("confusion.csv", metrics::confusion_to_text(cm));
    std::vector<std::string> notes{metrics::score_report_to_human(report, vocab)};
    if (ref_keep.size() < reference.size()) {
        notes.push_back(std::to_string(reference.size() - ref_keep.size()) + " labelled segments have no prediction");
    }
    if (pred_keep.size() < predicted.size()) {
        notes.push_back(std::to_string(predicted.size() - pred_keep.size()) + " predictions have no label");
    }
    return out.commit(std::move(notes));
}

CommandResult cmd_pseudo_label(const RunConfig& config) {
    if (!config.pseudo_label) throw ConfigError("pseudo-label: the configuration has no [pseudo_label] section");
    const auto& section = *config.pseudo_label;
    if (section.scores && section.model) throw ConfigError("pseudo-label: give either scores or model, not both");
    if (!section.scores && !section.model) throw ConfigError("pseudo-label: missing scores (set scores or model)");
    section.config.validate(config.vocab.size());

    auto train = staged("load", [&] { return load_labeled(config, Partition::train); });
    const auto unlabeled = staged("load", [&] { return load_unlabeled(config); });

    std::vector<ensemble::PseudoLabelReport> reports;
    FeatureTable out_x = train.x;
    LabelVector out_y = train.y;
    if (section.scores) {
        if (section.config.max_rounds > 1) {
            throw ConfigError("pseudo-label: a fixed score file supports one round; use a model with [classifier]");
        }
        const auto scores = staged("load scores", [&] { return ensemble::load_probabilities(*section.scores, config.vocab); });
        auto round = ensemble::pseudo_label_round(train.x, train.y, unlabeled, scores, section.config);
        out_x = std::move(round.features);
        out_y = std::move(round.labels);
        reports.push_back(std::move(round.report));
    } else {
        const auto model = staged("load model", [&] { return load_model(*section.model); });
        if (!(model.vocab == config.vocab)) throw ConfigError("pseudo-label: model classes differ from the run's");
        auto first = true;
        const ensemble::FitAndScore fit_and_score = [&](const FeatureTable& x, const LabelVector& y,
                                                        const FeatureTable& u) {
            if (first) {
                first = false;
                return model.scores(u);
            }
            if (!config.classifier) {
                throw ConfigError("pseudo-label: rounds after the first need a [classifier] section to retrain");
            }
            return fit_pipeline(config, x, y).scores(u);
        };
        auto result = ensemble::self_train(train.x, train.y, unlabeled, section.config, fit_and_score);
        out_x = std::move(result.features);
        out_y = std::move(result.labels);
        reports = std::move(result.rounds);
    }

    Outputs out(config.output_dir);
    out.add("train_features.csv", feature_table_to_text(out_x));
    out.add("train_labels.csv", labels_to_text(out_y));
    out.add("pseudo_label_report.csv", ensemble::pseudo_label_report_to_text(reports, config.vocab));
    for (const auto& r : reports) {
        train.notes.push_back("round " + std::to_string(r.round) + ": added " + std::to_string(r.added) +
                              " segments, skipped " + std::to_string(r.skipped_already_labeled) +
                              " already pseudo-labelled");
    }
    return out.commit(std::move(train.notes));
}

CommandResult cmd_gen_synthetic(const BlobSpec& spec, std::uint64_t seed, Task task, const fs::path& out_dir) {
    const auto vocab = default_vocabulary(task);
    const auto blobs = make_blobs(spec, seed, vocab);
    Outputs out(out_dir);
    out.add("train_features.csv", feature_table_to_text(blobs.train_x));
    out.add("train_labels.csv", labels_to_text(blobs.train_y));
    out.add("test_features.csv", feature_table_to_text(blobs.test_x));
    out.add("test_labels.csv", labels_to_text(blobs.test_y));
    if (spec.n_unlabeled > 0) {
        out.add("unlabeled_features.csv", feature_table_to_text(blobs.unlabeled_x));
        out.add("unlabeled_labels_hidden.csv", labels_to_text(blobs.unlabeled_y));
    }

    const auto k = std::to_string(std::min<std::size_t>(spec.informative, spec.dims));
    const std::string common = "[run]\ntask = " + std::string(to_string(task)) + "\nseed = " + std::to_string(seed) +
                               "\n\n[data]\ntrain_features = train_features.csv\ntrain_labels = train_labels.csv\n"
                               "test_features = test_features.csv\ntest_labels = test_labels.csv\n" +
                               (spec.n_unlabeled > 0 ? "unlabeled_features = unlabeled_features.csv\n" : "") +
                               "\n[preprocess]\nselection = top_k\nk = " + k + "\n\n";
    out.add("svm.ini", common + "[classifier]\ntype = svm\nc = 0.0538\ngamma = auto\n");
    out.add("forest.ini", common + "[classifier]\ntype = forest\nn_trees = 100\nmax_depth = 7.4008\n");
    out.add("knn.ini", common + "[classifier]\ntype = knn\nk_neighbors = 5\n");
    return out.commit({"wrote a " + std::to_string(vocab.size()) + "-class blob task with " +
                       std::to_string(spec.dims) + " features"});
}

}  // namespace segclf
