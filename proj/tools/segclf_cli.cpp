#include "segclf/error.hpp"
#include "segclf/pipeline.hpp"

#include "CLI11.hpp"

#include <iostream>

namespace {

using namespace segclf;
namespace fs = std::filesystem;

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> task;
    std::optional<std::string> train_features, train_labels, unlabeled, scores, model;
};

RunConfig load(const Overrides& o) {
    RunConfig cfg;
    if (!o.config.empty()) cfg = load_run_config(o.config);
    if (o.task) {
        cfg.task = parse_task(*o.task);
        cfg.vocab = default_vocabulary(cfg.task);
    }
    if (o.seed) cfg.seed = *o.seed;
    if (o.out) cfg.output_dir = *o.out;
    if (o.train_features) cfg.data.train_features = *o.train_features;
    if (o.train_labels) cfg.data.train_labels = *o.train_labels;
    if (o.unlabeled) cfg.data.unlabeled_features = *o.unlabeled;
    if (o.scores || o.model) {
        if (!cfg.pseudo_label) cfg.pseudo_label.emplace();
        if (o.scores) {
            cfg.pseudo_label->scores = *o.scores;
            cfg.pseudo_label->model.reset();
        }
        if (o.model) {
            cfg.pseudo_label->model = *o.model;
            cfg.pseudo_label->scores.reset();
        }
    }
    cfg.validate();
    return cfg;
}

void report(const CommandResult& result) {
    for (const auto& note : result.notes) std::cout << note << (note.ends_with('\n') ? "" : "\n");
    for (const auto& path : result.written) std::cout << "wrote " << path.string() << "\n";
}

void add_common(CLI::App* cmd, Overrides& o, bool config_required) {
    auto* opt = cmd->add_option("--config", o.config, "run configuration (INI)");
    if (config_required) opt->required();
    cmd->add_option("--seed", o.seed, "override the run seed");
    cmd->add_option("--out", o.out, "override the output directory");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Segment classification pipeline: feature selection, SVM / forest / KNN, soft voting, "
                 "pseudo-labelling and evaluation"};
    app.require_subcommand(1);

    Overrides o;
    std::function<CommandResult()> run;

    auto* select = app.add_subcommand("select", "score features with ANOVA F and export the selection");
    add_common(select, o, true);
    select->callback([&] { run = [&] { return cmd_select(load(o)); }; });

    auto* train = app.add_subcommand("train", "standardize, select and fit the configured classifier");
    add_common(train, o, true);
    train->add_option("--train-features", o.train_features, "override data.train_features");
    train->add_option("--train-labels", o.train_labels, "override data.train_labels");
    train->callback([&] { run = [&] { return cmd_train(load(o)); }; });

    std::string model_path, features_path, predictions_path, labels_path;
    auto* predict = app.add_subcommand("predict", "apply a saved model to a feature file");
    add_common(predict, o, false);
    predict->add_option("--model", model_path, "model file written by train")->required();
    predict->add_option("--features", features_path, "feature file to classify")->required();
    predict->callback([&] {
        run = [&] {
            const auto cfg = load(o);
            return cmd_predict(model_path, features_path, cfg.output_dir);
        };
    });

    auto* ens = app.add_subcommand("ensemble", "weighted soft vote over probability files");
    add_common(ens, o, true);
    ens->callback([&] { run = [&] { return cmd_ensemble(load(o)); }; });

    auto* pseudo = app.add_subcommand("pseudo-label", "append confident unlabeled segments to the training set");
    add_common(pseudo, o, true);
    pseudo->add_option("--train-features", o.train_features, "override data.train_features");
    pseudo->add_option("--train-labels", o.train_labels, "override data.train_labels");
    pseudo->add_option("--unlabeled", o.unlabeled, "override data.unlabeled_features");
    pseudo->add_option("--scores", o.scores, "probability file over the unlabeled segments");
    pseudo->add_option("--model", o.model, "model used to score the unlabeled segments");
    pseudo->callback([&] { run = [&] { return cmd_pseudo_label(load(o)); }; });

    auto* evaluate = app.add_subcommand("evaluate", "score predictions against reference labels");
    add_common(evaluate, o, false);
    evaluate->add_option("--predictions", predictions_path, "segment_id,label predictions")->required();
    evaluate->add_option("--labels", labels_path, "reference labels")->required();
    evaluate->add_option("--task", o.task, "topic, arousal or valence (sets the class vocabulary)");
    evaluate->callback([&] {
        run = [&] {
            const auto cfg = load(o);
            return cmd_evaluate(predictions_path, labels_path, cfg.vocab, cfg.combined_weights, cfg.output_dir);
        };
    });

    BlobSpec spec;
    std::string task = "arousal";
    auto* gen = app.add_subcommand("gen-synthetic", "write a Gaussian-blob task and example configs");
    add_common(gen, o, false);
    gen->add_option("--task", task, "topic, arousal or valence")->capture_default_str();
    gen->add_option("--n-train", spec.n_train, "training segments")->capture_default_str();
    gen->add_option("--n-test", spec.n_test, "test segments")->capture_default_str();
    gen->add_option("--n-unlabeled", spec.n_unlabeled, "unlabeled segments")->capture_default_str();
    gen->add_option("--dims", spec.dims, "feature columns")->capture_default_str();
    gen->add_option("--informative", spec.informative, "informative columns")->capture_default_str();
    gen->add_option("--separation", spec.separation, "spread of the class centres")->capture_default_str();
    gen->callback([&] {
        run = [&] {
            const auto out = o.out ? fs::path(*o.out) : fs::path("synthetic");
            return cmd_gen_synthetic(spec, o.seed.value_or(0), parse_task(task), out);
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ErrorKind::config);
    }

    try {
        report(run());
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
