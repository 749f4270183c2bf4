#include "segclf/config.hpp"

#include "segclf/error.hpp"
#include "segclf/text_table.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <set>
#include <sstream>

namespace segclf {

namespace pt = boost::property_tree;

namespace {

double to_real(const std::string& text, const std::string& key) {
    try {
        return parse_real(text, key);
    } catch (const DataError&) {
        throw ConfigError(key + ": expected a number, got '" + text + "'");
    }
}

std::uint64_t to_count(const std::string& text, const std::string& key) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ConfigError(key + ": expected a non-negative integer, got '" + text + "'");
    }
    return v;
}

std::vector<std::string> to_list(const std::string& text) {
    auto cells = split_cells(text);
    std::erase_if(cells, [](const std::string& c) { return c.empty(); });
    return cells;
}

class Section {
public:
    Section(const pt::ptree* tree, std::string name, std::set<std::string> allowed)
        : tree_(tree), name_(std::move(name)) {
        if (!tree_) return;
        for (const auto& [key, value] : *tree_) {
            if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in section [" + name_ + "]");
        }
    }

    std::optional<std::string> get(const std::string& key) const {
        if (!tree_) return std::nullopt;
        const auto v = tree_->get_optional<std::string>(key);
        if (!v) return std::nullopt;
        // allow trailing "# comment" on a value line
        std::string s = *v;
        if (const auto hash = s.find(" #"); hash != std::string::npos) s.erase(hash);
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.pop_back();
        return s;
    }
    std::string key(const std::string& k) const { return name_ + "." + k; }

private:
    const pt::ptree* tree_;
    std::string name_;
};

const pt::ptree* child(const pt::ptree& root, const std::string& name) {
    const auto it = root.find(name);
    return it == root.not_found() ? nullptr : &it->second;
}

}  // namespace

std::string_view to_string(Task task) {
    switch (task) {
        case Task::topic: return "topic";
        case Task::arousal: return "arousal";
        case Task::valence: return "valence";
    }
    return "arousal";
}

Task parse_task(const std::string& text) {
    if (text == "topic") return Task::topic;
    if (text == "arousal") return Task::arousal;
    if (text == "valence") return Task::valence;
    throw ConfigError("unknown task '" + text + "' (expected topic, arousal or valence)");
}

ClassVocabulary default_vocabulary(Task task) {
    return task == Task::topic ? ClassVocabulary::topics() : ClassVocabulary::emotion_levels();
}

bool RunConfig::standardize_for_classifier() const {
    switch (standardize) {
        case StandardizeMode::on: return true;
        case StandardizeMode::off: return false;
        case StandardizeMode::automatic:
            return classifier && !std::holds_alternative<forest::ForestConfig>(*classifier);
    }
    return false;
}

void RunConfig::validate() const {
    if (classifier && ensemble) throw ConfigError("a run configures either [classifier] or [ensemble], not both");
    const std::size_t expected = task == Task::topic ? 10 : 3;
    if (vocab.size() != expected) {
        throw ConfigError("task '" + std::string(to_string(task)) + "' needs " + std::to_string(expected) +
                          " classes, configuration lists " + std::to_string(vocab.size()));
    }
    auto check = [](const std::optional<std::filesystem::path>& p, const char* what) {
        if (p && !std::filesystem::exists(*p)) {
            throw ConfigError(std::string(what) + ": path '" + p->string() + "' does not exist");
        }
    };
    check(data.train_features, "data.train_features");
    check(data.train_labels, "data.train_labels");
    check(data.devel_features, "data.devel_features");
    check(data.devel_labels, "data.devel_labels");
    check(data.test_features, "data.test_features");
    check(data.test_labels, "data.test_labels");
    check(data.unlabeled_features, "data.unlabeled_features");
    check(data.features, "data.features");
    check(data.labels, "data.labels");
    check(data.partitions, "data.partitions");
    if (data.features && !data.partitions) throw ConfigError("data.features requires data.partitions");
    if (data.features && data.train_features) {
        throw ConfigError("use either data.features + data.partitions or data.train_features, not both");
    }
    if (ensemble) {
        for (const auto& p : ensemble->inputs) check(p, "ensemble.inputs");
    }
    if (pseudo_label) {
        check(pseudo_label->scores, "pseudo_label.scores");
        check(pseudo_label->model, "pseudo_label.model");
    }
    if (classifier) {
        std::visit(
            [](const auto& c) {
                using T = std::decay_t<decltype(c)>;
                if constexpr (std::is_same_v<T, knn::KnnConfig>) {
                    if (c.k_neighbors == 0) throw ConfigError("classifier.k_neighbors must be positive");
                } else {
                    c.validate();
                }
            },
            *classifier);
    }
}

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir) {
    pt::ptree root;
    try {
        std::istringstream in(text);
        pt::read_ini(in, root);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    for (const auto& [name, value] : root) {
        static const std::set<std::string> sections{"run", "data", "preprocess", "classifier", "ensemble", "pseudo_label"};
        if (!sections.contains(name)) throw ConfigError("config: unknown section [" + name + "]");
    }
    auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        return path.is_absolute() ? path : base_dir / path;
    };

    RunConfig cfg;
    cfg.output_dir = base_dir / "out";
    const Section run(child(root, "run"), "run", {"task", "classes", "seed", "output_dir", "combined_weights"});
    if (auto v = run.get("task")) cfg.task = parse_task(*v);
    cfg.vocab = default_vocabulary(cfg.task);
    if (auto v = run.get("classes")) cfg.vocab = ClassVocabulary(to_list(*v));
    if (auto v = run.get("seed")) cfg.seed = to_count(*v, run.key("seed"));
    if (auto v = run.get("output_dir")) cfg.output_dir = resolve(*v);
    if (auto v = run.get("combined_weights")) {
        const auto parts = to_list(*v);
        if (parts.size() != 2) throw ConfigError("run.combined_weights: expected two numbers");
        cfg.combined_weights = {to_real(parts[0], run.key("combined_weights")),
                                to_real(parts[1], run.key("combined_weights"))};
    }

    const Section data(child(root, "data"), "data",
                       {"train_features", "train_labels", "devel_features", "devel_labels", "test_features",
                        "test_labels", "unlabeled_features", "features", "labels", "partitions"});
    auto path_of = [&](const char* key) -> DataPaths::Path {
        if (auto v = data.get(key)) return resolve(*v);
        return std::nullopt;
    };
    cfg.data.train_features = path_of("train_features");
    cfg.data.train_labels = path_of("train_labels");
    cfg.data.devel_features = path_of("devel_features");
    cfg.data.devel_labels = path_of("devel_labels");
    cfg.data.test_features = path_of("test_features");
    cfg.data.test_labels = path_of("test_labels");
    cfg.data.unlabeled_features = path_of("unlabeled_features");
    cfg.data.features = path_of("features");
    cfg.data.labels = path_of("labels");
    cfg.data.partitions = path_of("partitions");

    const Section pre(child(root, "preprocess"), "preprocess", {"standardize", "selection", "k", "percentile"});
    if (auto v = pre.get("standardize")) {
        if (*v == "auto") cfg.standardize = StandardizeMode::automatic;
        else if (*v == "on" || *v == "true" || *v == "yes") cfg.standardize = StandardizeMode::on;
        else if (*v == "off" || *v == "false" || *v == "no") cfg.standardize = StandardizeMode::off;
        else throw ConfigError("preprocess.standardize: expected auto, on or off");
    }
    if (auto v = pre.get("selection")) {
        if (*v == "none") cfg.selection.mode = SelectionMode::none;
        else if (*v == "top_k") cfg.selection.mode = SelectionMode::top_k;
        else if (*v == "percentile") cfg.selection.mode = SelectionMode::percentile;
        else throw ConfigError("preprocess.selection: expected none, top_k or percentile");
    }
    if (auto v = pre.get("k")) cfg.selection.k = to_count(*v, pre.key("k"));
    if (auto v = pre.get("percentile")) cfg.selection.percentile = to_real(*v, pre.key("percentile"));
    if (cfg.selection.mode == SelectionMode::top_k && cfg.selection.k == 0) {
        throw ConfigError("preprocess.k must be a positive count for top_k selection");
    }
    if (cfg.selection.mode == SelectionMode::percentile &&
        !(cfg.selection.percentile > 0.0 && cfg.selection.percentile <= 100.0)) {
        throw ConfigError("preprocess.percentile must lie in (0, 100]");
    }

    if (const auto* tree = child(root, "classifier")) {
        const Section cls(tree, "classifier",
                          {"type", "c", "gamma", "tolerance", "max_passes", "n_trees", "max_depth",
                           "min_samples_split", "features_per_split", "k_neighbors"});
        const auto type = cls.get("type");
        if (!type) throw ConfigError("classifier.type is required (svm, forest or knn)");
        if (*type == "svm") {
            svm::SvmConfig c;
            if (auto v = cls.get("c")) c.c = to_real(*v, cls.key("c"));
            if (auto v = cls.get("gamma")) {
                if (*v == "auto" || *v == "automatic") c.gamma = svm::Gamma::automatic();
                else if (*v == "scale") c.gamma = svm::Gamma::scale();
                else c.gamma = svm::Gamma::fixed(to_real(*v, cls.key("gamma")));
            }
            if (auto v = cls.get("tolerance")) c.tolerance = to_real(*v, cls.key("tolerance"));
            if (auto v = cls.get("max_passes")) c.max_passes = to_count(*v, cls.key("max_passes"));
            cfg.classifier = c;
        } else if (*type == "forest") {
            forest::ForestConfig c;
            if (auto v = cls.get("n_trees")) c.n_trees = to_count(*v, cls.key("n_trees"));
            if (auto v = cls.get("max_depth")) c.max_depth = to_real(*v, cls.key("max_depth"));
            if (auto v = cls.get("min_samples_split")) c.min_samples_split = to_count(*v, cls.key("min_samples_split"));
            if (auto v = cls.get("features_per_split")) c.features_per_split = forest::parse_features_per_split(*v);
            cfg.classifier = c;
        } else if (*type == "knn") {
            knn::KnnConfig c;
            if (auto v = cls.get("k_neighbors")) c.k_neighbors = to_count(*v, cls.key("k_neighbors"));
            cfg.classifier = c;
        } else {
            throw ConfigError("classifier.type: expected svm, forest or knn, got '" + *type + "'");
        }
    }

    if (const auto* tree = child(root, "ensemble")) {
        const Section ens(tree, "ensemble", {"inputs", "weights"});
        EnsembleSection section;
        if (auto v = ens.get("inputs")) {
            for (const auto& p : to_list(*v)) section.inputs.push_back(resolve(p));
        }
        if (section.inputs.empty()) throw ConfigError("ensemble.inputs must list at least one probability file");
        if (auto v = ens.get("weights")) {
            section.config.weights.clear();
            for (const auto& w : to_list(*v)) section.config.weights.push_back(to_real(w, ens.key("weights")));
        } else {
            section.config.weights.assign(section.inputs.size(), 1.0 / static_cast<double>(section.inputs.size()));
        }
        cfg.ensemble = std::move(section);
    }

    if (const auto* tree = child(root, "pseudo_label")) {
        const Section pl(tree, "pseudo_label", {"threshold", "max_rounds", "scores", "model"});
        PseudoLabelSection section;
        if (auto v = pl.get("threshold")) section.config.confidence_threshold = to_real(*v, pl.key("threshold"));
        if (auto v = pl.get("max_rounds")) section.config.max_rounds = to_count(*v, pl.key("max_rounds"));
        if (auto v = pl.get("scores")) section.scores = resolve(*v);
        if (auto v = pl.get("model")) section.model = resolve(*v);
        cfg.pseudo_label = std::move(section);
    }
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    const auto text = read_file(path);
    auto base = path.parent_path();
    if (base.empty()) base = ".";
    return parse_run_config(text, base);
}

}  // namespace segclf
