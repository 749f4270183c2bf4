#include "segclf/model_io.hpp"

#include "segclf/error.hpp"
#include "segclf/text_table.hpp"

#include "json.hpp"

#include <algorithm>
#include <unordered_map>

namespace segclf {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
    return rows;
}

Matrix matrix_from_json(const json& j, std::size_t cols) {
    Matrix m(0, cols);
    for (const auto& row : j) {
        const auto values = row.get<std::vector<double>>();
        if (values.size() != cols) throw DataError("model file: matrix row has wrong length");
        m.append_row(values);
    }
    return m;
}

json svm_to_json(const svm::SvmModel& model, json& config) {
    const auto& c = model.config();
    config = {{"c", c.c},
              {"gamma_mode", svm::to_string(c.gamma.mode)},
              {"gamma_value", c.gamma.value},
              {"gamma_resolved", model.gamma()},
              {"tolerance", c.tolerance},
              {"max_passes", c.max_passes},
              {"multiclass", "one-vs-one"}};
    json machines = json::array();
    for (const auto& m : model.machines()) {
        machines.push_back({{"positive", m.positive},
                            {"negative", m.negative},
                            {"bias", m.bias},
                            {"gamma", m.gamma},
                            {"dual_coeffs", m.dual_coeffs},
                            {"support_vectors", matrix_to_json(m.support_vectors)}});
    }
    return {{"dims", model.dims()}, {"gamma", model.gamma()}, {"machines", machines}};
}

svm::SvmModel svm_from_json(const json& config, const json& params, const ClassVocabulary& vocab) {
    svm::SvmConfig c;
    c.c = config.at("c").get<double>();
    c.gamma.mode = svm::parse_gamma_mode(config.at("gamma_mode").get<std::string>());
    c.gamma.value = config.at("gamma_value").get<double>();
    c.tolerance = config.at("tolerance").get<double>();
    c.max_passes = config.at("max_passes").get<std::size_t>();
    const auto dims = params.at("dims").get<std::size_t>();
    std::vector<svm::BinaryMachine> machines;
    for (const auto& j : params.at("machines")) {
        svm::BinaryMachine m;
        m.positive = j.at("positive").get<ClassIndex>();
        m.negative = j.at("negative").get<ClassIndex>();
        m.bias = j.at("bias").get<double>();
        m.gamma = j.at("gamma").get<double>();
        m.dual_coeffs = j.at("dual_coeffs").get<std::vector<double>>();
        m.support_vectors = matrix_from_json(j.at("support_vectors"), dims);
        machines.push_back(std::move(m));
    }
    return svm::SvmModel(vocab, dims, params.at("gamma").get<double>(), c, std::move(machines));
}

json forest_to_json(const forest::ForestModel& model, json& config) {
    const auto& c = model.config();
    config = {{"n_trees", c.n_trees},
              {"max_depth_configured", c.max_depth},
              {"max_depth_effective", c.effective_max_depth()},
              {"min_samples_split", c.min_samples_split},
              {"features_per_split", forest::to_string(c.features_per_split)},
              {"seed", c.seed}};
    json trees = json::array();
    for (const auto& tree : model.trees()) {
        std::vector<std::int32_t> feature;
        std::vector<double> threshold;
        std::vector<std::uint32_t> left;
        std::vector<std::uint32_t> right;
        json counts = json::array();
        for (const auto& n : tree.nodes) {
            feature.push_back(n.feature);
            threshold.push_back(n.threshold);
            left.push_back(n.left);
            right.push_back(n.right);
            counts.push_back(n.is_leaf() ? json(n.class_counts) : json(nullptr));
        }
        trees.push_back({{"feature", feature},
                         {"threshold", threshold},
                         {"left", left},
                         {"right", right},
                         {"class_counts", counts}});
    }
    return {{"dims", model.dims()}, {"trees", trees}};
}

forest::ForestModel forest_from_json(const json& config, const json& params, const ClassVocabulary& vocab) {
    forest::ForestConfig c;
    c.n_trees = config.at("n_trees").get<std::size_t>();
    c.max_depth = config.at("max_depth_configured").get<double>();
    c.min_samples_split = config.at("min_samples_split").get<std::size_t>();
    c.features_per_split = forest::parse_features_per_split(config.at("features_per_split").get<std::string>());
    c.seed = config.at("seed").get<std::uint64_t>();
    std::vector<forest::Tree> trees;
    for (const auto& j : params.at("trees")) {
        const auto feature = j.at("feature").get<std::vector<std::int32_t>>();
        const auto threshold = j.at("threshold").get<std::vector<double>>();
        const auto left = j.at("left").get<std::vector<std::uint32_t>>();
        const auto right = j.at("right").get<std::vector<std::uint32_t>>();
        const auto& counts = j.at("class_counts");
        const auto n = feature.size();
        if (threshold.size() != n || left.size() != n || right.size() != n || counts.size() != n) {
            throw DataError("model file: inconsistent tree arrays");
        }
        forest::Tree tree;
        for (std::size_t i = 0; i < n; ++i) {
            forest::Node node;
            node.feature = feature[i];
            node.threshold = threshold[i];
            node.left = left[i];
            node.right = right[i];
            if (!counts[i].is_null()) node.class_counts = counts[i].get<std::vector<std::uint32_t>>();
            tree.nodes.push_back(std::move(node));
        }
        trees.push_back(std::move(tree));
    }
    if (trees.size() != c.n_trees) throw DataError("model file: tree count does not match configuration");
    return forest::ForestModel(vocab, params.at("dims").get<std::size_t>(), c, std::move(trees));
}

json knn_to_json(const knn::KnnModel& model, json& config) {
    config = {{"k_neighbors", model.config().k_neighbors}, {"metric", "euclidean"}};
    return {{"dims", model.dims()}, {"points", matrix_to_json(model.points())}, {"labels", model.labels()}};
}

knn::KnnModel knn_from_json(const json& config, const json& params, const ClassVocabulary& vocab) {
    knn::KnnConfig c;
    c.k_neighbors = config.at("k_neighbors").get<std::size_t>();
    if (config.at("metric").get<std::string>() != "euclidean") throw DataError("model file: unsupported knn metric");
    const auto dims = params.at("dims").get<std::size_t>();
    return knn::KnnModel(vocab, c, matrix_from_json(params.at("points"), dims),
                         params.at("labels").get<std::vector<ClassIndex>>());
}

}  // namespace

std::string PipelineModel::model_type() const {
    return std::visit(overloaded{[](const svm::SvmModel&) { return std::string("svm"); },
                                 [](const forest::ForestModel&) { return std::string("forest"); },
                                 [](const knn::KnnModel&) { return std::string("knn"); }},
                      classifier);
}

FeatureTable PipelineModel::prepare(const FeatureTable& raw) const {
    std::unordered_map<std::string_view, std::size_t> expected;
    for (std::size_t j = 0; j < input_features.size(); ++j) expected.emplace(input_features[j], j);
    for (const auto& name : raw.feature_names()) {
        if (!expected.contains(name)) throw DataError("feature column '" + name + "' is not known to the model");
    }
    std::unordered_map<std::string_view, std::size_t> present;
    for (std::size_t j = 0; j < raw.cols(); ++j) present.emplace(raw.feature_names()[j], j);
    std::vector<std::size_t> order;
    order.reserve(input_features.size());
    for (const auto& name : input_features) {
        const auto it = present.find(name);
        if (it == present.end()) throw DataError("feature column '" + name + "' required by the model is missing");
        order.push_back(it->second);
    }
    FeatureTable table = raw.select_columns(order);
    if (standardizer) table = standardizer->apply(table);
    if (selection) {
        std::vector<std::size_t> keep;
        for (std::size_t j = 0; j < selection->size(); ++j) {
            if ((*selection)[j]) keep.push_back(j);
        }
        table = table.select_columns(keep);
    }
    return table;
}

LabelVector PipelineModel::predict(const FeatureTable& raw) const {
    const auto x = prepare(raw);
    return std::visit(overloaded{[&](const svm::SvmModel& m) { return svm::svm_predict(m, x); },
                                 [&](const forest::ForestModel& m) { return forest::forest_predict(m, x); },
                                 [&](const knn::KnnModel& m) { return knn::knn_predict(m, x); }},
                      classifier);
}

ProbabilityMatrix PipelineModel::scores(const FeatureTable& raw) const {
    const auto x = prepare(raw);
    return std::visit(overloaded{[&](const svm::SvmModel& m) { return svm::svm_scores(m, x); },
                                 [&](const forest::ForestModel& m) { return forest::forest_scores(m, x); },
                                 [&](const knn::KnnModel& m) { return knn::knn_scores(m, x); }},
                      classifier);
}

std::string model_to_json(const PipelineModel& model) {
    json config;
    json params = std::visit(overloaded{[&](const svm::SvmModel& m) { return svm_to_json(m, config); },
                                        [&](const forest::ForestModel& m) { return forest_to_json(m, config); },
                                        [&](const knn::KnnModel& m) { return knn_to_json(m, config); }},
                             model.classifier);
    json doc;
    doc["format"] = "segclf-model";
    doc["format_version"] = kModelFormatVersion;
    doc["model_type"] = model.model_type();
    doc["classes"] = model.vocab.names();
    doc["input_features"] = model.input_features;
    if (model.standardizer) {
        doc["standardizer"] = {{"means", model.standardizer->means()}, {"std_devs", model.standardizer->std_devs()}};
    } else {
        doc["standardizer"] = nullptr;
    }
    if (model.selection) doc["selection"] = {{"selected", *model.selection}};
    else doc["selection"] = nullptr;
    doc["config"] = config;
    doc["params"] = params;
    return doc.dump(1) + "\n";
}

PipelineModel model_from_json(const std::string& text) {
    try {
        const auto doc = json::parse(text);
        if (doc.at("format").get<std::string>() != "segclf-model") throw DataError("not a segclf model file");
        const auto version = doc.at("format_version").get<int>();
        if (version != kModelFormatVersion) {
            throw DataError("unsupported model format version " + std::to_string(version) + " (expected " +
                            std::to_string(kModelFormatVersion) + ")");
        }
        ClassVocabulary vocab(doc.at("classes").get<std::vector<std::string>>());
        auto inputs = doc.at("input_features").get<std::vector<std::string>>();
        std::optional<Standardizer> standardizer;
        if (!doc.at("standardizer").is_null()) {
            standardizer.emplace(doc["standardizer"].at("means").get<std::vector<double>>(),
                                 doc["standardizer"].at("std_devs").get<std::vector<double>>());
            if (standardizer->dims() != inputs.size()) throw DataError("model file: standardizer size mismatch");
        }
        std::optional<std::vector<bool>> selection;
        if (!doc.at("selection").is_null()) {
            selection = doc["selection"].at("selected").get<std::vector<bool>>();
            if (selection->size() != inputs.size()) throw DataError("model file: selection mask size mismatch");
        }
        const auto type = doc.at("model_type").get<std::string>();
        const auto& config = doc.at("config");
        const auto& params = doc.at("params");
        auto build = [&]() -> Classifier {
            if (type == "svm") return svm_from_json(config, params, vocab);
            if (type == "forest") return forest_from_json(config, params, vocab);
            if (type == "knn") return knn_from_json(config, params, vocab);
            throw DataError("unknown model_type '" + type + "'");
        };
        PipelineModel model{vocab, std::move(inputs), std::move(standardizer), std::move(selection), build()};
        const std::size_t kept = model.selection
                                     ? static_cast<std::size_t>(std::count(model.selection->begin(), model.selection->end(), true))
                                     : model.input_features.size();
        const std::size_t dims = std::visit([](const auto& m) { return m.dims(); }, model.classifier);
        if (kept != dims) throw DataError("model file: classifier expects " + std::to_string(dims) + " features, preprocessing yields " + std::to_string(kept));
        return model;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed model file: ") + e.what());
    }
}

void save_model(const PipelineModel& model, const std::filesystem::path& path) {
    write_file_atomic(path, model_to_json(model));
}

PipelineModel load_model(const std::filesystem::path& path) {
    try {
        return model_from_json(read_file(path));
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

}  // namespace segclf
