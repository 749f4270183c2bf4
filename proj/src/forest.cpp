#include "segclf/forest.hpp"

#include "segclf/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace segclf::forest {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

ClassIndex majority(std::span<const std::uint32_t> counts) {
    ClassIndex best = 0;
    for (std::size_t c = 1; c < counts.size(); ++c) {
        if (counts[c] > counts[best]) best = static_cast<ClassIndex>(c);
    }
    return best;
}

struct Split {
    std::size_t feature = 0;
    double threshold = 0.0;
    double impurity = std::numeric_limits<double>::infinity();
    bool found = false;
};

class TreeBuilder {
public:
    TreeBuilder(const Matrix& x, std::span<const ClassIndex> y, std::size_t classes, const ForestConfig& config,
                std::uint64_t seed)
        : x_(x),
          y_(y),
          classes_(classes),
          max_depth_(config.effective_max_depth()),
          min_split_(config.min_samples_split),
          features_per_split_(config.features_per_split.resolve(x.cols())),
          rng_(seed) {}

    Tree build() {
        std::uniform_int_distribution<std::size_t> draw(0, x_.rows() - 1);
        std::vector<std::uint32_t> sample(x_.rows());
        for (auto& s : sample) s = static_cast<std::uint32_t>(draw(rng_));
        grow(sample, 0);
        return Tree{std::move(nodes_)};
    }

private:
    std::uint32_t grow(std::vector<std::uint32_t>& sample, std::size_t depth) {
        const auto index = static_cast<std::uint32_t>(nodes_.size());
        nodes_.emplace_back();

        std::vector<std::uint32_t> counts(classes_, 0);
        for (auto r : sample) ++counts[y_[r]];
        const bool pure = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) <= 1;

        Split split;
        if (depth < max_depth_ && !pure && sample.size() >= min_split_) split = best_split(sample);
        if (!split.found) {
            nodes_[index].class_counts = std::move(counts);
            return index;
        }

        std::vector<std::uint32_t> left;
        std::vector<std::uint32_t> right;
        for (auto r : sample) (x_(r, split.feature) <= split.threshold ? left : right).push_back(r);
        sample.clear();
        sample.shrink_to_fit();

        const auto l = grow(left, depth + 1);
        const auto r = grow(right, depth + 1);
        auto& node = nodes_[index];
        node.feature = static_cast<std::int32_t>(split.feature);
        node.threshold = split.threshold;
        node.left = l;
        node.right = r;
        return index;
    }

    Split best_split(const std::vector<std::uint32_t>& sample) {
        const std::size_t d = x_.cols();
        std::vector<std::size_t> features(d);
        std::iota(features.begin(), features.end(), 0);

        Split best;
        std::vector<std::pair<double, ClassIndex>> column(sample.size());
        std::vector<double> left(classes_);
        std::vector<double> right(classes_);
        std::size_t evaluated = 0;
        for (std::size_t pos = 0; pos < d && evaluated < features_per_split_; ++pos) {
            // draw the next candidate feature without replacement
            std::uniform_int_distribution<std::size_t> pick(pos, d - 1);
            std::swap(features[pos], features[pick(rng_)]);
            const std::size_t f = features[pos];

            for (std::size_t i = 0; i < sample.size(); ++i) column[i] = {x_(sample[i], f), y_[sample[i]]};
            std::sort(column.begin(), column.end());
            if (column.front().first == column.back().first) continue;
            ++evaluated;

            std::fill(left.begin(), left.end(), 0.0);
            std::fill(right.begin(), right.end(), 0.0);
            for (const auto& [v, c] : column) right[c] += 1.0;
            const auto n = static_cast<double>(column.size());
            double left_sq = 0.0;
            double right_sq = 0.0;
            for (double r : right) right_sq += r * r;
            for (std::size_t i = 0; i + 1 < column.size(); ++i) {
                const auto c = column[i].second;
                left_sq += 2.0 * left[c] + 1.0;
                right_sq -= 2.0 * right[c] - 1.0;
                left[c] += 1.0;
                right[c] -= 1.0;
                if (column[i].first == column[i + 1].first) continue;
                const auto nl = static_cast<double>(i + 1);
                const double nr = n - nl;
                // n * weighted Gini of the two children
                const double impurity = (nl - left_sq / nl) + (nr - right_sq / nr);
                if (impurity < best.impurity) {
                    const double a = column[i].first;
                    const double b = column[i + 1].first;
                    double threshold = a + (b - a) / 2.0;
                    if (!(threshold < b)) threshold = a;
                    best = {f, threshold, impurity, true};
                }
            }
        }
        return best;
    }

    const Matrix& x_;
    std::span<const ClassIndex> y_;
    std::size_t classes_;
    std::size_t max_depth_;
    std::size_t min_split_;
    std::size_t features_per_split_;
    std::mt19937_64 rng_;
    std::vector<Node> nodes_;
};

}  // namespace

std::size_t FeaturesPerSplit::resolve(std::size_t dims) const {
    switch (mode) {
        case Mode::all: return dims;
        case Mode::fixed: return std::clamp<std::size_t>(count, 1, std::max<std::size_t>(dims, 1));
        case Mode::sqrt:
            return std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(dims))));
    }
    return dims;
}

std::string to_string(const FeaturesPerSplit& f) {
    switch (f.mode) {
        case FeaturesPerSplit::Mode::sqrt: return "sqrt";
        case FeaturesPerSplit::Mode::all: return "all";
        case FeaturesPerSplit::Mode::fixed: return std::to_string(f.count);
    }
    return "sqrt";
}

FeaturesPerSplit parse_features_per_split(const std::string& text) {
    if (text == "sqrt") return {};
    if (text == "all") return {FeaturesPerSplit::Mode::all, 0};
    std::size_t pos = 0;
    unsigned long long n = 0;
    try {
        n = std::stoull(text, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != text.size() || text.empty() || n == 0) {
        throw ConfigError("features_per_split must be 'sqrt', 'all' or a positive count, got '" + text + "'");
    }
    return {FeaturesPerSplit::Mode::fixed, static_cast<std::size_t>(n)};
}

std::size_t ForestConfig::effective_max_depth() const {
    return static_cast<std::size_t>(std::floor(max_depth));
}

void ForestConfig::validate() const {
    if (n_trees == 0) throw ConfigError("forest: n_trees must be positive");
    if (!std::isfinite(max_depth) || max_depth < 1.0) throw ConfigError("forest: max_depth must be at least 1");
    if (features_per_split.mode == FeaturesPerSplit::Mode::fixed && features_per_split.count == 0) {
        throw ConfigError("forest: features_per_split must be positive");
    }
}

const Node& Tree::leaf_for(std::span<const double> x) const {
    const Node* node = &nodes.front();
    while (!node->is_leaf()) {
        node = &nodes[x[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left : node->right];
    }
    return *node;
}

std::size_t Tree::depth() const {
    // nodes are stored in pre-order, so a parent always precedes its children
    std::vector<std::size_t> level(nodes.size(), 0);
    std::size_t deepest = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        deepest = std::max(deepest, level[i]);
        if (!nodes[i].is_leaf()) {
            level[nodes[i].left] = level[i] + 1;
            level[nodes[i].right] = level[i] + 1;
        }
    }
    return deepest;
}

ForestModel::ForestModel(ClassVocabulary vocab, std::size_t dims, ForestConfig config, std::vector<Tree> trees)
    : vocab_(std::move(vocab)), dims_(dims), config_(config), trees_(std::move(trees)) {
    if (trees_.empty()) throw DataError("forest model: no trees");
    for (const auto& tree : trees_) {
        if (tree.nodes.empty()) throw DataError("forest model: empty tree");
        for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
            const auto& n = tree.nodes[i];
            if (n.is_leaf()) {
                if (n.class_counts.size() != vocab_.size() ||
                    std::all_of(n.class_counts.begin(), n.class_counts.end(), [](auto c) { return c == 0; })) {
                    throw DataError("forest model: invalid leaf");
                }
            } else if (static_cast<std::size_t>(n.feature) >= dims_ || n.left <= i || n.right <= i ||
                       n.left >= tree.nodes.size() || n.right >= tree.nodes.size()) {
                throw DataError("forest model: invalid internal node");
            }
        }
    }
}

void ForestModel::check_dims(std::size_t d) const {
    if (d != dims_) {
        throw DataError("forest: input has " + std::to_string(d) + " features, model expects " + std::to_string(dims_));
    }
}

ClassIndex ForestModel::predict_row(std::span<const double> x) const {
    check_dims(x.size());
    std::vector<std::uint32_t> votes(vocab_.size(), 0);
    for (const auto& tree : trees_) ++votes[majority(tree.leaf_for(x).class_counts)];
    return majority(votes);
}

std::vector<double> ForestModel::score_row(std::span<const double> x) const {
    check_dims(x.size());
    std::vector<double> row(vocab_.size(), 0.0);
    for (const auto& tree : trees_) {
        const auto& counts = tree.leaf_for(x).class_counts;
        const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] += counts[c] / total;
    }
    for (auto& v : row) v /= static_cast<double>(trees_.size());
    return row;
}

ForestModel forest_train(const FeatureTable& x, const LabelVector& y, const ForestConfig& config) {
    config.validate();
    if (x.segment_ids() != y.segment_ids()) throw DataError("forest: features and labels are not aligned");
    if (x.rows() == 0) throw DataError("forest: empty training set");
    if (x.cols() == 0) throw DataError("forest: no feature columns");
    std::vector<Tree> trees;
    trees.reserve(config.n_trees);
    for (std::size_t t = 0; t < config.n_trees; ++t) {
        TreeBuilder builder(x.values(), y.labels(), y.vocab().size(), config, splitmix64(config.seed + t));
        trees.push_back(builder.build());
    }
    return ForestModel(y.vocab(), x.cols(), config, std::move(trees));
}

LabelVector forest_predict(const ForestModel& model, const FeatureTable& t) {
    std::vector<ClassIndex> labels;
    labels.reserve(t.rows());
    if (t.cols() != model.dims()) {
        throw DataError("forest: table has " + std::to_string(t.cols()) + " features, model expects " +
                        std::to_string(model.dims()));
    }
    for (std::size_t r = 0; r < t.rows(); ++r) labels.push_back(model.predict_row(t.row(r)));
    return LabelVector(model.vocab(), t.segment_ids(), std::move(labels));
}

ProbabilityMatrix forest_scores(const ForestModel& model, const FeatureTable& t) {
    if (t.cols() != model.dims()) {
        throw DataError("forest: table has " + std::to_string(t.cols()) + " features, model expects " +
                        std::to_string(model.dims()));
    }
    Matrix probs(0, model.vocab().size());
    for (std::size_t r = 0; r < t.rows(); ++r) probs.append_row(model.score_row(t.row(r)));
    return ProbabilityMatrix(t.segment_ids(), model.vocab(), std::move(probs));
}

}  // namespace segclf::forest
