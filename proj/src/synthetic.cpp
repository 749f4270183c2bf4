#include "segclf/synthetic.hpp"

#include "segclf/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

namespace segclf {

namespace {

std::string numbered(const char* prefix, std::size_t i, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
    return buf;
}

// Box-Muller on top of mt19937_64 so the stream is identical across standard libraries.
class Normal {
public:
    explicit Normal(std::uint64_t seed) : rng_(seed) {}
    double operator()() {
        if (spare_) {
            const double v = *spare_;
            spare_.reset();
            return v;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(t);
        return r * std::cos(t);
    }
    std::uint64_t bits() { return rng_(); }

private:
    double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

    std::mt19937_64 rng_;
    std::optional<double> spare_;
};

}  // namespace

BlobTask make_blobs(const BlobSpec& spec, std::uint64_t seed, const ClassVocabulary& vocab) {
    if (spec.informative == 0 || spec.informative > spec.dims) {
        throw ConfigError("blobs: informative columns must be between 1 and dims");
    }
    if (spec.n_train < vocab.size()) throw ConfigError("blobs: need at least one training row per class");
    Normal normal(seed);
    const std::size_t k = vocab.size();

    std::vector<std::size_t> columns(spec.dims);
    std::iota(columns.begin(), columns.end(), 0);
    for (std::size_t i = 0; i < spec.informative; ++i) {
        const auto j = i + normal.bits() % (spec.dims - i);
        std::swap(columns[i], columns[j]);
    }
    columns.resize(spec.informative);
    std::sort(columns.begin(), columns.end());

    std::vector<std::vector<double>> centres(k, std::vector<double>(spec.informative));
    for (auto& c : centres) {
        for (auto& v : c) v = spec.separation * normal();
    }

    std::vector<std::string> names;
    for (std::size_t d = 0; d < spec.dims; ++d) names.push_back(numbered("f", d, 3));

    auto part = [&](const char* prefix, std::size_t n) {
        std::vector<std::string> ids;
        std::vector<ClassIndex> labels;
        Matrix values(n, spec.dims);
        for (std::size_t i = 0; i < n; ++i) {
            const auto cls = static_cast<ClassIndex>(i % k);
            ids.push_back(numbered(prefix, i + 1, 5));
            labels.push_back(cls);
            for (std::size_t d = 0; d < spec.dims; ++d) values(i, d) = normal();
            for (std::size_t j = 0; j < spec.informative; ++j) {
                values(i, columns[j]) = centres[cls][j] + spec.noise * values(i, columns[j]);
            }
        }
        FeatureTable x(ids, names, std::move(values));
        LabelVector y(vocab, std::move(ids), std::move(labels));
        return std::pair{std::move(x), std::move(y)};
    };

    auto [train_x, train_y] = part("train_", spec.n_train);
    auto [test_x, test_y] = part("test_", spec.n_test);
    auto [unl_x, unl_y] = part("unlab_", spec.n_unlabeled);
    return BlobTask{std::move(train_x), std::move(train_y), std::move(test_x), std::move(test_y),
                    std::move(unl_x),   std::move(unl_y),   std::move(columns)};
}

}  // namespace segclf
