#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "segclf/error.hpp"
#include "segclf/forest.hpp"
#include "segclf/knn.hpp"
#include "segclf/svm.hpp"

#include "../oracles/smo_oracle.hpp"
#include "../support.hpp"

#include <cmath>
#include <numeric>

using namespace segclf;

namespace {

svm::BinaryMachine constant_machine(ClassIndex negative, ClassIndex positive, double bias) {
    svm::BinaryMachine m;
    m.negative = negative;
    m.positive = positive;
    m.bias = bias;
    m.support_vectors = Matrix(0, 1);
    return m;
}

svm::SvmModel constant_model(std::size_t k, const std::vector<double>& biases) {
    std::vector<svm::BinaryMachine> machines;
    std::size_t t = 0;
    for (ClassIndex p = 0; p < k; ++p) {
        for (ClassIndex q = p + 1; q < k; ++q) machines.push_back(constant_machine(p, q, biases[t++]));
    }
    return svm::SvmModel(testing::vocab(k), 1, 1.0, svm::SvmConfig{}, std::move(machines));
}

ClassIndex predict_one(const svm::SvmModel& m) {
    return svm::svm_predict(m, testing::table({{0.0}})).labels()[0];
}

}  // namespace

TEST_CASE("two symmetric points have the closed-form dual solution") {
    const auto x = testing::table({{-1.0}, {1.0}});
    const auto y = testing::labels(testing::vocab(2), {0, 1});
    svm::SvmConfig cfg;
    cfg.c = 10.0;
    cfg.gamma = svm::Gamma::fixed(1.0);
    cfg.tolerance = 1e-10;
    const auto fit = svm::svm_fit(x, y, cfg);
    const double expected = 1.0 / (1.0 - std::exp(-4.0));
    REQUIRE(fit.diagnostics.size() == 1);
    const auto& sol = fit.diagnostics[0].solution;
    CHECK(sol.alpha[0] == doctest::Approx(expected).epsilon(1e-9));
    CHECK(sol.alpha[1] == doctest::Approx(expected).epsilon(1e-9));
    CHECK(std::abs(sol.bias) < 1e-9);
    CHECK(expected == doctest::Approx(1.0187).epsilon(1e-4));

    oracle::Problem p{{{-1.0}, {1.0}}, {-1, 1}, 10.0, 1.0};
    const auto brute = oracle::solve(p);
    CHECK(brute.alpha[0] == doctest::Approx(expected).epsilon(1e-7));
    CHECK(sol.objective == doctest::Approx(brute.objective).epsilon(1e-9));

    const auto& m = fit.model.machines()[0];
    CHECK(std::abs(svm::svm_decision(m, std::vector<double>{0.0})) < 1e-9);
    CHECK(svm::svm_decision(m, std::vector<double>{1.0}) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(svm::svm_decision(m, std::vector<double>{-1.0}) == doctest::Approx(-1.0).epsilon(1e-3));

}

TEST_CASE("separable pairs are fitted exactly with a large C") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 20; ++trial) {
        const auto x = testing::table({{normal(rng), normal(rng)}, {normal(rng) + 3.0, normal(rng)}});
        svm::SvmConfig cfg;
        cfg.c = 100.0;
        cfg.gamma = svm::Gamma::fixed(0.5);
        const auto model = svm::svm_train(x, testing::labels(testing::vocab(2), {0, 1}), cfg);
        CHECK(svm::svm_predict(model, x).labels() == std::vector<ClassIndex>{0, 1});
    }
}

TEST_CASE("machine without support vectors returns its bias") {
    const auto m = constant_machine(0, 1, -0.25);
    CHECK(svm::svm_decision(m, std::vector<double>{3.0}) == -0.25);
}

TEST_CASE("automatic gamma is one over the feature count") {
    std::mt19937_64 rng(2);
    const auto x = testing::random_table(30, 7, rng);
    std::vector<ClassIndex> y(30);
    for (std::size_t i = 0; i < 30; ++i) y[i] = static_cast<ClassIndex>(i % 3);
    const auto model = svm::svm_train(x, testing::labels(testing::vocab(3), y), svm::SvmConfig{});
    CHECK(model.config().c == 0.0538);
    CHECK(model.gamma() == 1.0 / 7.0);
    CHECK(model.machines().size() == 3);
}

TEST_CASE("one-vs-one voting") {
    SUBCASE("two classes follow the sign of the decision") {
        CHECK(predict_one(constant_model(2, {0.3})) == 1);
        CHECK(predict_one(constant_model(2, {-0.3})) == 0);
    }
    SUBCASE("votes (2,1,0)") { CHECK(predict_one(constant_model(3, {-1.0, -1.0, -1.0})) == 0); }
    SUBCASE("three-way vote tie goes to the larger summed decision") {
        // pairs (0,1), (0,2), (1,2); positive decisions favour the higher class
        CHECK(predict_one(constant_model(3, {-2.0, 1.0, -0.5})) == 0);
        CHECK(predict_one(constant_model(3, {-0.5, 3.0, -0.5})) == 2);
    }
    SUBCASE("complete tie goes to the lowest class") {
        CHECK(predict_one(constant_model(3, {-1.0, 1.0, -1.0})) == 0);
        CHECK(predict_one(constant_model(3, {0.0, 0.0, 0.0})) == 0);
    }
}

TEST_CASE("svm scores") {
    SUBCASE("large margin saturates toward the favoured class") {
        const auto p = svm::svm_scores(constant_model(2, {50.0}), testing::table({{0.0}}));
        CHECK(p.row(0)[0] < 1e-12);
        CHECK(p.row(0)[1] == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("all-zero decisions give the uniform distribution") {
        const auto p = svm::svm_scores(constant_model(3, {0.0, 0.0, 0.0}), testing::table({{0.0}}));
        for (int c = 0; c < 3; ++c) CHECK(p.row(0)[c] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }
    SUBCASE("rows sum to one and agree with the prediction") {
        std::mt19937_64 rng(17);
        const auto x = testing::random_table(60, 3, rng);
        std::vector<ClassIndex> y(60);
        for (std::size_t i = 0; i < 60; ++i) y[i] = static_cast<ClassIndex>(i % 4);
        svm::SvmConfig cfg;
        cfg.c = 1.0;
        const auto model = svm::svm_train(x, testing::labels(testing::vocab(4), y), cfg);
        const auto q = testing::random_table(200, 3, rng, "q");
        const auto p = svm::svm_scores(model, q);
        const auto pred = svm::svm_predict(model, q);
        for (std::size_t r = 0; r < q.rows(); ++r) {
            const auto row = p.row(r);
            CHECK(std::accumulate(row.begin(), row.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
            CHECK(argmax(row) == pred.labels()[r]);
        }
    }
}

TEST_CASE("solver respects the box and equality constraints and passes the KKT audit") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 5 + rng() % 40;
        const auto x = testing::random_table(n, 2 + rng() % 4, rng);
        std::vector<ClassIndex> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<ClassIndex>(i < 2 ? i : rng() % 2);
        svm::SvmConfig cfg;
        cfg.c = std::array{0.0538, 0.5, 5.0, 50.0}[trial % 4];
        cfg.gamma = trial % 2 ? svm::Gamma::scale() : svm::Gamma::automatic();
        const auto fit = svm::svm_fit(x, testing::labels(testing::vocab(2), y), cfg);
        for (const auto& d : fit.diagnostics) {
            double balance = 0.0;
            for (std::size_t i = 0; i < d.y.size(); ++i) {
                CHECK(d.solution.alpha[i] >= 0.0);
                CHECK(d.solution.alpha[i] <= cfg.c);
                balance += d.solution.alpha[i] * d.y[i];
            }
            CHECK(std::abs(balance) <= 1e-6 * cfg.c * static_cast<double>(d.y.size()));
            CHECK(d.solution.converged);
            Matrix pts(0, x.cols());
            for (auto r : d.rows) pts.append_row(x.row(r));
            const auto gram = svm::rbf_gram(pts, fit.model.gamma());
            const auto audit = svm::audit_kkt(gram, d.y, d.solution.alpha, d.solution.bias, cfg.c, 1e-3);
            CHECK_MESSAGE(audit.passed(), "worst KKT miss " << audit.worst);
            CHECK(svm::dual_objective(gram, d.y, d.solution.alpha) == doctest::Approx(d.solution.objective));
        }
    }
}

TEST_CASE("solver matches brute force on a few tiny problems") {
    std::mt19937_64 rng(1234);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 8; ++trial) {
        oracle::Problem p;
        const std::size_t n = 3 + trial % 3;
        for (std::size_t i = 0; i < n; ++i) {
            p.x.push_back({normal(rng), normal(rng)});
            p.y.push_back(i == 0 ? 1 : i == 1 ? -1 : (rng() % 2 ? 1 : -1));
        }
        p.c = std::array{0.1, 1.0, 10.0}[trial % 3];
        p.gamma = 0.5;
        Matrix pts(0, 2);
        for (const auto& r : p.x) pts.append_row(r);
        const auto sol = svm::solve_dual(svm::rbf_gram(pts, p.gamma), p.y, p.c, 1e-9, 1'000'000);
        const auto brute = oracle::solve(p);
        CHECK(std::abs(sol.objective - brute.objective) < 1e-6);
    }
}

TEST_CASE("svm rejects bad configuration and dimension mismatches") {
    svm::SvmConfig cfg;
    cfg.c = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    const auto x = testing::table({{-1.0}, {1.0}});
    const auto model = svm::svm_train(x, testing::labels(testing::vocab(2), {0, 1}), svm::SvmConfig{});
    CHECK_THROWS_AS(svm::svm_predict(model, testing::table({{1.0, 2.0}})), DataError);
    CHECK_THROWS_AS(svm::svm_train(x, testing::labels(testing::vocab(3), {0, 1}), svm::SvmConfig{}), DataError);
}

TEST_CASE("forest fits a single-class training set") {
    const auto x = testing::table({{1.0}, {2.0}, {3.0}});
    const auto y = testing::labels(testing::vocab(2), {1, 1, 1});
    forest::ForestConfig cfg;
    cfg.n_trees = 5;
    const auto model = forest::forest_train(x, y, cfg);
    for (const auto& t : model.trees()) {
        for (const auto& n : t.nodes) {
            if (n.is_leaf()) CHECK(n.class_counts == std::vector<std::uint32_t>{0, 3});
        }
    }
    CHECK(forest::forest_predict(model, x).labels() == y.labels());
}

TEST_CASE("forest finds a perfect one-dimensional split") {
    std::vector<std::vector<double>> rows;
    std::vector<ClassIndex> y;
    for (int v = -10; v < 10; ++v) {
        rows.push_back({static_cast<double>(v) + 0.5});
        y.push_back(v < 0 ? 0 : 1);
    }
    const auto x = testing::table(rows);
    forest::ForestConfig cfg;
    cfg.n_trees = 25;
    cfg.features_per_split = forest::FeaturesPerSplit{forest::FeaturesPerSplit::Mode::all, 0};
    cfg.seed = 9;
    const auto model = forest::forest_train(x, testing::labels(testing::vocab(2), y), cfg);
    for (const auto& t : model.trees()) CHECK(t.depth() == 1);
    CHECK(forest::forest_predict(model, x).labels() == y);
}

TEST_CASE("forest training is deterministic in the seed") {
    std::mt19937_64 rng(77);
    const auto x = testing::random_table(80, 6, rng);
    std::vector<ClassIndex> y(80);
    for (std::size_t i = 0; i < 80; ++i) y[i] = static_cast<ClassIndex>((x.values()(i, 0) > 0) + (x.values()(i, 1) > 0.5));
    const auto labels = testing::labels(testing::vocab(3), y);
    forest::ForestConfig cfg;
    cfg.n_trees = 10;
    cfg.seed = 5;
    const auto a = forest::forest_train(x, labels, cfg);
    const auto b = forest::forest_train(x, labels, cfg);
    CHECK(a == b);
    cfg.seed = 6;
    CHECK_FALSE(forest::forest_train(x, labels, cfg) == a);
}

TEST_CASE("forest depth, leaf and score invariants") {
    std::mt19937_64 rng(78);
    const auto x = testing::random_table(150, 5, rng);
    std::vector<ClassIndex> y(150);
    for (std::size_t i = 0; i < 150; ++i) y[i] = static_cast<ClassIndex>(rng() % 3);
    forest::ForestConfig cfg;
    cfg.n_trees = 20;
    CHECK(cfg.max_depth == 7.4008);
    CHECK(cfg.effective_max_depth() == 7);
    const auto model = forest::forest_train(x, testing::labels(testing::vocab(3), y), cfg);
    for (const auto& t : model.trees()) {
        CHECK(t.depth() <= 7);
        for (const auto& n : t.nodes) {
            if (!n.is_leaf()) continue;
            CHECK(std::accumulate(n.class_counts.begin(), n.class_counts.end(), 0u) > 0);
        }
    }
    const auto q = testing::random_table(100, 5, rng, "q");
    const auto p = forest::forest_scores(model, q);
    for (std::size_t r = 0; r < q.rows(); ++r) {
        const auto row = p.row(r);
        CHECK(std::accumulate(row.begin(), row.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
    }
    forest::ForestConfig bad;
    bad.max_depth = 0.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("forest voting rules") {
    auto stump = [](ClassIndex cls) {
        forest::Tree t;
        forest::Node leaf;
        leaf.class_counts = {0, 0};
        leaf.class_counts[cls] = 4;
        t.nodes.push_back(leaf);
        return t;
    };
    forest::ForestConfig cfg;
    cfg.n_trees = 1;
    const forest::ForestModel single(testing::vocab(2), 1, cfg, {stump(1)});
    CHECK(forest::forest_predict(single, testing::table({{0.0}})).labels()[0] == 1);

    cfg.n_trees = 2;
    const forest::ForestModel tied(testing::vocab(2), 1, cfg, {stump(1), stump(0)});
    CHECK(forest::forest_predict(tied, testing::table({{0.0}})).labels()[0] == 0);
}

TEST_CASE("knn examples") {
    const auto vocab = testing::vocab(2);
    const auto x = testing::table({{0.0}, {1.0}, {2.0}, {3.0}, {4.0}, {5.0}, {6.0}, {7.0}});
    const auto y = testing::labels(vocab, {0, 1, 0, 1, 1, 0, 1, 1});

    const auto k1 = knn::knn_train(x, y, knn::KnnConfig{1});
    CHECK(knn::knn_predict(k1, testing::table({{3.0}})).labels()[0] == 1);

    const auto all = knn::knn_train(x, y, knn::KnnConfig{8});
    CHECK(knn::knn_predict(all, testing::table({{-100.0}, {0.0}, {100.0}})).labels() ==
          std::vector<ClassIndex>{1, 1, 1});

    const auto two = knn::knn_train(testing::table({{0.0}, {2.0}}), testing::labels(vocab, {1, 0}), knn::KnnConfig{2});
    CHECK(knn::knn_predict(two, testing::table({{1.0}})).labels()[0] == 0);
    const auto p = knn::knn_scores(two, testing::table({{1.0}}));
    CHECK(p.row(0)[0] == 0.5);

    CHECK_THROWS_AS(knn::knn_train(x, y, knn::KnnConfig{9}), ConfigError);
}

TEST_CASE("knn equal distances favour the lower training row") {
    const auto x = testing::table({{-1.0}, {1.0}, {5.0}});
    const auto m = knn::knn_train(x, testing::labels(testing::vocab(2), {1, 0, 0}), knn::KnnConfig{1});
    CHECK(m.neighbors(std::vector<double>{0.0}) == std::vector<std::size_t>{0});
    CHECK(knn::knn_predict(m, testing::table({{0.0}})).labels()[0] == 1);
}

TEST_CASE("forest fits an axis-aligned depth-two rule exactly") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> side(0.5, 3.0);
    std::vector<std::vector<double>> rows;
    std::vector<ClassIndex> y;
    for (int i = 0; i < 120; ++i) {
        const double a = (rng() % 2 ? 1.0 : -1.0) * side(rng);
        const double b = (rng() % 2 ? 1.0 : -1.0) * side(rng);
        rows.push_back({a, b, side(rng)});
        y.push_back(a < 0 ? 0 : (b < 0 ? 1 : 2));
    }
    const auto x = testing::table(rows);
    forest::ForestConfig cfg;
    cfg.n_trees = 30;
    cfg.max_depth = 2;
    cfg.features_per_split = forest::FeaturesPerSplit{forest::FeaturesPerSplit::Mode::all, 0};
    const auto model = forest::forest_train(x, testing::labels(testing::vocab(3), y), cfg);
    CHECK(forest::forest_predict(model, x).labels() == y);
}

TEST_CASE("knn with one neighbour reproduces distinct training points") {
    std::mt19937_64 rng(13);
    const auto x = testing::random_table(50, 3, rng);
    std::vector<ClassIndex> y(50);
    for (auto& v : y) v = static_cast<ClassIndex>(rng() % 4);
    const auto labels = testing::labels(testing::vocab(4), y);
    CHECK(knn::knn_predict(knn::knn_train(x, labels, knn::KnnConfig{1}), x).labels() == y);
}

TEST_CASE("predictions do not depend on training row order") {
    std::mt19937_64 rng(14);
    const auto x = testing::random_table(90, 4, rng);
    std::vector<ClassIndex> y(90);
    for (std::size_t i = 0; i < 90; ++i) {
        y[i] = static_cast<ClassIndex>(x.values()(i, 0) > 0.4 ? 0 : (x.values()(i, 1) > 0 ? 1 : 2));
    }
    const auto labels = testing::labels(testing::vocab(3), y);
    std::vector<std::size_t> perm(90);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto px = x.select_rows(perm);
    const auto py = labels.select(perm);
    const auto q = testing::random_table(200, 4, rng, "q");

    svm::SvmConfig s;
    s.c = 2.0;
    s.tolerance = 1e-6;
    CHECK(svm::svm_predict(svm::svm_train(x, labels, s), q) == svm::svm_predict(svm::svm_train(px, py, s), q));

    const knn::KnnConfig k{5};
    CHECK(knn::knn_predict(knn::knn_train(x, labels, k), q) == knn::knn_predict(knn::knn_train(px, py, k), q));
}
