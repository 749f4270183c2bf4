#pragma once

#include "segclf/dataset.hpp"
#include "segclf/text_table.hpp"

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

namespace testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("segclf_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

    std::filesystem::path write(const std::string& name, const std::string& content) const {
        segclf::write_file_atomic(path_ / name, content);
        return path_ / name;
    }

private:
    std::filesystem::path path_;
};

inline std::vector<std::string> ids(const std::string& prefix, std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

inline std::vector<std::string> feature_names(std::size_t d) { return ids("f", d); }

/// Table whose rows are given literally.
inline segclf::FeatureTable table(const std::vector<std::vector<double>>& rows, const std::string& prefix = "s") {
    const std::size_t d = rows.empty() ? 0 : rows.front().size();
    segclf::Matrix m(0, d);
    for (const auto& r : rows) m.append_row(r);
    return segclf::FeatureTable(ids(prefix, rows.size()), feature_names(d), std::move(m));
}

inline segclf::LabelVector labels(const segclf::ClassVocabulary& vocab, const std::vector<segclf::ClassIndex>& y,
                                  const std::string& prefix = "s") {
    return segclf::LabelVector(vocab, ids(prefix, y.size()), y);
}

inline segclf::ClassVocabulary vocab(std::size_t k) {
    std::vector<std::string> names;
    for (std::size_t c = 0; c < k; ++c) names.push_back("c" + std::to_string(c));
    return segclf::ClassVocabulary(names);
}

inline segclf::FeatureTable random_table(std::size_t n, std::size_t d, std::mt19937_64& rng,
                                         const std::string& prefix = "s") {
    std::normal_distribution<double> normal;
    segclf::Matrix m(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) m(i, j) = normal(rng);
    }
    return segclf::FeatureTable(ids(prefix, n), feature_names(d), std::move(m));
}

}  // namespace testing
