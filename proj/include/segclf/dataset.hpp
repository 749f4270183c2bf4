#pragma once

#include "segclf/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace segclf {

using ClassIndex = std::uint32_t;

/// Throws DataError unless `id` is a usable segment id (non-empty, no comma,
/// no line break, no surrounding whitespace).
void validate_segment_id(std::string_view id, std::string_view where);

/// Ordered list of distinct class names; a class index is a position in the list.
class ClassVocabulary {
public:
    explicit ClassVocabulary(std::vector<std::string> names);

    /// The ten in-car review topics.
    static ClassVocabulary topics();
    /// Three discretised levels used for both arousal and valence.
    static ClassVocabulary emotion_levels();

    std::size_t size() const noexcept { return names_.size(); }
    const std::string& name(ClassIndex index) const { return names_.at(index); }
    const std::vector<std::string>& names() const noexcept { return names_; }
    std::optional<ClassIndex> index_of(std::string_view name) const;

    friend bool operator==(const ClassVocabulary&, const ClassVocabulary&) = default;

private:
    std::vector<std::string> names_;
};

/// Per-segment feature matrix with named columns. Every value is finite.
class FeatureTable {
public:
    FeatureTable() = default;
    FeatureTable(std::vector<std::string> segment_ids, std::vector<std::string> feature_names, Matrix values);

    std::size_t rows() const noexcept { return segment_ids_.size(); }
    std::size_t cols() const noexcept { return feature_names_.size(); }
    const std::vector<std::string>& segment_ids() const noexcept { return segment_ids_; }
    const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
    const Matrix& values() const noexcept { return values_; }
    std::span<const double> row(std::size_t r) const noexcept { return values_.row(r); }

    FeatureTable select_rows(std::span<const std::size_t> indices) const;
    FeatureTable select_columns(std::span<const std::size_t> indices) const;
    /// Rows of `this` followed by the rows of `other`; columns must match by name and order.
    FeatureTable concat_rows(const FeatureTable& other) const;

    friend bool operator==(const FeatureTable&, const FeatureTable&) = default;

private:
    std::vector<std::string> segment_ids_;
    std::vector<std::string> feature_names_;
    Matrix values_;
};

/// Class assignment per segment. `origin_rounds` is either empty (no provenance
/// tracked) or holds one entry per segment: 0 for reference labels, r >= 1 for a
/// label added by pseudo-labelling round r.
class LabelVector {
public:
    explicit LabelVector(ClassVocabulary vocab) : vocab_(std::move(vocab)) {}
    LabelVector(ClassVocabulary vocab, std::vector<std::string> segment_ids, std::vector<ClassIndex> labels,
                std::vector<std::uint32_t> origin_rounds = {});

    std::size_t size() const noexcept { return labels_.size(); }
    const ClassVocabulary& vocab() const noexcept { return vocab_; }
    const std::vector<std::string>& segment_ids() const noexcept { return segment_ids_; }
    const std::vector<ClassIndex>& labels() const noexcept { return labels_; }
    const std::vector<std::uint32_t>& origin_rounds() const noexcept { return origin_rounds_; }
    bool has_provenance() const noexcept { return !origin_rounds_.empty(); }

    LabelVector select(std::span<const std::size_t> indices) const;
    /// Per-class sample counts, length K.
    std::vector<std::size_t> class_counts() const;

    friend bool operator==(const LabelVector&, const LabelVector&) = default;

private:
    ClassVocabulary vocab_;
    std::vector<std::string> segment_ids_;
    std::vector<ClassIndex> labels_;
    std::vector<std::uint32_t> origin_rounds_;
};

FeatureTable load_feature_table(const std::filesystem::path& path);
std::string feature_table_to_text(const FeatureTable& table);
void write_feature_table(const FeatureTable& table, const std::filesystem::path& path);

/// Reads `segment_id,label[,provenance]`; provenance cells are `gold` or `pseudo-<round>`.
LabelVector load_labels(const std::filesystem::path& path, const ClassVocabulary& vocab);
std::string labels_to_text(const LabelVector& labels);
void write_labels(const LabelVector& labels, const std::filesystem::path& path);

struct Alignment {
    FeatureTable features;
    LabelVector labels;
    std::size_t dropped_features = 0;  ///< feature rows without a label
    std::size_t dropped_labels = 0;    ///< labels without a feature row
};

/// Restricts both inputs to their common segment ids, in the feature table's order.
Alignment align(const FeatureTable& features, const LabelVector& labels);

/// Per-column z-scoring fitted on a training partition. Columns with zero
/// variance keep std_dev = 1.
class Standardizer {
public:
    Standardizer(std::vector<double> means, std::vector<double> std_devs);

    std::size_t dims() const noexcept { return means_.size(); }
    const std::vector<double>& means() const noexcept { return means_; }
    const std::vector<double>& std_devs() const noexcept { return std_devs_; }

    FeatureTable apply(const FeatureTable& table) const;
    void apply_in_place(std::span<double> row) const;

    friend bool operator==(const Standardizer&, const Standardizer&) = default;

private:
    std::vector<double> means_;
    std::vector<double> std_devs_;
};

Standardizer fit_standardizer(const FeatureTable& train);
FeatureTable apply_standardizer(const Standardizer& standardizer, const FeatureTable& table);

enum class Partition { train, devel, test };

std::string_view to_string(Partition partition);
std::unordered_map<std::string, Partition> load_partitions(const std::filesystem::path& path);
/// Rows of `table` assigned to `partition`, order preserved. Rows missing from the map are dropped.
FeatureTable select_partition(const FeatureTable& table, const std::unordered_map<std::string, Partition>& map,
                              Partition partition);

}  // namespace segclf
