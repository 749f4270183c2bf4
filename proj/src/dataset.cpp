#include "segclf/dataset.hpp"

#include "segclf/error.hpp"
#include "segclf/text_table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <unordered_set>

namespace segclf {

namespace {

std::string at_line(const TextTable& table, std::size_t line) {
    return table.source.string() + ":" + std::to_string(line);
}

void require_unique(const std::vector<std::string>& values, std::string_view what) {
    std::unordered_set<std::string_view> seen;
    seen.reserve(values.size());
    for (const auto& v : values) {
        if (!seen.insert(v).second) throw DataError("duplicate " + std::string(what) + " '" + v + "'");
    }
}

std::string provenance_text(std::uint32_t round) {
    return round == 0 ? std::string("gold") : "pseudo-" + std::to_string(round);
}

std::uint32_t parse_provenance(std::string_view cell, const std::string& where) {
    if (cell == "gold") return 0;
    constexpr std::string_view prefix = "pseudo-";
    if (cell.starts_with(prefix)) {
        std::uint32_t round = 0;
        const auto digits = cell.substr(prefix.size());
        const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), round);
        if (ec == std::errc{} && ptr == digits.data() + digits.size() && round >= 1) return round;
    }
    throw DataError(where + ": invalid provenance '" + std::string(cell) + "' (expected gold or pseudo-<round>)");
}

}  // namespace

void validate_segment_id(std::string_view id, std::string_view where) {
    if (id.empty()) throw DataError(std::string(where) + ": empty segment id");
    if (id.find_first_of(",\r\n") != std::string_view::npos) {
        throw DataError(std::string(where) + ": segment id contains a delimiter character");
    }
    if (id.front() == ' ' || id.back() == ' ' || id.front() == '\t' || id.back() == '\t') {
        throw DataError(std::string(where) + ": segment id has surrounding whitespace");
    }
}

// ---------------------------------------------------------------- vocabulary

ClassVocabulary::ClassVocabulary(std::vector<std::string> names) : names_(std::move(names)) {
    if (names_.size() < 2) throw ConfigError("a class vocabulary needs at least two classes");
    for (const auto& n : names_) {
        if (n.empty() || n.find_first_of(",\r\n") != std::string::npos) {
            throw ConfigError("invalid class name '" + n + "'");
        }
    }
    try {
        require_unique(names_, "class name");
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
}

ClassVocabulary ClassVocabulary::topics() {
    return ClassVocabulary({"performance", "interior-features", "quality-aesthetic", "comfort", "handling", "safety",
                            "general-information", "cost", "user-experience", "exterior-features"});
}

ClassVocabulary ClassVocabulary::emotion_levels() { return ClassVocabulary({"0", "1", "2"}); }

std::optional<ClassIndex> ClassVocabulary::index_of(std::string_view name) const {
    const auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) return std::nullopt;
    return static_cast<ClassIndex>(it - names_.begin());
}

// ------------------------------------------------------------- feature table

FeatureTable::FeatureTable(std::vector<std::string> segment_ids, std::vector<std::string> feature_names, Matrix values)
    : segment_ids_(std::move(segment_ids)), feature_names_(std::move(feature_names)), values_(std::move(values)) {
    if (values_.rows() != segment_ids_.size()) throw DataError("feature table: row count does not match segment ids");
    if (!segment_ids_.empty() && values_.cols() != feature_names_.size()) {
        throw DataError("feature table: column count does not match feature names");
    }
    if (segment_ids_.empty()) values_ = Matrix(0, feature_names_.size());
    for (const auto& id : segment_ids_) validate_segment_id(id, "feature table");
    require_unique(segment_ids_, "segment id");
    require_unique(feature_names_, "feature name");
    for (double v : values_.data()) {
        if (!std::isfinite(v)) throw NumericError("feature table: non-finite value");
    }
}

FeatureTable FeatureTable::select_rows(std::span<const std::size_t> indices) const {
    std::vector<std::string> ids;
    ids.reserve(indices.size());
    Matrix m(0, cols());
    for (auto i : indices) {
        ids.push_back(segment_ids_.at(i));
        m.append_row(values_.row(i));
    }
    return FeatureTable(std::move(ids), feature_names_, std::move(m));
}

FeatureTable FeatureTable::select_columns(std::span<const std::size_t> indices) const {
    std::vector<std::string> names;
    names.reserve(indices.size());
    for (auto c : indices) names.push_back(feature_names_.at(c));
    Matrix m(rows(), indices.size());
    for (std::size_t r = 0; r < rows(); ++r) {
        for (std::size_t j = 0; j < indices.size(); ++j) m(r, j) = values_(r, indices[j]);
    }
    return FeatureTable(segment_ids_, std::move(names), std::move(m));
}

FeatureTable FeatureTable::concat_rows(const FeatureTable& other) const {
    if (other.feature_names_ != feature_names_) throw DataError("cannot concatenate tables with different columns");
    auto ids = segment_ids_;
    ids.insert(ids.end(), other.segment_ids_.begin(), other.segment_ids_.end());
    auto data = values_.data();
    data.insert(data.end(), other.values_.data().begin(), other.values_.data().end());
    const auto n = ids.size();
    return FeatureTable(std::move(ids), feature_names_, Matrix(n, cols(), std::move(data)));
}

FeatureTable load_feature_table(const std::filesystem::path& path) {
    const auto text = read_text_table(path);
    if (text.header.empty() || text.header.front() != "segment_id") {
        throw DataError(path.string() + ":1: first header cell must be 'segment_id'");
    }
    std::vector<std::string> names(text.header.begin() + 1, text.header.end());
    const std::size_t d = names.size();
    std::vector<std::string> ids;
    ids.reserve(text.rows.size());
    std::vector<double> data;
    data.reserve(text.rows.size() * d);
    std::unordered_set<std::string> seen;
    for (const auto& row : text.rows) {
        const auto where = at_line(text, row.line);
        if (row.cells.size() != d + 1) {
            throw DataError(where + ": expected " + std::to_string(d + 1) + " cells, found " +
                            std::to_string(row.cells.size()));
        }
        validate_segment_id(row.cells[0], where);
        if (!seen.insert(row.cells[0]).second) throw DataError(where + ": duplicate segment id '" + row.cells[0] + "'");
        ids.push_back(row.cells[0]);
        for (std::size_t j = 1; j <= d; ++j) data.push_back(parse_real(row.cells[j], where));
    }
    const auto n = ids.size();
    try {
        return FeatureTable(std::move(ids), std::move(names), Matrix(n, d, std::move(data)));
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::string feature_table_to_text(const FeatureTable& table) {
    std::string out = "segment_id";
    for (const auto& n : table.feature_names()) out += "," + n;
    out += '\n';
    for (std::size_t r = 0; r < table.rows(); ++r) {
        out += table.segment_ids()[r];
        for (double v : table.row(r)) {
            out += ',';
            out += format_real(v);
        }
        out += '\n';
    }
    return out;
}

void write_feature_table(const FeatureTable& table, const std::filesystem::path& path) {
    write_file_atomic(path, feature_table_to_text(table));
}

// -------------------------------------------------------------------- labels

LabelVector::LabelVector(ClassVocabulary vocab, std::vector<std::string> segment_ids, std::vector<ClassIndex> labels,
                         std::vector<std::uint32_t> origin_rounds)
    : vocab_(std::move(vocab)),
      segment_ids_(std::move(segment_ids)),
      labels_(std::move(labels)),
      origin_rounds_(std::move(origin_rounds)) {
    if (labels_.size() != segment_ids_.size()) throw DataError("label vector: size does not match segment ids");
    if (!origin_rounds_.empty() && origin_rounds_.size() != labels_.size()) {
        throw DataError("label vector: provenance size does not match labels");
    }
    for (const auto& id : segment_ids_) validate_segment_id(id, "label vector");
    require_unique(segment_ids_, "segment id");
    for (auto l : labels_) {
        if (l >= vocab_.size()) throw DataError("label vector: class index out of range");
    }
}

LabelVector LabelVector::select(std::span<const std::size_t> indices) const {
    std::vector<std::string> ids;
    std::vector<ClassIndex> labels;
    std::vector<std::uint32_t> rounds;
    for (auto i : indices) {
        ids.push_back(segment_ids_.at(i));
        labels.push_back(labels_.at(i));
        if (has_provenance()) rounds.push_back(origin_rounds_.at(i));
    }
    return LabelVector(vocab_, std::move(ids), std::move(labels), std::move(rounds));
}

std::vector<std::size_t> LabelVector::class_counts() const {
    std::vector<std::size_t> counts(vocab_.size(), 0);
    for (auto l : labels_) ++counts[l];
    return counts;
}

LabelVector load_labels(const std::filesystem::path& path, const ClassVocabulary& vocab) {
    const auto text = read_text_table(path);
    const bool with_provenance = text.header.size() == 3 && text.header[2] == "provenance";
    if (text.header.size() < 2 || text.header[0] != "segment_id" || text.header[1] != "label" ||
        (text.header.size() == 3 && !with_provenance) || text.header.size() > 3) {
        throw DataError(path.string() + ":1: expected header 'segment_id,label[,provenance]'");
    }
    std::vector<std::string> ids;
    std::vector<ClassIndex> labels;
    std::vector<std::uint32_t> rounds;
    std::unordered_set<std::string> seen;
    for (const auto& row : text.rows) {
        const auto where = at_line(text, row.line);
        if (row.cells.size() != text.header.size()) {
            throw DataError(where + ": expected " + std::to_string(text.header.size()) + " cells, found " +
                            std::to_string(row.cells.size()));
        }
        validate_segment_id(row.cells[0], where);
        if (!seen.insert(row.cells[0]).second) throw DataError(where + ": duplicate segment id '" + row.cells[0] + "'");
        const auto index = vocab.index_of(row.cells[1]);
        if (!index) throw DataError(where + ": unknown class '" + row.cells[1] + "'");
        ids.push_back(row.cells[0]);
        labels.push_back(*index);
        if (with_provenance) rounds.push_back(parse_provenance(row.cells[2], where));
    }
    return LabelVector(vocab, std::move(ids), std::move(labels), std::move(rounds));
}

std::string labels_to_text(const LabelVector& labels) {
    std::string out = labels.has_provenance() ? "segment_id,label,provenance\n" : "segment_id,label\n";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out += labels.segment_ids()[i];
        out += ',';
        out += labels.vocab().name(labels.labels()[i]);
        if (labels.has_provenance()) {
            out += ',';
            out += provenance_text(labels.origin_rounds()[i]);
        }
        out += '\n';
    }
    return out;
}

void write_labels(const LabelVector& labels, const std::filesystem::path& path) {
    write_file_atomic(path, labels_to_text(labels));
}

// ----------------------------------------------------------------- alignment

Alignment align(const FeatureTable& features, const LabelVector& labels) {
    std::unordered_map<std::string_view, std::size_t> label_pos;
    label_pos.reserve(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) label_pos.emplace(labels.segment_ids()[i], i);

    std::vector<std::size_t> feature_rows;
    std::vector<std::size_t> label_rows;
    for (std::size_t r = 0; r < features.rows(); ++r) {
        const auto it = label_pos.find(features.segment_ids()[r]);
        if (it == label_pos.end()) continue;
        feature_rows.push_back(r);
        label_rows.push_back(it->second);
    }
    if (feature_rows.empty()) throw DataError("alignment: feature table and labels share no segment ids");
    Alignment out{features.select_rows(feature_rows), labels.select(label_rows), 0, 0};
    out.dropped_features = features.rows() - feature_rows.size();
    out.dropped_labels = labels.size() - label_rows.size();
    return out;
}

// -------------------------------------------------------------- standardizer

Standardizer::Standardizer(std::vector<double> means, std::vector<double> std_devs)
    : means_(std::move(means)), std_devs_(std::move(std_devs)) {
    if (means_.size() != std_devs_.size()) throw DataError("standardizer: means and std_devs differ in length");
    for (std::size_t j = 0; j < means_.size(); ++j) {
        if (!std::isfinite(means_[j]) || !std::isfinite(std_devs_[j]) || std_devs_[j] <= 0.0) {
            throw NumericError("standardizer: invalid parameters for column " + std::to_string(j));
        }
    }
}

FeatureTable Standardizer::apply(const FeatureTable& table) const {
    if (table.cols() != dims()) {
        throw DataError("standardizer fitted on " + std::to_string(dims()) + " columns applied to " +
                        std::to_string(table.cols()));
    }
    Matrix m = table.values();
    for (std::size_t r = 0; r < m.rows(); ++r) apply_in_place(m.row(r));
    return FeatureTable(table.segment_ids(), table.feature_names(), std::move(m));
}

void Standardizer::apply_in_place(std::span<double> row) const {
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = (row[j] - means_[j]) / std_devs_[j];
}

Standardizer fit_standardizer(const FeatureTable& train) {
    if (train.rows() == 0) throw DataError("cannot fit a standardizer on an empty table");
    const auto n = static_cast<double>(train.rows());
    const auto d = train.cols();
    std::vector<double> means(d, 0.0);
    std::vector<double> stds(d, 0.0);
    for (std::size_t r = 0; r < train.rows(); ++r) {
        const auto row = train.row(r);
        for (std::size_t j = 0; j < d; ++j) means[j] += row[j];
    }
    for (auto& m : means) m /= n;
    for (std::size_t r = 0; r < train.rows(); ++r) {
        const auto row = train.row(r);
        for (std::size_t j = 0; j < d; ++j) {
            const double dev = row[j] - means[j];
            stds[j] += dev * dev;
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        stds[j] = std::sqrt(stds[j] / n);
        if (!std::isfinite(stds[j]) || !std::isfinite(means[j])) {
            throw NumericError("standardizer: column '" + train.feature_names()[j] + "' overflows double precision");
        }
        if (stds[j] == 0.0) stds[j] = 1.0;
    }
    return Standardizer(std::move(means), std::move(stds));
}

FeatureTable apply_standardizer(const Standardizer& standardizer, const FeatureTable& table) {
    return standardizer.apply(table);
}

// ---------------------------------------------------------------- partitions

std::string_view to_string(Partition partition) {
    switch (partition) {
        case Partition::train: return "train";
        case Partition::devel: return "devel";
        case Partition::test: return "test";
    }
    return "unknown";
}

std::unordered_map<std::string, Partition> load_partitions(const std::filesystem::path& path) {
    const auto text = read_text_table(path);
    if (text.header.size() != 2 || text.header[0] != "segment_id" || text.header[1] != "partition") {
        throw DataError(path.string() + ":1: expected header 'segment_id,partition'");
    }
    std::unordered_map<std::string, Partition> out;
    for (const auto& row : text.rows) {
        const auto where = at_line(text, row.line);
        if (row.cells.size() != 2) throw DataError(where + ": expected 2 cells");
        validate_segment_id(row.cells[0], where);
        Partition p;
        if (row.cells[1] == "train") p = Partition::train;
        else if (row.cells[1] == "devel") p = Partition::devel;
        else if (row.cells[1] == "test") p = Partition::test;
        else throw DataError(where + ": unknown partition '" + row.cells[1] + "'");
        if (!out.emplace(row.cells[0], p).second) throw DataError(where + ": duplicate segment id '" + row.cells[0] + "'");
    }
    return out;
}

FeatureTable select_partition(const FeatureTable& table, const std::unordered_map<std::string, Partition>& map,
                              Partition partition) {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < table.rows(); ++r) {
        const auto it = map.find(table.segment_ids()[r]);
        if (it != map.end() && it->second == partition) rows.push_back(r);
    }
    return table.select_rows(rows);
}

}  // namespace segclf
