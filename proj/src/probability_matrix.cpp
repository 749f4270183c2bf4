#include "segclf/probability_matrix.hpp"

#include "segclf/error.hpp"

#include <cmath>
#include <unordered_set>

namespace segclf {

ProbabilityMatrix::ProbabilityMatrix(std::vector<std::string> segment_ids, ClassVocabulary vocab, Matrix probs)
    : segment_ids_(std::move(segment_ids)), vocab_(std::move(vocab)), probs_(std::move(probs)) {
    if (segment_ids_.empty()) probs_ = Matrix(0, vocab_.size());
    if (probs_.rows() != segment_ids_.size() || probs_.cols() != vocab_.size()) {
        throw DataError("probability matrix: shape does not match ids and vocabulary");
    }
    std::unordered_set<std::string_view> seen;
    for (std::size_t r = 0; r < rows(); ++r) {
        validate_segment_id(segment_ids_[r], "probability matrix");
        if (!seen.insert(segment_ids_[r]).second) {
            throw DataError("probability matrix: duplicate segment id '" + segment_ids_[r] + "'");
        }
        double sum = 0.0;
        for (double p : probs_.row(r)) {
            if (!std::isfinite(p)) throw NumericError("probability matrix: non-finite entry for '" + segment_ids_[r] + "'");
            if (p < 0.0) throw DataError("probability matrix: negative entry for '" + segment_ids_[r] + "'");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-6) {
            throw DataError("probability matrix: row '" + segment_ids_[r] + "' sums to " + std::to_string(sum));
        }
    }
}

ProbabilityMatrix ProbabilityMatrix::select_rows(std::span<const std::size_t> indices) const {
    std::vector<std::string> ids;
    Matrix m(0, classes());
    for (auto i : indices) {
        ids.push_back(segment_ids_.at(i));
        m.append_row(probs_.row(i));
    }
    return ProbabilityMatrix(std::move(ids), vocab_, std::move(m));
}

ClassIndex argmax(std::span<const double> row) noexcept {
    ClassIndex best = 0;
    for (std::size_t c = 1; c < row.size(); ++c) {
        if (row[c] > row[best]) best = static_cast<ClassIndex>(c);
    }
    return best;
}

}  // namespace segclf
