#pragma once

#include "segclf/dataset.hpp"
#include "segclf/matrix.hpp"

#include <string>
#include <vector>

namespace segclf {

/// Per-segment class distributions. Rows are non-negative and sum to 1 within 1e-6.
class ProbabilityMatrix {
public:
    ProbabilityMatrix(std::vector<std::string> segment_ids, ClassVocabulary vocab, Matrix probs);

    std::size_t rows() const noexcept { return segment_ids_.size(); }
    std::size_t classes() const noexcept { return vocab_.size(); }
    const std::vector<std::string>& segment_ids() const noexcept { return segment_ids_; }
    const ClassVocabulary& vocab() const noexcept { return vocab_; }
    const Matrix& probs() const noexcept { return probs_; }
    std::span<const double> row(std::size_t r) const noexcept { return probs_.row(r); }

    ProbabilityMatrix select_rows(std::span<const std::size_t> indices) const;

    friend bool operator==(const ProbabilityMatrix&, const ProbabilityMatrix&) = default;

private:
    std::vector<std::string> segment_ids_;
    ClassVocabulary vocab_;
    Matrix probs_;
};

/// Index of the largest entry; ties go to the lowest index.
ClassIndex argmax(std::span<const double> row) noexcept;

}  // namespace segclf
