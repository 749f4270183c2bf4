#include "segclf/ensemble.hpp"

#include "segclf/error.hpp"
#include "segclf/text_table.hpp"

#include <cmath>

namespace segclf::ensemble {

namespace {

constexpr double kLoadSumTolerance = 1e-3;
// Rows this close to one are already distributions; rescaling them would only perturb the last bits.
constexpr double kKeepSumTolerance = 1e-12;

}  // namespace

ProbabilityMatrix load_probabilities(const std::filesystem::path& path, const ClassVocabulary& vocab) {
    const auto text = read_text_table(path);
    std::vector<std::string> expected{"segment_id"};
    expected.insert(expected.end(), vocab.names().begin(), vocab.names().end());
    if (text.header != expected) {
        throw DataError(path.string() + ":1: header '" + join(text.header, ",") + "' does not match vocabulary '" +
                        join(expected, ",") + "'");
    }
    const auto k = vocab.size();
    std::vector<std::string> ids;
    Matrix probs(0, k);
    std::vector<double> row(k);
    for (const auto& r : text.rows) {
        const auto where = path.string() + ":" + std::to_string(r.line);
        if (r.cells.size() != k + 1) {
            throw DataError(where + ": expected " + std::to_string(k + 1) + " cells, found " +
                            std::to_string(r.cells.size()));
        }
        validate_segment_id(r.cells[0], where);
        double sum = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            row[c] = parse_real(r.cells[c + 1], where);
            if (row[c] < 0.0) throw DataError(where + ": negative probability");
            sum += row[c];
        }
        if (std::abs(sum - 1.0) > kLoadSumTolerance) {
            throw DataError(where + ": probabilities sum to " + format_real(sum));
        }
        if (std::abs(sum - 1.0) > kKeepSumTolerance) {
            for (auto& v : row) v /= sum;
        }
        ids.push_back(r.cells[0]);
        probs.append_row(row);
    }
    try {
        return ProbabilityMatrix(std::move(ids), vocab, std::move(probs));
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::string probabilities_to_text(const ProbabilityMatrix& p) {
    std::string out = "segment_id";
    for (const auto& n : p.vocab().names()) out += "," + n;
    out += '\n';
    for (std::size_t r = 0; r < p.rows(); ++r) {
        out += p.segment_ids()[r];
        for (double v : p.row(r)) {
            out += ',';
            out += format_real(v);
        }
        out += '\n';
    }
    return out;
}

void write_probabilities(const ProbabilityMatrix& p, const std::filesystem::path& path) {
    write_file_atomic(path, probabilities_to_text(p));
}

ProbabilityMatrix soft_vote(const std::vector<ProbabilityMatrix>& inputs, const EnsembleConfig& config) {
    if (inputs.empty()) throw ConfigError("ensemble: no input matrices");
    if (config.weights.size() != inputs.size()) {
        throw ConfigError("ensemble: " + std::to_string(config.weights.size()) + " weights for " +
                          std::to_string(inputs.size()) + " inputs");
    }
    for (double w : config.weights) {
        if (!(w > 0.0) || !std::isfinite(w)) throw ConfigError("ensemble: weights must be positive");
    }
    const auto& first = inputs.front();
    for (std::size_t m = 1; m < inputs.size(); ++m) {
        if (!(inputs[m].vocab() == first.vocab())) throw DataError("ensemble: input " + std::to_string(m) + " has a different vocabulary");
        if (inputs[m].segment_ids() != first.segment_ids()) {
            throw DataError("ensemble: input " + std::to_string(m) + " has different segment ids or order");
        }
    }
    double total = 0.0;
    for (double w : config.weights) total += w;
    std::vector<double> weights;
    for (double w : config.weights) weights.push_back(w / total);

    const auto k = first.classes();
    Matrix out(first.rows(), k);
    for (std::size_t r = 0; r < first.rows(); ++r) {
        auto row = out.row(r);
        for (std::size_t m = 0; m < inputs.size(); ++m) {
            const auto in = inputs[m].row(r);
            for (std::size_t c = 0; c < k; ++c) row[c] += weights[m] * in[c];
        }
        double sum = 0.0;
        for (double v : row) sum += v;
        for (auto& v : row) v /= sum;
    }
    return ProbabilityMatrix(first.segment_ids(), first.vocab(), std::move(out));
}

LabelVector predict_from_probs(const ProbabilityMatrix& p) {
    std::vector<ClassIndex> labels;
    labels.reserve(p.rows());
    for (std::size_t r = 0; r < p.rows(); ++r) labels.push_back(argmax(p.row(r)));
    return LabelVector(p.vocab(), p.segment_ids(), std::move(labels));
}

}  // namespace segclf::ensemble
