#pragma once

#include "raln/linalg.hpp"
#include "raln/types.hpp"

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

namespace raln {

enum class FilterMode { Top, Bottom };

/// Boundary index k: top keeps eigendirections 1..k, bottom keeps k+1..r.
struct CountCut {
    Index k = 0;
};
/// Share of the Gram spectrum held by the kept directions, in (0, 1]. Top mode
/// places the boundary at the smallest k whose cumulative share reaches the
/// fraction; bottom mode at the smallest k whose share reaches 1 − fraction.
struct FractionCut {
    double fraction = 0.5;
};
using SubspaceCut = std::variant<CountCut, FractionCut>;

struct SubspaceFilter {
    EigenBasis basis;  // Gram eigenbasis of the (optionally centered) training data
    FilterMode mode = FilterMode::Top;
    SubspaceCut cut;
    Index boundary = 0;
    std::optional<Vector> mean;

    /// Orthonormal columns of the kept directions.
    Matrix kept() const;
    Matrix projector() const;
    /// Π (x − mean) for every column.
    Matrix apply(const Matrix& x) const;
};

/// Boundary for a descending spectrum; throws CutExceedsRank if nothing would be kept.
Index resolve_cut(const Vector& eigenvalues, FilterMode mode, const SubspaceCut& cut);

SubspaceFilter fit_subspace_filter(const Matrix& x_train, FilterMode mode, const SubspaceCut& cut, bool center);

/// Ridge least squares with intercept, C×D weights plus C offsets.
struct LinearProbe {
    Matrix weights;
    Vector offset;

    Matrix scores(const Matrix& x) const;
    std::vector<std::uint32_t> predict(const Matrix& x) const;  // argmax, lowest index on ties
};

/// ridge = nullopt selects 1e-6 · tr(Xc Xcᵀ) / D for the centered training data.
LinearProbe fit_linear_probe(const Matrix& x_train, const Matrix& y_train, std::optional<double> ridge = std::nullopt);

double accuracy(const std::vector<std::uint32_t>& predicted, const std::vector<std::uint32_t>& truth);

/// Fit on the training split, top-1 accuracy on the test split.
double linear_probe(const Matrix& x_train, const Matrix& y_train, const Matrix& x_test,
                    const std::vector<std::uint32_t>& labels_test, std::optional<double> ridge = std::nullopt);

}  // namespace raln
