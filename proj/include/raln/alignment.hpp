#pragma once

#include "raln/types.hpp"

namespace raln {

/// Gram: ‖YᵀY·U_{:,1:k}‖²  (label-Gram energy).  Proof: ‖Y·U_{:,1:k}‖².
enum class AlignmentVariant { Gram, Proof };

struct AlignmentOptions {
    AlignmentVariant variant = AlignmentVariant::Gram;
    bool center = false;  // subtract the per-feature sample mean of X first
};

/// values(k-1) is the fraction of label energy captured by the top-k right
/// singular directions of X, for k = 1..rank(X).
struct AlignmentCurve {
    Vector values;
    double normalizer = 0.0;
};

/// All k at once from one thin SVD and a cumulative sum.
AlignmentCurve alignment_sweep(const DataMatrix& x, const Matrix& y, const AlignmentOptions& options = {});

struct AlignmentCondition {
    Index intersection_dim = 0;
    bool aligned = false;
};

/// Overlap of the top-K eigenspaces of XᵀX and YᵀY.
AlignmentCondition alignment_condition(const Matrix& x, const Matrix& y, Index k, double tol = 1e-8);

/// ‖Y Π‖² / ‖Y Π_X‖² with Π, Π_X the row-space projectors of VᵀX and X.
/// Exactly 1 when VᵀX keeps the full row space of X.
double encoder_alignment_score(const Matrix& x, const Matrix& y, const Matrix& v);

Matrix center_rows(const Matrix& x);

}  // namespace raln
