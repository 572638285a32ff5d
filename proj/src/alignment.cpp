#include "raln/alignment.hpp"

#include "raln/error.hpp"
#include "raln/linalg.hpp"

#include <algorithm>
#include <sstream>

namespace raln {

Matrix center_rows(const Matrix& x) { return x.colwise() - x.rowwise().mean(); }

AlignmentCurve alignment_sweep(const DataMatrix& data, const Matrix& y, const AlignmentOptions& options) {
    const Matrix& raw = data.values();
    if (raw.cols() != y.cols()) throw Error(Errc::ShapeMismatch, "X and Y differ in sample count");
    if (!all_finite(y)) throw Error(Errc::NonFinite, "Y has non-finite entries");
    const Matrix x = options.center ? center_rows(raw) : raw;

    const ThinSvd svd = thin_svd(x);
    const Index r = svd.rank();
    if (r == 0) throw Error(Errc::DegenerateTask, "X has rank 0");

    // Column j of T is Y u_j. The Gram variant needs ‖YᵀY u_j‖² = ‖Yᵀ t_j‖².
    const Matrix t = y * svd.right;
    Vector energy(r);
    for (Index j = 0; j < r; ++j) {
        energy(j) = options.variant == AlignmentVariant::Gram ? (y.transpose() * t.col(j)).squaredNorm()
                                                              : t.col(j).squaredNorm();
    }

    AlignmentCurve curve;
    curve.normalizer = energy.sum();
    const double reference = options.variant == AlignmentVariant::Gram
                                 ? (y.transpose() * y).squaredNorm()
                                 : y.squaredNorm();
    if (!(curve.normalizer > 1e-12 * reference))
        throw Error(Errc::DegenerateTask, "labels have no energy in the row space of X");

    curve.values.resize(r);
    double running = 0.0;
    for (Index j = 0; j < r; ++j) {
        running += energy(j);
        curve.values(j) = std::min(1.0, running / curve.normalizer);
    }
    return curve;
}

AlignmentCondition alignment_condition(const Matrix& x, const Matrix& y, Index k, double tol) {
    if (x.cols() != y.cols()) throw Error(Errc::ShapeMismatch, "X and Y differ in sample count");
    if (k < 1) throw Error(Errc::InvalidArgument, "K must be >= 1");
    const EigenBasis bx = fast_gram_eigh(x, GramMajor::Row);
    const EigenBasis by = fast_gram_eigh(y, GramMajor::Row);
    if (k > bx.size() || k > by.size()) {
        std::ostringstream msg;
        msg << "K=" << k << " exceeds rank(XᵀX)=" << bx.size() << " or rank(YᵀY)=" << by.size();
        throw Error(Errc::KExceedsRank, msg.str());
    }
    AlignmentCondition out;
    out.intersection_dim = principal_subspace_overlap(bx.vectors.leftCols(k), by.vectors.leftCols(k), tol);
    out.aligned = out.intersection_dim == k;
    return out;
}

double encoder_alignment_score(const Matrix& x, const Matrix& y, const Matrix& v) {
    if (x.cols() != y.cols()) throw Error(Errc::ShapeMismatch, "X and Y differ in sample count");
    if (v.rows() != x.rows()) throw Error(Errc::ShapeMismatch, "encoder rows do not match D");
    const Matrix code = v.transpose() * x;
    const Matrix q = row_space_basis(code);
    if (q.cols() == 0) throw Error(Errc::ZeroRepresentation, "VᵀX is zero");
    const Matrix qx = row_space_basis(x);
    const double reachable = (y * qx).squaredNorm();
    if (!(reachable > 0.0)) throw Error(Errc::DegenerateTask, "labels have no energy in the row space of X");
    if (q.cols() >= qx.cols()) return 1.0;
    return std::clamp((y * q).squaredNorm() / reachable, 0.0, 1.0);
}

}  // namespace raln
