#include "raln/joint.hpp"

#include "raln/error.hpp"

#include <cmath>
#include <sstream>

namespace raln {

namespace {

void check_pair(const Matrix& x, const Matrix& y) {
    if (x.cols() != y.cols()) {
        std::ostringstream msg;
        msg << "X has " << x.cols() << " samples but Y has " << y.cols();
        throw Error(Errc::ShapeMismatch, msg.str());
    }
    if (!all_finite(x) || !all_finite(y)) throw Error(Errc::NonFinite, "X or Y has non-finite entries");
}

void check_lambda(double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw Error(Errc::InvalidArgument, "lambda must be finite and >= 0");
}

// ‖Y Π_rowspace(X)‖ == 0 makes the supervised term blind to the encoder.
void check_task(const Matrix& x, const Matrix& y, const EigenBasis& b, double lambda) {
    if (lambda > 0.0) return;
    const Matrix row_basis = x.transpose() * b.vectors * b.values.cwiseSqrt().cwiseInverse().asDiagonal();
    const double reachable = (y * row_basis).norm();
    if (!(reachable > 1e-10 * y.norm()) || reachable == 0.0)
        throw Error(Errc::DegenerateTask, "labels have no component in the row space of X");
}

}  // namespace

double evaluate_joint_loss(const Matrix& x, const Matrix& y, const Matrix& v, const Matrix& w,
                           const Matrix& z, double lambda) {
    const Index d = x.rows();
    const Index k = v.cols();
    if (x.cols() != y.cols() || v.rows() != d || w.rows() != k || w.cols() != y.rows() ||
        z.rows() != k || z.cols() != d)
        throw Error(Errc::ShapeMismatch, "joint loss parameters have inconsistent shapes");
    const Matrix code = v.transpose() * x;
    const double supervised = (w.transpose() * code - y).squaredNorm();
    const double reconstruction = (z.transpose() * code - x).squaredNorm();
    return supervised + lambda * reconstruction;
}

JointGradients joint_loss_gradients(const Matrix& x, const Matrix& y, const Matrix& v,
                                    const Matrix& w, const Matrix& z, double lambda) {
    const Matrix code = v.transpose() * x;                  // K×N
    const Matrix r_sup = w.transpose() * code - y;          // C×N
    const Matrix r_rec = z.transpose() * code - x;          // D×N
    JointGradients g;
    g.w = 2.0 * code * r_sup.transpose();
    g.z = 2.0 * lambda * code * r_rec.transpose();
    g.v = 2.0 * x * (r_sup.transpose() * w.transpose() + lambda * r_rec.transpose() * z.transpose());
    return g;
}

GeneralizedEigenBasis joint_spectrum(const Matrix& x, const Matrix& y, double lambda) {
    check_pair(x, y);
    check_lambda(lambda);
    const EigenBasis b = fast_gram_eigh(x, GramMajor::Column);
    if (b.size() == 0) throw Error(Errc::KExceedsRank, "X has rank 0");

    if (x.cols() < x.rows()) {
        const Matrix m = y.transpose() * y + lambda * (x.transpose() * x);
        const EigenBasis m_basis = sym_eigh(0.5 * (m + m.transpose()));
        const Vector root = m_basis.values.cwiseMax(0.0).cwiseSqrt();
        const Matrix factor = root.asDiagonal() * m_basis.vectors.transpose() * x.transpose();
        return generalized_sym_eig_factored(factor, b);
    }
    const Matrix xy = x * y.transpose();
    const Matrix gram = x * x.transpose();
    const Matrix a = xy * xy.transpose() + lambda * gram * gram;
    return generalized_sym_eig(0.5 * (a + a.transpose()), b);
}

JointSolution solve_joint(const JointProblem& problem) {
    const Matrix& x = problem.x.values();
    const Matrix& y = problem.y;
    check_pair(x, y);
    check_lambda(problem.lambda);
    if (problem.k < 1) throw Error(Errc::InvalidArgument, "K must be >= 1");

    const EigenBasis b = fast_gram_eigh(x, GramMajor::Column);
    check_task(x, y, b, problem.lambda);
    const GeneralizedEigenBasis spectrum = joint_spectrum(x, y, problem.lambda);

    const Index rank = spectrum.values.size();
    Index k = problem.k;
    if (k > rank) {
        std::ostringstream msg;
        msg << "K=" << k << " exceeds rank(X)=" << rank << "; truncating";
        warn(msg.str());
        k = rank;
    }

    JointSolution out;
    out.v = spectrum.vectors.leftCols(k);
    const Matrix code = out.v.transpose() * x;
    const Matrix code_gram_inv = spd_inverse(code * code.transpose());
    out.w = code_gram_inv * code * y.transpose();
    if (problem.lambda > 0.0) {
        out.z = code_gram_inv * code * x.transpose();
    } else {
        out.z = Matrix::Zero(k, x.rows());
        out.decoder_defined = false;
    }
    out.lambda = problem.lambda;
    out.k = k;
    out.requested_k = problem.k;
    out.spectrum = spectrum.values;
    out.loss_value = y.squaredNorm() + problem.lambda * x.squaredNorm() - spectrum.values.head(k).sum();
    return out;
}

double optimal_joint_loss(const JointProblem& problem) {
    const Matrix& x = problem.x.values();
    const Matrix& y = problem.y;
    check_pair(x, y);
    check_lambda(problem.lambda);
    if (problem.k < 0) throw Error(Errc::InvalidArgument, "K must be >= 0");
    const double base = y.squaredNorm() + problem.lambda * x.squaredNorm();
    if (problem.k == 0) return base;
    const EigenBasis b = fast_gram_eigh(x, GramMajor::Column);
    check_task(x, y, b, problem.lambda);
    const GeneralizedEigenBasis spectrum = joint_spectrum(x, y, problem.lambda);
    const Index k = std::min<Index>(problem.k, spectrum.values.size());
    return base - spectrum.values.head(k).sum();
}

Matrix solve_ols(const Matrix& x, const Matrix& y) {
    check_pair(x, y);
    const EigenBasis b = fast_gram_eigh(x, GramMajor::Column);
    const Matrix projected = (y * x.transpose()) * b.vectors;
    return projected * b.values.cwiseInverse().asDiagonal() * b.vectors.transpose();
}

Matrix solve_pca(const Matrix& x, Index k) {
    if (!all_finite(x)) throw Error(Errc::NonFinite, "X has non-finite entries");
    if (k < 0) throw Error(Errc::InvalidArgument, "K must be >= 0");
    const EigenBasis b = fast_gram_eigh(x, GramMajor::Column);
    if (k > b.size()) {
        std::ostringstream msg;
        msg << "K=" << k << " exceeds rank(X)=" << b.size();
        throw Error(Errc::KExceedsRank, msg.str());
    }
    const Matrix top = b.vectors.leftCols(k);
    return top * top.transpose();
}

Matrix fit_head(const Matrix& x, const Matrix& y, const Matrix& v) {
    check_pair(x, y);
    if (v.rows() != x.rows()) throw Error(Errc::ShapeMismatch, "encoder does not match X");
    const Matrix code = v.transpose() * x;
    return spd_inverse(code * code.transpose()) * code * y.transpose();
}

Matrix solve_nonparametric(const Matrix& x, const Matrix& y, double lambda, Index k) {
    check_pair(x, y);
    check_lambda(lambda);
    if (k < 1) throw Error(Errc::InvalidArgument, "K must be >= 1");
    if (k > x.cols()) {
        std::ostringstream msg;
        msg << "K=" << k << " exceeds N=" << x.cols();
        throw Error(Errc::KExceedsN, msg.str());
    }
    const Matrix m = y.transpose() * y + lambda * (x.transpose() * x);
    const EigenBasis basis = sym_eigh(0.5 * (m + m.transpose()));
    return basis.vectors.leftCols(k).transpose();
}

double nonparametric_loss(const Matrix& x, const Matrix& y, double lambda, const Matrix& z) {
    check_pair(x, y);
    if (z.cols() != x.cols()) throw Error(Errc::ShapeMismatch, "embedding does not match N");
    const Matrix gram_inv = spd_inverse(z * z.transpose());
    const Matrix head = y * z.transpose() * gram_inv;
    const Matrix decoder = x * z.transpose() * gram_inv;
    return (head * z - y).squaredNorm() + lambda * (decoder * z - x).squaredNorm();
}

double nonparametric_optimal_value(const Matrix& x, const Matrix& y, double lambda, Index k) {
    check_pair(x, y);
    const Matrix m = y.transpose() * y + lambda * (x.transpose() * x);
    const EigenBasis basis = sym_eigh(0.5 * (m + m.transpose()));
    return y.squaredNorm() + lambda * x.squaredNorm() - basis.values.head(std::min(k, basis.size())).sum();
}

}  // namespace raln
