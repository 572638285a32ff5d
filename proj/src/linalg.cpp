#include "raln/linalg.hpp"

#include "raln/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace raln {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void require_finite(const Matrix& m, const char* what) {
    if (!all_finite(m)) throw Error(Errc::NonFinite, std::string(what) + " has non-finite entries");
}

void require_symmetric(const Matrix& m, const char* what) {
    if (m.rows() != m.cols()) {
        std::ostringstream msg;
        msg << what << " is " << m.rows() << "x" << m.cols() << ", expected square";
        throw Error(Errc::ShapeMismatch, msg.str());
    }
    const double norm = m.norm();
    const double asym = (m - m.transpose()).norm();
    if (asym > 1e-8 * norm) {
        std::ostringstream msg;
        msg << what << " asymmetry " << asym << " exceeds 1e-8 * " << norm;
        throw Error(Errc::NonSymmetric, msg.str());
    }
}

// Eigenpairs of the symmetric m in descending order, no sign fix yet.
void descending_eigh(const Matrix& m, Matrix& vectors, Vector& values) {
    const Matrix sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
    if (solver.info() != Eigen::Success)
        throw Error(Errc::NonFinite, "symmetric eigensolver did not converge");
    values = solver.eigenvalues().reverse();
    vectors = solver.eigenvectors().rowwise().reverse();
}

GeneralizedEigenBasis finish_whitened(const Matrix& whitener, const Matrix& h, Index rank_b,
                                      bool truncated) {
    const EigenBasis h_basis = sym_eigh(h);
    GeneralizedEigenBasis out;
    out.vectors = whitener * h_basis.vectors;
    out.values = h_basis.values;
    out.rank_b = rank_b;
    out.truncated = truncated;
    canonicalize_signs(out.vectors);
    return out;
}

Matrix whitener_of(const EigenBasis& b_basis) {
    if (b_basis.size() == 0) throw Error(Errc::RankDeficientB, "B has no positive eigenvalues");
    if ((b_basis.values.array() <= 0.0).any())
        throw Error(Errc::InvalidArgument, "B eigenbasis must be truncated to positive eigenvalues");
    return b_basis.vectors * b_basis.values.cwiseSqrt().cwiseInverse().asDiagonal();
}

}  // namespace

DataMatrix::DataMatrix() : rank_cache_(std::make_shared<RankCache>()) {}

DataMatrix::DataMatrix(Matrix values)
    : values_(std::move(values)), rank_cache_(std::make_shared<RankCache>()) {
    if (values_.rows() < 1 || values_.cols() < 1)
        throw Error(Errc::ShapeMismatch, "data matrix needs at least one row and one column");
    require_finite(values_, "data matrix");
}

Index DataMatrix::rank() const {
    std::call_once(rank_cache_->once, [this] { rank_cache_->rank = effective_rank(values_); });
    return rank_cache_->rank;
}

double default_rank_tol(Index rows, Index cols, double largest_singular) noexcept {
    return static_cast<double>(std::max(rows, cols)) * kEps * largest_singular;
}

double gram_rank_tol(Index dim, double largest_eigenvalue) noexcept {
    return 10.0 * static_cast<double>(std::max<Index>(dim, 1)) * kEps * largest_eigenvalue;
}

bool all_finite(const Matrix& m) noexcept { return m.allFinite(); }

Index effective_rank(const Matrix& m, std::optional<double> rank_tol) {
    if (m.size() == 0) return 0;
    Eigen::BDCSVD<Matrix> svd(m);
    const Vector& s = svd.singularValues();
    const double tol = rank_tol.value_or(default_rank_tol(m.rows(), m.cols(), s.size() ? s(0) : 0.0));
    return (s.array() > tol).count();
}

Vector canonicalize_signs(Matrix& vectors) {
    Vector signs = Vector::Ones(vectors.cols());
    for (Index j = 0; j < vectors.cols(); ++j) {
        Index best = 0;
        double best_abs = -1.0;
        for (Index i = 0; i < vectors.rows(); ++i) {
            const double a = std::abs(vectors(i, j));
            if (a > best_abs) {
                best_abs = a;
                best = i;
            }
        }
        if (vectors.rows() > 0 && vectors(best, j) < 0.0) {
            vectors.col(j) *= -1.0;
            signs(j) = -1.0;
        }
    }
    return signs;
}

EigenBasis sym_eigh(const Matrix& m, double abs_tol) {
    require_finite(m, "matrix");
    require_symmetric(m, "matrix");
    EigenBasis out;
    descending_eigh(m, out.vectors, out.values);
    for (Index i = 0; i < out.values.size(); ++i)
        if (out.values(i) < 0.0 && out.values(i) >= -abs_tol) out.values(i) = 0.0;
    canonicalize_signs(out.vectors);
    return out;
}

EigenBasis truncate_basis(const EigenBasis& basis, double tol) {
    const Index keep = (basis.values.array() > tol).count();
    // values are sorted, so the kept pairs are a leading block
    return EigenBasis{basis.vectors.leftCols(keep), basis.values.head(keep)};
}

EigenBasis fast_gram_eigh(const Matrix& x, GramMajor major, std::optional<double> eig_tol) {
    require_finite(x, "data matrix");
    // `view` is the matrix whose view·viewᵀ we want.
    const Matrix view = major == GramMajor::Column ? x : Matrix(x.transpose());
    const Index out_dim = view.rows();
    const Index inner_dim = view.cols();

    EigenBasis out;
    if (inner_dim < out_dim) {
        // Transpose domain: viewᵀ·view is the smaller Gram.
        Matrix small_vectors;
        Vector values;
        descending_eigh(view.transpose() * view, small_vectors, values);
        const double tol = eig_tol.value_or(
            gram_rank_tol(std::max(out_dim, inner_dim), values.size() ? values(0) : 0.0));
        const Index keep = (values.array() > tol).count();
        out.values = values.head(keep);
        out.vectors = view * small_vectors.leftCols(keep);
        for (Index j = 0; j < keep; ++j) out.vectors.col(j) /= std::sqrt(out.values(j));
    } else {
        Matrix vectors;
        Vector values;
        descending_eigh(view * view.transpose(), vectors, values);
        const double tol = eig_tol.value_or(
            gram_rank_tol(std::max(out_dim, inner_dim), values.size() ? values(0) : 0.0));
        const Index keep = (values.array() > tol).count();
        out.values = values.head(keep);
        out.vectors = vectors.leftCols(keep);
    }
    canonicalize_signs(out.vectors);
    return out;
}

GeneralizedEigenBasis generalized_sym_eig(const Matrix& a, const Matrix& b,
                                          std::optional<double> rank_tol) {
    require_finite(a, "A");
    require_finite(b, "B");
    require_symmetric(a, "A");
    require_symmetric(b, "B");
    if (a.rows() != b.rows()) throw Error(Errc::ShapeMismatch, "A and B differ in size");

    const EigenBasis full = sym_eigh(b);
    const double tol =
        rank_tol.value_or(gram_rank_tol(b.rows(), full.size() ? full.values(0) : 0.0));
    const EigenBasis kept = truncate_basis(full, std::max(tol, 0.0));
    if (kept.size() == 0) throw Error(Errc::RankDeficientB, "B has effective rank 0");
    if (kept.size() < b.rows()) {
        std::ostringstream msg;
        msg << "B has effective rank " << kept.size() << " < " << b.rows()
            << "; solving on its range only";
        warn(msg.str());
    }
    return generalized_sym_eig(a, kept);
}

GeneralizedEigenBasis generalized_sym_eig(const Matrix& a, const EigenBasis& b_basis) {
    if (a.rows() != b_basis.vectors.rows() || a.cols() != a.rows())
        throw Error(Errc::ShapeMismatch, "A does not match the dimension of B");
    const Matrix w = whitener_of(b_basis);
    const Matrix h = w.transpose() * a * w;
    return finish_whitened(w, 0.5 * (h + h.transpose()), b_basis.size(),
                           b_basis.size() < a.rows());
}

GeneralizedEigenBasis generalized_sym_eig_factored(const Matrix& a_factor,
                                                   const EigenBasis& b_basis) {
    if (a_factor.cols() != b_basis.vectors.rows())
        throw Error(Errc::ShapeMismatch, "factor of A does not match the dimension of B");
    const Matrix w = whitener_of(b_basis);
    const Matrix fw = a_factor * w;
    const Matrix h = fw.transpose() * fw;
    return finish_whitened(w, h, b_basis.size(), b_basis.size() < b_basis.vectors.rows());
}

ThinSvd thin_svd(const Matrix& x, std::optional<double> rank_tol) {
    require_finite(x, "matrix");
    Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    const double tol =
        rank_tol.value_or(default_rank_tol(x.rows(), x.cols(), s.size() ? s(0) : 0.0));
    const Index r = (s.array() > tol).count();
    ThinSvd out{svd.matrixU().leftCols(r), s.head(r), svd.matrixV().leftCols(r)};
    const Vector signs = canonicalize_signs(out.left);
    out.right = out.right * signs.asDiagonal();
    return out;
}

Vector principal_cosines(const Matrix& u1, const Matrix& u2) {
    if (u1.rows() != u2.rows())
        throw Error(Errc::ShapeMismatch, "subspaces live in different ambient dimensions");
    for (const Matrix* u : {&u1, &u2}) {
        const Matrix gram = u->transpose() * *u;
        if ((gram - Matrix::Identity(u->cols(), u->cols())).norm() > 1e-8)
            throw Error(Errc::InvalidArgument, "subspace basis is not orthonormal");
    }
    if (u1.cols() == 0 || u2.cols() == 0) return Vector();
    Eigen::JacobiSVD<Matrix> svd(u1.transpose() * u2);
    return svd.singularValues();
}

Index principal_subspace_overlap(const Matrix& u1, const Matrix& u2, double tol) {
    const Vector cosines = principal_cosines(u1, u2);
    return (cosines.array() >= 1.0 - tol).count();
}

Matrix row_space_basis(const Matrix& m, std::optional<double> rank_tol) {
    require_finite(m, "matrix");
    if (m.rows() == 0) return Matrix(m.cols(), 0);
    return thin_svd(m, rank_tol).right;
}

Matrix row_space_projector(const Matrix& m, std::optional<double> rank_tol) {
    const Matrix q = row_space_basis(m, rank_tol);
    return q * q.transpose();
}

Matrix spd_inverse(const Matrix& m) {
    Eigen::LLT<Matrix> llt(0.5 * (m + m.transpose()));
    if (llt.info() != Eigen::Success || !(llt.rcond() > static_cast<double>(m.rows()) * kEps))
        throw Error(Errc::SingularRepresentation, "matrix is not numerically positive definite");
    return llt.solve(Matrix::Identity(m.rows(), m.cols()));
}

}  // namespace raln
