#pragma once

#include "raln/types.hpp"

#include <optional>

namespace raln {

/// Orthonormal eigenvectors (columns) and eigenvalues of a symmetric matrix,
/// sorted descending. In every column the entry of largest magnitude is
/// positive; among exactly equal magnitudes the lowest row index decides.
struct EigenBasis {
    Matrix vectors;
    Vector values;

    Index size() const noexcept { return values.size(); }
};

/// Solution of A v = λ B v restricted to the effective range of B. Columns are
/// B-orthonormal (vectorsᵀ B vectors = I) and values are sorted descending.
struct GeneralizedEigenBasis {
    Matrix vectors;
    Vector values;
    Index rank_b = 0;        // number of directions of B that were kept
    bool truncated = false;  // B was rank deficient
};

/// X = left · diag(singular_values) · rightᵀ, truncated to the effective rank.
struct ThinSvd {
    Matrix left;
    Vector singular_values;
    Matrix right;

    Index rank() const noexcept { return singular_values.size(); }
};

/// Which Gram matrix of X: X·Xᵀ (column major samples) or Xᵀ·X.
enum class GramMajor { Column, Row };

/// Numerical-rank threshold for singular values of a rows×cols matrix:
/// max(rows, cols) · ε · σ_max.
double default_rank_tol(Index rows, Index cols, double largest_singular) noexcept;

/// Threshold below which an eigenvalue of a dim×dim Gram-type matrix is treated
/// as zero. Gram spectra carry round-off of order dim·ε·λ_max, so the cut sits a
/// decade above that.
double gram_rank_tol(Index dim, double largest_eigenvalue) noexcept;

bool all_finite(const Matrix& m) noexcept;

/// Number of singular values above default_rank_tol (or `rank_tol` if given).
Index effective_rank(const Matrix& m, std::optional<double> rank_tol = std::nullopt);

/// Applies the EigenBasis sign convention to each column in place. Returns the
/// per-column signs that were applied (+1 or -1).
Vector canonicalize_signs(Matrix& vectors);

/// Symmetric eigendecomposition. Eigenvalues in [-abs_tol, 0) are clamped to 0.
/// Throws NonSymmetric when ‖M − Mᵀ‖_F > 1e-8·‖M‖_F, NonFinite on NaN/Inf.
EigenBasis sym_eigh(const Matrix& m, double abs_tol = 0.0);

/// Eigendecomposition of X·Xᵀ (Column) or Xᵀ·X (Row) restricted to nonzero
/// eigenvalues, computed through whichever Gram matrix is smaller. When the
/// requested Gram is the larger one, eigenvectors of the small Gram are mapped
/// across with X and rescaled by 1/‖Xᵀv‖.
EigenBasis fast_gram_eigh(const Matrix& x, GramMajor major = GramMajor::Column,
                          std::optional<double> eig_tol = std::nullopt);

/// Drops eigenpairs whose eigenvalue is at or below `tol`.
EigenBasis truncate_basis(const EigenBasis& basis, double tol);

/// Generalized symmetric eigenproblem by whitening: with B = P_B D_B P_Bᵀ,
/// H = D_B^{-1/2} P_Bᵀ A P_B D_B^{-1/2} and the vectors are P_B D_B^{-1/2} P_H.
/// Directions of B with eigenvalue ≤ rank_tol are discarded (a warning is
/// emitted); RankDeficientB is thrown when nothing remains.
GeneralizedEigenBasis generalized_sym_eig(const Matrix& a, const Matrix& b,
                                          std::optional<double> rank_tol = std::nullopt);

/// Same problem with B supplied as its (already truncated, strictly positive)
/// eigenbasis.
GeneralizedEigenBasis generalized_sym_eig(const Matrix& a, const EigenBasis& b_basis);

/// Same problem with A = Fᵀ F given by the factor F (m×D). Never forms A, so
/// with b_basis from fast_gram_eigh no D×D product is needed.
GeneralizedEigenBasis generalized_sym_eig_factored(const Matrix& a_factor,
                                                   const EigenBasis& b_basis);

ThinSvd thin_svd(const Matrix& x, std::optional<double> rank_tol = std::nullopt);

/// Cosines of the principal angles between span(U1) and span(U2), descending.
Vector principal_cosines(const Matrix& u1, const Matrix& u2);

/// Dimension of the numerical intersection: #{cosines ≥ 1 − tol}.
Index principal_subspace_overlap(const Matrix& u1, const Matrix& u2, double tol = 1e-8);

/// N×r orthonormal basis of the row space of M (k×N).
Matrix row_space_basis(const Matrix& m, std::optional<double> rank_tol = std::nullopt);

/// N×N orthogonal projector onto the row space of M.
Matrix row_space_projector(const Matrix& m, std::optional<double> rank_tol = std::nullopt);

/// Inverse of a symmetric positive definite matrix; SingularRepresentation if
/// the Cholesky factorization fails.
Matrix spd_inverse(const Matrix& m);

}  // namespace raln
