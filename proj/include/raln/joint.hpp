#pragma once

#include "raln/linalg.hpp"
#include "raln/types.hpp"

namespace raln {

/// Joint objective ‖WᵀVᵀX − Y‖²_F + λ‖ZᵀVᵀX − X‖²_F with a shared linear
/// encoder V (D×K), supervised head W (K×C) and decoder Z (K×D).
struct JointProblem {
    DataMatrix x;   // D×N
    Matrix y;       // C×N
    double lambda = 1.0;
    Index k = 1;
};

struct JointSolution {
    Matrix v;  // D×K, B-orthonormal: Vᵀ X Xᵀ V = I
    Matrix w;  // K×C
    Matrix z;  // K×D; zero when decoder_defined is false
    double loss_value = 0.0;
    double lambda = 0.0;
    Index k = 0;            // effective latent size (≤ rank X)
    Index requested_k = 0;
    bool decoder_defined = true;  // false for λ = 0, where Z does not enter the loss
    Vector spectrum;              // all generalized eigenvalues, descending
};

struct JointGradients {
    Matrix v;
    Matrix w;
    Matrix z;
};

double evaluate_joint_loss(const Matrix& x, const Matrix& y, const Matrix& v, const Matrix& w,
                           const Matrix& z, double lambda);

JointGradients joint_loss_gradients(const Matrix& x, const Matrix& y, const Matrix& v,
                                    const Matrix& w, const Matrix& z, double lambda);

/// Generalized eigenpairs of (X(YᵀY + λXᵀX)Xᵀ, XXᵀ) on the range of X. When
/// N < D the left matrix is handled through its N×D factor D_M^{1/2} P_Mᵀ Xᵀ.
GeneralizedEigenBasis joint_spectrum(const Matrix& x, const Matrix& y, double lambda);

/// Closed-form minimizer. K above rank X is truncated with a warning.
/// λ = 0 leaves the decoder undefined (returned as zeros).
JointSolution solve_joint(const JointProblem& problem);

/// ‖Y‖² + λ‖X‖² − Σ_{i≤K} λ_i(H). K = 0 is allowed and yields the first two terms.
double optimal_joint_loss(const JointProblem& problem);

/// Y Xᵀ (X Xᵀ)⁺, a C×D matrix.
Matrix solve_ols(const Matrix& x, const Matrix& y);

/// Projector onto the top-K eigenspace of X Xᵀ.
Matrix solve_pca(const Matrix& x, Index k);

/// Least-squares head for a fixed encoder: (VᵀXXᵀV)⁻¹ VᵀX Yᵀ (K×C).
Matrix fit_head(const Matrix& x, const Matrix& y, const Matrix& v);

/// K×N embedding with orthonormal rows spanning the top-K eigenspace of
/// YᵀY + λXᵀX: the optimum when the encoder can produce any representation.
Matrix solve_nonparametric(const Matrix& x, const Matrix& y, double lambda, Index k);

/// min over W, V of ‖W Z − Y‖² + λ‖V Z − X‖² for a given embedding Z (K×N).
double nonparametric_loss(const Matrix& x, const Matrix& y, double lambda, const Matrix& z);

/// ‖Y‖² + λ‖X‖² minus the top-K eigenvalues of YᵀY + λXᵀX.
double nonparametric_optimal_value(const Matrix& x, const Matrix& y, double lambda, Index k);

}  // namespace raln
