#pragma once

#include "raln/data.hpp"
#include "raln/random.hpp"
#include "raln/types.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace raln {

/// Isotropic additive noise. `sigma` is the aggregate diagonal inflation of
/// E[X'X'ᵀ] (G = XXᵀ + σI); per-entry noise has variance σ/N.
struct AdditiveGaussian {
    double sigma = 0.0;

    static AdditiveGaussian from_pixel_std(double pixel_std, Index n_samples) {
        return {static_cast<double>(n_samples) * pixel_std * pixel_std};
    }
};

/// Each coordinate of each sample is zeroed independently with probability p.
struct PixelDropout {
    double p = 0.0;
};

/// Each patch_h×patch_w spatial patch of each sample is zeroed independently
/// with probability p; all channels of a pixel share its mask.
struct PatchMask {
    double p = 0.0;
    std::uint32_t patch_h = 1;
    std::uint32_t patch_w = 1;
    ImageGeometry image;
};

using NoiseModel = std::variant<AdditiveGaussian, PixelDropout, PatchMask>;

/// Throws InvalidArgument for out-of-range parameters and GeometryMismatch when
/// a patch model does not fit D or its patches do not tile the image.
void validate_noise(const NoiseModel& model, Index d);

/// Same family with the noise level (σ or p) replaced.
NoiseModel with_level(const NoiseModel& model, double level);
double noise_level(const NoiseModel& model);

/// E.g. "gaussian:2", "dropout:0.5", "mask:0.5:2:2".
std::string describe(const NoiseModel& model);

struct MonteCarloInfo {
    Index n_samples = 0;
    std::uint64_t seed = 0;
    Matrix s_stderr;  // standard errors of the entries of S
    Matrix g_stderr;  // standard errors of the entries of G
};

struct NoiseMoments {
    Matrix s;  // D×N, E[X']
    Matrix g;  // D×D, E[X'X'ᵀ]
    std::optional<MonteCarloInfo> monte_carlo;  // empty for closed-form moments
};

NoiseMoments closed_form_moments(const NoiseModel& model, const Matrix& x);

/// Sample averages over n_samples draws. Draw i uses counter_rng(seed, i), so
/// the result does not depend on RALN_THREADS.
NoiseMoments mc_moments(const NoiseModel& model, const Matrix& x, Index n_samples, std::uint64_t seed);

/// One corrupted copy X'.
Matrix sample_noise(const NoiseModel& model, const Matrix& x, std::uint64_t seed);
Matrix sample_noise(const NoiseModel& model, const Matrix& x, Rng& rng);

struct DaeSolution {
    Matrix v;       // D×K, Vᵀ G V = I
    Vector values;  // generalized eigenvalues, descending (all of them)
    Index k = 0;
    std::optional<MonteCarloInfo> monte_carlo;
};

/// Linear denoising autoencoder optimum: top-K generalized eigenvectors of
/// (S XᵀX Sᵀ, G).
DaeSolution solve_dae(const Matrix& x, const NoiseMoments& moments, Index k);

/// min_Z E‖ZᵀVᵀX' − X‖² = ‖X‖² − tr((VᵀGV)⁻¹ VᵀS XᵀX SᵀV).
double expected_denoising_loss(const Matrix& x, const NoiseMoments& moments, const Matrix& v);

/// Decoder achieving expected_denoising_loss: (VᵀGV)⁻¹ VᵀS Xᵀ (K×D).
Matrix optimal_decoder(const Matrix& x, const NoiseMoments& moments, const Matrix& v);

/// End-to-end supervised map WᵀVᵀ (C×D) for the DAE encoder under `model`,
/// with W fit by least squares on VᵀX.
Matrix dae_supervised_product(const Matrix& x, const Matrix& y, const NoiseModel& model, Index k);

/// max_{i,j} ‖P_i − P_j‖_F / ‖P_0‖_F over the products for each model.
double product_deviation(const Matrix& x, const Matrix& y, const std::vector<NoiseModel>& models, Index k);

/// product_deviation over AdditiveGaussian models with the given aggregate σ.
double gaussian_invariance_check(const Matrix& x, const Matrix& y, const std::vector<double>& sigmas, Index k);

struct DaeDeltaRow {
    double level = 0.0;
    Index k = 0;
    double score_clean = 0.0;
    double score_noise = 0.0;
    double delta = 0.0;  // (score_noise − score_clean) / score_clean
};

/// Relative change of encoder_alignment_score when the clean (PCA) encoder is
/// replaced by the DAE encoder, for each level × K. Rows are level-major.
std::vector<DaeDeltaRow> dae_alignment_delta(const Matrix& x, const Matrix& y, const NoiseModel& family,
                                             const std::vector<double>& levels, const std::vector<Index>& k_values);

}  // namespace raln
