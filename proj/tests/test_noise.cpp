#include "raln/alignment.hpp"
#include "raln/data.hpp"
#include "raln/error.hpp"
#include "raln/joint.hpp"
#include "raln/linalg.hpp"
#include "raln/noise.hpp"
#include "test_helpers.hpp"

#include <gtest/gtest.h>

using namespace raln;
using raln::testing::seeded;

namespace {

// Fraction of entries with |a − b| ≤ 3·se (plus a round-off floor for entries
// whose sampling distribution is degenerate).
double fraction_within(const Matrix& a, const Matrix& b, const Matrix& se) {
    const double floor = 1e-12 * (1.0 + b.cwiseAbs().maxCoeff());
    Index ok = 0;
    for (Index j = 0; j < a.cols(); ++j)
        for (Index i = 0; i < a.rows(); ++i)
            if (std::abs(a(i, j) - b(i, j)) <= 3.0 * se(i, j) + floor) ++ok;
    return static_cast<double>(ok) / static_cast<double>(a.size());
}

void expect_moments_agree(const NoiseModel& model, const Matrix& x, Index draws, std::uint64_t seed) {
    const NoiseMoments exact = closed_form_moments(model, x);
    const NoiseMoments mc = mc_moments(model, x, draws, seed);
    ASSERT_TRUE(mc.monte_carlo.has_value());
    EXPECT_GE(fraction_within(mc.s, exact.s, mc.monte_carlo->s_stderr), 0.99) << describe(model);
    EXPECT_GE(fraction_within(mc.g, exact.g, mc.monte_carlo->g_stderr), 0.99) << describe(model);
}

PatchMask patch(double p, std::uint32_t ph, std::uint32_t pw, ImageGeometry g) { return {p, ph, pw, g}; }

// Anisotropic data whose label lives on low-variance directions, with the
// high-variance directions axis aligned.
Dataset planted(std::uint64_t seed) {
    SyntheticSpec s;
    s.d = 32;
    s.n = 400;
    s.c = 4;
    std::vector<double> spectrum;
    for (int i = 0; i < 16; ++i) spectrum.push_back(10.0 * std::exp(-0.15 * i));
    for (int i = 0; i < 16; ++i) spectrum.push_back(0.5 * std::exp(-0.15 * i));
    s.spectrum = ExplicitSpectrum{spectrum};
    s.signal = BottomSignal{2, 3.0};
    s.basis = AxisTopBasis{16};
    s.geometry = ImageGeometry{4, 8, 1};
    s.seed = seed;
    return generate_synthetic(s);
}

}  // namespace

TEST(ClosedFormMoments, NoNoiseIsIdentity) {
    auto rng = seeded(60);
    const Matrix x = gaussian_matrix(4, 5, rng);
    for (const NoiseModel& m : {NoiseModel{PixelDropout{0.0}}, NoiseModel{AdditiveGaussian{0.0}},
                                NoiseModel{patch(0.0, 1, 2, {2, 2, 1})}}) {
        const NoiseMoments mo = closed_form_moments(m, x);
        EXPECT_EQ(mo.s, x);
        EXPECT_EQ(mo.g, x * x.transpose());
        EXPECT_FALSE(mo.monte_carlo.has_value());
    }
}

TEST(ClosedFormMoments, SinglePatchHalfMask) {
    const Matrix x = Matrix::Identity(2, 2);
    const NoiseModel m = patch(0.5, 1, 2, {1, 2, 1});
    const NoiseMoments mo = closed_form_moments(m, x);
    EXPECT_LE((mo.s - 0.5 * x).norm(), 1e-15);
    EXPECT_LE((mo.g - 0.5 * x).norm(), 1e-15);
    expect_moments_agree(m, x, 100000, 1);
}

TEST(ClosedFormMoments, DropoutMatchesMonteCarlo) {
    auto rng = seeded(61);
    expect_moments_agree(PixelDropout{0.3}, gaussian_matrix(4, 6, rng), 200000, 2);
}

TEST(ClosedFormMoments, PatchShapesMatchMonteCarlo) {
    auto rng = seeded(62);
    const ImageGeometry g{4, 4, 2};
    const Matrix x = gaussian_matrix(32, 3, rng);
    for (std::uint32_t size : {1u, 2u, 4u}) expect_moments_agree(patch(0.4, size, size, g), x, 20000, 3 + size);
}

TEST(ClosedFormMoments, GaussianAggregatesOverSamples) {
    auto rng = seeded(63);
    const Matrix x = gaussian_matrix(3, 5, rng);
    const NoiseModel m = AdditiveGaussian::from_pixel_std(1.0, 5);
    EXPECT_DOUBLE_EQ(std::get<AdditiveGaussian>(m).sigma, 5.0);
    const NoiseMoments mc = mc_moments(m, x, 200000, 4);
    const Vector inflation = (mc.g - x * x.transpose()).diagonal();
    for (Index i = 0; i < 3; ++i) EXPECT_NEAR(inflation(i), 5.0, 4.0 * mc.monte_carlo->g_stderr(i, i));
    expect_moments_agree(m, x, 200000, 5);
}

TEST(ClosedFormMoments, UnitPatchEqualsDropout) {
    auto rng = seeded(64);
    const Matrix x = gaussian_matrix(12, 5, rng);
    const NoiseMoments a = closed_form_moments(patch(0.35, 1, 1, {3, 4, 1}), x);
    const NoiseMoments b = closed_form_moments(PixelDropout{0.35}, x);
    EXPECT_EQ(a.s, b.s);
    EXPECT_EQ(a.g, b.g);
}

TEST(ClosedFormMoments, SecondMomentIsPsd) {
    auto rng = seeded(65);
    const Matrix x = gaussian_matrix(16, 5, rng);
    for (const NoiseModel& m : {NoiseModel{PixelDropout{0.7}}, NoiseModel{AdditiveGaussian{2.0}},
                                NoiseModel{patch(0.9, 2, 2, {4, 4, 1})}}) {
        const NoiseMoments mo = closed_form_moments(m, x);
        const Eigen::SelfAdjointEigenSolver<Matrix> eig(mo.g);
        EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-8 * mo.g.norm());
    }
}

TEST(ClosedFormMoments, GeometryErrors) {
    const Matrix x = Matrix::Identity(6, 6);
    auto code = [&](const NoiseModel& m) {
        try {
            closed_form_moments(m, x);
        } catch (const Error& e) {
            return e.code();
        }
        return Errc::Io;
    };
    EXPECT_EQ(code(patch(0.5, 1, 1, {2, 2, 1})), Errc::GeometryMismatch);
    EXPECT_EQ(code(patch(0.5, 2, 2, {2, 3, 1})), Errc::GeometryMismatch);
    EXPECT_EQ(code(PixelDropout{1.0}), Errc::InvalidArgument);
    EXPECT_EQ(code(AdditiveGaussian{-1.0}), Errc::InvalidArgument);
}

TEST(McMoments, ZeroNoiseIsExact) {
    auto rng = seeded(66);
    const Matrix x = gaussian_matrix(3, 4, rng);
    const NoiseMoments mc = mc_moments(PixelDropout{0.0}, x, 700, 1);
    EXPECT_EQ(mc.s, x);
    EXPECT_EQ(mc.g, x * x.transpose());
    EXPECT_EQ(mc.monte_carlo->s_stderr.norm(), 0.0);
}

TEST(McMoments, DeterministicGivenSeed) {
    auto rng = seeded(67);
    const Matrix x = gaussian_matrix(4, 4, rng);
    const NoiseMoments a = mc_moments(PixelDropout{0.5}, x, 3000, 9);
    const NoiseMoments b = mc_moments(PixelDropout{0.5}, x, 3000, 9);
    EXPECT_EQ(a.g, b.g);
    EXPECT_EQ(a.s, b.s);
    const NoiseMoments c = mc_moments(PixelDropout{0.5}, x, 3000, 10);
    EXPECT_NE(a.g, c.g);
}

TEST(SampleNoise, NoNoiseReturnsInput) {
    auto rng = seeded(68);
    const Matrix x = gaussian_matrix(4, 3, rng);
    EXPECT_EQ(sample_noise(PixelDropout{0.0}, x, 1), x);
    EXPECT_EQ(sample_noise(patch(0.0, 2, 2, {2, 2, 1}), x, 1), x);
}

TEST(SampleNoise, HeavyMaskingFrequency) {
    const Matrix x = Matrix::Ones(64, 10);
    const double p = 0.999;
    Index zeros = 0, total = 0;
    for (std::uint64_t draw = 0; draw < 200; ++draw) {
        const Matrix noisy = sample_noise(patch(p, 2, 2, {8, 8, 1}), x, draw);
        zeros += (noisy.array() == 0.0).count();
        total += noisy.size();
    }
    const double frac = static_cast<double>(zeros) / static_cast<double>(total);
    // 16 patches × 10 samples × 200 draws Bernoulli trials.
    EXPECT_NEAR(frac, p, 3.0 * std::sqrt(p * (1 - p) / 32000.0));
}

TEST(SampleNoise, PatchChannelsShareMask) {
    const Matrix x = Matrix::Ones(2 * 2 * 3, 50);
    const Matrix noisy = sample_noise(patch(0.5, 1, 1, {2, 2, 3}), x, 7);
    for (Index j = 0; j < 50; ++j)
        for (Index pixel = 0; pixel < 4; ++pixel) {
            EXPECT_EQ(noisy(pixel * 3, j), noisy(pixel * 3 + 1, j));
            EXPECT_EQ(noisy(pixel * 3, j), noisy(pixel * 3 + 2, j));
        }
}

TEST(SampleNoise, GaussianMeanIsUnbiased) {
    Matrix x(2, 2);
    x << 1.0, -2.0, 0.5, 3.0;
    const NoiseModel m = AdditiveGaussian::from_pixel_std(2.0, 2);
    const Index draws = 100000;
    double sum = 0.0, sum_sq = 0.0;
    Rng rng = seeded(69);
    for (Index i = 0; i < draws; ++i) {
        const double v = sample_noise(m, x, rng)(1, 0);
        sum += v;
        sum_sq += v * v;
    }
    const double mean = sum / draws;
    const double se = std::sqrt((sum_sq / draws - mean * mean) / draws);
    EXPECT_NEAR(se, 2.0 / std::sqrt(static_cast<double>(draws)), 0.05 * se);
    EXPECT_NEAR(mean, 0.5, 3.0 * se);
}

TEST(SolveDae, ZeroNoiseIsPca) {
    auto rng = seeded(70);
    const Matrix x = gaussian_matrix(6, 12, rng);
    const DaeSolution dae = solve_dae(x, closed_form_moments(PixelDropout{0.0}, x), 3);
    const EigenBasis pca = sym_eigh(x * x.transpose());
    const Matrix q = dae.v.householderQr().householderQ() * Matrix::Identity(6, 3);
    EXPECT_EQ(principal_subspace_overlap(q, pca.vectors.leftCols(3)), 3);
}

TEST(SolveDae, GaussianKeepsTheSpan) {
    auto rng = seeded(71);
    const Matrix x = gaussian_matrix(6, 12, rng);
    const DaeSolution clean = solve_dae(x, closed_form_moments(AdditiveGaussian{0.0}, x), 2);
    const Matrix qc = clean.v.householderQr().householderQ() * Matrix::Identity(6, 2);
    for (double sigma : {0.5, 3.0, 40.0}) {
        const NoiseMoments mo = closed_form_moments(AdditiveGaussian{sigma}, x);
        const DaeSolution noisy = solve_dae(x, mo, 2);
        const Matrix qn = noisy.v.householderQr().householderQ() * Matrix::Identity(6, 2);
        EXPECT_EQ(principal_subspace_overlap(qc, qn), 2);
        EXPECT_LE((noisy.v.transpose() * mo.g * noisy.v - Matrix::Identity(2, 2)).norm(), 1e-8);
    }
}

TEST(SolveDae, PerturbationsNeverImprove) {
    const Dataset ds = planted(1);
    const Matrix& x = ds.x.values();
    const NoiseMoments mo = closed_form_moments(PixelDropout{0.5}, x);
    const DaeSolution dae = solve_dae(x, mo, 4);
    const double best = expected_denoising_loss(x, mo, dae.v);
    Rng rng = seeded(72);
    for (int i = 0; i < 200; ++i) {
        const Matrix dv = gaussian_matrix(x.rows(), 4, rng);
        EXPECT_GE(expected_denoising_loss(x, mo, dae.v + 1e-2 * dv), best - 1e-9 * best);
    }
}

TEST(SolveDae, KAboveRank) {
    const Matrix x = Matrix::Identity(3, 2);
    try {
        solve_dae(x, closed_form_moments(PixelDropout{0.0}, x), 3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::KExceedsRank);
    }
}

TEST(ExpectedDenoisingLoss, CleanFullRank) {
    auto rng = seeded(73);
    const Matrix x = gaussian_matrix(4, 7, rng);
    EXPECT_NEAR(expected_denoising_loss(x, closed_form_moments(PixelDropout{0.0}, x), Matrix::Identity(4, 4)), 0.0,
                1e-10 * x.squaredNorm());
}

TEST(ExpectedDenoisingLoss, CleanTopDirection) {
    Matrix x = Matrix::Zero(2, 2);
    x(0, 0) = 2.0;
    x(1, 1) = 1.0;
    Matrix v = Matrix::Zero(2, 1);
    v(0, 0) = 1.0;
    EXPECT_NEAR(expected_denoising_loss(x, closed_form_moments(PixelDropout{0.0}, x), v), 1.0, 1e-14);
}

TEST(ExpectedDenoisingLoss, MatchesMonteCarlo) {
    auto rng = seeded(74);
    const Matrix x = gaussian_matrix(5, 8, rng);
    const Matrix v = gaussian_matrix(5, 2, rng);
    const NoiseModel model = PixelDropout{0.4};
    const NoiseMoments mo = closed_form_moments(model, x);
    const Matrix z = optimal_decoder(x, mo, v);
    const Index draws = 10000;
    double sum = 0.0, sum_sq = 0.0;
    for (Index i = 0; i < draws; ++i) {
        Rng draw_rng = counter_rng(75, static_cast<std::uint64_t>(i));
        const Matrix noisy = sample_noise(model, x, draw_rng);
        const double loss = (z.transpose() * v.transpose() * noisy - x).squaredNorm();
        sum += loss;
        sum_sq += loss * loss;
    }
    const double mean = sum / draws;
    const double se = std::sqrt((sum_sq / draws - mean * mean) / draws);
    EXPECT_NEAR(expected_denoising_loss(x, mo, v), mean, 3.0 * se);
}

TEST(ExpectedDenoisingLoss, SingularRepresentation) {
    const Matrix x = Matrix::Identity(2, 2);
    try {
        expected_denoising_loss(x, closed_form_moments(PixelDropout{0.0}, x), Matrix::Zero(2, 1));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::SingularRepresentation);
    }
}

TEST(GaussianInvariance, SingleSigma) {
    auto rng = seeded(76);
    EXPECT_EQ(gaussian_invariance_check(gaussian_matrix(4, 6, rng), gaussian_matrix(2, 6, rng), {0.0}, 2), 0.0);
}

TEST(GaussianInvariance, ProductIsSigmaIndependent) {
    auto rng = seeded(77);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix x = gaussian_matrix(6, 9, rng);
        const Matrix y = gaussian_matrix(2, 9, rng);
        EXPECT_LE(gaussian_invariance_check(x, y, {0.0, 1.0, 10.0}, 3), 1e-8);
    }
}

TEST(GaussianInvariance, DropoutIsNotInert) {
    const Dataset ds = planted(2);
    const Matrix y = one_hot(ds.labels, ds.num_classes);
    const double deviation =
        product_deviation(ds.x.values(), y, {NoiseModel{PixelDropout{0.0}}, NoiseModel{PixelDropout{0.5}}}, 4);
    EXPECT_GT(deviation, 1e-3);
}

TEST(DaeAlignmentDelta, ControlsAreZeroAndMaskingHelps) {
    const Dataset ds = planted(3);
    const Matrix& x = ds.x.values();
    const Matrix y = one_hot(ds.labels, ds.num_classes);
    const std::vector<Index> ks{1, 2, 4, 8, 16, 32};
    for (const NoiseModel& family : {NoiseModel{PixelDropout{}}, NoiseModel{patch(0, 2, 2, {4, 8, 1})}}) {
        const auto rows = dae_alignment_delta(x, y, family, {0.0, 0.25, 0.5, 0.75, 0.9}, ks);
        ASSERT_EQ(rows.size(), 30u);
        double best = -1.0;
        for (const auto& r : rows) {
            if (r.level == 0.0 || r.k == 32) EXPECT_EQ(r.delta, 0.0) << r.level << " " << r.k;
            best = std::max(best, r.delta);
        }
        EXPECT_GT(best, 0.0) << describe(family);
    }
}
