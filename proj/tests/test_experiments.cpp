#include "raln/error.hpp"
#include "raln/experiments.hpp"
#include "test_helpers.hpp"

#include <gtest/gtest.h>

using namespace raln;
using raln::testing::seeded;

TEST(GdValidate, IdentityTargetsReachZero) {
    auto rng = seeded(100);
    const Matrix x = gaussian_matrix(4, 6, rng);
    const GdValidation v = gd_validate_closed_form({DataMatrix(x), x, 1.0, 4}, default_validation_config(1));
    EXPECT_NEAR(v.optimal, 0.0, 1e-10);
    EXPECT_LE(v.min_gap, 1e-6);
    EXPECT_GE(v.min_gap, -1e-6);
}

TEST(GdValidate, ConvergesToClosedFormLoss) {
    auto rng = seeded(101);
    const Matrix x = gaussian_matrix(8, 12, rng);
    const Matrix y = gaussian_matrix(3, 12, rng);
    const JointProblem p{DataMatrix(x), y, 0.5, 4};
    const GdValidation v = gd_validate_closed_form(p, default_validation_config(2), 100);
    EXPECT_NEAR(v.optimal, solve_joint(p).loss_value, 1e-10 * v.optimal);
    EXPECT_LE(v.min_gap, 1e-4);
    EXPECT_GE(v.min_gap, -1e-6 * (1.0 + v.optimal));
    EXPECT_EQ(v.curve.front().step, 0);
    EXPECT_EQ(v.curve.back().step, 15000);
}

TEST(GdValidate, LambdaGridGapsShrink) {
    auto rng = seeded(102);
    const Matrix x = gaussian_matrix(10, 14, rng);
    const Matrix y = gaussian_matrix(2, 14, rng);
    for (double lambda : {0.0, 0.1, 1.0, 10.0}) {
        const GdValidation v = gd_validate_closed_form({DataMatrix(x), y, lambda, 3}, default_validation_config(3), 500);
        const double scale = 1.0 + std::abs(v.optimal);
        EXPECT_GT(v.curve.front().gap, v.curve.back().gap);
        EXPECT_LE(v.min_gap, 1e-3 * scale) << lambda;
        EXPECT_GE(v.min_gap, -1e-6 * scale) << lambda;
    }
}

TEST(GdValidate, GradientMatchesFiniteDifferences) {
    auto rng = seeded(103);
    const Matrix x = gaussian_matrix(5, 7, rng);
    const Matrix y = gaussian_matrix(2, 7, rng);
    const double lambda = 0.7;
    const Matrix v = gaussian_matrix(5, 3, rng), w = gaussian_matrix(3, 2, rng), z = gaussian_matrix(3, 5, rng);
    const JointGradients g = joint_loss_gradients(x, y, v, w, z, lambda);
    const double h = 1e-5;
    auto check = [&](const Matrix& analytic, auto perturb) {
        for (Index j = 0; j < analytic.cols(); ++j)
            for (Index i = 0; i < analytic.rows(); ++i) {
                const double fd = (perturb(i, j, h) - perturb(i, j, -h)) / (2 * h);
                EXPECT_NEAR(analytic(i, j), fd, 1e-5 * std::max(1.0, std::abs(fd)));
            }
    };
    check(g.v, [&](Index i, Index j, double e) {
        Matrix p = v;
        p(i, j) += e;
        return evaluate_joint_loss(x, y, p, w, z, lambda);
    });
    check(g.w, [&](Index i, Index j, double e) {
        Matrix p = w;
        p(i, j) += e;
        return evaluate_joint_loss(x, y, v, p, z, lambda);
    });
    check(g.z, [&](Index i, Index j, double e) {
        Matrix p = z;
        p(i, j) += e;
        return evaluate_joint_loss(x, y, v, w, p, lambda);
    });
}

TEST(R3Demo, ZeroBetaGivesIdenticalModels) {
    SyntheticSpec s;
    s.d = 12;
    s.n = 200;
    s.c = 3;
    s.spectrum = ExponentialSpectrum{0.3};
    s.signal = BottomSignal{2, 3.0};
    s.seed = 4;
    const auto [train, test] = split_dataset(generate_synthetic(s), 150);
    R3Config c;
    c.arch = MlpArch{{8, 3}, Activation::Tanh};
    c.optimizer.steps = 100;
    c.beta = 0.0;
    const R3Result r = r3_demo(train, test, c);
    EXPECT_EQ(r.probe_acc_plain, r.probe_acc_supervised);
    EXPECT_EQ(r.recon_train_plain, r.recon_train_supervised);
}

TEST(R3Demo, SupervisedHeadChangesTheEmbedding) {
    SyntheticSpec s;
    std::vector<double> spectrum{20, 20, 20};
    for (int i = 0; i < 30; ++i) spectrum.push_back(1.0);
    spectrum.push_back(0.05);
    spectrum.push_back(0.05);
    s.d = static_cast<Index>(spectrum.size());
    s.n = 400;
    s.c = 4;
    s.spectrum = ExplicitSpectrum{spectrum};
    s.signal = BottomSignal{2, 3.0};
    s.seed = 5;
    const auto [train, test] = split_dataset(generate_synthetic(s), 300);
    R3Config c;
    c.optimizer.steps = 600;
    const R3Result r = r3_demo(train, test, c);
    EXPECT_GT(r.probe_acc_supervised, r.probe_acc_plain);
    EXPECT_GT(r.recon_train_supervised, 0.0);
}

TEST(SplitDataset, Bounds) {
    SyntheticSpec s;
    s.d = 3;
    s.n = 10;
    s.c = 2;
    const Dataset ds = generate_synthetic(s);
    const auto [a, b] = split_dataset(ds, 7);
    EXPECT_EQ(a.x.cols(), 7);
    EXPECT_EQ(b.x.cols(), 3);
    EXPECT_EQ(b.labels.front(), ds.labels[7]);
    EXPECT_THROW(split_dataset(ds, 10), Error);
}
