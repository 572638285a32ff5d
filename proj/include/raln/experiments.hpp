#pragma once

#include "raln/data.hpp"
#include "raln/filter_probe.hpp"
#include "raln/joint.hpp"
#include "raln/training.hpp"

#include <vector>

namespace raln {

struct GapPoint {
    Index step = 0;
    double loss = 0.0;
    double gap = 0.0;  // loss − optimal_joint_loss
};

struct GdValidation {
    double optimal = 0.0;
    double min_gap = 0.0;
    double final_gap = 0.0;
    std::vector<GapPoint> curve;  // one point per `record_every` steps and the last step
};

/// Minimizes the joint loss over (V, W, Z) from a seeded random start and
/// tracks the distance to the closed-form optimum.
GdValidation gd_validate_closed_form(const JointProblem& problem, const OptimizerConfig& config,
                                     Index record_every = 1);

/// Optimizer settings that meet the validation gap contract on D, N ≤ 32.
OptimizerConfig default_validation_config(std::uint64_t seed);

struct R3Config {
    Architecture arch = MlpArch{{16, 5}, Activation::Tanh};
    OptimizerConfig optimizer{OptimizerKind::Adam, 1e-2, 1500, 0, 1.0, 0.1};
    double beta = 10.0;  // weight of the supervised head; 0 reproduces the plain model
    std::optional<double> ridge;
};

struct R3Result {
    double recon_train_plain = 0.0;  // mean squared reconstruction error per sample
    double recon_test_plain = 0.0;
    double recon_train_supervised = 0.0;
    double recon_test_supervised = 0.0;
    double probe_acc_plain = 0.0;
    double probe_acc_supervised = 0.0;
};

/// Trains two autoencoders with the same initialization, one on reconstruction
/// alone and one with an added linear supervised head on the embedding, then
/// probes both embeddings linearly.
R3Result r3_demo(const Dataset& train, const Dataset& test, const R3Config& config);

/// Probe accuracy after projecting train and test onto a subspace fitted on train.
double filtered_probe_accuracy(const Dataset& train, const Dataset& test, FilterMode mode, const SubspaceCut& cut,
                               bool center, std::optional<double> ridge = std::nullopt);

/// Samples [0, n_train) and [n_train, N) as two datasets.
std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, Index n_train);

}  // namespace raln
