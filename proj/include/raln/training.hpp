#pragma once

#include "raln/error.hpp"
#include "raln/random.hpp"
#include "raln/types.hpp"

#include <functional>
#include <variant>
#include <vector>

namespace raln {

enum class Activation { Tanh, Relu };

/// x̂ = Dec · Enc · x with Enc K×D and Dec D×K, no biases.
struct LinearArch {
    Index k = 1;
};

/// Encoder D → widths[0] → … → widths.back() (the embedding), decoder mirrored.
/// Hidden layers use `activation`; the embedding and the output are linear.
struct MlpArch {
    std::vector<Index> widths;
    Activation activation = Activation::Tanh;
};

using Architecture = std::variant<LinearArch, MlpArch>;

enum class OptimizerKind { GradientDescent, Adam, Lbfgs };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::GradientDescent;
    double step_size = 1e-2;
    Index steps = 1000;
    std::uint64_t seed = 0;
    double init_scale = 1.0;           // weights ~ N(0, init_scale² / fan_in)
    double final_step_fraction = 1.0;  // step size decays geometrically to this fraction
};

/// Dense feed-forward network over a flat parameter vector. Every layer but the
/// last applies the activation.
class Mlp {
public:
    Mlp() = default;
    Mlp(std::vector<Index> sizes, Activation activation, bool bias);

    Index parameter_count() const noexcept { return parameter_count_; }
    Index input_size() const { return sizes_.front(); }
    Index output_size() const { return sizes_.back(); }

    void initialize(double* params, Rng& rng, double init_scale) const;

    /// outputs (if given) receives the input followed by every layer's output.
    Matrix forward(const double* params, const Matrix& in, std::vector<Matrix>* outputs = nullptr) const;

    /// Adds ∂L/∂params into grad and returns ∂L/∂input.
    Matrix backward(const double* params, const std::vector<Matrix>& outputs, const Matrix& grad_out,
                    double* grad) const;

private:
    struct Layer {
        Index in, out, offset;
        bool activated;
    };

    std::vector<Index> sizes_;
    std::vector<Layer> layers_;
    Activation activation_ = Activation::Tanh;
    bool bias_ = false;
    Index parameter_count_ = 0;
};

/// Encoder and decoder sharing one flat parameter vector (encoder first).
class Autoencoder {
public:
    Autoencoder(Index d, const Architecture& arch);

    Index parameter_count() const noexcept { return encoder_.parameter_count() + decoder_.parameter_count(); }
    Index embedding_size() const { return encoder_.output_size(); }
    const Mlp& encoder() const noexcept { return encoder_; }
    const Mlp& decoder() const noexcept { return decoder_; }

    Vector initial_parameters(Rng& rng, double init_scale) const;
    Matrix encode(const Vector& params, const Matrix& x) const;
    Matrix reconstruct(const Vector& params, const Matrix& x) const;

private:
    Mlp encoder_;
    Mlp decoder_;
};

/// Value and gradient of a smooth objective.
using Objective = std::function<double(const Vector& params, Vector& grad)>;

/// Called before every update with the current iterate and its loss, and once
/// more after the last update with step == steps.
using StepObserver = std::function<void(Index step, const Vector& params, double loss)>;

/// Runs the configured optimizer in place. Throws DivergenceDetected as soon as
/// the loss or gradient becomes non-finite.
void minimize(const Objective& objective, Vector& params, const OptimizerConfig& config,
              const StepObserver& observer = {});

struct Checkpoint {
    Index step = 0;
    Vector energy;    // ‖p_iᵀ X̂‖² per eigendirection of X Xᵀ
    Vector residual;  // ‖p_iᵀ (X̂ − X)‖²
    double loss = 0.0;  // ‖X̂ − X‖²_F
};

struct DynamicsTrace {
    Vector eigenvalues;  // of X Xᵀ, descending, all D of them
    Vector reference;    // ‖p_iᵀ X‖²
    std::vector<Checkpoint> checkpoints;
};

class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, DynamicsTrace partial)
        : Error(Errc::DivergenceDetected, what), partial_(std::move(partial)) {}

    const DynamicsTrace& partial_trace() const noexcept { return partial_; }

private:
    DynamicsTrace partial_;
};

/// Full-batch training on the mean squared reconstruction error, recording a
/// checkpoint every `checkpoint_every` steps and after the last one.
DynamicsTrace train_autoencoder_gd(const Matrix& x, const Architecture& arch, const OptimizerConfig& config,
                                   Index checkpoint_every);

/// First checkpoint step at which residual(direction) ≤ fraction · its initial
/// value; −1 if it never gets there.
Index first_crossing(const DynamicsTrace& trace, Index direction, double fraction = 0.5);

}  // namespace raln
