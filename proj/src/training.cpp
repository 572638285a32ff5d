#include "raln/training.hpp"

#include "raln/linalg.hpp"

#include <cmath>
#include <deque>
#include <sstream>

namespace raln {

namespace {

bool finite(double v) { return std::isfinite(v); }

void check(double loss, const Vector& grad, Index step) {
    if (!finite(loss) || !grad.allFinite()) {
        std::ostringstream msg;
        msg << "loss became non-finite at step " << step;
        throw Error(Errc::DivergenceDetected, msg.str());
    }
}

double step_size_at(const OptimizerConfig& c, Index step) {
    if (c.final_step_fraction == 1.0 || c.steps <= 1) return c.step_size;
    const double t = static_cast<double>(step) / static_cast<double>(c.steps - 1);
    return c.step_size * std::pow(c.final_step_fraction, t);
}

void run_first_order(const Objective& objective, Vector& params, const OptimizerConfig& config,
                     const StepObserver& observer) {
    const bool adam = config.kind == OptimizerKind::Adam;
    Vector grad(params.size());
    Vector m = Vector::Zero(params.size()), v = Vector::Zero(params.size());
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    double p1 = 1.0, p2 = 1.0;
    for (Index step = 0; step < config.steps; ++step) {
        grad.setZero();
        const double loss = objective(params, grad);
        check(loss, grad, step);
        if (observer) observer(step, params, loss);
        const double lr = step_size_at(config, step);
        if (adam) {
            p1 *= beta1;
            p2 *= beta2;
            m = beta1 * m + (1.0 - beta1) * grad;
            v = beta2 * v + (1.0 - beta2) * grad.cwiseAbs2();
            params.array() -= lr * (m.array() / (1.0 - p1)) / ((v.array() / (1.0 - p2)).sqrt() + eps);
        } else {
            params -= lr * grad;
        }
    }
    grad.setZero();
    const double loss = objective(params, grad);
    check(loss, grad, config.steps);
    if (observer) observer(config.steps, params, loss);
}

// Limited-memory BFGS (memory 10) with a backtracking Armijo line search. The
// first trial step of each iteration is 1 (scaled by step_size on the first).
void run_lbfgs(const Objective& objective, Vector& params, const OptimizerConfig& config,
               const StepObserver& observer) {
    constexpr std::size_t memory = 10;
    std::deque<Vector> s_hist, y_hist;
    std::deque<double> rho_hist;
    Vector grad(params.size());
    grad.setZero();
    double loss = objective(params, grad);
    check(loss, grad, 0);
    for (Index step = 0; step < config.steps; ++step) {
        if (observer) observer(step, params, loss);
        // Two-loop recursion.
        Vector q = grad;
        std::vector<double> alpha(s_hist.size());
        for (std::size_t i = s_hist.size(); i-- > 0;) {
            alpha[i] = rho_hist[i] * s_hist[i].dot(q);
            q -= alpha[i] * y_hist[i];
        }
        if (!s_hist.empty()) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
        else q *= config.step_size;
        for (std::size_t i = 0; i < s_hist.size(); ++i) {
            const double beta = rho_hist[i] * y_hist[i].dot(q);
            q += s_hist[i] * (alpha[i] - beta);
        }
        Vector direction = -q;
        double slope = grad.dot(direction);
        if (!(slope < 0.0)) {
            direction = -grad;
            slope = -grad.squaredNorm();
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
        }
        if (slope == 0.0) {
            // Stationary point: nothing left to do.
            for (Index rest = step + 1; rest < config.steps; ++rest)
                if (observer) observer(rest, params, loss);
            break;
        }
        double t = 1.0;
        Vector trial_grad(params.size());
        Vector trial;
        double trial_loss = 0.0;
        bool accepted = false;
        for (int attempt = 0; attempt < 60; ++attempt) {
            trial = params + t * direction;
            trial_grad.setZero();
            trial_loss = objective(trial, trial_grad);
            if (finite(trial_loss) && trial_loss <= loss + 1e-4 * t * slope) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            for (Index rest = step + 1; rest < config.steps; ++rest)
                if (observer) observer(rest, params, loss);
            break;
        }
        check(trial_loss, trial_grad, step + 1);
        Vector s = trial - params;
        Vector y = trial_grad - grad;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
            if (s_hist.size() > memory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }
        params = std::move(trial);
        grad = trial_grad;
        loss = trial_loss;
    }
    if (observer) observer(config.steps, params, loss);
}

}  // namespace

Mlp::Mlp(std::vector<Index> sizes, Activation activation, bool bias)
    : sizes_(std::move(sizes)), activation_(activation), bias_(bias) {
    if (sizes_.size() < 2) throw Error(Errc::InvalidArgument, "a network needs at least one layer");
    for (Index s : sizes_)
        if (s < 1) throw Error(Errc::InvalidArgument, "layer widths must be positive");
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        layers_.push_back({sizes_[l], sizes_[l + 1], parameter_count_, l + 2 < sizes_.size()});
        parameter_count_ += sizes_[l + 1] * sizes_[l] + (bias_ ? sizes_[l + 1] : 0);
    }
}

void Mlp::initialize(double* params, Rng& rng, double init_scale) const {
    for (const Layer& layer : layers_) {
        const Matrix w = gaussian_matrix(layer.out, layer.in, rng, init_scale / std::sqrt(static_cast<double>(layer.in)));
        Eigen::Map<Matrix>(params + layer.offset, layer.out, layer.in) = w;
        if (bias_) Eigen::Map<Vector>(params + layer.offset + layer.out * layer.in, layer.out).setZero();
    }
}

Matrix Mlp::forward(const double* params, const Matrix& in, std::vector<Matrix>* outputs) const {
    if (in.rows() != sizes_.front()) throw Error(Errc::ShapeMismatch, "network input size mismatch");
    if (outputs) {
        outputs->clear();
        outputs->push_back(in);
    }
    Matrix a = in;
    for (const Layer& layer : layers_) {
        const Eigen::Map<const Matrix> w(params + layer.offset, layer.out, layer.in);
        Matrix z = w * a;
        if (bias_) z.colwise() += Eigen::Map<const Vector>(params + layer.offset + layer.out * layer.in, layer.out);
        if (layer.activated) {
            if (activation_ == Activation::Tanh) z = z.array().tanh().matrix();
            else z = z.cwiseMax(0.0);
        }
        a = std::move(z);
        if (outputs) outputs->push_back(a);
    }
    return a;
}

Matrix Mlp::backward(const double* params, const std::vector<Matrix>& outputs, const Matrix& grad_out,
                     double* grad) const {
    Matrix upstream = grad_out;
    for (std::size_t l = layers_.size(); l-- > 0;) {
        const Layer& layer = layers_[l];
        const Matrix& out = outputs[l + 1];
        if (layer.activated) {
            if (activation_ == Activation::Tanh) upstream.array() *= 1.0 - out.array().square();
            else upstream.array() *= (out.array() > 0.0).cast<double>();
        }
        Eigen::Map<Matrix>(grad + layer.offset, layer.out, layer.in) += upstream * outputs[l].transpose();
        if (bias_) Eigen::Map<Vector>(grad + layer.offset + layer.out * layer.in, layer.out) += upstream.rowwise().sum();
        const Eigen::Map<const Matrix> w(params + layer.offset, layer.out, layer.in);
        upstream = w.transpose() * upstream;
    }
    return upstream;
}

namespace {

std::pair<Mlp, Mlp> build(Index d, const Architecture& arch) {
    if (const auto* lin = std::get_if<LinearArch>(&arch)) {
        if (lin->k < 1) throw Error(Errc::InvalidArgument, "linear bottleneck must be >= 1");
        return {Mlp({d, lin->k}, Activation::Tanh, false), Mlp({lin->k, d}, Activation::Tanh, false)};
    }
    const auto& mlp = std::get<MlpArch>(arch);
    if (mlp.widths.empty()) throw Error(Errc::InvalidArgument, "MLP needs at least the embedding width");
    std::vector<Index> enc{d};
    enc.insert(enc.end(), mlp.widths.begin(), mlp.widths.end());
    std::vector<Index> dec(enc.rbegin(), enc.rend());
    return {Mlp(enc, mlp.activation, true), Mlp(dec, mlp.activation, true)};
}

}  // namespace

Autoencoder::Autoencoder(Index d, const Architecture& arch) {
    auto [enc, dec] = build(d, arch);
    encoder_ = std::move(enc);
    decoder_ = std::move(dec);
}

Vector Autoencoder::initial_parameters(Rng& rng, double init_scale) const {
    Vector p(parameter_count());
    encoder_.initialize(p.data(), rng, init_scale);
    decoder_.initialize(p.data() + encoder_.parameter_count(), rng, init_scale);
    return p;
}

Matrix Autoencoder::encode(const Vector& params, const Matrix& x) const { return encoder_.forward(params.data(), x); }

Matrix Autoencoder::reconstruct(const Vector& params, const Matrix& x) const {
    return decoder_.forward(params.data() + encoder_.parameter_count(), encoder_.forward(params.data(), x));
}

void minimize(const Objective& objective, Vector& params, const OptimizerConfig& config, const StepObserver& observer) {
    if (config.steps < 1) throw Error(Errc::InvalidArgument, "steps must be >= 1");
    if (!(config.step_size > 0.0)) throw Error(Errc::InvalidArgument, "step size must be positive");
    if (config.kind == OptimizerKind::Lbfgs) run_lbfgs(objective, params, config, observer);
    else run_first_order(objective, params, config, observer);
}

DynamicsTrace train_autoencoder_gd(const Matrix& x, const Architecture& arch, const OptimizerConfig& config,
                                   Index checkpoint_every) {
    if (!all_finite(x)) throw Error(Errc::NonFinite, "training data has non-finite entries");
    if (checkpoint_every < 1) throw Error(Errc::InvalidArgument, "checkpoint interval must be >= 1");
    const Autoencoder model(x.rows(), arch);
    Rng rng = counter_rng(config.seed, 0);
    Vector params = model.initial_parameters(rng, config.init_scale);

    DynamicsTrace trace;
    const Matrix gram = x * x.transpose();
    const EigenBasis basis = sym_eigh(0.5 * (gram + gram.transpose()), 1e-12 * gram.trace());
    trace.eigenvalues = basis.values;
    trace.reference = (basis.vectors.transpose() * x).rowwise().squaredNorm();

    const double inv_n = 1.0 / static_cast<double>(x.cols());
    const Index enc_size = model.encoder().parameter_count();
    std::vector<Matrix> enc_out, dec_out;
    const Objective objective = [&](const Vector& p, Vector& grad) {
        const Matrix code = model.encoder().forward(p.data(), x, &enc_out);
        const Matrix recon = model.decoder().forward(p.data() + enc_size, code, &dec_out);
        const Matrix diff = recon - x;
        const Matrix grad_code = model.decoder().backward(p.data() + enc_size, dec_out, (2.0 * inv_n) * diff,
                                                          grad.data() + enc_size);
        model.encoder().backward(p.data(), enc_out, grad_code, grad.data());
        return diff.squaredNorm() * inv_n;
    };
    const StepObserver observer = [&](Index step, const Vector& p, double) {
        if (step % checkpoint_every != 0 && step != config.steps) return;
        if (!trace.checkpoints.empty() && trace.checkpoints.back().step == step) return;
        const Matrix recon = model.reconstruct(p, x);
        Checkpoint c;
        c.step = step;
        c.energy = (basis.vectors.transpose() * recon).rowwise().squaredNorm();
        c.residual = (basis.vectors.transpose() * (recon - x)).rowwise().squaredNorm();
        c.loss = (recon - x).squaredNorm();
        trace.checkpoints.push_back(std::move(c));
    };
    try {
        minimize(objective, params, config, observer);
    } catch (const Error& e) {
        if (e.code() != Errc::DivergenceDetected) throw;
        const std::string what = e.what();
        throw DivergenceError(what.substr(what.find(": ") + 2), std::move(trace));
    }
    return trace;
}

Index first_crossing(const DynamicsTrace& trace, Index direction, double fraction) {
    if (trace.checkpoints.empty()) return -1;
    if (direction < 0 || direction >= trace.eigenvalues.size()) throw Error(Errc::IndexOutOfRange, "no such direction");
    const double start = trace.checkpoints.front().residual(direction);
    for (const Checkpoint& c : trace.checkpoints)
        if (c.residual(direction) <= fraction * start) return c.step;
    return -1;
}

}  // namespace raln
