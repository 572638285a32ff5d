#include "raln/experiments.hpp"

#include "raln/error.hpp"

#include <cmath>

namespace raln {

namespace {

Dataset slice(const Dataset& ds, Index first, Index count) {
    std::vector<std::uint32_t> labels(ds.labels.begin() + first, ds.labels.begin() + first + count);
    return Dataset{DataMatrix(ds.x.values().middleCols(first, count)), std::move(labels), ds.num_classes, ds.meta};
}

double mean_recon(const Autoencoder& model, const Vector& params, const Matrix& x) {
    return (model.reconstruct(params, x) - x).squaredNorm() / static_cast<double>(x.cols());
}

}  // namespace

OptimizerConfig default_validation_config(std::uint64_t seed) {
    OptimizerConfig c;
    c.kind = OptimizerKind::Adam;
    c.step_size = 1e-2;
    c.steps = 15000;
    c.seed = seed;
    c.init_scale = 0.5;
    c.final_step_fraction = 1e-2;
    return c;
}

GdValidation gd_validate_closed_form(const JointProblem& problem, const OptimizerConfig& config, Index record_every) {
    if (record_every < 1) throw Error(Errc::InvalidArgument, "record interval must be >= 1");
    const Matrix& x = problem.x.values();
    const Matrix& y = problem.y;
    const Index d = x.rows(), c = y.rows(), k = problem.k;
    if (k < 1) throw Error(Errc::InvalidArgument, "K must be >= 1");

    GdValidation out;
    out.optimal = optimal_joint_loss(problem);

    const Index nv = d * k, nw = k * c, nz = k * d;
    Rng rng = counter_rng(config.seed, 0);
    Vector params(nv + nw + nz);
    Eigen::Map<Matrix>(params.data(), d, k) = gaussian_matrix(d, k, rng, config.init_scale / std::sqrt(double(d)));
    Eigen::Map<Matrix>(params.data() + nv, k, c) = gaussian_matrix(k, c, rng, config.init_scale / std::sqrt(double(k)));
    Eigen::Map<Matrix>(params.data() + nv + nw, k, d) =
        gaussian_matrix(k, d, rng, config.init_scale / std::sqrt(double(k)));

    const Objective objective = [&](const Vector& p, Vector& grad) {
        const Eigen::Map<const Matrix> v(p.data(), d, k), w(p.data() + nv, k, c), z(p.data() + nv + nw, k, d);
        const JointGradients g = joint_loss_gradients(x, y, v, w, z, problem.lambda);
        Eigen::Map<Matrix>(grad.data(), d, k) = g.v;
        Eigen::Map<Matrix>(grad.data() + nv, k, c) = g.w;
        Eigen::Map<Matrix>(grad.data() + nv + nw, k, d) = g.z;
        return evaluate_joint_loss(x, y, v, w, z, problem.lambda);
    };
    out.min_gap = std::numeric_limits<double>::infinity();
    const StepObserver observer = [&](Index step, const Vector&, double loss) {
        const double gap = loss - out.optimal;
        out.min_gap = std::min(out.min_gap, gap);
        out.final_gap = gap;
        if (step % record_every == 0 || step == config.steps) out.curve.push_back({step, loss, gap});
    };
    minimize(objective, params, config, observer);
    return out;
}

R3Result r3_demo(const Dataset& train, const Dataset& test, const R3Config& config) {
    const Matrix& x = train.x.values();
    if (test.x.rows() != x.rows()) throw Error(Errc::ShapeMismatch, "train and test dimensions differ");
    if (!(config.beta >= 0.0)) throw Error(Errc::InvalidArgument, "beta must be >= 0");
    const Autoencoder model(x.rows(), config.arch);
    const Matrix y = one_hot(train.labels, train.num_classes);
    const Mlp head({model.embedding_size(), static_cast<Index>(train.num_classes)}, Activation::Tanh, true);

    // Both runs share the autoencoder initialization; the head has its own stream.
    Rng init_rng = counter_rng(config.optimizer.seed, 0);
    const Vector initial = model.initial_parameters(init_rng, config.optimizer.init_scale);
    Rng head_rng = counter_rng(config.optimizer.seed, 1);
    Vector head_initial(head.parameter_count());
    head.initialize(head_initial.data(), head_rng, config.optimizer.init_scale);

    const double inv_n = 1.0 / static_cast<double>(x.cols());
    const Index enc_size = model.encoder().parameter_count();
    const Index ae_size = model.parameter_count();

    auto train_model = [&](double beta) {
        Vector params(ae_size + head.parameter_count());
        params << initial, head_initial;
        std::vector<Matrix> enc_out, dec_out, head_out;
        const Objective objective = [&](const Vector& p, Vector& grad) {
            const Matrix code = model.encoder().forward(p.data(), x, &enc_out);
            const Matrix recon = model.decoder().forward(p.data() + enc_size, code, &dec_out);
            const Matrix diff = recon - x;
            double loss = diff.squaredNorm() * inv_n;
            Matrix grad_code = model.decoder().backward(p.data() + enc_size, dec_out, (2.0 * inv_n) * diff,
                                                        grad.data() + enc_size);
            if (beta > 0.0) {
                const Matrix pred = head.forward(p.data() + ae_size, code, &head_out);
                const Matrix err = pred - y;
                loss += beta * err.squaredNorm() * inv_n;
                grad_code += head.backward(p.data() + ae_size, head_out, (2.0 * beta * inv_n) * err,
                                           grad.data() + ae_size);
            }
            model.encoder().backward(p.data(), enc_out, grad_code, grad.data());
            return loss;
        };
        minimize(objective, params, config.optimizer);
        return Vector(params.head(ae_size));
    };

    const Vector plain = train_model(0.0);
    const Vector supervised = config.beta > 0.0 ? train_model(config.beta) : plain;

    R3Result r;
    const Matrix& xt = test.x.values();
    r.recon_train_plain = mean_recon(model, plain, x);
    r.recon_test_plain = mean_recon(model, plain, xt);
    r.recon_train_supervised = mean_recon(model, supervised, x);
    r.recon_test_supervised = mean_recon(model, supervised, xt);
    r.probe_acc_plain = linear_probe(model.encode(plain, x), y, model.encode(plain, xt), test.labels, config.ridge);
    r.probe_acc_supervised =
        linear_probe(model.encode(supervised, x), y, model.encode(supervised, xt), test.labels, config.ridge);
    return r;
}

double filtered_probe_accuracy(const Dataset& train, const Dataset& test, FilterMode mode, const SubspaceCut& cut,
                               bool center, std::optional<double> ridge) {
    const SubspaceFilter filter = fit_subspace_filter(train.x.values(), mode, cut, center);
    const Matrix y = one_hot(train.labels, train.num_classes);
    return linear_probe(filter.apply(train.x.values()), y, filter.apply(test.x.values()), test.labels, ridge);
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, Index n_train) {
    if (n_train < 1 || n_train >= ds.x.cols()) throw Error(Errc::InvalidArgument, "split must leave both parts non-empty");
    return {slice(ds, 0, n_train), slice(ds, n_train, ds.x.cols() - n_train)};
}

}  // namespace raln
