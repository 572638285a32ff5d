#include "raln/noise.hpp"

#include "raln/alignment.hpp"
#include "raln/error.hpp"
#include "raln/joint.hpp"
#include "raln/linalg.hpp"
#include "raln/parallel.hpp"

#include <cmath>
#include <sstream>

namespace raln {

namespace {

constexpr Index kDrawsPerBlock = 256;

template <class... Fs>
struct Overloaded : Fs... {
    using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

bool bernoulli(Rng& rng, double p) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53 < p;
}

void check_probability(double p) {
    if (!(p >= 0.0 && p < 1.0)) throw Error(Errc::InvalidArgument, "masking probability must lie in [0, 1)");
}

// Patch index of every coordinate under HWC flattening.
std::vector<Index> patch_ids(const PatchMask& m) {
    const ImageGeometry& g = m.image;
    std::vector<Index> ids(static_cast<std::size_t>(g.size()));
    const Index patches_per_row = g.width / m.patch_w;
    for (std::uint32_t row = 0; row < g.height; ++row)
        for (std::uint32_t col = 0; col < g.width; ++col)
            for (std::uint32_t ch = 0; ch < g.channels; ++ch)
                ids[(std::size_t{row} * g.width + col) * g.channels + ch] =
                    static_cast<Index>(row / m.patch_h) * patches_per_row + col / m.patch_w;
    return ids;
}

struct BlockStats {
    Index count = 0;
    Matrix s_mean, s_m2, g_mean, g_m2;
};

// Welford accumulation over draws [first, first + count).
BlockStats accumulate(const NoiseModel& model, const Matrix& x, std::uint64_t seed, Index first, Index count) {
    BlockStats b;
    b.s_mean = Matrix::Zero(x.rows(), x.cols());
    b.s_m2 = b.s_mean;
    b.g_mean = Matrix::Zero(x.rows(), x.rows());
    b.g_m2 = b.g_mean;
    for (Index i = 0; i < count; ++i) {
        Rng rng = counter_rng(seed, static_cast<std::uint64_t>(first + i));
        const Matrix draw = sample_noise(model, x, rng);
        Matrix gram = draw * draw.transpose();
        ++b.count;
        const double inv = 1.0 / static_cast<double>(b.count);
        Matrix delta = draw - b.s_mean;
        b.s_mean += delta * inv;
        b.s_m2.array() += delta.array() * (draw - b.s_mean).array();
        delta = gram - b.g_mean;
        b.g_mean += delta * inv;
        b.g_m2.array() += delta.array() * (gram - b.g_mean).array();
    }
    return b;
}

// Chan et al. pairwise combination of two Welford states.
void merge(BlockStats& into, const BlockStats& other) {
    if (other.count == 0) return;
    if (into.count == 0) {
        into = other;
        return;
    }
    const double na = static_cast<double>(into.count), nb = static_cast<double>(other.count);
    const double n = na + nb;
    auto combine = [&](Matrix& mean, Matrix& m2, const Matrix& mean_b, const Matrix& m2_b) {
        const Matrix delta = mean_b - mean;
        mean += delta * (nb / n);
        m2 += m2_b + delta.cwiseProduct(delta) * (na * nb / n);
    };
    combine(into.s_mean, into.s_m2, other.s_mean, other.s_m2);
    combine(into.g_mean, into.g_m2, other.g_mean, other.g_m2);
    into.count += other.count;
}

Matrix standard_error(const Matrix& m2, Index n) {
    if (n < 2) return Matrix::Zero(m2.rows(), m2.cols());
    const double nn = static_cast<double>(n);
    return (m2.array().max(0.0) / (nn - 1.0) / nn).sqrt().matrix();
}

}  // namespace

void validate_noise(const NoiseModel& model, Index d) {
    std::visit(Overloaded{
                   [](const AdditiveGaussian& g) {
                       if (!(g.sigma >= 0.0) || !std::isfinite(g.sigma))
                           throw Error(Errc::InvalidArgument, "Gaussian sigma must be finite and >= 0");
                   },
                   [](const PixelDropout& m) { check_probability(m.p); },
                   [d](const PatchMask& m) {
                       check_probability(m.p);
                       const ImageGeometry& g = m.image;
                       if (g.size() != static_cast<std::uint64_t>(d)) {
                           std::ostringstream msg;
                           msg << "image " << g.height << "x" << g.width << "x" << g.channels
                               << " does not match D=" << d;
                           throw Error(Errc::GeometryMismatch, msg.str());
                       }
                       if (m.patch_h == 0 || m.patch_w == 0 || g.height % m.patch_h != 0 || g.width % m.patch_w != 0) {
                           std::ostringstream msg;
                           msg << "patch " << m.patch_h << "x" << m.patch_w << " does not tile the "
                               << g.height << "x" << g.width << " image";
                           throw Error(Errc::GeometryMismatch, msg.str());
                       }
                   },
               },
               model);
}

NoiseModel with_level(const NoiseModel& model, double level) {
    return std::visit(Overloaded{
                          [level](AdditiveGaussian g) -> NoiseModel { g.sigma = level; return g; },
                          [level](PixelDropout m) -> NoiseModel { m.p = level; return m; },
                          [level](PatchMask m) -> NoiseModel { m.p = level; return m; },
                      },
                      model);
}

double noise_level(const NoiseModel& model) {
    return std::visit(Overloaded{
                          [](const AdditiveGaussian& g) { return g.sigma; },
                          [](const PixelDropout& m) { return m.p; },
                          [](const PatchMask& m) { return m.p; },
                      },
                      model);
}

std::string describe(const NoiseModel& model) {
    std::ostringstream out;
    out.precision(17);
    std::visit(Overloaded{
                   [&](const AdditiveGaussian& g) { out << "gaussian:" << g.sigma; },
                   [&](const PixelDropout& m) { out << "dropout:" << m.p; },
                   [&](const PatchMask& m) { out << "mask:" << m.p << ":" << m.patch_h << ":" << m.patch_w; },
               },
               model);
    return out.str();
}

NoiseMoments closed_form_moments(const NoiseModel& model, const Matrix& x) {
    if (!all_finite(x)) throw Error(Errc::NonFinite, "X has non-finite entries");
    validate_noise(model, x.rows());
    const Matrix gram = x * x.transpose();
    NoiseMoments out;
    std::visit(Overloaded{
                   [&](const AdditiveGaussian& g) {
                       out.s = x;
                       out.g = gram;
                       out.g.diagonal().array() += g.sigma;
                   },
                   [&](const PixelDropout& m) {
                       const double keep = 1.0 - m.p;
                       out.s = keep * x;
                       out.g = (keep * keep) * gram;
                       out.g.diagonal() = keep * gram.diagonal();
                   },
                   [&](const PatchMask& m) {
                       const double keep = 1.0 - m.p;
                       const std::vector<Index> ids = patch_ids(m);
                       out.s = keep * x;
                       out.g.resize(gram.rows(), gram.cols());
                       for (Index j = 0; j < gram.cols(); ++j)
                           for (Index i = 0; i < gram.rows(); ++i)
                               out.g(i, j) = (ids[static_cast<std::size_t>(i)] == ids[static_cast<std::size_t>(j)]
                                                  ? keep
                                                  : keep * keep) *
                                             gram(i, j);
                   },
               },
               model);
    return out;
}

Matrix sample_noise(const NoiseModel& model, const Matrix& x, Rng& rng) {
    validate_noise(model, x.rows());
    return std::visit(
        Overloaded{
            [&](const AdditiveGaussian& g) -> Matrix {
                if (g.sigma == 0.0) return x;
                return x + gaussian_matrix(x.rows(), x.cols(), rng, std::sqrt(g.sigma / static_cast<double>(x.cols())));
            },
            [&](const PixelDropout& m) -> Matrix {
                Matrix out = x;
                for (Index j = 0; j < x.cols(); ++j)
                    for (Index i = 0; i < x.rows(); ++i)
                        if (bernoulli(rng, m.p)) out(i, j) = 0.0;
                return out;
            },
            [&](const PatchMask& m) -> Matrix {
                const std::vector<Index> ids = patch_ids(m);
                const Index n_patches = static_cast<Index>((m.image.height / m.patch_h) * (m.image.width / m.patch_w));
                std::vector<char> dropped(static_cast<std::size_t>(n_patches));
                Matrix out = x;
                for (Index j = 0; j < x.cols(); ++j) {
                    for (auto& d : dropped) d = bernoulli(rng, m.p) ? 1 : 0;
                    for (Index i = 0; i < x.rows(); ++i)
                        if (dropped[static_cast<std::size_t>(ids[static_cast<std::size_t>(i)])]) out(i, j) = 0.0;
                }
                return out;
            },
        },
        model);
}

Matrix sample_noise(const NoiseModel& model, const Matrix& x, std::uint64_t seed) {
    Rng rng = counter_rng(seed, 0);
    return sample_noise(model, x, rng);
}

NoiseMoments mc_moments(const NoiseModel& model, const Matrix& x, Index n_samples, std::uint64_t seed) {
    if (n_samples < 1) throw Error(Errc::InvalidArgument, "n_samples must be >= 1");
    if (!all_finite(x)) throw Error(Errc::NonFinite, "X has non-finite entries");
    validate_noise(model, x.rows());

    const Index n_blocks = (n_samples + kDrawsPerBlock - 1) / kDrawsPerBlock;
    const Index wave = static_cast<Index>(std::max<std::size_t>(thread_budget(), 1)) * 4;
    BlockStats total;
    std::vector<BlockStats> blocks;
    for (Index start = 0; start < n_blocks; start += wave) {
        const Index count = std::min(wave, n_blocks - start);
        blocks.assign(static_cast<std::size_t>(count), BlockStats{});
        parallel_for(static_cast<std::size_t>(count), [&](std::size_t i) {
            const Index block = start + static_cast<Index>(i);
            const Index first = block * kDrawsPerBlock;
            blocks[i] = accumulate(model, x, seed, first, std::min(kDrawsPerBlock, n_samples - first));
        });
        for (const auto& b : blocks) merge(total, b);
    }

    NoiseMoments out;
    out.s = total.s_mean;
    out.g = total.g_mean;
    out.monte_carlo = MonteCarloInfo{n_samples, seed, standard_error(total.s_m2, n_samples),
                                     standard_error(total.g_m2, n_samples)};
    return out;
}

DaeSolution solve_dae(const Matrix& x, const NoiseMoments& moments, Index k) {
    if (moments.s.rows() != x.rows() || moments.s.cols() != x.cols() || moments.g.rows() != x.rows() ||
        moments.g.cols() != x.rows())
        throw Error(Errc::ShapeMismatch, "noise moments do not match X");
    if (k < 1) throw Error(Errc::InvalidArgument, "K must be >= 1");
    const Matrix cross = moments.s * x.transpose();  // S Xᵀ, D×D
    const Matrix a = cross * cross.transpose();
    const GeneralizedEigenBasis basis = generalized_sym_eig(0.5 * (a + a.transpose()), moments.g);
    if (k > basis.values.size()) {
        std::ostringstream msg;
        msg << "K=" << k << " exceeds the effective rank of G (" << basis.values.size() << ")";
        throw Error(Errc::KExceedsRank, msg.str());
    }
    return {basis.vectors.leftCols(k), basis.values, k, moments.monte_carlo};
}

Matrix optimal_decoder(const Matrix& x, const NoiseMoments& moments, const Matrix& v) {
    if (v.rows() != x.rows()) throw Error(Errc::ShapeMismatch, "encoder rows do not match D");
    return spd_inverse(v.transpose() * moments.g * v) * (v.transpose() * moments.s * x.transpose());
}

double expected_denoising_loss(const Matrix& x, const NoiseMoments& moments, const Matrix& v) {
    if (v.rows() != x.rows()) throw Error(Errc::ShapeMismatch, "encoder rows do not match D");
    const Matrix inv = spd_inverse(v.transpose() * moments.g * v);
    const Matrix t = v.transpose() * moments.s * x.transpose();  // K×D
    return x.squaredNorm() - (inv * t * t.transpose()).trace();
}

Matrix dae_supervised_product(const Matrix& x, const Matrix& y, const NoiseModel& model, Index k) {
    const DaeSolution dae = solve_dae(x, closed_form_moments(model, x), k);
    return fit_head(x, y, dae.v).transpose() * dae.v.transpose();
}

double product_deviation(const Matrix& x, const Matrix& y, const std::vector<NoiseModel>& models, Index k) {
    if (models.empty()) throw Error(Errc::InvalidArgument, "at least one noise model is required");
    std::vector<Matrix> products(models.size());
    parallel_for(models.size(), [&](std::size_t i) { products[i] = dae_supervised_product(x, y, models[i], k); });
    const double scale = products.front().norm();
    double worst = 0.0;
    for (std::size_t i = 0; i < products.size(); ++i)
        for (std::size_t j = i + 1; j < products.size(); ++j)
            worst = std::max(worst, (products[i] - products[j]).norm());
    if (worst == 0.0) return 0.0;
    return worst / scale;
}

double gaussian_invariance_check(const Matrix& x, const Matrix& y, const std::vector<double>& sigmas, Index k) {
    std::vector<NoiseModel> models;
    for (double s : sigmas) models.emplace_back(AdditiveGaussian{s});
    return product_deviation(x, y, models, k);
}

std::vector<DaeDeltaRow> dae_alignment_delta(const Matrix& x, const Matrix& y, const NoiseModel& family,
                                             const std::vector<double>& levels, const std::vector<Index>& k_values) {
    const NoiseMoments clean = closed_form_moments(with_level(family, 0.0), x);
    std::vector<double> clean_scores(k_values.size());
    parallel_for(k_values.size(), [&](std::size_t j) {
        clean_scores[j] = encoder_alignment_score(x, y, solve_dae(x, clean, k_values[j]).v);
    });

    std::vector<DaeDeltaRow> rows(levels.size() * k_values.size());
    parallel_for(levels.size(), [&](std::size_t i) {
        const NoiseMoments noisy = closed_form_moments(with_level(family, levels[i]), x);
        for (std::size_t j = 0; j < k_values.size(); ++j) {
            DaeDeltaRow& row = rows[i * k_values.size() + j];
            row.level = levels[i];
            row.k = k_values[j];
            row.score_clean = clean_scores[j];
            row.score_noise = encoder_alignment_score(x, y, solve_dae(x, noisy, k_values[j]).v);
            if (row.score_clean > 0.0)
                row.delta = (row.score_noise - row.score_clean) / row.score_clean;
            else
                row.delta = row.score_noise > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        }
    });
    return rows;
}

}  // namespace raln
