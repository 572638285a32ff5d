#include "raln/filter_probe.hpp"

#include "raln/alignment.hpp"
#include "raln/error.hpp"

#include <sstream>

namespace raln {

Index resolve_cut(const Vector& eigenvalues, FilterMode mode, const SubspaceCut& cut) {
    const Index r = eigenvalues.size();
    Index k = 0;
    if (const auto* count = std::get_if<CountCut>(&cut)) {
        k = count->k;
        if (k < 0 || k > r) {
            std::ostringstream msg;
            msg << "cut k=" << k << " outside [0, rank=" << r << "]";
            throw Error(Errc::CutExceedsRank, msg.str());
        }
    } else {
        const double fraction = std::get<FractionCut>(cut).fraction;
        if (!(fraction > 0.0 && fraction <= 1.0)) throw Error(Errc::InvalidArgument, "cut fraction must lie in (0, 1]");
        const double target = mode == FilterMode::Top ? fraction : 1.0 - fraction;
        const double total = eigenvalues.sum();
        double running = 0.0;
        while (k < r && running < target) {
            running = k + 1 == r ? 1.0 : running + eigenvalues(k) / total;
            ++k;
        }
    }
    const Index kept = mode == FilterMode::Top ? k : r - k;
    if (kept == 0) {
        std::ostringstream msg;
        msg << (mode == FilterMode::Top ? "top" : "bottom") << " filter with boundary " << k << " of rank " << r
            << " keeps no direction";
        throw Error(Errc::CutExceedsRank, msg.str());
    }
    return k;
}

SubspaceFilter fit_subspace_filter(const Matrix& x_train, FilterMode mode, const SubspaceCut& cut, bool center) {
    if (!all_finite(x_train)) throw Error(Errc::NonFinite, "training data has non-finite entries");
    SubspaceFilter f;
    f.mode = mode;
    f.cut = cut;
    if (center) f.mean = x_train.rowwise().mean();
    f.basis = fast_gram_eigh(center ? center_rows(x_train) : x_train, GramMajor::Column);
    f.boundary = resolve_cut(f.basis.values, mode, cut);
    return f;
}

Matrix SubspaceFilter::kept() const {
    if (mode == FilterMode::Top) return basis.vectors.leftCols(boundary);
    return basis.vectors.rightCols(basis.size() - boundary);
}

Matrix SubspaceFilter::projector() const {
    const Matrix q = kept();
    return q * q.transpose();
}

Matrix SubspaceFilter::apply(const Matrix& x) const {
    if (x.rows() != basis.vectors.rows()) throw Error(Errc::ShapeMismatch, "sample dimension differs from the filter");
    const Matrix q = kept();
    if (mean) return q * (q.transpose() * (x.colwise() - *mean));
    return q * (q.transpose() * x);
}

Matrix LinearProbe::scores(const Matrix& x) const {
    if (x.rows() != weights.cols()) throw Error(Errc::ShapeMismatch, "probe input dimension mismatch");
    return (weights * x).colwise() + offset;
}

std::vector<std::uint32_t> LinearProbe::predict(const Matrix& x) const {
    const Matrix s = scores(x);
    std::vector<std::uint32_t> out(static_cast<std::size_t>(s.cols()));
    for (Index j = 0; j < s.cols(); ++j) {
        Index best = 0;
        for (Index c = 1; c < s.rows(); ++c)
            if (s(c, j) > s(best, j)) best = c;
        out[static_cast<std::size_t>(j)] = static_cast<std::uint32_t>(best);
    }
    return out;
}

LinearProbe fit_linear_probe(const Matrix& x_train, const Matrix& y_train, std::optional<double> ridge) {
    if (x_train.cols() != y_train.cols()) throw Error(Errc::ShapeMismatch, "X and Y differ in sample count");
    if (!all_finite(x_train) || !all_finite(y_train)) throw Error(Errc::NonFinite, "probe data has non-finite entries");
    const Vector x_mean = x_train.rowwise().mean();
    const Vector y_mean = y_train.rowwise().mean();
    const Matrix xc = x_train.colwise() - x_mean;
    const Matrix yc = y_train.colwise() - y_mean;
    Matrix gram = xc * xc.transpose();
    const double r = ridge.value_or(1e-6 * gram.trace() / static_cast<double>(x_train.rows()));
    if (r < 0.0) throw Error(Errc::InvalidArgument, "ridge must be >= 0");
    gram.diagonal().array() += r;
    LinearProbe probe;
    probe.weights = gram.completeOrthogonalDecomposition().solve(xc * yc.transpose()).transpose();
    probe.offset = y_mean - probe.weights * x_mean;
    return probe;
}

double accuracy(const std::vector<std::uint32_t>& predicted, const std::vector<std::uint32_t>& truth) {
    if (predicted.size() != truth.size() || truth.empty())
        throw Error(Errc::ShapeMismatch, "prediction and label counts differ");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double linear_probe(const Matrix& x_train, const Matrix& y_train, const Matrix& x_test,
                    const std::vector<std::uint32_t>& labels_test, std::optional<double> ridge) {
    if (x_test.cols() != static_cast<Index>(labels_test.size()))
        throw Error(Errc::ShapeMismatch, "test labels do not match test samples");
    if (x_test.rows() != x_train.rows()) throw Error(Errc::ShapeMismatch, "train and test dimensions differ");
    return accuracy(fit_linear_probe(x_train, y_train, ridge).predict(x_test), labels_test);
}

}  // namespace raln
