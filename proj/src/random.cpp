#include "raln/random.hpp"

namespace raln {

Matrix gaussian_matrix(Index rows, Index cols, Rng& rng, double stddev) {
    std::normal_distribution<double> normal(0.0, stddev);
    Matrix out(rows, cols);
    // Column-major fill order is part of the reproducibility contract.
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) out(i, j) = normal(rng);
    return out;
}

Matrix random_orthogonal(Index n, Rng& rng) {
    return random_orthonormal_columns(n, n, rng);
}

Matrix random_orthonormal_columns(Index n, Index k, Rng& rng) {
    const Matrix g = gaussian_matrix(n, k, rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(n, k);
    const Matrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    for (Index j = 0; j < k; ++j)
        if (r(j, j) < 0.0) q.col(j) *= -1.0;
    return q;
}

}  // namespace raln
