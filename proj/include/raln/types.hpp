#pragma once

#include <Eigen/Dense>

#include <memory>
#include <mutex>

namespace raln {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// D×N sample matrix, one sample per column. Entries are finite. The effective
/// rank (singular values above the default numerical-rank threshold) is
/// computed on first use and shared between copies.
class DataMatrix {
public:
    DataMatrix();
    explicit DataMatrix(Matrix values);

    const Matrix& values() const noexcept { return values_; }
    operator const Matrix&() const noexcept { return values_; }  // NOLINT(google-explicit-constructor)

    Index rows() const noexcept { return values_.rows(); }
    Index cols() const noexcept { return values_.cols(); }

    Index rank() const;

private:
    struct RankCache {
        std::once_flag once;
        Index rank = 0;
    };

    Matrix values_;
    std::shared_ptr<RankCache> rank_cache_;
};

}  // namespace raln
