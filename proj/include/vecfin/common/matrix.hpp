#pragma once

#include <Eigen/Dense>

namespace vecfin {

// Batch matrices are row-major: one row per sample or environment.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;
using Vector = Eigen::VectorXd;

}  // namespace vecfin
