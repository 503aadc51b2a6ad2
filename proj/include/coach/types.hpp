#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace coach {

using StateId = std::int32_t;
using ActionId = std::int32_t;
using JointActionId = std::int32_t;
using LatentId = std::int32_t;
using ProfileId = std::int32_t;

using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace coach
