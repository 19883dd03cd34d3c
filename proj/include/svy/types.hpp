#pragma once

#include <Eigen/Dense>

namespace svy {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

}  // namespace svy
