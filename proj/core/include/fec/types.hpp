#pragma once

#include <Eigen/Dense>

namespace fec {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

}  // namespace fec
