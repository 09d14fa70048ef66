#pragma once

#include <Eigen/Dense>

namespace convtest {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

}  // namespace convtest
