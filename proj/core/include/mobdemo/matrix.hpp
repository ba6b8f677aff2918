#pragma once

#include <Eigen/Core>

namespace mobdemo {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

} // namespace mobdemo
