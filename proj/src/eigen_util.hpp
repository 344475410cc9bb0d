#pragma once

#include <Eigen/Dense>

#include <complex>

namespace resfno::detail {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;
using CRowMat = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline CMapMat cmap(const double* p, Eigen::Index rows, Eigen::Index cols) { return CMapMat(p, rows, cols); }
inline MapMat map(double* p, Eigen::Index rows, Eigen::Index cols) { return MapMat(p, rows, cols); }

} // namespace resfno::detail
