#include "shadow/linalg.hpp"

#include <limits>
#include <random>
#include <stdexcept>

namespace shadow {

ThinQR thin_qr(MatRef a) {
  const Index n = a.rows(), k = a.cols();
  if (k > n)
    throw std::invalid_argument("thin_qr needs at least as many rows as columns");
  if (k == 0)
    return {Mat(n, 0), Mat(0, 0)};
  Eigen::HouseholderQR<Mat> qr(a);
  ThinQR out;
  out.Q = qr.householderQ() * Mat::Identity(n, k);
  out.R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  for (Index j = 0; j < k; ++j) {
    if (out.R(j, j) < 0.0) {
      out.R.row(j) *= -1.0;
      out.Q.col(j) *= -1.0;
    }
  }
  return out;
}

Mat orthogonal_complement(MatRef a) {
  const Index n = a.rows(), k = a.cols();
  if (k == 0)
    return Mat::Identity(n, n);
  Eigen::HouseholderQR<Mat> qr(a);
  const Mat full = qr.householderQ() * Mat::Identity(n, n);
  return full.rightCols(n - k);
}

Mat gaussian_matrix(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Mat out(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i)
      out(i, j) = normal(rng);
  return out;
}

double condition_number(MatRef a) {
  if (a.size() == 0)
    return 1.0;
  Eigen::JacobiSVD<Mat> svd(a);
  const auto &sv = svd.singularValues();
  const double smallest = sv(sv.size() - 1);
  if (smallest == 0.0)
    return std::numeric_limits<double>::infinity();
  return sv(0) / smallest;
}

} // namespace shadow
