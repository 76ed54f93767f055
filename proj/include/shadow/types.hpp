#pragma once

#include <Eigen/Dense>

namespace shadow {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using VecRef = Eigen::Ref<const Vec>;
using MatRef = Eigen::Ref<const Mat>;

/// Half-open range of orbit step indices [begin, end).
struct StepRange {
  Index begin = 0;
  Index end = 0;

  Index size() const { return end - begin; }
  bool contains(Index k) const { return k >= begin && k < end; }
  bool covers(const StepRange &other) const {
    return other.begin >= begin && other.end <= end;
  }
};

/// A sample-mean estimate with its standard error.
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

} // namespace shadow
