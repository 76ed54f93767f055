#pragma once

#include <span>
#include <vector>

#include "shadow/types.hpp"

namespace shadow {

inline constexpr Index kDefaultBatches = 16;

/// Mean of a correlated series with the non-overlapping batch-means standard
/// error. Uses min(batches, n) batches; the trailing remainder is folded into
/// the last batch.
Estimate batch_means(std::span<const double> series,
                     Index batches = kDefaultBatches);

/// Mean and standard error of independent samples.
Estimate sample_mean(std::span<const double> samples);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_std_error = 0.0;
  std::vector<double> residuals;
};

/// Ordinary least-squares line y = intercept + slope * x.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

/// Fits log(y) = c + slope * log(x).
LinearFit fit_loglog(std::span<const double> x, std::span<const double> y);

} // namespace shadow
