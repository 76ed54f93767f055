#include "shadow/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "shadow/errors.hpp"

namespace shadow {

Estimate batch_means(std::span<const double> series, Index batches) {
  const Index n = static_cast<Index>(series.size());
  if (n == 0)
    throw InsufficientDataError("batch means of an empty series");
  double total = 0.0;
  for (double x : series)
    total += x;
  const double mean = total / static_cast<double>(n);
  const Index b = std::min(batches, n);
  if (b < 2)
    return {mean, std::numeric_limits<double>::infinity()};

  const Index width = n / b;
  std::vector<double> means(static_cast<std::size_t>(b), 0.0);
  for (Index i = 0; i < b; ++i) {
    const Index lo = i * width;
    const Index hi = (i == b - 1) ? n : lo + width;
    double s = 0.0;
    for (Index k = lo; k < hi; ++k)
      s += series[static_cast<std::size_t>(k)];
    means[static_cast<std::size_t>(i)] = s / static_cast<double>(hi - lo);
  }
  double var = 0.0;
  for (double m : means)
    var += (m - mean) * (m - mean);
  var /= static_cast<double>(b - 1);
  return {mean, std::sqrt(var / static_cast<double>(b))};
}

Estimate sample_mean(std::span<const double> samples) {
  const Index n = static_cast<Index>(samples.size());
  if (n == 0)
    throw InsufficientDataError("mean of an empty sample");
  double total = 0.0;
  for (double x : samples)
    total += x;
  const double mean = total / static_cast<double>(n);
  if (n < 2)
    return {mean, std::numeric_limits<double>::infinity()};
  double var = 0.0;
  for (double x : samples)
    var += (x - mean) * (x - mean);
  var /= static_cast<double>(n - 1);
  return {mean, std::sqrt(var / static_cast<double>(n))};
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw std::invalid_argument("fit_line: x and y differ in length");
  const Index n = static_cast<Index>(x.size());
  if (n < 2)
    throw InsufficientDataError("fit_line needs at least two points");
  double mx = 0.0, my = 0.0;
  for (Index i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (Index i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0)
    throw InsufficientDataError("fit_line: all x values coincide");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  fit.residuals.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    fit.residuals[static_cast<std::size_t>(i)] = r;
    ss += r * r;
  }
  fit.slope_std_error =
      n > 2 ? std::sqrt(ss / static_cast<double>(n - 2) / sxx) : 0.0;
  return fit;
}

LinearFit fit_loglog(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx, ly;
  lx.reserve(x.size());
  ly.reserve(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw std::invalid_argument("fit_loglog needs positive data");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return fit_line(lx, ly);
}

} // namespace shadow
