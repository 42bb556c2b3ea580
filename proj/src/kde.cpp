#include "deap/kde.hpp"

#include <cmath>
#include <limits>

#include "deap/errors.hpp"

namespace deap::kde {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

// log of the averaged product kernel, computed via log-sum-exp so distant
// kernels underflow gracefully instead of zeroing the sum.
double log_density(const KdeWindow& window, const nn::Vector& bandwidths,
                   const nn::Vector& query) {
  const std::size_t dim = window.dim();
  if (query.size() != dim || bandwidths.size() != dim)
    throw ShapeError("kde_density: query/bandwidth dimension mismatch");

  double log_norm = 0.0;  // log prod_j (2 pi h_j^2)^(-1/2)
  for (double h : bandwidths) log_norm -= 0.5 * std::log(kTwoPi * h * h);

  double max_exponent = -std::numeric_limits<double>::infinity();
  std::vector<double> exponents;
  exponents.reserve(window.entries.size());
  for (const auto& x : window.entries) {
    double e = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double z = (query[j] - x[j]) / bandwidths[j];
      e -= 0.5 * z * z;
    }
    exponents.push_back(e);
    if (e > max_exponent) max_exponent = e;
  }
  double sum = 0.0;
  for (double e : exponents) sum += std::exp(e - max_exponent);
  return log_norm + max_exponent + std::log(sum) -
         std::log(static_cast<double>(window.entries.size()));
}

}  // namespace

nn::Vector bandwidth_silverman(const KdeWindow& window) {
  if (window.empty()) throw ShapeError("bandwidth_silverman: empty window");
  const std::size_t n = window.size();
  const std::size_t dim = window.dim();
  nn::Vector mean(dim, 0.0);
  for (const auto& x : window.entries)
    for (std::size_t j = 0; j < dim; ++j) mean[j] += x[j];
  for (auto& v : mean) v /= static_cast<double>(n);

  nn::Vector out(dim, window.bandwidth_floor);
  if (n < 2) return out;  // sigma undefined for one sample; floor applies
  const double scale = 1.06 * std::pow(static_cast<double>(n), -0.2);
  for (std::size_t j = 0; j < dim; ++j) {
    double ss = 0.0;
    for (const auto& x : window.entries) {
      const double d = x[j] - mean[j];
      ss += d * d;
    }
    const double sigma = std::sqrt(ss / static_cast<double>(n - 1));
    out[j] = std::max(window.bandwidth_floor, scale * sigma);
  }
  return out;
}

double kde_density(const KdeWindow& window, const nn::Vector& bandwidths,
                   const nn::Vector& query) {
  if (window.empty()) throw ShapeError("kde_density: empty window");
  return std::exp(log_density(window, bandwidths, query));
}

DistributionVector distribution_vector(const KdeWindow& window, std::size_t probes) {
  DistributionVector out;
  if (window.empty()) {
    out.values.assign(probes, 0.0);
    out.cold_start = true;
    return out;
  }
  const nn::Vector bw = bandwidth_silverman(window);
  const std::size_t n = window.size();
  out.values.resize(probes);
  for (std::size_t i = 0; i < probes; ++i) {
    const std::size_t idx = i * n / probes;
    out.values[i] = log_density(window, bw, window.entries[idx]);
  }
  return out;
}

}  // namespace deap::kde
