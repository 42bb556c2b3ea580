#pragma once

#include <cstddef>
#include <deque>

#include "deap/nn.hpp"

namespace deap::kde {

// Ring buffer of the most recent input embeddings feeding the density estimate.
struct KdeWindow {
  std::size_t capacity = 50;
  double bandwidth_floor = 1e-2;
  std::deque<nn::Vector> entries;  // oldest first

  KdeWindow() = default;
  KdeWindow(std::size_t cap, double floor) : capacity(cap), bandwidth_floor(floor) {}

  void push(nn::Vector embedding) {
    entries.push_back(std::move(embedding));
    if (entries.size() > capacity) entries.pop_front();
  }
  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  std::size_t dim() const { return entries.empty() ? 0 : entries.front().size(); }
};

// h_j = max(floor, 1.06 * sigma_j * n^(-1/5)) with sample standard deviation.
nn::Vector bandwidth_silverman(const KdeWindow& window);

// Diagonal Gaussian product-kernel density averaged over the window.
double kde_density(const KdeWindow& window, const nn::Vector& bandwidths,
                   const nn::Vector& query);

struct DistributionVector {
  nn::Vector values;  // log densities, one per probe
  bool cold_start = false;
};

// Log density at probes taken from the window entries at indices
// floor(i*n/probes); empty window yields zeros with the cold-start flag set.
DistributionVector distribution_vector(const KdeWindow& window, std::size_t probes);

}  // namespace deap::kde
