#include "scflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "scflow/errors.hpp"

namespace scflow {

GridChart::GridChart(std::vector<int> shape, std::vector<double> spacing)
    : shape_(std::move(shape)), spacing_(std::move(spacing)) {
  const int n = static_cast<int>(shape_.size());
  if (n < 2 || n > kMaxDim) {
    throw ConfigError("grid dimension must lie in [2, " + std::to_string(kMaxDim) + "]");
  }
  if (spacing_.size() != shape_.size()) throw ConfigError("grid shape/spacing length mismatch");
  size_ = 1;
  strides_.resize(n);
  for (int a = 0; a < n; ++a) {
    if (shape_[a] < kMinPointsPerAxis) {
      throw ConfigError("grid axis " + std::to_string(a) + " has " + std::to_string(shape_[a]) +
                        " points; at least " + std::to_string(kMinPointsPerAxis) + " required");
    }
    if (!(spacing_[a] > 0.0) || !std::isfinite(spacing_[a])) {
      throw ConfigError("grid spacing must be positive and finite");
    }
    strides_[a] = size_;
    size_ *= static_cast<std::size_t>(shape_[a]);
  }
  if (size_ > std::numeric_limits<std::uint32_t>::max()) throw ConfigError("grid too large");

  plus_.assign(n, std::vector<std::uint32_t>(size_));
  minus_.assign(n, std::vector<std::uint32_t>(size_));
  coordinates_.assign(n, std::vector<double>(size_));
  for (std::size_t k = 0; k < size_; ++k) {
    for (int a = 0; a < n; ++a) {
      const int i = static_cast<int>((k / strides_[a]) % shape_[a]);
      const std::size_t base = k - static_cast<std::size_t>(i) * strides_[a];
      const int ip = (i + 1) % shape_[a];
      const int im = (i + shape_[a] - 1) % shape_[a];
      plus_[a][k] = static_cast<std::uint32_t>(base + ip * strides_[a]);
      minus_[a][k] = static_cast<std::uint32_t>(base + im * strides_[a]);
      coordinates_[a][k] = static_cast<double>(i) * spacing_[a];
    }
  }
}

std::shared_ptr<const GridChart> GridChart::uniform(int dim, int points, double period) {
  return std::make_shared<GridChart>(std::vector<int>(dim, points),
                                     std::vector<double>(dim, period / points));
}

double GridChart::min_spacing() const {
  return *std::min_element(spacing_.begin(), spacing_.end());
}

SpatialVector GridChart::coordinates(std::size_t node) const {
  SpatialVector x(dim());
  for (int a = 0; a < dim(); ++a) x[a] = coordinate(node, a);
  return x;
}

std::vector<int> GridChart::multi_index(std::size_t node) const {
  std::vector<int> idx(dim());
  for (int a = 0; a < dim(); ++a) {
    idx[a] = static_cast<int>((node / strides_[a]) % static_cast<std::size_t>(shape_[a]));
  }
  return idx;
}

std::size_t GridChart::node(std::span<const int> index) const {
  if (static_cast<int>(index.size()) != dim()) throw ContractViolation("index rank mismatch");
  std::size_t k = 0;
  for (int a = 0; a < dim(); ++a) {
    const int i = ((index[a] % shape_[a]) + shape_[a]) % shape_[a];
    k += static_cast<std::size_t>(i) * strides_[a];
  }
  return k;
}

GraphFunction GraphFunction::constant(std::shared_ptr<const GridChart> chart, double level) {
  GraphFunction u;
  u.values.assign(chart->size(), level);
  u.chart = std::move(chart);
  return u;
}

GraphFunction GraphFunction::sample(std::shared_ptr<const GridChart> chart,
                                    const std::function<double(const SpatialVector&)>& fn) {
  GraphFunction u;
  u.values.resize(chart->size());
  for (std::size_t k = 0; k < chart->size(); ++k) u.values[k] = fn(chart->coordinates(k));
  u.chart = std::move(chart);
  return u;
}

double GraphFunction::min() const { return *std::min_element(values.begin(), values.end()); }
double GraphFunction::max() const { return *std::max_element(values.begin(), values.end()); }

}  // namespace scflow
