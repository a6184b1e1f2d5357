#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "scflow/ambient.hpp"

namespace scflow {

/// Periodic structured grid on the flat torus T^n. Node k on axis a sits at
/// coordinate k * spacing[a].
class GridChart {
 public:
  static constexpr int kMinPointsPerAxis = 8;

  GridChart(std::vector<int> shape, std::vector<double> spacing);

  /// Uniform grid of `points` nodes per axis covering period `period`.
  static std::shared_ptr<const GridChart> uniform(int dim, int points, double period);

  int dim() const { return static_cast<int>(shape_.size()); }
  std::size_t size() const { return size_; }
  const std::vector<int>& shape() const { return shape_; }
  const std::vector<double>& spacing() const { return spacing_; }
  double min_spacing() const;
  double period(int axis) const { return shape_[axis] * spacing_[axis]; }

  double coordinate(std::size_t node, int axis) const { return coordinates_[axis][node]; }
  SpatialVector coordinates(std::size_t node) const;
  std::vector<int> multi_index(std::size_t node) const;
  std::size_t node(std::span<const int> index) const;

  /// Periodic neighbour one step along `axis` (+1) or against it (-1).
  std::size_t plus(std::size_t node, int axis) const { return plus_[axis][node]; }
  std::size_t minus(std::size_t node, int axis) const { return minus_[axis][node]; }

  bool operator==(const GridChart& other) const {
    return shape_ == other.shape_ && spacing_ == other.spacing_;
  }

 private:
  std::vector<int> shape_;
  std::vector<double> spacing_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
  std::vector<std::vector<std::uint32_t>> plus_;
  std::vector<std::vector<std::uint32_t>> minus_;
  std::vector<std::vector<double>> coordinates_;
};

/// Height function u of the graph {x^0 = u(x)} sampled on a chart.
struct GraphFunction {
  std::shared_ptr<const GridChart> chart;
  std::vector<double> values;

  static GraphFunction constant(std::shared_ptr<const GridChart> chart, double level);
  static GraphFunction sample(std::shared_ptr<const GridChart> chart,
                              const std::function<double(const SpatialVector&)>& fn);

  std::size_t size() const { return values.size(); }
  double min() const;
  double max() const;
};

/// Fixed number of components per node, stored contiguously.
class NodeField {
 public:
  NodeField() = default;
  NodeField(std::size_t nodes, int components)
      : nodes_(nodes), components_(components), data_(nodes * components, 0.0) {}

  std::size_t nodes() const { return nodes_; }
  int components() const { return components_; }

  std::span<double> operator[](std::size_t node) {
    return {data_.data() + node * components_, static_cast<std::size_t>(components_)};
  }
  std::span<const double> operator[](std::size_t node) const {
    return {data_.data() + node * components_, static_cast<std::size_t>(components_)};
  }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

 private:
  std::size_t nodes_ = 0;
  int components_ = 0;
  std::vector<double> data_;
};

}  // namespace scflow
