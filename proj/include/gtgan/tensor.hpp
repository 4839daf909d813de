#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gtgan/graph.hpp"

namespace gtgan {

/// M edge feature maps over n nodes, each an n x n matrix stored row-major,
/// maps contiguous.
class FeatureTensor {
 public:
  FeatureTensor() = default;
  FeatureTensor(std::size_t n, std::size_t maps, double fill = 0.0)
      : n_(n), maps_(maps), data_(maps * n * n, fill) {}

  static FeatureTensor from_graph(const DirectedGraph& g) {
    FeatureTensor t(g.n(), 1);
    t.data_ = g.weights();
    return t;
  }

  std::size_t n() const { return n_; }
  std::size_t maps() const { return maps_; }

  double& at(std::size_t m, std::size_t i, std::size_t j) { return data_[(m * n_ + i) * n_ + j]; }
  double at(std::size_t m, std::size_t i, std::size_t j) const {
    return data_[(m * n_ + i) * n_ + j];
  }

  std::span<double> map(std::size_t m) { return {data_.data() + m * n_ * n_, n_ * n_}; }
  std::span<const double> map(std::size_t m) const {
    return {data_.data() + m * n_ * n_, n_ * n_};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const FeatureTensor&) const = default;

 private:
  std::size_t n_ = 0;
  std::size_t maps_ = 0;
  std::vector<double> data_;
};

/// M node feature vectors of length n, maps contiguous.
class NodeTensor {
 public:
  NodeTensor() = default;
  NodeTensor(std::size_t n, std::size_t maps, double fill = 0.0)
      : n_(n), maps_(maps), data_(maps * n, fill) {}

  std::size_t n() const { return n_; }
  std::size_t maps() const { return maps_; }

  double& at(std::size_t m, std::size_t i) { return data_[m * n_ + i]; }
  double at(std::size_t m, std::size_t i) const { return data_[m * n_ + i]; }

  std::span<double> map(std::size_t m) { return {data_.data() + m * n_, n_}; }
  std::span<const double> map(std::size_t m) const { return {data_.data() + m * n_, n_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const NodeTensor&) const = default;

 private:
  std::size_t n_ = 0;
  std::size_t maps_ = 0;
  std::vector<double> data_;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline double inner(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("inner product of mismatched lengths");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

}  // namespace gtgan
