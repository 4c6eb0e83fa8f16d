#pragma once

#include <cstddef>
#include <numeric>
#include <vector>

namespace tinyssd {

template <typename T>
struct Tensor {
  std::vector<size_t> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<size_t> s)
      : shape(std::move(s)),
        data(std::accumulate(shape.begin(), shape.end(), size_t(1),
                             std::multiplies<size_t>()),
             T(0)) {}

  size_t numel() const { return data.size(); }
  bool empty() const { return data.empty(); }
  void zero() { std::fill(data.begin(), data.end(), T(0)); }
};

}  // namespace tinyssd
