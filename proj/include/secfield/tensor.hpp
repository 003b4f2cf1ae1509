#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace secfield {

/// Dense row-major tensor of fixed rank. Last index varies fastest.
template <std::size_t Rank>
class Tensor {
 public:
  using Extents = std::array<Eigen::Index, Rank>;

  Tensor() { extents_.fill(0); }
  explicit Tensor(const Extents& extents) : extents_(extents) {
    Eigen::Index total = 1;
    for (auto e : extents_) total *= e;
    data_.assign(static_cast<std::size_t>(total), 0.0);
  }

  const Extents& extents() const { return extents_; }
  Eigen::Index extent(std::size_t axis) const { return extents_[axis]; }
  std::size_t size() const { return data_.size(); }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  const std::vector<double>& values() const { return data_; }

  template <typename... I>
  double& operator()(I... idx) {
    return data_[offset({static_cast<Eigen::Index>(idx)...})];
  }
  template <typename... I>
  double operator()(I... idx) const {
    return data_[offset({static_cast<Eigen::Index>(idx)...})];
  }

  std::size_t offset(const Extents& idx) const {
    std::size_t off = 0;
    for (std::size_t a = 0; a < Rank; ++a)
      off = off * static_cast<std::size_t>(extents_[a]) + static_cast<std::size_t>(idx[a]);
    return off;
  }

 private:
  Extents extents_;
  std::vector<double> data_;
};

using Tensor3 = Tensor<3>;
using Tensor4 = Tensor<4>;

}  // namespace secfield
