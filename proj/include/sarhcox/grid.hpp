#pragma once

// Dyadic time grids, regular spatial lattices and curve fields over them.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sarhcox/error.hpp"

namespace sarhcox {

/// Equispaced midpoint samples t_m = (m + 1/2) / 2^D on [0, 1].
class TimeGrid {
 public:
  static constexpr int kMaxDepth = 20;

  TimeGrid() = default;
  explicit TimeGrid(int depth) : depth_(depth) {
    require(depth >= 1 && depth <= kMaxDepth, ErrorKind::validation,
            "time depth must lie in [1, " + std::to_string(kMaxDepth) +
                "], got " + std::to_string(depth));
  }

  int depth() const noexcept { return depth_; }
  std::size_t size() const noexcept { return std::size_t{1} << depth_; }
  double point(std::size_t m) const noexcept {
    return (static_cast<double>(m) + 0.5) / static_cast<double>(size());
  }
  /// Quadrature weight of each sample; the Riemann sum with this weight is
  /// the L2[0,1] inner product for piecewise-constant curves.
  double weight() const noexcept { return 1.0 / static_cast<double>(size()); }

  std::vector<double> points() const {
    std::vector<double> t(size());
    for (std::size_t m = 0; m < t.size(); ++m) t[m] = point(m);
    return t;
  }

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  int depth_ = 1;
};

/// Regular s1 x s2 lattice; p indexes rows, q columns, both 0-based.
class SpatialGrid {
 public:
  SpatialGrid() = default;
  SpatialGrid(int s1, int s2) : s1_(s1), s2_(s2) {
    require(s1 >= 2 && s2 >= 2, ErrorKind::validation,
            "spatial grid needs s1 >= 2 and s2 >= 2, got " + std::to_string(s1) +
                "x" + std::to_string(s2));
  }

  int s1() const noexcept { return s1_; }
  int s2() const noexcept { return s2_; }
  std::size_t size() const noexcept {
    return static_cast<std::size_t>(s1_) * static_cast<std::size_t>(s2_);
  }
  std::size_t site(int p, int q) const noexcept {
    return static_cast<std::size_t>(p) * static_cast<std::size_t>(s2_) +
           static_cast<std::size_t>(q);
  }

  friend bool operator==(const SpatialGrid&, const SpatialGrid&) = default;

 private:
  int s1_ = 2;
  int s2_ = 2;
};

/// Curves on a lattice. Storage is site-major: values[(p*s2 + q)*T + m].
class FunctionalField {
 public:
  FunctionalField() = default;
  FunctionalField(SpatialGrid grid, TimeGrid time)
      : grid_(grid), time_(time), values_(grid.size() * time.size(), 0.0) {}
  FunctionalField(SpatialGrid grid, TimeGrid time, std::vector<double> values)
      : grid_(grid), time_(time), values_(std::move(values)) {
    require(values_.size() == grid_.size() * time_.size(), ErrorKind::shape,
            "field holds " + std::to_string(values_.size()) + " values, expected " +
                std::to_string(grid_.size() * time_.size()));
    validate();
  }

  const SpatialGrid& grid() const noexcept { return grid_; }
  const TimeGrid& time() const noexcept { return time_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  double& at(int p, int q, std::size_t m) noexcept {
    return values_[grid_.site(p, q) * time_.size() + m];
  }
  double at(int p, int q, std::size_t m) const noexcept {
    return values_[grid_.site(p, q) * time_.size() + m];
  }
  std::span<double> curve(int p, int q) noexcept {
    return {values_.data() + grid_.site(p, q) * time_.size(), time_.size()};
  }
  std::span<const double> curve(int p, int q) const noexcept {
    return {values_.data() + grid_.site(p, q) * time_.size(), time_.size()};
  }

  void validate() const {
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) {
        const std::size_t T = time_.size();
        const std::size_t s = i / T;
        fail(ErrorKind::validation,
             "non-finite value at p=" + std::to_string(s / grid_.s2()) +
                 " q=" + std::to_string(s % grid_.s2()) +
                 " t_index=" + std::to_string(i % T));
      }
    }
  }

  friend bool operator==(const FunctionalField&, const FunctionalField&) = default;

 private:
  SpatialGrid grid_;
  TimeGrid time_;
  std::vector<double> values_;
};

struct MeanCurve {
  TimeGrid time;
  std::vector<double> values;
};

/// Removes the cross-site sample mean curve from every site.
inline std::pair<FunctionalField, MeanCurve> detrend(const FunctionalField& field) {
  const std::size_t T = field.time().size();
  const std::size_t N = field.grid().size();
  std::vector<double> mean(T, 0.0);
  auto v = field.values();
  for (std::size_t s = 0; s < N; ++s)
    for (std::size_t m = 0; m < T; ++m) mean[m] += v[s * T + m];
  for (auto& x : mean) x /= static_cast<double>(N);

  std::vector<double> out(v.begin(), v.end());
  for (std::size_t s = 0; s < N; ++s)
    for (std::size_t m = 0; m < T; ++m) out[s * T + m] -= mean[m];
  return {FunctionalField(field.grid(), field.time(), std::move(out)),
          MeanCurve{field.time(), std::move(mean)}};
}

inline FunctionalField add_mean(const FunctionalField& field, const MeanCurve& mean) {
  require(field.time() == mean.time && mean.values.size() == field.time().size(),
          ErrorKind::shape, "mean curve does not match the field's time grid");
  const std::size_t T = field.time().size();
  std::vector<double> out(field.values().begin(), field.values().end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += mean.values[i % T];
  return FunctionalField(field.grid(), field.time(), std::move(out));
}

}  // namespace sarhcox
