#pragma once

// Orthonormal Haar multiresolution analysis on the dyadic grid.
//
// Coefficient layout for a curve of 2^D samples analysed down to level j0:
//
//   [ scaling (2^j0) | detail j0 (2^j0) | detail j0+1 (2^(j0+1)) | ... | detail D-1 ]
//
// The layout, not the filter, is the public contract.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sarhcox/error.hpp"
#include "sarhcox/grid.hpp"

namespace sarhcox {

enum class BasisKind { scaling, detail };

struct WaveletIndex {
  BasisKind kind = BasisKind::scaling;
  int level = 0;
  int node = 0;

  friend bool operator==(const WaveletIndex&, const WaveletIndex&) = default;
};

class WaveletLayout {
 public:
  WaveletLayout() = default;
  WaveletLayout(int j0, int depth) : j0_(j0), depth_(depth) {
    require(depth >= 1 && depth <= TimeGrid::kMaxDepth, ErrorKind::validation,
            "wavelet depth out of range: " + std::to_string(depth));
    require(j0 >= 0 && j0 <= depth, ErrorKind::validation,
            "coarsest level j0=" + std::to_string(j0) + " must lie in [0, " +
                std::to_string(depth) + "]");
  }

  int j0() const noexcept { return j0_; }
  int depth() const noexcept { return depth_; }
  std::size_t size() const noexcept { return std::size_t{1} << depth_; }

  /// First position of detail level j (j0 <= j < D). The scaling block starts at 0.
  std::size_t level_begin(int j) const noexcept { return std::size_t{1} << j; }
  std::size_t scaling_size() const noexcept { return std::size_t{1} << j0_; }

  std::size_t position(const WaveletIndex& idx) const {
    if (idx.kind == BasisKind::scaling) {
      require(idx.level == j0_ && idx.node >= 0 &&
                  static_cast<std::size_t>(idx.node) < scaling_size(),
              ErrorKind::validation, "scaling index out of range");
      return static_cast<std::size_t>(idx.node);
    }
    require(idx.level >= j0_ && idx.level < depth_, ErrorKind::validation,
            "detail level " + std::to_string(idx.level) + " outside [j0, D)");
    require(idx.node >= 0 && idx.node < (1 << idx.level), ErrorKind::validation,
            "detail node out of range");
    return level_begin(idx.level) + static_cast<std::size_t>(idx.node);
  }

  WaveletIndex index(std::size_t pos) const {
    require(pos < size(), ErrorKind::validation, "coefficient position out of range");
    if (pos < scaling_size())
      return {BasisKind::scaling, j0_, static_cast<int>(pos)};
    int j = 0;
    while ((std::size_t{1} << (j + 1)) <= pos) ++j;
    return {BasisKind::detail, j, static_cast<int>(pos - (std::size_t{1} << j))};
  }

  /// Scale label used when grouping per-node results: -1 for the scaling
  /// block, otherwise the detail level.
  int scale_of(std::size_t pos) const {
    auto idx = index(pos);
    return idx.kind == BasisKind::scaling ? -1 : idx.level;
  }

  friend bool operator==(const WaveletLayout&, const WaveletLayout&) = default;

 private:
  int j0_ = 0;
  int depth_ = 1;
};

namespace detail {
inline int checked_depth(std::size_t n) {
  require(n >= 2 && (n & (n - 1)) == 0, ErrorKind::shape,
          "wavelet transform needs a power-of-two length >= 2, got " + std::to_string(n));
  int d = 0;
  while ((std::size_t{1} << d) < n) ++d;
  return d;
}
}  // namespace detail

inline std::vector<double> dwt(std::span<const double> x, int j0) {
  const int D = detail::checked_depth(x.size());
  WaveletLayout layout(j0, D);
  std::vector<double> out(x.begin(), x.end());
  std::vector<double> tmp(x.size());
  const double r = std::numbers::sqrt2 / 2.0;
  for (std::size_t len = x.size(); len > layout.scaling_size(); len /= 2) {
    const std::size_t half = len / 2;
    for (std::size_t k = 0; k < half; ++k) {
      tmp[k] = (out[2 * k] + out[2 * k + 1]) * r;
      tmp[half + k] = (out[2 * k] - out[2 * k + 1]) * r;
    }
    std::copy(tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(len), out.begin());
  }
  return out;
}

inline std::vector<double> idwt(std::span<const double> c, int j0) {
  const int D = detail::checked_depth(c.size());
  WaveletLayout layout(j0, D);
  std::vector<double> out(c.begin(), c.end());
  std::vector<double> tmp(c.size());
  const double r = std::numbers::sqrt2 / 2.0;
  for (std::size_t len = 2 * layout.scaling_size(); len <= c.size(); len *= 2) {
    const std::size_t half = len / 2;
    for (std::size_t k = 0; k < half; ++k) {
      tmp[2 * k] = (out[k] + out[half + k]) * r;
      tmp[2 * k + 1] = (out[k] - out[half + k]) * r;
    }
    std::copy(tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(len), out.begin());
  }
  return out;
}

/// Per-site wavelet coefficients, stored site-major like FunctionalField.
class MultiscaleCoefficients {
 public:
  MultiscaleCoefficients() = default;
  MultiscaleCoefficients(SpatialGrid grid, WaveletLayout layout, std::vector<double> coeffs)
      : grid_(grid), layout_(layout), coeffs_(std::move(coeffs)) {
    require(coeffs_.size() == grid_.size() * layout_.size(), ErrorKind::shape,
            "coefficient array size does not match grid and depth");
  }

  const SpatialGrid& grid() const noexcept { return grid_; }
  const WaveletLayout& layout() const noexcept { return layout_; }
  int j0() const noexcept { return layout_.j0(); }
  int depth() const noexcept { return layout_.depth(); }
  std::size_t nodes() const noexcept { return layout_.size(); }

  std::span<const double> values() const noexcept { return coeffs_; }
  std::span<double> values() noexcept { return coeffs_; }
  std::span<const double> site(int p, int q) const noexcept {
    return {coeffs_.data() + grid_.site(p, q) * nodes(), nodes()};
  }
  std::span<double> site(int p, int q) noexcept {
    return {coeffs_.data() + grid_.site(p, q) * nodes(), nodes()};
  }
  double at(int p, int q, std::size_t pos) const noexcept {
    return coeffs_[grid_.site(p, q) * nodes() + pos];
  }

  /// Scalar spatial field of one coefficient position, row-major over sites.
  std::vector<double> node_field(std::size_t pos) const {
    std::vector<double> f(grid_.size());
    for (std::size_t s = 0; s < f.size(); ++s) f[s] = coeffs_[s * nodes() + pos];
    return f;
  }

  friend bool operator==(const MultiscaleCoefficients&, const MultiscaleCoefficients&) = default;

 private:
  SpatialGrid grid_;
  WaveletLayout layout_;
  std::vector<double> coeffs_;
};

inline MultiscaleCoefficients field_dwt(const FunctionalField& field, int j0) {
  const std::size_t T = field.time().size();
  WaveletLayout layout(j0, field.time().depth());
  std::vector<double> out(field.values().size());
  for (int p = 0; p < field.grid().s1(); ++p)
    for (int q = 0; q < field.grid().s2(); ++q) {
      auto c = dwt(field.curve(p, q), j0);
      std::copy(c.begin(), c.end(),
                out.begin() + static_cast<std::ptrdiff_t>(field.grid().site(p, q) * T));
    }
  return MultiscaleCoefficients(field.grid(), layout, std::move(out));
}

inline FunctionalField field_idwt(const MultiscaleCoefficients& coeffs) {
  const std::size_t T = coeffs.nodes();
  std::vector<double> out(coeffs.values().size());
  for (int p = 0; p < coeffs.grid().s1(); ++p)
    for (int q = 0; q < coeffs.grid().s2(); ++q) {
      auto c = idwt(coeffs.site(p, q), coeffs.j0());
      std::copy(c.begin(), c.end(),
                out.begin() + static_cast<std::ptrdiff_t>(coeffs.grid().site(p, q) * T));
    }
  return FunctionalField(coeffs.grid(), TimeGrid(coeffs.depth()), std::move(out));
}

/// Matrix of an operator in the wavelet basis: entry (a, b) = L(basis_b)(basis_a).
struct OperatorWaveletMatrix {
  WaveletLayout layout;
  Eigen::MatrixXd matrix;

  static OperatorWaveletMatrix zero(const WaveletLayout& layout) {
    const auto n = static_cast<Eigen::Index>(layout.size());
    return {layout, Eigen::MatrixXd::Zero(n, n)};
  }
};

/// sin(pi p t) sampled on the grid for p = 1..count. With `normalize` each
/// vector has unit discrete L2 norm (sum of squares times 2^-D equals 1).
inline std::vector<std::vector<double>> sine_eigenfunctions(const TimeGrid& time, int count,
                                                            bool normalize = true) {
  require(count >= 1, ErrorKind::validation, "need at least one eigenfunction");
  std::vector<std::vector<double>> out(static_cast<std::size_t>(count));
  for (int p = 1; p <= count; ++p) {
    auto& v = out[static_cast<std::size_t>(p - 1)];
    v.resize(time.size());
    double ss = 0.0;
    for (std::size_t m = 0; m < v.size(); ++m) {
      v[m] = std::sin(std::numbers::pi * p * time.point(m));
      ss += v[m] * v[m];
    }
    if (normalize) {
      const double scale = 1.0 / std::sqrt(ss * time.weight());
      for (auto& x : v) x *= scale;
    }
  }
  return out;
}

/// L2 coefficients <phi, basis_a> of a sampled curve, by midpoint quadrature.
inline std::vector<double> l2_wavelet_coefficients(std::span<const double> samples, int j0) {
  auto c = dwt(samples, j0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(samples.size()));
  for (auto& x : c) x *= scale;
  return c;
}

/// Wavelet-domain matrix of the self-adjoint operator sum_p lambda_p phi_p (x) phi_p,
/// keeping the first `truncation` eigenpairs.
inline OperatorWaveletMatrix operator_to_wavelet(
    std::span<const double> eigenvalues,
    const std::vector<std::vector<double>>& eigenfunctions, int truncation,
    const TimeGrid& time, int j0) {
  require(truncation >= 1, ErrorKind::validation, "truncation k_N must be >= 1");
  require(static_cast<std::size_t>(truncation) <= eigenvalues.size() &&
              static_cast<std::size_t>(truncation) <= eigenfunctions.size(),
          ErrorKind::validation, "truncation exceeds the number of eigenpairs");
  WaveletLayout layout(j0, time.depth());
  auto op = OperatorWaveletMatrix::zero(layout);
  const auto n = static_cast<Eigen::Index>(layout.size());
  for (int p = 0; p < truncation; ++p) {
    const auto& phi = eigenfunctions[static_cast<std::size_t>(p)];
    require(phi.size() == time.size(), ErrorKind::shape,
            "eigenfunction not sampled on the time grid");
    const double lambda = eigenvalues[static_cast<std::size_t>(p)];
    if (lambda == 0.0) continue;
    const auto c = l2_wavelet_coefficients(phi, j0);
    for (Eigen::Index a = 0; a < n; ++a) {
      const double la = lambda * c[static_cast<std::size_t>(a)];
      for (Eigen::Index b = a; b < n; ++b) op.matrix(a, b) += la * c[static_cast<std::size_t>(b)];
    }
  }
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < a; ++b) op.matrix(a, b) = op.matrix(b, a);
  return op;
}

/// Top-k eigenvalues of the symmetrised matrix, ordered by decreasing magnitude.
inline std::vector<double> wavelet_to_operator_eigs(const OperatorWaveletMatrix& op, int k) {
  const auto n = op.matrix.rows();
  require(op.matrix.cols() == n, ErrorKind::shape, "operator matrix must be square");
  require(k >= 0 && k <= n, ErrorKind::validation,
          "requested " + std::to_string(k) + " eigenvalues from a " + std::to_string(n) +
              "-dimensional operator");
  const Eigen::MatrixXd sym = 0.5 * (op.matrix + op.matrix.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
  require(solver.info() == Eigen::Success, ErrorKind::degenerate,
          "eigen decomposition did not converge");
  std::vector<double> ev(solver.eigenvalues().data(), solver.eigenvalues().data() + n);
  std::stable_sort(ev.begin(), ev.end(), [](double a, double b) {
    if (std::abs(a) != std::abs(b)) return std::abs(a) > std::abs(b);
    return a > b;
  });
  ev.resize(static_cast<std::size_t>(k));
  return ev;
}

}  // namespace sarhcox
