#pragma once

// Spatial frequency-domain machinery on scalar coefficient fields.
//
// All frequency integrals are Riemann sums over the N = s1*s2 Fourier
// frequencies with cell area (2 pi)^2 / N. Frequencies are reported in the
// fundamental domain (-pi, pi]^2.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <fftw3.h>

#include "sarhcox/error.hpp"
#include "sarhcox/grid.hpp"
#include "sarhcox/sarh.hpp"

namespace sarhcox {

using Complex = std::complex<double>;

class FrequencyGrid {
 public:
  FrequencyGrid() = default;
  explicit FrequencyGrid(const SpatialGrid& grid) : s1_(grid.s1()), s2_(grid.s2()) {}
  FrequencyGrid(int s1, int s2) : s1_(s1), s2_(s2) {
    require(s1 >= 1 && s2 >= 1, ErrorKind::validation, "frequency grid must be non-empty");
  }

  int s1() const noexcept { return s1_; }
  int s2() const noexcept { return s2_; }
  std::size_t size() const noexcept {
    return static_cast<std::size_t>(s1_) * static_cast<std::size_t>(s2_);
  }
  /// Riemann cell area (2 pi)^2 / N.
  double cell() const noexcept {
    return 4.0 * std::numbers::pi * std::numbers::pi / static_cast<double>(size());
  }

  static double fold(int a, int n) noexcept {
    double w = 2.0 * std::numbers::pi * a / n;
    if (2 * a > n) w -= 2.0 * std::numbers::pi;
    return w;
  }
  double omega1(int a) const noexcept { return fold(a, s1_); }
  double omega2(int b) const noexcept { return fold(b, s2_); }
  std::size_t index(int a, int b) const noexcept {
    return static_cast<std::size_t>(a) * static_cast<std::size_t>(s2_) +
           static_cast<std::size_t>(b);
  }
  /// Index of the frequency -w (mod 2 pi).
  std::size_t negated(std::size_t i) const noexcept {
    const int a = static_cast<int>(i / static_cast<std::size_t>(s2_));
    const int b = static_cast<int>(i % static_cast<std::size_t>(s2_));
    return index((s1_ - a) % s1_, (s2_ - b) % s2_);
  }

  friend bool operator==(const FrequencyGrid&, const FrequencyGrid&) = default;

 private:
  int s1_ = 1;
  int s2_ = 1;
};

using EtaFunction = std::function<double(double, double)>;

/// eta(w) = |w1|^2 |w2|^2 on (-pi, pi]^2.
inline double eta_weight(double w1, double w2) { return w1 * w1 * w2 * w2; }

inline std::vector<double> eta_table(const FrequencyGrid& freq, const EtaFunction& eta) {
  std::vector<double> out(freq.size());
  for (int a = 0; a < freq.s1(); ++a)
    for (int b = 0; b < freq.s2(); ++b)
      out[freq.index(a, b)] = eta(freq.omega1(a), freq.omega2(b));
  return out;
}

/// fDFT of a scalar field at w: (1/(2 pi sqrt N)) sum_{p,q} x_{p,q} e^{-i(p w1 + q w2)},
/// lattice indices 0-based.
inline Complex fdft(std::span<const double> field, const SpatialGrid& grid, double w1,
                    double w2) {
  require(field.size() == grid.size(), ErrorKind::shape, "field does not match grid");
  Complex acc = 0.0;
  for (int p = 0; p < grid.s1(); ++p)
    for (int q = 0; q < grid.s2(); ++q)
      acc += field[grid.site(p, q)] * std::polar(1.0, -(p * w1 + q * w2));
  return acc / (2.0 * std::numbers::pi * std::sqrt(static_cast<double>(grid.size())));
}

namespace detail {
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

/// Batched fDFT at all Fourier frequencies. Row r of the result holds the
/// transform of input field r, indexed like FrequencyGrid::index.
inline std::vector<std::vector<Complex>> fdft_fields(const std::vector<std::vector<double>>& fields,
                                                      const SpatialGrid& grid) {
  const int howmany = static_cast<int>(fields.size());
  std::vector<std::vector<Complex>> out(fields.size());
  if (howmany == 0) return out;
  const std::size_t N = grid.size();
  for (const auto& f : fields)
    require(f.size() == N, ErrorKind::shape, "field does not match grid");

  auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * N * fields.size()));
  require(buf != nullptr, ErrorKind::degenerate, "fftw_malloc failed");
  const int dims[2] = {grid.s1(), grid.s2()};
  fftw_plan plan;
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    plan = fftw_plan_many_dft(2, dims, howmany, buf, nullptr, 1, static_cast<int>(N), buf,
                              nullptr, 1, static_cast<int>(N), FFTW_FORWARD, FFTW_ESTIMATE);
  }
  for (std::size_t r = 0; r < fields.size(); ++r)
    for (std::size_t s = 0; s < N; ++s) {
      buf[r * N + s][0] = fields[r][s];
      buf[r * N + s][1] = 0.0;
    }
  fftw_execute(plan);
  const double scale = 1.0 / (2.0 * std::numbers::pi * std::sqrt(static_cast<double>(N)));
  for (std::size_t r = 0; r < fields.size(); ++r) {
    out[r].resize(N);
    for (std::size_t s = 0; s < N; ++s)
      out[r][s] = Complex(buf[r * N + s][0], buf[r * N + s][1]) * scale;
  }
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(buf);
  return out;
}

/// Cross periodogram I_ab(w) = X_a(w) conj(X_b(w)) at all Fourier frequencies.
struct PeriodogramTable {
  FrequencyGrid freq;
  std::vector<Complex> values;

  std::vector<double> real_part() const {
    std::vector<double> r(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) r[i] = values[i].real();
    return r;
  }
};

inline PeriodogramTable periodogram_from_dft(const FrequencyGrid& freq,
                                             std::span<const Complex> xa,
                                             std::span<const Complex> xb, bool diagonal) {
  PeriodogramTable t{freq, std::vector<Complex>(xa.size())};
  for (std::size_t i = 0; i < xa.size(); ++i)
    t.values[i] = diagonal ? Complex(std::norm(xa[i]), 0.0) : xa[i] * std::conj(xb[i]);
  return t;
}

inline PeriodogramTable periodogram(std::span<const double> a, std::span<const double> b,
                                    const SpatialGrid& grid) {
  require(a.size() == grid.size() && b.size() == grid.size(), ErrorKind::shape,
          "periodogram inputs must both match the grid");
  const bool same = a.data() == b.data() || std::equal(a.begin(), a.end(), b.begin());
  if (same) {
    auto x = fdft_fields({std::vector<double>(a.begin(), a.end())}, grid);
    return periodogram_from_dft(FrequencyGrid(grid), x[0], x[0], true);
  }
  auto x = fdft_fields(
      {std::vector<double>(a.begin(), a.end()), std::vector<double>(b.begin(), b.end())}, grid);
  return periodogram_from_dft(FrequencyGrid(grid), x[0], x[1], false);
}

inline void require_stationary(const Theta& th) {
  require(stationarity_check(th), ErrorKind::stationarity,
          "non-stationary theta " + describe(th));
}

/// f(w, theta) = sigma2 / (2 pi^2) * |1 - t1 e^{iw1} - t2 e^{iw2} - t3 e^{i(w1+w2)}|^-2.
inline double model_density(const Theta& th, double sigma2, double w1, double w2) {
  require_stationary(th);
  return sigma2 / (2.0 * std::numbers::pi * std::numbers::pi) / ar_symbol_norm2(th, w1, w2);
}

struct NormalisedDensity {
  std::vector<double> psi;  ///< Psi(w) = f(w)/sigma2(theta), indexed like the grid
  double sigma2_theta = 0.0;  ///< Riemann sum of f*eta
};

inline NormalisedDensity normalised_density(const Theta& th, const EtaFunction& eta,
                                            const FrequencyGrid& freq, double sigma2 = 1.0) {
  require_stationary(th);
  NormalisedDensity out;
  out.psi.resize(freq.size());
  double acc = 0.0;
  for (int a = 0; a < freq.s1(); ++a)
    for (int b = 0; b < freq.s2(); ++b) {
      const double w1 = freq.omega1(a), w2 = freq.omega2(b);
      const double f = model_density(th, sigma2, w1, w2);
      out.psi[freq.index(a, b)] = f;
      acc += f * eta(w1, w2);
    }
  out.sigma2_theta = acc * freq.cell();
  require(out.sigma2_theta > 0.0 && std::isfinite(out.sigma2_theta), ErrorKind::degenerate,
          "eta-weighted integral of the density vanishes");
  for (auto& x : out.psi) x /= out.sigma2_theta;
  return out;
}

/// U_N(theta) = - sum_w I(w) eta(w) log Psi(w, theta) * (2 pi)^2 / N.
/// Frequencies with eta = 0 contribute nothing.
inline double empirical_contrast(std::span<const double> I, const Theta& th,
                                 const EtaFunction& eta, const FrequencyGrid& freq) {
  require(I.size() == freq.size(), ErrorKind::shape, "periodogram does not match grid");
  const auto nd = normalised_density(th, eta, freq);
  double acc = 0.0;
  for (int a = 0; a < freq.s1(); ++a)
    for (int b = 0; b < freq.s2(); ++b) {
      const auto i = freq.index(a, b);
      const double e = eta(freq.omega1(a), freq.omega2(b));
      if (e == 0.0 || I[i] == 0.0) continue;
      acc += I[i] * e * std::log(nd.psi[i]);
    }
  return -acc * freq.cell();
}

/// U(theta) = - sum_w f(w, theta0) eta(w) log Psi(w, theta) * (2 pi)^2 / N.
inline double population_contrast(const Theta& theta0, double sigma2_0, const Theta& th,
                                  const EtaFunction& eta, const FrequencyGrid& freq) {
  require_stationary(theta0);
  const auto nd = normalised_density(th, eta, freq);
  double acc = 0.0;
  for (int a = 0; a < freq.s1(); ++a)
    for (int b = 0; b < freq.s2(); ++b) {
      const double w1 = freq.omega1(a), w2 = freq.omega2(b);
      const double e = eta(w1, w2);
      if (e == 0.0) continue;
      acc += model_density(theta0, sigma2_0, w1, w2) * e * std::log(nd.psi[freq.index(a, b)]);
    }
  return -acc * freq.cell();
}

/// K(theta0, theta) = sum_w f(w, theta0) eta(w) log[Psi(w, theta0) / Psi(w, theta)] * (2 pi)^2 / N.
inline double divergence(const Theta& theta0, const Theta& th, const EtaFunction& eta,
                         const FrequencyGrid& freq, double sigma2_0 = 1.0) {
  const auto nd0 = normalised_density(theta0, eta, freq);
  const auto nd = normalised_density(th, eta, freq);
  double acc = 0.0;
  for (int a = 0; a < freq.s1(); ++a)
    for (int b = 0; b < freq.s2(); ++b) {
      const double w1 = freq.omega1(a), w2 = freq.omega2(b);
      const double e = eta(w1, w2);
      if (e == 0.0) continue;
      const auto i = freq.index(a, b);
      acc += model_density(theta0, sigma2_0, w1, w2) * e * std::log(nd0.psi[i] / nd.psi[i]);
    }
  return acc * freq.cell();
}

/// Fast contrast evaluation for repeated calls on one frequency grid. Uses
///
///   U_N(theta) = h * [ sum I eta log|A|^2 + (sum I eta) log(h sum eta/|A|^2) ],
///
/// h = (2 pi)^2 / N, which is algebraically identical to empirical_contrast.
class ContrastKernel {
 public:
  ContrastKernel() = default;
  ContrastKernel(const FrequencyGrid& freq, const EtaFunction& eta) : freq_(freq) {
    for (int a = 0; a < freq.s1(); ++a)
      for (int b = 0; b < freq.s2(); ++b) {
        const double w1 = freq.omega1(a), w2 = freq.omega2(b);
        const double e = eta(w1, w2);
        if (e == 0.0) continue;
        support_.push_back(freq.index(a, b));
        eta_.push_back(e);
        c1_.push_back(std::cos(w1));
        s1_.push_back(std::sin(w1));
        c2_.push_back(std::cos(w2));
        s2_.push_back(std::sin(w2));
        c12_.push_back(std::cos(w1 + w2));
        s12_.push_back(std::sin(w1 + w2));
      }
  }

  const FrequencyGrid& freq() const noexcept { return freq_; }
  std::size_t support_size() const noexcept { return support_.size(); }
  std::span<const std::size_t> support() const noexcept { return support_; }
  std::span<const double> eta() const noexcept { return eta_; }

  double symbol_norm2(const Theta& th, std::size_t k) const noexcept {
    const double re = 1.0 - th.t1 * c1_[k] - th.t2 * c2_[k] - th.t3 * c12_[k];
    const double im = th.t1 * s1_[k] + th.t2 * s2_[k] + th.t3 * s12_[k];
    return re * re + im * im;
  }

  /// I*eta restricted to the support, in support order.
  std::vector<double> weights(std::span<const double> I) const {
    require(I.size() == freq_.size(), ErrorKind::shape, "periodogram does not match grid");
    std::vector<double> w(support_.size());
    for (std::size_t k = 0; k < support_.size(); ++k) w[k] = I[support_[k]] * eta_[k];
    return w;
  }

  /// log(h * sum eta/|A|^2): the log normalising constant of Psi.
  double log_normaliser(const Theta& th) const {
    double acc = 0.0;
    for (std::size_t k = 0; k < support_.size(); ++k) acc += eta_[k] / symbol_norm2(th, k);
    return std::log(acc * freq_.cell());
  }

  double evaluate(std::span<const double> weights, double weight_total, const Theta& th) const {
    double acc = 0.0;
    double norm = 0.0;
    for (std::size_t k = 0; k < support_.size(); ++k) {
      const double a2 = symbol_norm2(th, k);
      if (weights[k] != 0.0) acc += weights[k] * std::log(a2);
      norm += eta_[k] / a2;
    }
    return freq_.cell() * (acc + weight_total * std::log(norm * freq_.cell()));
  }

 private:
  FrequencyGrid freq_;
  std::vector<std::size_t> support_;
  std::vector<double> eta_, c1_, s1_, c2_, s2_, c12_, s12_;
};

}  // namespace sarhcox
