#pragma once

// SARH(1) spatial curve model in a finite sine basis:
//
//   X_{p,q} = L1 X_{p-1,q} + L2 X_{p,q-1} + L3 X_{p-1,q-1} + eps_{p,q}
//
// with L1, L2, L3 sharing the eigenfunctions sin(pi p t). Each retained
// component is a scalar quarter-plane AR field driven by Gaussian noise.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sarhcox/detail/util.hpp"
#include "sarhcox/error.hpp"
#include "sarhcox/grid.hpp"
#include "sarhcox/wavelet.hpp"

namespace sarhcox {

/// (theta1, theta2, theta3): west/north/diagonal autoregression coefficients.
struct Theta {
  double t1 = 0.0;
  double t2 = 0.0;
  double t3 = 0.0;

  double operator[](int i) const { return i == 0 ? t1 : (i == 1 ? t2 : t3); }
  double& operator[](int i) { return i == 0 ? t1 : (i == 1 ? t2 : t3); }

  friend bool operator==(const Theta&, const Theta&) = default;
  friend auto operator<=>(const Theta&, const Theta&) = default;
};

struct NodeParams {
  Theta theta;
  double sigma2 = 1.0;
};

inline constexpr double kFactorizedTolerance = 1e-12;

inline bool is_factorized(const Theta& th) {
  return std::abs(th.t3 + th.t1 * th.t2) <= kFactorizedTolerance;
}

/// Sufficient stationarity condition: |t1|+|t2|+|t3| < 1, or the factorized
/// form t3 = -t1*t2 with |t1| < 1 and |t2| < 1.
inline bool stationarity_check(const Theta& th) {
  if (!std::isfinite(th.t1) || !std::isfinite(th.t2) || !std::isfinite(th.t3)) return false;
  if (std::abs(th.t1) + std::abs(th.t2) + std::abs(th.t3) < 1.0) return true;
  return is_factorized(th) && std::abs(th.t1) < 1.0 && std::abs(th.t2) < 1.0;
}

inline std::string describe(const Theta& th) {
  return "(" + detail::format_double(th.t1) + ", " + detail::format_double(th.t2) + ", " +
         detail::format_double(th.t3) + ")";
}

/// |1 - t1 e^{i w1} - t2 e^{i w2} - t3 e^{i(w1+w2)}|^2.
inline double ar_symbol_norm2(const Theta& th, double w1, double w2) {
  const std::complex<double> z1 = std::polar(1.0, w1);
  const std::complex<double> z2 = std::polar(1.0, w2);
  const std::complex<double> a = 1.0 - th.t1 * z1 - th.t2 * z2 - th.t3 * z1 * z2;
  return std::norm(a);
}

/// Marginal variance of the stationary field driven by innovations of
/// variance sigma2. Closed form for the factorized case, otherwise the
/// spectral integral sigma2/(4 pi^2) * int |A|^-2 on a 512^2 periodic grid.
inline double stationary_variance(const Theta& th, double sigma2) {
  require(stationarity_check(th), ErrorKind::stationarity,
          "non-stationary theta " + describe(th));
  if (is_factorized(th)) return sigma2 / ((1.0 - th.t1 * th.t1) * (1.0 - th.t2 * th.t2));
  constexpr int n = 512;
  double acc = 0.0;
  for (int a = 0; a < n; ++a) {
    const double w1 = 2.0 * std::numbers::pi * a / n;
    for (int b = 0; b < n; ++b) {
      const double w2 = 2.0 * std::numbers::pi * b / n;
      acc += 1.0 / ar_symbol_norm2(th, w1, w2);
    }
  }
  return sigma2 * acc / (static_cast<double>(n) * n);
}

struct SarhSpec {
  std::vector<double> eigenvalues1;
  std::vector<double> eigenvalues2;
  std::vector<double> eigenvalues3;  ///< used only when couple_l3 is false
  std::vector<double> innovation_variances;
  int truncation = 0;
  TimeGrid time;
  bool couple_l3 = true;

  Theta component_theta(int p) const {
    const auto i = static_cast<std::size_t>(p);
    const double l1 = eigenvalues1.at(i);
    const double l2 = eigenvalues2.at(i);
    const double l3 = couple_l3 ? -l1 * l2 : eigenvalues3.at(i);
    return {l1, l2, l3};
  }

  std::vector<double> effective_eigenvalues3() const {
    std::vector<double> out(static_cast<std::size_t>(truncation));
    for (int p = 0; p < truncation; ++p) out[static_cast<std::size_t>(p)] = component_theta(p).t3;
    return out;
  }

  void validate() const {
    require(truncation >= 1, ErrorKind::validation, "truncation k_N must be >= 1");
    const auto k = static_cast<std::size_t>(truncation);
    require(eigenvalues1.size() >= k && eigenvalues2.size() >= k, ErrorKind::validation,
            "need at least k_N eigenvalues for L1 and L2");
    require(couple_l3 || eigenvalues3.size() >= k, ErrorKind::validation,
            "L3 eigenvalues required when couple_l3 is unset");
    require(innovation_variances.size() >= k, ErrorKind::validation,
            "need k_N innovation variances");
    require(k <= time.size(), ErrorKind::validation,
            "truncation exceeds the number of time samples");
    for (int p = 0; p < truncation; ++p) {
      const auto i = static_cast<std::size_t>(p);
      const std::string who = "component p=" + std::to_string(p + 1);
      require(std::abs(eigenvalues1[i]) < 1.0 && std::abs(eigenvalues2[i]) < 1.0,
              ErrorKind::stationarity,
              who + ": eigenvalues must satisfy |lambda| < 1, got lambda1=" +
                  detail::format_double(eigenvalues1[i]) +
                  " lambda2=" + detail::format_double(eigenvalues2[i]));
      const Theta th = component_theta(p);
      require(stationarity_check(th), ErrorKind::stationarity,
              who + ": non-stationary theta " + describe(th));
      require(std::isfinite(innovation_variances[i]) && innovation_variances[i] > 0.0,
              ErrorKind::validation, who + ": innovation variance must be positive");
    }
  }

  std::vector<double> stationary_variances() const {
    std::vector<double> v(static_cast<std::size_t>(truncation));
    for (int p = 0; p < truncation; ++p)
      v[static_cast<std::size_t>(p)] =
          stationary_variance(component_theta(p), innovation_variances[static_cast<std::size_t>(p)]);
    return v;
  }

  std::vector<std::vector<double>> eigenfunctions() const {
    return sine_eigenfunctions(time, truncation, true);
  }
};

/// Eigenvalues of L1 and L2 used in the simulation study.
inline constexpr std::array<double, 10> kReferenceEigenvalues1 = {
    0.300, 0.270, 0.230, 0.200, 0.170, 0.130, 0.100, 0.030, 0.010, 0.005};
inline constexpr std::array<double, 10> kReferenceEigenvalues2 = {
    0.500, 0.470, 0.430, 0.400, 0.370, 0.330, 0.300, 0.230, 0.200, 0.150};

/// sigma2_p proportional to p^-2, scaled so the stationary variances sum to one.
inline std::vector<double> default_innovation_variances(const std::vector<double>& eig1,
                                                        const std::vector<double>& eig2,
                                                        const std::vector<double>& eig3,
                                                        bool couple_l3, int truncation) {
  std::vector<double> s(static_cast<std::size_t>(truncation));
  double total = 0.0;
  for (int p = 0; p < truncation; ++p) {
    const auto i = static_cast<std::size_t>(p);
    const double l3 = couple_l3 ? -eig1.at(i) * eig2.at(i) : eig3.at(i);
    const Theta th{eig1.at(i), eig2.at(i), l3};
    require(stationarity_check(th), ErrorKind::stationarity,
            "component p=" + std::to_string(p + 1) + ": non-stationary theta " + describe(th));
    s[i] = 1.0 / ((p + 1.0) * (p + 1.0));
    total += stationary_variance(th, s[i]);
  }
  for (auto& x : s) x /= total;
  return s;
}

/// Reference model with k_N components, coupled L3 and the default variance profile.
inline SarhSpec reference_spec(const TimeGrid& time, int truncation = 10) {
  require(truncation >= 1 && truncation <= 10, ErrorKind::validation,
          "the tabulated model has 10 components");
  SarhSpec spec;
  spec.eigenvalues1.assign(kReferenceEigenvalues1.begin(), kReferenceEigenvalues1.begin() + truncation);
  spec.eigenvalues2.assign(kReferenceEigenvalues2.begin(), kReferenceEigenvalues2.begin() + truncation);
  spec.truncation = truncation;
  spec.time = time;
  spec.couple_l3 = true;
  spec.innovation_variances =
      default_innovation_variances(spec.eigenvalues1, spec.eigenvalues2, {}, true, truncation);
  return spec;
}

inline constexpr int kDefaultBurnIn = 64;

/// Warns when the zero start has not decayed below 1e-3 after burn-in.
inline std::optional<std::string> burn_in_warning(const SarhSpec& spec, int burn_in) {
  double rho = 0.0;
  for (int p = 0; p < spec.truncation; ++p) {
    const Theta th = spec.component_theta(p);
    const double decay = is_factorized(th)
                             ? std::max(std::abs(th.t1), std::abs(th.t2))
                             : std::abs(th.t1) + std::abs(th.t2) + std::abs(th.t3);
    rho = std::max(rho, decay);
  }
  if (rho > 0.0 && std::pow(rho, burn_in) > 1e-3)
    return "burn_in=" + std::to_string(burn_in) + " leaves start-up transient " +
           detail::format_double(std::pow(rho, burn_in)) + " > 1e-3";
  return std::nullopt;
}

/// Simulates one scalar quarter-plane AR field on the (s1+B)x(s2+B) lattice
/// from a zero start and returns the trailing s1 x s2 block, row-major.
inline std::vector<double> simulate_component(const Theta& th, double sigma2,
                                              const SpatialGrid& grid, int burn_in,
                                              std::uint64_t stream_seed) {
  require(burn_in >= 0, ErrorKind::validation, "burn_in must be >= 0");
  const int r1 = grid.s1() + burn_in;
  const int r2 = grid.s2() + burn_in;
  std::mt19937_64 rng(stream_seed);
  std::normal_distribution<double> noise(0.0, std::sqrt(sigma2));
  std::vector<double> x(static_cast<std::size_t>(r1) * static_cast<std::size_t>(r2), 0.0);
  auto at = [&](int r, int c) -> double {
    return (r < 0 || c < 0) ? 0.0 : x[static_cast<std::size_t>(r) * r2 + c];
  };
  for (int r = 0; r < r1; ++r)
    for (int c = 0; c < r2; ++c)
      x[static_cast<std::size_t>(r) * r2 + c] =
          th.t1 * at(r - 1, c) + th.t2 * at(r, c - 1) + th.t3 * at(r - 1, c - 1) + noise(rng);
  std::vector<double> out(grid.size());
  for (int p = 0; p < grid.s1(); ++p)
    for (int q = 0; q < grid.s2(); ++q)
      out[grid.site(p, q)] = x[static_cast<std::size_t>(p + burn_in) * r2 + (q + burn_in)];
  return out;
}

/// Component scalar fields x^(p), one row-major vector per component.
inline std::vector<std::vector<double>> simulate_components(const SarhSpec& spec,
                                                            const SpatialGrid& grid,
                                                            int burn_in, std::uint64_t seed,
                                                            int threads = 1) {
  spec.validate();
  std::vector<std::vector<double>> comps(static_cast<std::size_t>(spec.truncation));
  detail::parallel_for(comps.size(), threads, [&](std::size_t p) {
    comps[p] = simulate_component(spec.component_theta(static_cast<int>(p)),
                                  spec.innovation_variances[p], grid, burn_in,
                                  detail::derive_seed(seed, p, 0x5A4Bu));
  });
  return comps;
}

/// Curves sum_p x^(p)_{r,c} phi_p(t_m) from component fields.
inline FunctionalField synthesize_curves(const std::vector<std::vector<double>>& comps,
                                         const std::vector<std::vector<double>>& phi,
                                         const SpatialGrid& grid, const TimeGrid& time) {
  const std::size_t T = time.size();
  std::vector<double> values(grid.size() * T, 0.0);
  for (std::size_t s = 0; s < grid.size(); ++s)
    for (std::size_t p = 0; p < comps.size(); ++p) {
      const double a = comps[p][s];
      const auto& f = phi[p];
      for (std::size_t m = 0; m < T; ++m) values[s * T + m] += a * f[m];
    }
  return FunctionalField(grid, time, std::move(values));
}

inline FunctionalField simulate(const SarhSpec& spec, const SpatialGrid& grid, int burn_in,
                                std::uint64_t seed, int threads = 1) {
  auto comps = simulate_components(spec, grid, burn_in, seed, threads);
  return synthesize_curves(comps, spec.eigenfunctions(), grid, spec.time);
}

}  // namespace sarhcox
