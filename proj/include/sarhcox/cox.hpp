#pragma once

// Log-Gaussian Cox layer: intensity = exp(log-field + mean), per-cell
// integrated intensity, Poisson counts, and a Monte Carlo check of the
// second-moment bound for the integrated intensity.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sarhcox/detail/util.hpp"
#include "sarhcox/error.hpp"
#include "sarhcox/grid.hpp"
#include "sarhcox/sarh.hpp"

namespace sarhcox {

inline constexpr double kLogIntensityLimit = 700.0;

class IntensityField {
 public:
  IntensityField() = default;
  IntensityField(SpatialGrid grid, TimeGrid time, std::vector<double> values)
      : grid_(grid), time_(time), values_(std::move(values)) {
    require(values_.size() == grid_.size() * time_.size(), ErrorKind::shape,
            "intensity size does not match grid");
    for (std::size_t i = 0; i < values_.size(); ++i)
      require(std::isfinite(values_[i]) && values_[i] > 0.0, ErrorKind::validation,
              "intensity must be finite and positive at index " + std::to_string(i));
  }

  const SpatialGrid& grid() const noexcept { return grid_; }
  const TimeGrid& time() const noexcept { return time_; }
  std::span<const double> values() const noexcept { return values_; }
  double at(int p, int q, std::size_t m) const noexcept {
    return values_[grid_.site(p, q) * time_.size() + m];
  }

 private:
  SpatialGrid grid_;
  TimeGrid time_;
  std::vector<double> values_;
};

/// exp(logfield + mean) elementwise.
inline IntensityField intensity(const FunctionalField& logfield, const MeanCurve& mean) {
  require(mean.time == logfield.time() && mean.values.size() == logfield.time().size(),
          ErrorKind::shape, "mean curve does not match the field's time grid");
  logfield.validate();
  const auto& g = logfield.grid();
  const std::size_t T = logfield.time().size();
  std::vector<double> out(g.size() * T);
  for (int p = 0; p < g.s1(); ++p)
    for (int q = 0; q < g.s2(); ++q)
      for (std::size_t m = 0; m < T; ++m) {
        const double x = logfield.at(p, q, m) + mean.values[m];
        require(std::isfinite(x), ErrorKind::validation, "non-finite mean curve");
        if (x > kLogIntensityLimit)
          fail(ErrorKind::overflow, "log-intensity " + detail::format_double(x) +
                                        " exceeds 700 at p=" + std::to_string(p) +
                                        " q=" + std::to_string(q) +
                                        " t_index=" + std::to_string(m));
        out[g.site(p, q) * T + m] = std::exp(x);
      }
  return IntensityField(g, logfield.time(), std::move(out));
}

inline IntensityField intensity(const FunctionalField& logfield) {
  return intensity(logfield,
                   MeanCurve{logfield.time(), std::vector<double>(logfield.time().size(), 0.0)});
}

/// Midpoint rule over [0, 1]: one value per site, row-major.
inline std::vector<double> integrated_intensity(const IntensityField& f) {
  const std::size_t T = f.time().size();
  const double w = f.time().weight();
  std::vector<double> out(f.grid().size());
  auto v = f.values();
  for (std::size_t s = 0; s < out.size(); ++s) {
    double acc = 0.0;
    for (std::size_t m = 0; m < T; ++m) acc += v[s * T + m];
    out[s] = acc * w;
  }
  return out;
}

struct CountGrid {
  SpatialGrid grid;
  std::vector<std::int64_t> counts;
  std::vector<double> means;

  std::int64_t count(int p, int q) const { return counts[grid.site(p, q)]; }
  double mean(int p, int q) const { return means[grid.site(p, q)]; }
};

/// Independent Poisson draws, one generator per cell so the result does not
/// depend on evaluation order.
inline CountGrid sample_counts(const SpatialGrid& grid, std::span<const double> means,
                               std::uint64_t seed) {
  require(means.size() == grid.size(), ErrorKind::shape, "mean array does not match grid");
  CountGrid out{grid, std::vector<std::int64_t>(grid.size()), {means.begin(), means.end()}};
  for (std::size_t s = 0; s < means.size(); ++s) {
    require(std::isfinite(means[s]) && means[s] > 0.0, ErrorKind::validation,
            "Poisson mean must be positive at p=" + std::to_string(s / static_cast<std::size_t>(grid.s2())) +
                " q=" + std::to_string(s % static_cast<std::size_t>(grid.s2())));
    std::mt19937_64 rng(detail::derive_seed(seed, s, 0xC0u));
    std::poisson_distribution<std::int64_t> pois(means[s]);
    out.counts[s] = pois(rng);
  }
  return out;
}

struct MomentBoundResult {
  double mc_second_moment = 0.0;
  double mc_standard_error = 0.0;
  double analytic_bound = 0.0;   ///< exp(4 trace M^2), M = sup |phi_p|
  double unit_sup_bound = 0.0;   ///< exp(4 trace), the value with M = 1
  double trace = 0.0;
  double sup_norm = 0.0;
  bool pass = false;
};

/// Monte Carlo E[Psi^2], Psi = int exp(X(t)) dt with X drawn from the
/// stationary marginal sum_p sqrt(v_p) Z_p phi_p(t).
inline MomentBoundResult moment_bound_check(const SarhSpec& spec, int n_mc, std::uint64_t seed) {
  require(n_mc >= 100, ErrorKind::validation, "n_mc must be >= 100");
  require(spec.truncation >= 1 && spec.innovation_variances.size() >=
                                      static_cast<std::size_t>(spec.truncation),
          ErrorKind::validation, "spec needs k_N innovation variances");
  std::vector<double> var(static_cast<std::size_t>(spec.truncation));
  for (int p = 0; p < spec.truncation; ++p) {
    const Theta th = spec.component_theta(p);
    require(stationarity_check(th), ErrorKind::stationarity,
            "component p=" + std::to_string(p + 1) + ": non-stationary theta " + describe(th));
    const double s2 = spec.innovation_variances[static_cast<std::size_t>(p)];
    require(std::isfinite(s2) && s2 >= 0.0, ErrorKind::validation,
            "innovation variances must be >= 0");
    var[static_cast<std::size_t>(p)] = s2 == 0.0 ? 0.0 : stationary_variance(th, s2);
  }
  const auto phi = spec.eigenfunctions();
  const std::size_t T = spec.time.size();

  MomentBoundResult r;
  for (double v : var) r.trace += v;
  for (const auto& f : phi)
    for (double x : f) r.sup_norm = std::max(r.sup_norm, std::abs(x));
  r.analytic_bound = std::exp(4.0 * r.trace * r.sup_norm * r.sup_norm);
  r.unit_sup_bound = std::exp(4.0 * r.trace);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> x(T);
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n_mc; ++i) {
    std::fill(x.begin(), x.end(), 0.0);
    for (std::size_t p = 0; p < phi.size(); ++p) {
      const double a = std::sqrt(var[p]) * z(rng);
      for (std::size_t m = 0; m < T; ++m) x[m] += a * phi[p][m];
    }
    double psi = 0.0;
    for (double v : x) psi += std::exp(v);
    psi *= spec.time.weight();
    const double s = psi * psi;
    sum += s;
    sum2 += s * s;
  }
  const double n = n_mc;
  r.mc_second_moment = sum / n;
  const double var_s = std::max(0.0, (sum2 - n * r.mc_second_moment * r.mc_second_moment) / (n - 1.0));
  r.mc_standard_error = std::sqrt(var_s / n);
  r.pass = r.mc_second_moment <= r.analytic_bound + 3.0 * r.mc_standard_error;
  return r;
}

}  // namespace sarhcox
