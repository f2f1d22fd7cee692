#pragma once

// Monte Carlo harness for the simulation study: repeated simulate/estimate
// runs over increasing lattice sizes, with per-scale mean quadratic errors
// of the node estimates and the leading eigenvalue estimates.
//
// The reference value for each node is the minimiser of the population
// contrast built from the exact spectral density of that coefficient field
// (the limit of the estimator). When a coefficient field is itself a
// quarter-plane AR field this is its true parameter. The diagonal entries of
// the true operator matrices are reported alongside for comparison.

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sarhcox/detail/util.hpp"
#include "sarhcox/estimator.hpp"
#include "sarhcox/grid.hpp"
#include "sarhcox/sarh.hpp"
#include "sarhcox/spectral.hpp"
#include "sarhcox/wavelet.hpp"

namespace sarhcox {

/// Exact spectral density (up to a constant) of each coefficient field of a
/// simulated model, tabulated on `freq`. Row a is the table of position a.
inline std::vector<std::vector<double>> coefficient_spectra(const SarhSpec& spec, int j0,
                                                            const FrequencyGrid& freq) {
  const auto phi = spec.eigenfunctions();
  const std::size_t T = spec.time.size();
  std::vector<std::vector<double>> d(phi.size());
  for (std::size_t p = 0; p < phi.size(); ++p) d[p] = dwt(phi[p], j0);

  std::vector<std::vector<double>> comp(phi.size(), std::vector<double>(freq.size()));
  for (std::size_t p = 0; p < phi.size(); ++p) {
    const Theta th = spec.component_theta(static_cast<int>(p));
    for (int a = 0; a < freq.s1(); ++a)
      for (int b = 0; b < freq.s2(); ++b)
        comp[p][freq.index(a, b)] = spec.innovation_variances[p] /
                                    (4.0 * std::numbers::pi * std::numbers::pi) /
                                    ar_symbol_norm2(th, freq.omega1(a), freq.omega2(b));
  }
  std::vector<std::vector<double>> out(T, std::vector<double>(freq.size(), 0.0));
  for (std::size_t a = 0; a < T; ++a)
    for (std::size_t p = 0; p < phi.size(); ++p) {
      const double w = d[p][a] * d[p][a];
      if (w == 0.0) continue;
      for (std::size_t i = 0; i < freq.size(); ++i) out[a][i] += w * comp[p][i];
    }
  return out;
}

/// Population minimiser of the contrast for every coefficient position.
inline std::vector<Theta> reference_parameters(const SarhSpec& spec, int j0,
                                               const ThetaDomain& domain, int grid_side = 128,
                                               int threads = 1) {
  const FrequencyGrid freq(grid_side, grid_side);
  const auto spectra = coefficient_spectra(spec, j0, freq);
  std::vector<Theta> out(spectra.size());
  detail::parallel_for(spectra.size(), threads, [&](std::size_t a) {
    out[a] = estimate_node(spectra[a], freq, domain).theta;
  });
  return out;
}

/// Diagonal entries L_i(basis_a)(basis_a) of the true operators.
inline std::vector<Theta> diagonal_operator_parameters(const SarhSpec& spec, int j0) {
  const auto phi = spec.eigenfunctions();
  const auto l3 = spec.effective_eigenvalues3();
  const auto m1 = operator_to_wavelet(spec.eigenvalues1, phi, spec.truncation, spec.time, j0);
  const auto m2 = operator_to_wavelet(spec.eigenvalues2, phi, spec.truncation, spec.time, j0);
  const auto m3 = operator_to_wavelet(l3, phi, spec.truncation, spec.time, j0);
  std::vector<Theta> out(spec.time.size());
  for (std::size_t a = 0; a < out.size(); ++a) {
    const auto i = static_cast<Eigen::Index>(a);
    out[a] = {m1.matrix(i, i), m2.matrix(i, i), m3.matrix(i, i)};
  }
  return out;
}

struct MseExperimentConfig {
  SarhSpec spec;
  int j0 = 0;
  std::vector<int> sides;  ///< square lattices side x side
  int replications = 20;
  int burn_in = kDefaultBurnIn;
  std::uint64_t seed = 1;
  ThetaDomain domain;
  int threads = 1;
  int reference_grid = 128;
};

struct ReplicationResult {
  std::vector<Theta> estimates;  ///< per coefficient position
  std::vector<double> eigenvalues1, eigenvalues2;
};

struct MseExperimentResult {
  WaveletLayout layout;
  std::vector<int> sides;
  std::vector<int> scales;  ///< -1 is the scaling block, then detail levels
  std::vector<Theta> reference;
  std::vector<Theta> diagonal_truth;
  /// mse[coord][size][scale] against the reference parameters
  std::vector<std::vector<std::vector<double>>> mse;
  /// same layout, against the diagonal operator entries
  std::vector<std::vector<std::vector<double>>> mse_diagonal;
  /// runs[size][replication]
  std::vector<std::vector<ReplicationResult>> runs;
};

inline std::uint64_t replication_seed(std::uint64_t seed, std::size_t size_index, int rep) {
  return detail::derive_seed(seed, size_index * 100003u + static_cast<std::uint64_t>(rep), 0xE5u);
}

inline MseExperimentResult run_mse_experiment(const MseExperimentConfig& cfg) {
  cfg.spec.validate();
  MseExperimentResult res;
  res.layout = WaveletLayout(cfg.j0, cfg.spec.time.depth());
  res.sides = cfg.sides;
  res.scales.push_back(-1);
  for (int j = cfg.j0; j < cfg.spec.time.depth(); ++j) res.scales.push_back(j);
  res.reference = reference_parameters(cfg.spec, cfg.j0, cfg.domain, cfg.reference_grid, cfg.threads);
  res.diagonal_truth = diagonal_operator_parameters(cfg.spec, cfg.j0);

  std::map<int, std::size_t> scale_slot;
  for (std::size_t s = 0; s < res.scales.size(); ++s) scale_slot[res.scales[s]] = s;
  std::vector<std::size_t> count(res.scales.size(), 0);
  for (std::size_t a = 0; a < res.layout.size(); ++a) ++count[scale_slot[res.layout.scale_of(a)]];

  auto zeros = [&] {
    return std::vector<std::vector<std::vector<double>>>(
        3, std::vector<std::vector<double>>(cfg.sides.size(),
                                            std::vector<double>(res.scales.size(), 0.0)));
  };
  res.mse = zeros();
  res.mse_diagonal = zeros();
  res.runs.resize(cfg.sides.size());

  for (std::size_t si = 0; si < cfg.sides.size(); ++si) {
    const SpatialGrid grid(cfg.sides[si], cfg.sides[si]);
    res.runs[si].resize(static_cast<std::size_t>(cfg.replications));
    for (int rep = 0; rep < cfg.replications; ++rep) {
      const auto field = simulate(cfg.spec, grid, cfg.burn_in,
                                  replication_seed(cfg.seed, si, rep), cfg.threads);
      const auto centred = detrend(field).first;
      const auto report = estimate_all(field_dwt(centred, cfg.j0), cfg.domain, eta_weight,
                                       {false, cfg.threads});
      auto& run = res.runs[si][static_cast<std::size_t>(rep)];
      run.estimates.resize(res.layout.size());
      for (std::size_t a = 0; a < res.layout.size(); ++a) {
        const Theta& th = report.diagonal(a).theta;
        run.estimates[a] = th;
        const auto slot = scale_slot[res.layout.scale_of(a)];
        for (int i = 0; i < 3; ++i) {
          const double e = th[i] - res.reference[a][i];
          const double ed = th[i] - res.diagonal_truth[a][i];
          res.mse[static_cast<std::size_t>(i)][si][slot] += e * e;
          res.mse_diagonal[static_cast<std::size_t>(i)][si][slot] += ed * ed;
        }
      }
      run.eigenvalues1 = report.eigenvalues1;
      run.eigenvalues2 = report.eigenvalues2;
    }
    for (int i = 0; i < 3; ++i)
      for (std::size_t s = 0; s < res.scales.size(); ++s) {
        const double denom = static_cast<double>(count[s]) * cfg.replications;
        res.mse[static_cast<std::size_t>(i)][si][s] /= denom;
        res.mse_diagonal[static_cast<std::size_t>(i)][si][s] /= denom;
      }
  }
  return res;
}

/// Mean squared error of estimated eigenvalues against the true ones over
/// the leading min(k, truth) positions.
inline double eigenvalue_mse(const std::vector<double>& estimate, std::span<const double> truth) {
  const std::size_t k = std::min(estimate.size(), truth.size());
  if (k == 0) return 0.0;
  double acc = 0.0;
  for (std::size_t p = 0; p < k; ++p) acc += (estimate[p] - truth[p]) * (estimate[p] - truth[p]);
  return acc / static_cast<double>(k);
}

}  // namespace sarhcox
