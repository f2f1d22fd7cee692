#pragma once

// Minimum-contrast estimation of the per-node autoregression parameters,
// assembly of the estimated operator matrices and innovation variance
// recovery.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sarhcox/detail/util.hpp"
#include "sarhcox/error.hpp"
#include "sarhcox/sarh.hpp"
#include "sarhcox/spectral.hpp"
#include "sarhcox/wavelet.hpp"

namespace sarhcox {

enum class DomainMode { finite_grid, box };

struct Interval {
  double lo = -0.95;
  double hi = 0.95;
};

/// Candidate set for theta. In box mode the search is seeded on an
/// 11-point-per-axis grid over `bounds` and refined by pattern search;
/// only stationary points are ever evaluated.
struct ThetaDomain {
  DomainMode mode = DomainMode::box;
  std::vector<Theta> grid_points;
  Interval bounds[3] = {{}, {}, {}};
  bool couple_l3 = false;  ///< search (t1, t2) with t3 = -t1*t2
  int seeds_per_axis = 11;
  double tolerance = 1e-6;

  static ThetaDomain box(Interval b = {}) {
    ThetaDomain d;
    d.bounds[0] = d.bounds[1] = d.bounds[2] = b;
    return d;
  }
  static ThetaDomain finite(std::vector<Theta> points) {
    ThetaDomain d;
    d.mode = DomainMode::finite_grid;
    d.grid_points = std::move(points);
    return d;
  }

  int dims() const noexcept { return couple_l3 ? 2 : 3; }

  Theta complete(Theta th) const noexcept {
    if (couple_l3) th.t3 = -th.t1 * th.t2;
    return th;
  }

  bool contains(const Theta& th) const {
    if (mode == DomainMode::finite_grid)
      return std::find(grid_points.begin(), grid_points.end(), th) != grid_points.end();
    for (int i = 0; i < dims(); ++i)
      if (th[i] < bounds[i].lo || th[i] > bounds[i].hi) return false;
    return stationarity_check(th);
  }

  void validate() const {
    if (mode == DomainMode::finite_grid) {
      require(!grid_points.empty(), ErrorKind::validation, "finite theta domain is empty");
      for (const auto& th : grid_points)
        require(stationarity_check(th), ErrorKind::stationarity,
                "finite theta domain holds non-stationary candidate " + describe(th));
      return;
    }
    require(seeds_per_axis >= 2, ErrorKind::validation, "box seeding needs >= 2 points per axis");
    require(tolerance > 0.0, ErrorKind::validation, "pattern-search tolerance must be positive");
    for (int i = 0; i < dims(); ++i)
      require(bounds[i].lo < bounds[i].hi, ErrorKind::validation,
              "box bounds must satisfy lo < hi");
    require(!seeds().empty(), ErrorKind::stationarity,
            "no stationary candidate among the box seeds");
  }

  /// Stationary seed candidates in lexicographic order.
  std::vector<Theta> seeds() const {
    if (mode == DomainMode::finite_grid) {
      auto pts = grid_points;
      std::sort(pts.begin(), pts.end());
      return pts;
    }
    std::vector<Theta> out;
    const int n = seeds_per_axis;
    auto coord = [&](int axis, int k) {
      return bounds[axis].lo + (bounds[axis].hi - bounds[axis].lo) * k / (n - 1);
    };
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        if (couple_l3) {
          Theta th = complete({coord(0, a), coord(1, b), 0.0});
          if (stationarity_check(th)) out.push_back(th);
          continue;
        }
        for (int c = 0; c < n; ++c) {
          Theta th{coord(0, a), coord(1, b), coord(2, c)};
          if (stationarity_check(th)) out.push_back(th);
        }
      }
    return out;
  }

  double seed_spacing(int axis) const {
    return (bounds[axis].hi - bounds[axis].lo) / (seeds_per_axis - 1);
  }
};

struct NodeEstimate {
  Theta theta;
  double contrast = 0.0;
  int iterations = 0;
  int evaluations = 0;
};

namespace detail {

/// Best seed per weight column. `weights` is support x nodes; ties keep the
/// lexicographically smallest seed.
inline std::vector<std::size_t> best_seeds(const ContrastKernel& kernel,
                                           const std::vector<Theta>& seeds,
                                           const Eigen::MatrixXd& weights,
                                           const Eigen::VectorXd& totals,
                                           std::vector<double>* best_values = nullptr) {
  const auto support = static_cast<Eigen::Index>(kernel.support_size());
  const auto nodes = weights.cols();
  std::vector<std::size_t> best(static_cast<std::size_t>(nodes), 0);
  std::vector<double> best_val(static_cast<std::size_t>(nodes),
                               std::numeric_limits<double>::infinity());
  constexpr std::size_t kChunk = 256;
  for (std::size_t s0 = 0; s0 < seeds.size(); s0 += kChunk) {
    const std::size_t s1 = std::min(seeds.size(), s0 + kChunk);
    const auto rows = static_cast<Eigen::Index>(s1 - s0);
    Eigen::MatrixXd log_sym(rows, support);
    Eigen::VectorXd log_norm(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const Theta& th = seeds[s0 + static_cast<std::size_t>(r)];
      double norm = 0.0;
      for (Eigen::Index k = 0; k < support; ++k) {
        const double a2 = kernel.symbol_norm2(th, static_cast<std::size_t>(k));
        log_sym(r, k) = std::log(a2);
        norm += kernel.eta()[static_cast<std::size_t>(k)] / a2;
      }
      log_norm(r) = std::log(norm * kernel.freq().cell());
    }
    Eigen::MatrixXd scores = log_sym * weights;
    scores += log_norm * totals.transpose();
    for (Eigen::Index j = 0; j < nodes; ++j)
      for (Eigen::Index r = 0; r < rows; ++r) {
        const double v = kernel.freq().cell() * scores(r, j);
        if (v < best_val[static_cast<std::size_t>(j)]) {
          best_val[static_cast<std::size_t>(j)] = v;
          best[static_cast<std::size_t>(j)] = s0 + static_cast<std::size_t>(r);
        }
      }
  }
  if (best_values) *best_values = std::move(best_val);
  return best;
}

/// Coordinate pattern search from `start`, halving the step until it drops
/// below the domain tolerance. Only strict improvements are accepted.
inline NodeEstimate pattern_search(const ContrastKernel& kernel, std::span<const double> w,
                                   double total, const ThetaDomain& domain, Theta start) {
  NodeEstimate est{start, kernel.evaluate(w, total, start), 0, 1};
  if (domain.mode == DomainMode::finite_grid) return est;
  const int dims = domain.dims();
  double step[3];
  for (int i = 0; i < dims; ++i) step[i] = 0.5 * domain.seed_spacing(i);
  constexpr int kMaxIterations = 20000;
  while (est.iterations < kMaxIterations) {
    double largest = 0.0;
    for (int i = 0; i < dims; ++i) largest = std::max(largest, step[i]);
    if (largest < domain.tolerance) break;
    ++est.iterations;
    bool moved = false;
    for (int i = 0; i < dims && !moved; ++i)
      for (double sign : {1.0, -1.0}) {
        Theta cand = est.theta;
        cand[i] += sign * step[i];
        cand = domain.complete(cand);
        if (!domain.contains(cand)) continue;
        const double v = kernel.evaluate(w, total, cand);
        ++est.evaluations;
        if (v < est.contrast) {
          est.theta = cand;
          est.contrast = v;
          moved = true;
          break;
        }
      }
    if (!moved)
      for (int i = 0; i < dims; ++i) step[i] *= 0.5;
  }
  return est;
}

}  // namespace detail

/// Minimises the empirical contrast of one (real) periodogram table over
/// the domain. The reported contrast is re-evaluated with
/// empirical_contrast at the returned theta.
inline NodeEstimate estimate_node(std::span<const double> I, const FrequencyGrid& freq,
                                  const ThetaDomain& domain,
                                  const EtaFunction& eta = eta_weight) {
  domain.validate();
  ContrastKernel kernel(freq, eta);
  const auto seeds = domain.seeds();
  const auto w = kernel.weights(I);
  double total = 0.0;
  for (double x : w) total += x;
  Eigen::MatrixXd W = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  Eigen::VectorXd totals(1);
  totals(0) = total;
  const auto best = detail::best_seeds(kernel, seeds, W, totals);
  auto est = detail::pattern_search(kernel, w, total, domain, seeds[best[0]]);
  est.contrast = empirical_contrast(I, est.theta, eta, freq);
  return est;
}

inline NodeEstimate estimate_node(const PeriodogramTable& table, const ThetaDomain& domain,
                                  const EtaFunction& eta = eta_weight) {
  const auto re = table.real_part();
  return estimate_node(re, table.freq, domain, eta);
}

struct Sigma2Estimate {
  double sigma2 = 0.0;               ///< (2 pi)^2/N sum I eta, the normaliser of Psi
  double innovation_variance = 0.0;  ///< 4 pi^2 sum I eta / sum eta |A|^-2
};

inline Sigma2Estimate estimate_sigma2(std::span<const double> I, const Theta& theta_hat,
                                      const FrequencyGrid& freq,
                                      const EtaFunction& eta = eta_weight) {
  require_stationary(theta_hat);
  require(I.size() == freq.size(), ErrorKind::shape, "periodogram does not match grid");
  double mass = 0.0;
  double model = 0.0;
  for (int a = 0; a < freq.s1(); ++a)
    for (int b = 0; b < freq.s2(); ++b) {
      const double w1 = freq.omega1(a), w2 = freq.omega2(b);
      const double e = eta(w1, w2);
      if (e == 0.0) continue;
      mass += I[freq.index(a, b)] * e;
      model += e / ar_symbol_norm2(theta_hat, w1, w2);
    }
  require(std::isfinite(mass), ErrorKind::degenerate, "non-finite periodogram mass");
  require(model > 0.0, ErrorKind::degenerate, "eta vanishes on the whole frequency grid");
  return {mass * freq.cell(), 4.0 * std::numbers::pi * std::numbers::pi * mass / model};
}

/// floor(ln N), at least 1.
inline int truncation_for(std::size_t n) {
  return std::max(1, static_cast<int>(std::floor(std::log(static_cast<double>(n)))));
}

struct NodeRecord {
  std::size_t a = 0;  ///< row position in the coefficient layout
  std::size_t b = 0;  ///< column position; equal to a for diagonal records
  Theta theta;
  double sigma2 = 0.0;
  double innovation_variance = 0.0;
  double contrast = 0.0;
  int iterations = 0;
  std::vector<std::string> flags;

  bool diagonal() const noexcept { return a == b; }
};

struct EstimationReport {
  SpatialGrid grid;
  WaveletLayout layout;
  int truncation = 1;
  bool include_cross = false;
  std::vector<NodeRecord> records;  ///< diagonal records first, in layout order
  OperatorWaveletMatrix l1, l2, l3;
  std::vector<double> eigenvalues1, eigenvalues2, eigenvalues3;

  const NodeRecord& diagonal(std::size_t a) const { return records.at(a); }

  void assemble() {
    l1 = OperatorWaveletMatrix::zero(layout);
    l2 = OperatorWaveletMatrix::zero(layout);
    l3 = OperatorWaveletMatrix::zero(layout);
    for (const auto& r : records) {
      const auto a = static_cast<Eigen::Index>(r.a), b = static_cast<Eigen::Index>(r.b);
      l1.matrix(a, b) = l1.matrix(b, a) = r.theta.t1;
      l2.matrix(a, b) = l2.matrix(b, a) = r.theta.t2;
      l3.matrix(a, b) = l3.matrix(b, a) = r.theta.t3;
    }
    const int k = std::min<int>(truncation, static_cast<int>(layout.size()));
    eigenvalues1 = wavelet_to_operator_eigs(l1, k);
    eigenvalues2 = wavelet_to_operator_eigs(l2, k);
    eigenvalues3 = wavelet_to_operator_eigs(l3, k);
  }
};

namespace detail {

/// rho * theta, shrunk further if needed to stay inside the stationary region.
inline Theta shrink_to_stationary(const Theta& th, double rho) {
  Theta out{rho * th.t1, rho * th.t2, rho * th.t3};
  while (!stationarity_check(out)) out = {0.99 * out.t1, 0.99 * out.t2, 0.99 * out.t3};
  return out;
}

inline void flag_record(NodeRecord& r, const ThetaDomain& domain, double mass) {
  if (mass == 0.0) r.flags.push_back("degenerate");
  if (mass < 0.0) r.flags.push_back("negative_mass");
  if (domain.mode == DomainMode::box) {
    const Theta& th = r.theta;
    bool edge = std::abs(th.t1) + std::abs(th.t2) + std::abs(th.t3) > 0.98 && !is_factorized(th);
    for (int i = 0; i < domain.dims(); ++i)
      edge = edge || th[i] - domain.bounds[i].lo < 1e-3 || domain.bounds[i].hi - th[i] < 1e-3;
    if (edge) r.flags.push_back("near_boundary");
  }
}

}  // namespace detail

struct EstimateOptions {
  bool include_cross = false;
  int threads = 1;
};

/// Estimates every diagonal node (and optionally every cross pair from the
/// real part of the cross periodogram), then assembles the operator
/// matrices and their leading floor(ln N) eigenvalues.
///
/// A cross pair is fitted to sign * Re I_ab, with the sign chosen so the
/// eta-weighted mass is positive, and the fitted theta is multiplied by the
/// coherence |sum Re I_ab eta| / sqrt(sum I_aa eta * sum I_bb eta).
inline EstimationReport estimate_all(const MultiscaleCoefficients& coeffs,
                                     const ThetaDomain& domain, const EtaFunction& eta = eta_weight,
                                     EstimateOptions opts = {}) {
  domain.validate();
  const auto& grid = coeffs.grid();
  const FrequencyGrid freq(grid);
  const std::size_t T = coeffs.nodes();

  std::vector<std::vector<double>> fields(T);
  for (std::size_t a = 0; a < T; ++a) fields[a] = coeffs.node_field(a);
  const auto dft = fdft_fields(fields, grid);

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < T; ++a) pairs.emplace_back(a, a);
  if (opts.include_cross)
    for (std::size_t a = 0; a < T; ++a)
      for (std::size_t b = a + 1; b < T; ++b) pairs.emplace_back(a, b);

  const ContrastKernel kernel(freq, eta);
  const auto seeds = domain.seeds();
  const auto support = static_cast<Eigen::Index>(kernel.support_size());

  EstimationReport report;
  report.grid = grid;
  report.layout = coeffs.layout();
  report.truncation = truncation_for(grid.size());
  report.include_cross = opts.include_cross;
  report.records.resize(pairs.size());

  // eta-weighted periodogram mass of each node, for cross-pair coherence.
  std::vector<double> node_mass(T, 0.0);
  for (std::size_t a = 0; a < T; ++a)
    for (std::size_t k = 0; k < kernel.support_size(); ++k)
      node_mass[a] += std::norm(dft[a][kernel.support()[k]]) * kernel.eta()[k];

  // Seeding runs in blocks of pairs so the weight matrix stays small.
  constexpr std::size_t kBlock = 512;
  for (std::size_t p0 = 0; p0 < pairs.size(); p0 += kBlock) {
    const std::size_t p1 = std::min(pairs.size(), p0 + kBlock);
    const auto cols = static_cast<Eigen::Index>(p1 - p0);
    Eigen::MatrixXd W(support, cols);
    Eigen::VectorXd totals(cols);
    std::vector<std::vector<double>> tables(p1 - p0);
    for (std::size_t j = p0; j < p1; ++j) {
      const auto [a, b] = pairs[j];
      const auto table = periodogram_from_dft(freq, dft[a], dft[b], a == b);
      tables[j - p0] = table.real_part();
      const auto w = kernel.weights(tables[j - p0]);
      double total = 0.0;
      for (double x : w) total += x;
      // Cross pairs are fitted with positive mass (see the coherence step below).
      const double sgn = total < 0.0 ? -1.0 : 1.0;
      for (Eigen::Index k = 0; k < support; ++k)
        W(k, static_cast<Eigen::Index>(j - p0)) = sgn * w[static_cast<std::size_t>(k)];
      totals(static_cast<Eigen::Index>(j - p0)) = sgn * total;
    }
    const auto best = detail::best_seeds(kernel, seeds, W, totals);

    detail::parallel_for(p1 - p0, opts.threads, [&](std::size_t j) {
      const auto [a, b] = pairs[p0 + j];
      const auto& I = tables[j];
      auto w = kernel.weights(I);
      double total = 0.0;
      for (double x : w) total += x;
      const double sgn = total < 0.0 ? -1.0 : 1.0;
      for (auto& x : w) x *= sgn;
      auto est = detail::pattern_search(kernel, w, sgn * total, domain, seeds[best[j]]);

      NodeRecord r;
      r.a = a;
      r.b = b;
      r.theta = est.theta;
      r.iterations = est.iterations;
      std::vector<double> Is(I);
      for (auto& x : Is) x *= sgn;
      if (a != b) {
        // Shrink by the eta-weighted coherence of the pair, so pairs with no
        // cross dependence give parameters near zero.
        const double denom = std::sqrt(node_mass[a] * node_mass[b]);
        const double rho = denom > 0.0 ? std::min(1.0, std::abs(total) / denom) : 0.0;
        r.theta = detail::shrink_to_stationary(est.theta, rho);
      }
      r.contrast = empirical_contrast(I, r.theta, eta, freq);
      const auto s2 = estimate_sigma2(Is, r.theta, freq, eta);
      r.sigma2 = sgn * s2.sigma2;
      r.innovation_variance = sgn * s2.innovation_variance;
      detail::flag_record(r, domain, total);
      report.records[p0 + j] = std::move(r);
    });
  }
  report.assemble();
  return report;
}

}  // namespace sarhcox
