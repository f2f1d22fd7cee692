#pragma once

// Multiscale plug-in prediction and leave-one-site-out cross-validation.
//
// A site (p, q) with p, q >= 1 is predicted from its west, south and
// south-west neighbours: x_hat = M1 x_{p-1,q} + M2 x_{p,q-1} + M3 x_{p-1,q-1}
// in the wavelet basis. Sites on the first row or column are left
// unpredicted (NaN, mask 0).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sarhcox/detail/util.hpp"
#include "sarhcox/error.hpp"
#include "sarhcox/estimator.hpp"
#include "sarhcox/grid.hpp"
#include "sarhcox/sarh.hpp"
#include "sarhcox/spectral.hpp"
#include "sarhcox/wavelet.hpp"

namespace sarhcox {

struct OperatorSet {
  OperatorWaveletMatrix l1, l2, l3;

  const WaveletLayout& layout() const noexcept { return l1.layout; }

  static OperatorSet zero(const WaveletLayout& layout) {
    return {OperatorWaveletMatrix::zero(layout), OperatorWaveletMatrix::zero(layout),
            OperatorWaveletMatrix::zero(layout)};
  }
};

inline OperatorSet operators_from_report(const EstimationReport& report) {
  return {report.l1, report.l2, report.l3};
}

/// Wavelet matrices of the model operators sum_p lambda_p phi_p (x) phi_p.
inline OperatorSet true_operator_set(const SarhSpec& spec, int j0) {
  spec.validate();
  const auto phi = spec.eigenfunctions();
  return {operator_to_wavelet(spec.eigenvalues1, phi, spec.truncation, spec.time, j0),
          operator_to_wavelet(spec.eigenvalues2, phi, spec.truncation, spec.time, j0),
          operator_to_wavelet(spec.effective_eigenvalues3(), phi, spec.truncation, spec.time, j0)};
}

struct PredictionResult {
  FunctionalField predicted;  ///< NaN where mask is 0
  FunctionalField residuals;  ///< observed - predicted, NaN where mask is 0
  std::vector<std::uint8_t> mask;  ///< per site, row-major

  bool predicted_at(int p, int q) const { return mask[predicted.grid().site(p, q)] != 0; }
};

inline bool has_causal_neighbours(int p, int q) { return p >= 1 && q >= 1; }

namespace detail {

inline void check_layout(const MultiscaleCoefficients& coeffs, const OperatorSet& ops) {
  const auto n = static_cast<Eigen::Index>(coeffs.nodes());
  for (const auto* m : {&ops.l1, &ops.l2, &ops.l3})
    require(m->layout == coeffs.layout() && m->matrix.rows() == n && m->matrix.cols() == n,
            ErrorKind::shape, "operator matrices do not conform to the coefficient layout");
}

inline Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> s) {
  return {s.data(), static_cast<Eigen::Index>(s.size())};
}

}  // namespace detail

/// Coefficient vector predicted at one interior site.
inline Eigen::VectorXd predict_site(const MultiscaleCoefficients& coeffs, const OperatorSet& ops,
                                    int p, int q) {
  using detail::as_vector;
  return ops.l1.matrix * as_vector(coeffs.site(p - 1, q)) +
         ops.l2.matrix * as_vector(coeffs.site(p, q - 1)) +
         ops.l3.matrix * as_vector(coeffs.site(p - 1, q - 1));
}

/// Same prediction summed over the twelve blocks (three operators times
/// scaling/detail rows times scaling/detail columns).
inline Eigen::VectorXd predict_site_blockwise(const MultiscaleCoefficients& coeffs,
                                              const OperatorSet& ops, int p, int q) {
  const auto n = static_cast<Eigen::Index>(coeffs.nodes());
  const auto s = static_cast<Eigen::Index>(coeffs.layout().scaling_size());
  const Eigen::Index d = n - s;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  const OperatorWaveletMatrix* mats[3] = {&ops.l1, &ops.l2, &ops.l3};
  const int nb[3][2] = {{p - 1, q}, {p, q - 1}, {p - 1, q - 1}};
  for (int i = 0; i < 3; ++i) {
    const auto x = detail::as_vector(coeffs.site(nb[i][0], nb[i][1]));
    const auto& M = mats[i]->matrix;
    out.head(s) += M.topLeftCorner(s, s) * x.head(s);
    if (d > 0) {
      out.head(s) += M.topRightCorner(s, d) * x.tail(d);
      out.tail(d) += M.bottomLeftCorner(d, s) * x.head(s);
      out.tail(d) += M.bottomRightCorner(d, d) * x.tail(d);
    }
  }
  return out;
}

inline constexpr double kBlockCheckTolerance = 1e-12;

/// Plug-in prediction of every site with three causal neighbours. The
/// block expansion is evaluated alongside the matrix products and any
/// disagreement above 1e-12 (relative to the coefficient scale) is an error.
inline PredictionResult predict(const MultiscaleCoefficients& coeffs, const OperatorSet& ops,
                                bool cross_check = true) {
  detail::check_layout(coeffs, ops);
  const auto& g = coeffs.grid();
  const TimeGrid time(coeffs.depth());
  const std::size_t T = coeffs.nodes();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  PredictionResult r{FunctionalField(g, time), FunctionalField(g, time),
                     std::vector<std::uint8_t>(g.size(), 0)};
  std::fill(r.predicted.values().begin(), r.predicted.values().end(), nan);
  std::fill(r.residuals.values().begin(), r.residuals.values().end(), nan);

  for (int p = 1; p < g.s1(); ++p)
    for (int q = 1; q < g.s2(); ++q) {
      const Eigen::VectorXd x = predict_site(coeffs, ops, p, q);
      if (cross_check) {
        const Eigen::VectorXd xb = predict_site_blockwise(coeffs, ops, p, q);
        const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
        require((x - xb).cwiseAbs().maxCoeff() <= kBlockCheckTolerance * scale,
                ErrorKind::degenerate, "block expansion disagrees with matrix prediction");
      }
      const auto curve = idwt(std::span<const double>(x.data(), T), coeffs.j0());
      const auto observed = idwt(coeffs.site(p, q), coeffs.j0());
      auto pc = r.predicted.curve(p, q);
      auto rc = r.residuals.curve(p, q);
      for (std::size_t m = 0; m < T; ++m) {
        pc[m] = curve[m];
        rc[m] = observed[m] - curve[m];
      }
      r.mask[g.site(p, q)] = 1;
    }
  return r;
}

inline PredictionResult predict(const MultiscaleCoefficients& coeffs,
                                const EstimationReport& report, bool cross_check = true) {
  return predict(coeffs, operators_from_report(report), cross_check);
}

/// Sample variance (about zero) of the residual scores <r, phi_p> over the
/// predicted sites, one value per eigenfunction.
inline std::vector<double> component_residual_variances(
    const PredictionResult& pr, const std::vector<std::vector<double>>& phi) {
  const auto& g = pr.residuals.grid();
  const double w = pr.residuals.time().weight();
  std::vector<double> out(phi.size(), 0.0);
  std::size_t n = 0;
  for (int p = 0; p < g.s1(); ++p)
    for (int q = 0; q < g.s2(); ++q) {
      if (!pr.predicted_at(p, q)) continue;
      ++n;
      const auto rc = pr.residuals.curve(p, q);
      for (std::size_t k = 0; k < phi.size(); ++k) {
        double s = 0.0;
        for (std::size_t m = 0; m < rc.size(); ++m) s += rc[m] * phi[k][m];
        s *= w;
        out[k] += s * s;
      }
    }
  require(n > 0, ErrorKind::degenerate, "no predicted sites");
  for (auto& v : out) v /= static_cast<double>(n);
  return out;
}

// ---------------------------------------------------------------------------
// Leave-one-site-out validation

struct ValidationConfig {
  int neighborhood_radius = 1;
  int period_length = 12;
  int fold_stride = 1;  ///< validate every fold_stride-th interior site
  int threads = 1;
};

struct Rectangle {
  int p0 = 0, q0 = 0, rows = 0, cols = 0;
  std::size_t area() const noexcept {
    return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  }
};

/// Largest full-width or full-height block of the lattice that avoids the
/// rows and columns within `radius` of (p, q). Ties go to top, bottom, left,
/// right in that order.
inline Rectangle training_rectangle(const SpatialGrid& g, int p, int q, int radius) {
  const int top = std::max(0, p - radius);
  const int bottom = std::min(g.s1(), p + radius + 1);
  const int left = std::max(0, q - radius);
  const int right = std::min(g.s2(), q + radius + 1);
  const Rectangle cand[4] = {{0, 0, top, g.s2()},
                             {bottom, 0, g.s1() - bottom, g.s2()},
                             {0, 0, g.s1(), left},
                             {0, right, g.s1(), g.s2() - right}};
  Rectangle best;
  for (const auto& c : cand)
    if (c.rows >= 4 && c.cols >= 4 && c.area() > best.area()) best = c;
  require(best.area() > 0, ErrorKind::degenerate,
          "no training rectangle with >= 4 rows and columns for hold-out site p=" +
              std::to_string(p) + " q=" + std::to_string(q));
  return best;
}

inline FunctionalField sub_field(const FunctionalField& f, const Rectangle& r) {
  const SpatialGrid g(r.rows, r.cols);
  const std::size_t T = f.time().size();
  std::vector<double> v(g.size() * T);
  for (int p = 0; p < r.rows; ++p)
    for (int q = 0; q < r.cols; ++q) {
      const auto c = f.curve(r.p0 + p, r.q0 + q);
      std::copy(c.begin(), c.end(), v.begin() + static_cast<std::ptrdiff_t>(g.site(p, q) * T));
    }
  return FunctionalField(g, f.time(), std::move(v));
}

/// Produces operators from a centred training field.
using OperatorEstimator = std::function<OperatorSet(const FunctionalField&)>;

inline OperatorEstimator plug_in_estimator(int j0, ThetaDomain domain,
                                           EtaFunction eta = eta_weight,
                                           bool include_cross = false) {
  return [=](const FunctionalField& train) {
    return operators_from_report(
        estimate_all(field_dwt(train, j0), domain, eta, {include_cross, 1}));
  };
}

inline OperatorEstimator fixed_operators(OperatorSet ops) {
  return [ops = std::move(ops)](const FunctionalField&) { return ops; };
}

struct FoldResult {
  std::size_t fold = 0;
  int site_p = 0, site_q = 0;
  double mafe = 0.0;  ///< mean absolute functional error over time samples
  std::vector<double> abs_error;  ///< per time sample
};

struct ValidationSummary {
  int period_length = 12;
  std::vector<FoldResult> folds;
  std::vector<double> period_errors;  ///< average over folds and samples in each period
  double aloocve = 0.0;               ///< mean of fold errors
};

inline std::size_t period_count(std::size_t samples, int period_length) {
  const auto L = static_cast<std::size_t>(period_length);
  return (samples + L - 1) / L;
}

inline std::vector<std::pair<int, int>> validation_sites(const SpatialGrid& g, int stride) {
  std::vector<std::pair<int, int>> out;
  std::size_t k = 0;
  for (int p = 1; p < g.s1(); ++p)
    for (int q = 1; q < g.s2(); ++q, ++k)
      if (k % static_cast<std::size_t>(stride) == 0) out.emplace_back(p, q);
  return out;
}

/// For each held-out interior site: fit operators on the training
/// rectangle (centred by its own mean curve), predict the site from its
/// observed causal neighbours and record the absolute error curve.
inline ValidationSummary loo_validate_with(const FunctionalField& field, const ValidationConfig& cfg,
                                           int j0, const OperatorEstimator& estimator) {
  require(cfg.neighborhood_radius >= 0, ErrorKind::validation, "neighborhood_radius must be >= 0");
  require(cfg.period_length >= 1, ErrorKind::validation, "period_length must be >= 1");
  require(cfg.fold_stride >= 1, ErrorKind::validation, "fold_stride must be >= 1");
  field.validate();
  const auto& g = field.grid();
  const std::size_t T = field.time().size();
  const auto sites = validation_sites(g, cfg.fold_stride);
  require(!sites.empty(), ErrorKind::degenerate, "field has no interior sites to validate");

  ValidationSummary out;
  out.period_length = cfg.period_length;
  out.folds.resize(sites.size());
  detail::parallel_for(sites.size(), cfg.threads, [&](std::size_t k) {
    const auto [p, q] = sites[k];
    const auto rect = training_rectangle(g, p, q, cfg.neighborhood_radius);
    const auto [train, mean] = detrend(sub_field(field, rect));
    const OperatorSet ops = estimator(train);
    require(ops.layout().depth() == field.time().depth() && ops.layout().j0() == j0,
            ErrorKind::shape, "estimated operators do not match the time grid");

    // Centred wavelet coefficients of the 2x2 block ending at (p, q).
    const SpatialGrid local(2, 2);
    std::vector<double> v(local.size() * T);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        const auto c = field.curve(p - 1 + a, q - 1 + b);
        for (std::size_t m = 0; m < T; ++m) v[local.site(a, b) * T + m] = c[m] - mean.values[m];
      }
    const auto coeffs = field_dwt(FunctionalField(local, field.time(), std::move(v)), j0);
    const Eigen::VectorXd x = predict_site(coeffs, ops, 1, 1);
    const auto pred = idwt(std::span<const double>(x.data(), T), j0);

    FoldResult fr{k, p, q, 0.0, std::vector<double>(T)};
    const auto obs = field.curve(p, q);
    for (std::size_t m = 0; m < T; ++m) {
      fr.abs_error[m] = std::abs(obs[m] - (pred[m] + mean.values[m]));
      fr.mafe += fr.abs_error[m];
    }
    fr.mafe /= static_cast<double>(T);
    out.folds[k] = std::move(fr);
  });

  const std::size_t P = period_count(T, cfg.period_length);
  out.period_errors.assign(P, 0.0);
  std::vector<std::size_t> cnt(P, 0);
  for (const auto& f : out.folds) {
    out.aloocve += f.mafe;
    for (std::size_t m = 0; m < T; ++m) {
      const std::size_t k = m / static_cast<std::size_t>(cfg.period_length);
      out.period_errors[k] += f.abs_error[m];
      ++cnt[k];
    }
  }
  out.aloocve /= static_cast<double>(out.folds.size());
  for (std::size_t k = 0; k < P; ++k) out.period_errors[k] /= static_cast<double>(cnt[k]);
  return out;
}

inline ValidationSummary loo_validate(const FunctionalField& field, const ValidationConfig& cfg,
                                      int j0, const ThetaDomain& domain,
                                      const EtaFunction& eta = eta_weight) {
  return loo_validate_with(field, cfg, j0, plug_in_estimator(j0, domain, eta));
}

}  // namespace sarhcox
