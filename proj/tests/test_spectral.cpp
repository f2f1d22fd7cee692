#include <cmath>
#include <numbers>

#include "sarhcox/sarh.hpp"
#include "sarhcox/spectral.hpp"
#include "support.hpp"

using namespace sarhcox;
using testing_support::gaussian_vector;
constexpr double kPi = std::numbers::pi;

namespace {

// Direct double sum of the periodogram at Fourier frequency (a, b).
Complex direct_cross(const std::vector<double>& x, const std::vector<double>& y, const SpatialGrid& g,
                     int a, int b) {
  Complex sx = 0, sy = 0;
  const double w1 = 2 * kPi * a / g.s1(), w2 = 2 * kPi * b / g.s2();
  for (int p = 0; p < g.s1(); ++p)
    for (int q = 0; q < g.s2(); ++q) {
      const Complex e = std::exp(Complex(0.0, -(p * w1 + q * w2)));
      sx += x[g.site(p, q)] * e;
      sy += y[g.site(p, q)] * e;
    }
  const double c = 1.0 / (2 * kPi * std::sqrt(static_cast<double>(g.size())));
  return (sx * c) * std::conj(sy * c);
}

}  // namespace

TEST(Fdft, ZeroSingleEntryAndPeriodicity) {
  const SpatialGrid g(4, 5);
  std::vector<double> x(g.size(), 0.0);
  EXPECT_EQ(std::abs(fdft(x, g, 0.3, 0.4)), 0.0);
  x[g.site(1, 1)] = 2.5;
  const Complex v = fdft(x, g, 0.0, 0.0);
  EXPECT_NEAR(v.real(), 2.5 / (2 * kPi * std::sqrt(20.0)), 1e-15);
  EXPECT_NEAR(v.imag(), 0.0, 1e-15);
  const auto r = gaussian_vector(g.size(), 3);
  const Complex a = fdft(r, g, 0.7, -1.1);
  const Complex b = fdft(r, g, 0.7 + 2 * kPi, -1.1);
  EXPECT_NEAR(std::abs(a - b), 0.0, 1e-12);
  // linearity
  const auto s = gaussian_vector(g.size(), 4);
  std::vector<double> lin(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) lin[i] = 2.0 * r[i] - 3.0 * s[i];
  EXPECT_NEAR(std::abs(fdft(lin, g, 0.2, 0.9) - (2.0 * fdft(r, g, 0.2, 0.9) - 3.0 * fdft(s, g, 0.2, 0.9))), 0.0, 1e-12);
}

TEST(Periodogram, FastMatchesDirectDoubleSum) {
  std::uint64_t seed = 1;
  for (int s1 = 2; s1 <= 16; s1 += 3)
    for (int s2 = 2; s2 <= 16; s2 += 5) {
      const SpatialGrid g(s1, s2);
      const auto x = gaussian_vector(g.size(), seed++);
      const auto y = gaussian_vector(g.size(), seed++);
      const auto tx = periodogram(x, x, g);
      const auto txy = periodogram(x, y, g);
      double scale = 0.0;
      for (const auto& v : txy.values) scale = std::max(scale, std::abs(v));
      for (int a = 0; a < s1; ++a)
        for (int b = 0; b < s2; ++b) {
          const auto i = tx.freq.index(a, b);
          const Complex dx = direct_cross(x, x, g, a, b);
          const Complex dxy = direct_cross(x, y, g, a, b);
          EXPECT_LE(std::abs(tx.values[i] - dx), 1e-10 * std::max(std::abs(dx), 1e-3 * scale));
          EXPECT_LE(std::abs(txy.values[i] - dxy), 1e-10 * std::max(std::abs(dxy), 1e-3 * scale));
        }
    }
}

TEST(Periodogram, DiagonalRealNonNegativeHermitianAndSelfCross) {
  const SpatialGrid g(7, 6);
  const auto x = gaussian_vector(g.size(), 8);
  const auto y = gaussian_vector(g.size(), 9);
  const auto t = periodogram(x, x, g);
  for (const auto& v : t.values) {
    EXPECT_GE(v.real(), 0.0);
    EXPECT_EQ(v.imag(), 0.0);
  }
  const auto c = periodogram(x, y, g);
  for (std::size_t i = 0; i < c.values.size(); ++i)
    EXPECT_NEAR(std::abs(c.values[c.freq.negated(i)] - std::conj(c.values[i])), 0.0, 1e-12);
  const auto same = periodogram(std::span<const double>(x), std::span<const double>(std::vector<double>(x)), g);
  for (std::size_t i = 0; i < t.values.size(); ++i) EXPECT_EQ(same.values[i], t.values[i]);
  const auto zero = periodogram(std::vector<double>(g.size(), 0.0), std::vector<double>(g.size(), 0.0), g);
  for (const auto& v : zero.values) EXPECT_EQ(std::abs(v), 0.0);
  EXPECT_ERROR_KIND(periodogram(x, std::vector<double>(3, 0.0), g), ErrorKind::shape);
}

TEST(Periodogram, WhiteNoiseParseval) {
  const SpatialGrid g(50, 50);
  const auto x = gaussian_vector(g.size(), 21, 1.7);
  const auto t = periodogram(x, x, g);
  double sum = 0.0;
  for (const auto& v : t.values) sum += v.real();
  double m = 0.0, ss = 0.0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  for (double v : x) ss += (v - m) * (v - m);
  const double var = ss / static_cast<double>(x.size() - 1);
  EXPECT_NEAR(sum * t.freq.cell() / var, 1.0, 0.02);
}

TEST(FrequencyGrid, FundamentalDomainAndNegation) {
  const FrequencyGrid f(5, 4);
  EXPECT_EQ(f.size(), 20u);
  for (int a = 0; a < 5; ++a) {
    EXPECT_GT(f.omega1(a), -kPi);
    EXPECT_LE(f.omega1(a), kPi);
  }
  EXPECT_DOUBLE_EQ(f.omega2(2), kPi);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(f.negated(f.negated(i)), i);
}

TEST(ModelDensity, Examples) {
  const double c = 1.0 / (2 * kPi * kPi);
  EXPECT_NEAR(model_density({0, 0, 0}, 3.0, 0.4, -2.0), 3.0 * c, 1e-15);
  EXPECT_NEAR(model_density({0.3, 0.5, -0.15}, 2.0, 0.0, 0.0), 2.0 * c / (0.35 * 0.35), 1e-12);
  for (double w1 : {-2.9, -0.3, 0.0, 1.1, 3.0})
    for (double w2 : {-1.7, 0.2, 2.5}) {
      const double f = model_density({0.3, 0.5, -0.15}, 1.0, w1, w2);
      const double fact = c / std::norm(1.0 - 0.3 * std::polar(1.0, w1)) / std::norm(1.0 - 0.5 * std::polar(1.0, w2));
      EXPECT_NEAR(f, fact, 1e-12 * fact);
      EXPECT_NEAR(f, model_density({0.3, 0.5, -0.15}, 1.0, -w1, -w2), 1e-12 * f);
      EXPECT_GT(model_density({0.2, -0.3, 0.4}, 1.0, w1, w2), 0.0);
    }
  EXPECT_ERROR_KIND(model_density({0.7, 0.7, 0.0}, 1.0, 0, 0), ErrorKind::stationarity);
}

TEST(EtaWeight, Examples) {
  EXPECT_EQ(eta_weight(0.0, 1.3), 0.0);
  EXPECT_EQ(eta_weight(-2.0, 0.0), 0.0);
  EXPECT_NEAR(eta_weight(kPi / 2, kPi), std::pow(kPi, 4) / 4, 1e-12);
  EXPECT_EQ(eta_weight(0.7, -1.2), eta_weight(-0.7, 1.2));
}

TEST(NormalisedDensity, NormalisationAndScaleInvariance) {
  const FrequencyGrid f(16, 12);
  for (const Theta th : {Theta{0, 0, 0}, Theta{0.3, 0.5, -0.15}, Theta{-0.2, 0.4, 0.3}}) {
    const auto nd = normalised_density(th, eta_weight, f);
    double s = 0.0;
    for (int a = 0; a < f.s1(); ++a)
      for (int b = 0; b < f.s2(); ++b)
        s += nd.psi[f.index(a, b)] * eta_weight(f.omega1(a), f.omega2(b));
    EXPECT_NEAR(s * f.cell(), 1.0, 1e-10);
    const auto nd7 = normalised_density(th, eta_weight, f, 7.0);
    for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(nd7.psi[i], nd.psi[i], 1e-14 * nd.psi[i]);
    EXPECT_NEAR(nd7.sigma2_theta, 7.0 * nd.sigma2_theta, 1e-12 * nd7.sigma2_theta);
  }
  const auto white = normalised_density({0, 0, 0}, eta_weight, f);
  double eta_int = 0.0;
  for (int a = 0; a < f.s1(); ++a)
    for (int b = 0; b < f.s2(); ++b) eta_int += eta_weight(f.omega1(a), f.omega2(b));
  eta_int *= f.cell();
  for (double v : white.psi) EXPECT_NEAR(v, 1.0 / eta_int, 1e-12 / eta_int);
  // eta that vanishes everywhere is degenerate
  EXPECT_ERROR_KIND(normalised_density({0, 0, 0}, [](double, double) { return 0.0; }, f), ErrorKind::degenerate);
}

TEST(EmpiricalContrast, ZeroPeriodogramAndWhiteNoiseClosedForm) {
  const FrequencyGrid f(10, 10);
  const std::vector<double> zero(f.size(), 0.0);
  EXPECT_EQ(empirical_contrast(zero, {0.3, 0.5, -0.15}, eta_weight, f), 0.0);
  const auto I = gaussian_vector(f.size(), 12);
  std::vector<double> Ip(I.size());
  for (std::size_t i = 0; i < I.size(); ++i) Ip[i] = I[i] * I[i];
  const double psi = normalised_density({0, 0, 0}, eta_weight, f).psi[0];
  double m = 0.0;
  for (int a = 0; a < 10; ++a)
    for (int b = 0; b < 10; ++b) m += Ip[f.index(a, b)] * eta_weight(f.omega1(a), f.omega2(b));
  const double closed = -std::log(psi) * m * f.cell();
  EXPECT_NEAR(empirical_contrast(Ip, {0, 0, 0}, eta_weight, f), closed, 1e-12 * std::abs(closed));
  EXPECT_ERROR_KIND(empirical_contrast(Ip, {0.7, 0.7, 0}, eta_weight, f), ErrorKind::stationarity);
}

TEST(EmpiricalContrast, FastKernelAgrees) {
  const FrequencyGrid f(13, 9);
  const auto x = gaussian_vector(f.size(), 44);
  std::vector<double> I(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) I[i] = x[i] * x[i];
  const ContrastKernel k(f, eta_weight);
  const auto w = k.weights(I);
  double tot = 0.0;
  for (double v : w) tot += v;
  for (const Theta th : {Theta{0, 0, 0}, Theta{0.3, 0.5, -0.15}, Theta{-0.6, 0.2, 0.1}, Theta{0.9, 0.9, -0.81}}) {
    const double a = empirical_contrast(I, th, eta_weight, f);
    EXPECT_NEAR(k.evaluate(w, tot, th), a, 1e-12 * std::max(1.0, std::abs(a)));
  }
}

TEST(EmpiricalContrast, TrueParameterBeatsCoarseGrid) {
  const Theta th0{0.3, 0.5, -0.15};
  const SpatialGrid g(50, 50);
  const auto x = simulate_component(th0, 1.0, g, 64, 77);
  const auto I = periodogram(x, x, g).real_part();
  const FrequencyGrid f(g);
  const double u0 = empirical_contrast(I, th0, eta_weight, f);
  int checked = 0;
  for (int i = -2; i <= 2; ++i)
    for (int j = -2; j <= 2; ++j)
      for (int k = -2; k <= 2; ++k) {
        if (i == 0 && j == 0 && k == 0) continue;
        const Theta th{th0.t1 + 0.2 * i, th0.t2 + 0.2 * j, th0.t3 + 0.2 * k};
        if (!stationarity_check(th)) continue;
        ++checked;
        EXPECT_LT(u0, empirical_contrast(I, th, eta_weight, f)) << describe(th);
      }
  EXPECT_GT(checked, 20);
}

TEST(Divergence, ZeroAtTruthPositiveElsewhereAndContrastIdentity) {
  const FrequencyGrid f(64, 64);
  const Theta th0{0.3, 0.5, -0.15};
  EXPECT_EQ(divergence(th0, th0, eta_weight, f), 0.0);
  EXPECT_GT(divergence(th0, {0, 0, 0}, eta_weight, f), 0.0);
  const FrequencyGrid f2(24, 24);
  for (const Theta th : {Theta{0, 0, 0}, Theta{-0.4, 0.1, 0.3}, Theta{0.6, 0.2, 0.1}}) {
    const double k = divergence(th0, th, eta_weight, f2, 1.3);
    const double u = population_contrast(th0, 1.3, th, eta_weight, f2) - population_contrast(th0, 1.3, th0, eta_weight, f2);
    EXPECT_NEAR(k, u, 1e-10 * std::max(1.0, std::abs(k)));
    EXPECT_GE(k, -1e-10);
  }
  EXPECT_ERROR_KIND(divergence(th0, {0.7, 0.7, 0}, eta_weight, f), ErrorKind::stationarity);
}

TEST(Divergence, EmpiricalContrastDifferencesConverge) {
  // E[I] = sigma_e^2 / (4 pi^2) |A|^-2, which is the density with sigma2 = sigma_e^2 / 2.
  const Theta th0{0.3, 0.5, -0.15};
  const Theta probes[5] = {{0, 0, 0}, {0.5, 0.3, -0.15}, {0.1, 0.6, 0.0}, {0.3, 0.3, 0.2}, {-0.2, 0.4, 0.1}};
  double err[2] = {0, 0};
  const int sides[2] = {20, 80};
  for (int n = 0; n < 2; ++n) {
    const SpatialGrid g(sides[n], sides[n]);
    const FrequencyGrid f(g);
    for (int rep = 0; rep < 4; ++rep) {
      const auto x = simulate_component(th0, 1.0, g, 64, 900 + rep);
      const auto I = periodogram(x, x, g).real_part();
      const double u0 = empirical_contrast(I, th0, eta_weight, f);
      for (const auto& th : probes) {
        const double d = empirical_contrast(I, th, eta_weight, f) - u0;
        err[n] += std::abs(d - divergence(th0, th, eta_weight, f, 0.5));
      }
    }
  }
  EXPECT_LT(err[1], err[0]);
}
