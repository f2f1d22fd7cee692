#pragma once

// Raw areal counts to a functional field on a regular lattice.
//
// Input CSV: site_id,x,y,time_index,count[,population]. For each time index
// the count rate (count / population when that column is present) is
// interpolated onto the lattice by inverse-distance weighting over the k
// nearest sites; a site at distance 0 supplies the value directly. Each cell
// series is then mapped through log(rate + offset) and resampled onto the
// dyadic midpoint grid by linear interpolation.
//
// Lattice node (p, q) sits at x = xmin + p (xmax - xmin)/(s1 - 1),
// y = ymin + q (ymax - ymin)/(s2 - 1), so the corner nodes fall on the
// extreme site coordinates.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "sarhcox/detail/util.hpp"
#include "sarhcox/error.hpp"
#include "sarhcox/field_io.hpp"
#include "sarhcox/grid.hpp"

namespace sarhcox {

struct IngestOptions {
  int s1 = 20, s2 = 20;
  int depth = 5;
  double power = 2.0;
  int neighbours = 4;
  double offset = 1.0;  ///< log(rate + offset); 1 gives log1p
};

struct CountObservation {
  std::string site_id;
  double x = 0.0, y = 0.0;
  long long time_index = 0;
  double count = 0.0;
  double population = 1.0;
};

inline std::vector<CountObservation> parse_count_csv(std::string_view text) {
  const auto lines = detail::lines_of(text);
  require(!lines.empty(), ErrorKind::validation, "empty count input");
  const auto header = detail::split(lines[0], ',');
  const bool with_pop = header.size() == 6 && header[5] == "population";
  require((header.size() == 5 || with_pop) && header[0] == "site_id" && header[1] == "x" &&
              header[2] == "y" && header[3] == "time_index" && header[4] == "count",
          ErrorKind::parse, "line 1: expected header site_id,x,y,time_index,count[,population]");
  std::vector<CountObservation> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::size_t ln = i + 1;
    const auto c = detail::split(lines[i], ',');
    if (c.size() != header.size())
      detail::line_error(ErrorKind::parse, ln, "expected " + std::to_string(header.size()) + " columns");
    CountObservation o;
    o.site_id = std::string(c[0]);
    if (o.site_id.empty()) detail::line_error(ErrorKind::parse, ln, "empty site_id");
    if (!detail::parse_double(c[1], o.x) || !detail::parse_double(c[2], o.y) ||
        !std::isfinite(o.x) || !std::isfinite(o.y))
      detail::line_error(ErrorKind::parse, ln, "coordinates must be finite numbers");
    if (!detail::parse_long(c[3], o.time_index) || o.time_index < 0)
      detail::line_error(ErrorKind::parse, ln, "time_index must be a non-negative integer");
    if (!detail::parse_double(c[4], o.count) || !std::isfinite(o.count) || o.count < 0.0)
      detail::line_error(ErrorKind::parse, ln, "count must be a non-negative number");
    if (with_pop && (!detail::parse_double(c[5], o.population) || !(o.population > 0.0) ||
                     !std::isfinite(o.population)))
      detail::line_error(ErrorKind::parse, ln, "population must be positive");
    out.push_back(std::move(o));
  }
  require(!out.empty(), ErrorKind::validation, "count input has no observations");
  return out;
}

/// Inverse-distance weighted value at (x, y) from the k nearest points.
/// Ties in distance keep input order.
inline double idw(double x, double y, std::span<const double> px, std::span<const double> py,
                  std::span<const double> v, int k, double power) {
  std::vector<std::pair<double, std::size_t>> d(px.size());
  for (std::size_t i = 0; i < px.size(); ++i) d[i] = {std::hypot(px[i] - x, py[i] - y), i};
  const auto kk = std::min<std::size_t>(static_cast<std::size_t>(k), d.size());
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(kk), d.end());
  if (d[0].first == 0.0) return v[d[0].second];
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < kk; ++i) {
    const double w = 1.0 / std::pow(d[i].first, power);
    num += w * v[d[i].second];
    den += w;
  }
  return num / den;
}

/// Linear interpolation of samples at (k + 1/2)/K onto (m + 1/2)/2^D,
/// constant beyond the end points.
inline std::vector<double> resample_linear(std::span<const double> s, const TimeGrid& time) {
  const std::size_t K = s.size();
  std::vector<double> out(time.size());
  for (std::size_t m = 0; m < out.size(); ++m) {
    const double u = time.point(m) * static_cast<double>(K) - 0.5;
    if (u <= 0.0) { out[m] = s.front(); continue; }
    if (u >= static_cast<double>(K - 1)) { out[m] = s.back(); continue; }
    const auto i = static_cast<std::size_t>(std::floor(u));
    const double w = u - static_cast<double>(i);
    out[m] = s[i] + w * (s[i + 1] - s[i]);
  }
  return out;
}

inline FunctionalField ingest_counts(const std::vector<CountObservation>& obs,
                                     const IngestOptions& opt) {
  require(!obs.empty(), ErrorKind::validation, "count input has no observations");
  require(opt.neighbours >= 1, ErrorKind::config, "ingest neighbours must be >= 1");
  require(opt.power > 0.0, ErrorKind::config, "ingest power must be > 0");
  require(opt.offset > 0.0, ErrorKind::config, "ingest offset must be > 0");
  const SpatialGrid grid(opt.s1, opt.s2);
  const TimeGrid time(opt.depth);

  std::map<std::string, std::pair<double, double>> sites;
  std::map<std::pair<long long, std::string>, double> rate;
  long long tmin = obs.front().time_index, tmax = tmin;
  for (const auto& o : obs) {
    auto [it, fresh] = sites.emplace(o.site_id, std::make_pair(o.x, o.y));
    require(fresh || (it->second.first == o.x && it->second.second == o.y), ErrorKind::validation,
            "site " + o.site_id + " has inconsistent coordinates");
    require(rate.emplace(std::make_pair(o.time_index, o.site_id), o.count / o.population).second,
            ErrorKind::validation,
            "duplicate row for site " + o.site_id + " at time_index " + std::to_string(o.time_index));
    tmin = std::min(tmin, o.time_index);
    tmax = std::max(tmax, o.time_index);
  }
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const auto& [id, xy] : sites) {
    xmin = std::min(xmin, xy.first), xmax = std::max(xmax, xy.first);
    ymin = std::min(ymin, xy.second), ymax = std::max(ymax, xy.second);
  }
  auto node_x = [&](int p) { return xmin + (xmax - xmin) * p / (grid.s1() - 1); };
  auto node_y = [&](int q) { return ymin + (ymax - ymin) * q / (grid.s2() - 1); };
  // Exact coordinates at the far corners avoid rounding in the formula above.
  auto nx = [&](int p) { return p == grid.s1() - 1 ? xmax : node_x(p); };
  auto ny = [&](int q) { return q == grid.s2() - 1 ? ymax : node_y(q); };

  const auto K = static_cast<std::size_t>(tmax - tmin + 1);
  std::vector<double> series(grid.size() * K);
  for (long long t = tmin; t <= tmax; ++t) {
    std::vector<double> px, py, v;
    for (auto it = rate.lower_bound({t, std::string()}); it != rate.end() && it->first.first == t; ++it) {
      const auto& xy = sites.at(it->first.second);
      px.push_back(xy.first);
      py.push_back(xy.second);
      v.push_back(it->second);
    }
    require(!v.empty(), ErrorKind::validation, "no observations at time_index " + std::to_string(t));
    for (int p = 0; p < grid.s1(); ++p)
      for (int q = 0; q < grid.s2(); ++q)
        series[grid.site(p, q) * K + static_cast<std::size_t>(t - tmin)] =
            std::log(idw(nx(p), ny(q), px, py, v, opt.neighbours, opt.power) + opt.offset);
  }

  const std::size_t T = time.size();
  std::vector<double> values(grid.size() * T);
  for (std::size_t s = 0; s < grid.size(); ++s) {
    const auto r = resample_linear(std::span<const double>(series.data() + s * K, K), time);
    std::copy(r.begin(), r.end(), values.begin() + static_cast<std::ptrdiff_t>(s * T));
  }
  return FunctionalField(grid, time, std::move(values));
}

}  // namespace sarhcox
