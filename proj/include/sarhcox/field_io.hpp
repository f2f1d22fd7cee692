#pragma once

// File formats.
//
//   field CSV-long   header p,q,t_index,value
//   field NDJSON     {"s1","s2","depth"} then one {"p","q","curve"} per site
//   coeff NDJSON     as above with "j0" in the metadata line
//   report NDJSON    metadata line, then one record per basis pair
//   eigen CSV        p,lambda1_hat,lambda2_hat
//   periodogram CSV  a,b,w1,w2,re,im
//   counts CSV       p,q,count,mean
//   validation CSVs  fold,site_p,site_q,mafe  and  period,avg_error

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sarhcox/cox.hpp"
#include "sarhcox/detail/util.hpp"
#include "sarhcox/error.hpp"
#include "sarhcox/estimator.hpp"
#include "sarhcox/grid.hpp"
#include "sarhcox/predict.hpp"
#include "sarhcox/spectral.hpp"
#include "sarhcox/wavelet.hpp"

namespace sarhcox {

using json = nlohmann::json;

enum class FieldFormat { csv, ndjson };

inline FieldFormat parse_format(const std::string& s) {
  if (s == "csv") return FieldFormat::csv;
  if (s == "ndjson") return FieldFormat::ndjson;
  fail(ErrorKind::config, "unknown format '" + s + "' (expected csv or ndjson)");
}

inline FieldFormat format_for_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? FieldFormat::csv : FieldFormat::ndjson;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::io, "cannot write " + path.string());
  out << content;
  out.flush();
  require(static_cast<bool>(out), ErrorKind::io, "write failed for " + path.string());
}

namespace detail {

inline std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    start = end + 1;
  }
  return out;
}

[[noreturn]] inline void line_error(ErrorKind kind, std::size_t line, const std::string& msg) {
  fail(kind, "line " + std::to_string(line) + ": " + msg);
}

inline json parse_json_line(std::string_view line, std::size_t lineno) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    if (line.find("NaN") != std::string_view::npos || line.find("Infinity") != std::string_view::npos)
      line_error(ErrorKind::validation, lineno, "non-finite value");
    line_error(ErrorKind::parse, lineno, std::string("invalid JSON: ") + e.what());
  }
}

inline long long json_int(const json& obj, const char* key, std::size_t lineno) {
  if (!obj.is_object() || !obj.contains(key) || !obj[key].is_number_integer())
    line_error(ErrorKind::parse, lineno, std::string("missing integer field '") + key + "'");
  return obj[key].get<long long>();
}

inline double json_number(const json& v, std::size_t lineno, const char* what) {
  if (v.is_null()) line_error(ErrorKind::validation, lineno, std::string(what) + " is NaN/null");
  if (!v.is_number()) line_error(ErrorKind::parse, lineno, std::string(what) + " is not a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) line_error(ErrorKind::validation, lineno, std::string(what) + " is not finite");
  return x;
}

inline json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

struct SiteCurves {
  int s1 = 0, s2 = 0, depth = 0, j0 = -1;
  std::vector<double> values;
};

inline std::string write_site_curves(const json& meta, const SpatialGrid& g, std::size_t T,
                                     std::span<const double> values) {
  std::string out = meta.dump() + "\n";
  for (int p = 0; p < g.s1(); ++p)
    for (int q = 0; q < g.s2(); ++q) {
      json curve = json::array();
      const auto base = g.site(p, q) * T;
      for (std::size_t m = 0; m < T; ++m) curve.push_back(number_or_null(values[base + m]));
      out += json{{"p", p}, {"q", q}, {"curve", std::move(curve)}}.dump();
      out += '\n';
    }
  return out;
}

inline SiteCurves read_site_curves(std::string_view text, bool want_j0) {
  const auto lines = lines_of(text);
  std::size_t first = 0;
  while (first < lines.size() && lines[first].empty()) ++first;
  require(first < lines.size(), ErrorKind::parse, "empty NDJSON input");
  const json meta = parse_json_line(lines[first], first + 1);
  SiteCurves sc;
  const long long s1 = json_int(meta, "s1", first + 1);
  const long long s2 = json_int(meta, "s2", first + 1);
  const long long depth = json_int(meta, "depth", first + 1);
  if (s1 < 2 || s2 < 2 || s1 > 1 << 20 || s2 > 1 << 20)
    line_error(ErrorKind::shape, first + 1, "grid sides must be >= 2");
  if (depth < 0 || depth > TimeGrid::kMaxDepth)
    line_error(ErrorKind::shape, first + 1, "depth out of range");
  sc.s1 = static_cast<int>(s1);
  sc.s2 = static_cast<int>(s2);
  sc.depth = static_cast<int>(depth);
  if (want_j0) sc.j0 = static_cast<int>(json_int(meta, "j0", first + 1));
  const SpatialGrid g(sc.s1, sc.s2);
  const std::size_t T = std::size_t{1} << sc.depth;
  sc.values.assign(g.size() * T, 0.0);
  std::vector<std::uint8_t> seen(g.size(), 0);
  for (std::size_t i = first + 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::size_t ln = i + 1;
    const json rec = parse_json_line(lines[i], ln);
    const long long p = json_int(rec, "p", ln), q = json_int(rec, "q", ln);
    if (p < 0 || q < 0 || p >= s1 || q >= s2)
      line_error(ErrorKind::shape, ln, "site (" + std::to_string(p) + "," + std::to_string(q) + ") outside grid");
    if (!rec.contains("curve") || !rec["curve"].is_array())
      line_error(ErrorKind::parse, ln, "missing array field 'curve'");
    const auto& c = rec["curve"];
    if (c.size() != T)
      line_error(ErrorKind::shape, ln, "curve has " + std::to_string(c.size()) + " samples, expected " + std::to_string(T));
    const auto s = g.site(static_cast<int>(p), static_cast<int>(q));
    if (seen[s]) line_error(ErrorKind::shape, ln, "duplicate site");
    seen[s] = 1;
    for (std::size_t m = 0; m < T; ++m) sc.values[s * T + m] = json_number(c[m], ln, "curve value");
  }
  for (std::size_t s = 0; s < seen.size(); ++s)
    require(seen[s] != 0, ErrorKind::shape,
            "missing site p=" + std::to_string(s / g.s2()) + " q=" + std::to_string(s % g.s2()));
  return sc;
}

}  // namespace detail

// --- functional fields -----------------------------------------------------

inline std::string field_to_csv(const FunctionalField& f) {
  std::string out = "p,q,t_index,value\n";
  const auto& g = f.grid();
  const std::size_t T = f.time().size();
  for (int p = 0; p < g.s1(); ++p)
    for (int q = 0; q < g.s2(); ++q)
      for (std::size_t m = 0; m < T; ++m) {
        out += std::to_string(p) + ',' + std::to_string(q) + ',' + std::to_string(m) + ',' +
               detail::format_double(f.at(p, q, m)) + '\n';
      }
  return out;
}

inline FunctionalField field_from_csv(std::string_view text) {
  const auto lines = detail::lines_of(text);
  require(!lines.empty() && lines[0] == "p,q,t_index,value", ErrorKind::parse,
          "line 1: expected header p,q,t_index,value");
  struct Row { long long p, q, t; double v; std::size_t line; };
  std::vector<Row> rows;
  long long mp = -1, mq = -1, mt = -1;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto cols = detail::split(lines[i], ',');
    if (cols.size() != 4) detail::line_error(ErrorKind::parse, i + 1, "expected 4 columns");
    Row r{0, 0, 0, 0.0, i + 1};
    if (!detail::parse_long(cols[0], r.p) || !detail::parse_long(cols[1], r.q) ||
        !detail::parse_long(cols[2], r.t) || r.p < 0 || r.q < 0 || r.t < 0)
      detail::line_error(ErrorKind::parse, i + 1, "indices must be non-negative integers");
    if (!detail::parse_double(cols[3], r.v))
      detail::line_error(ErrorKind::parse, i + 1, "value is not a number");
    if (!std::isfinite(r.v)) detail::line_error(ErrorKind::validation, i + 1, "value is not finite");
    mp = std::max(mp, r.p);
    mq = std::max(mq, r.q);
    mt = std::max(mt, r.t);
    rows.push_back(r);
  }
  require(!rows.empty(), ErrorKind::shape, "no data rows");
  require(mp >= 1 && mq >= 1 && mp < (1 << 20) && mq < (1 << 20), ErrorKind::shape,
          "grid must have at least 2 rows and 2 columns");
  const auto T = static_cast<std::size_t>(mt + 1);
  require(T <= (std::size_t{1} << TimeGrid::kMaxDepth) && (T & (T - 1)) == 0, ErrorKind::shape,
          "number of time samples " + std::to_string(T) + " is not a power of two");
  const SpatialGrid g(static_cast<int>(mp + 1), static_cast<int>(mq + 1));
  const TimeGrid time(static_cast<int>(std::countr_zero(T)));
  std::vector<double> values(g.size() * T, 0.0);
  std::vector<std::uint8_t> seen(values.size(), 0);
  for (const auto& r : rows) {
    const auto idx = g.site(static_cast<int>(r.p), static_cast<int>(r.q)) * T + static_cast<std::size_t>(r.t);
    if (seen[idx]) detail::line_error(ErrorKind::shape, r.line, "duplicate (p,q,t_index)");
    seen[idx] = 1;
    values[idx] = r.v;
  }
  for (std::size_t i = 0; i < seen.size(); ++i)
    require(seen[i] != 0, ErrorKind::shape,
            "missing entry p=" + std::to_string(i / T / g.s2()) + " q=" +
                std::to_string(i / T % g.s2()) + " t_index=" + std::to_string(i % T));
  return FunctionalField(g, time, std::move(values));
}

inline std::string field_to_ndjson(const FunctionalField& f) {
  const json meta{{"s1", f.grid().s1()}, {"s2", f.grid().s2()}, {"depth", f.time().depth()}};
  return detail::write_site_curves(meta, f.grid(), f.time().size(), f.values());
}

inline FunctionalField field_from_ndjson(std::string_view text) {
  auto sc = detail::read_site_curves(text, false);
  return FunctionalField(SpatialGrid(sc.s1, sc.s2), TimeGrid(sc.depth), std::move(sc.values));
}

inline void save_field(const FunctionalField& f, const std::filesystem::path& path, FieldFormat fmt) {
  write_text(path, fmt == FieldFormat::csv ? field_to_csv(f) : field_to_ndjson(f));
}

inline void save_field(const FunctionalField& f, const std::filesystem::path& path) {
  save_field(f, path, format_for_path(path));
}

inline FunctionalField load_field(const std::filesystem::path& path, FieldFormat fmt) {
  const auto text = read_text(path);
  return fmt == FieldFormat::csv ? field_from_csv(text) : field_from_ndjson(text);
}

inline FunctionalField load_field(const std::filesystem::path& path) {
  return load_field(path, format_for_path(path));
}

// --- wavelet coefficients --------------------------------------------------

inline std::string coefficients_to_ndjson(const MultiscaleCoefficients& c) {
  const json meta{{"s1", c.grid().s1()}, {"s2", c.grid().s2()}, {"depth", c.depth()}, {"j0", c.j0()}};
  return detail::write_site_curves(meta, c.grid(), c.nodes(), c.values());
}

inline MultiscaleCoefficients coefficients_from_ndjson(std::string_view text) {
  auto sc = detail::read_site_curves(text, true);
  return MultiscaleCoefficients(SpatialGrid(sc.s1, sc.s2), WaveletLayout(sc.j0, sc.depth),
                                std::move(sc.values));
}

// --- estimation report -----------------------------------------------------

inline std::string report_to_ndjson(const EstimationReport& r) {
  json meta{{"s1", r.grid.s1()},
            {"s2", r.grid.s2()},
            {"depth", r.layout.depth()},
            {"j0", r.layout.j0()},
            {"truncation", r.truncation},
            {"include_cross", r.include_cross},
            {"eigenvalues1", r.eigenvalues1},
            {"eigenvalues2", r.eigenvalues2},
            {"eigenvalues3", r.eigenvalues3}};
  std::string out = meta.dump() + "\n";
  for (const auto& rec : r.records) {
    json j{{"a", rec.a},
           {"b", rec.b},
           {"theta", {rec.theta.t1, rec.theta.t2, rec.theta.t3}},
           {"sigma2", rec.sigma2},
           {"innovation_variance", rec.innovation_variance},
           {"contrast", rec.contrast},
           {"iterations", rec.iterations},
           {"flags", rec.flags}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

inline EstimationReport report_from_ndjson(std::string_view text) {
  const auto lines = detail::lines_of(text);
  require(!lines.empty(), ErrorKind::parse, "empty report");
  const json meta = detail::parse_json_line(lines[0], 1);
  EstimationReport r;
  r.grid = SpatialGrid(static_cast<int>(detail::json_int(meta, "s1", 1)),
                       static_cast<int>(detail::json_int(meta, "s2", 1)));
  r.layout = WaveletLayout(static_cast<int>(detail::json_int(meta, "j0", 1)),
                           static_cast<int>(detail::json_int(meta, "depth", 1)));
  r.truncation = static_cast<int>(detail::json_int(meta, "truncation", 1));
  r.include_cross = meta.value("include_cross", false);
  const std::size_t T = r.layout.size();
  std::vector<std::uint8_t> diag(T, 0);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::size_t ln = i + 1;
    const json j = detail::parse_json_line(lines[i], ln);
    NodeRecord rec;
    const long long a = detail::json_int(j, "a", ln), b = detail::json_int(j, "b", ln);
    if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= T || static_cast<std::size_t>(b) >= T)
      detail::line_error(ErrorKind::shape, ln, "basis position outside layout");
    rec.a = static_cast<std::size_t>(a);
    rec.b = static_cast<std::size_t>(b);
    if (!j.contains("theta") || !j["theta"].is_array() || j["theta"].size() != 3)
      detail::line_error(ErrorKind::parse, ln, "theta must be an array of 3 numbers");
    for (int k = 0; k < 3; ++k) rec.theta[k] = detail::json_number(j["theta"][static_cast<std::size_t>(k)], ln, "theta");
    rec.sigma2 = detail::json_number(j.value("sigma2", json(0.0)), ln, "sigma2");
    rec.innovation_variance = detail::json_number(j.value("innovation_variance", json(0.0)), ln, "innovation_variance");
    rec.contrast = detail::json_number(j.value("contrast", json(0.0)), ln, "contrast");
    rec.iterations = static_cast<int>(j.value("iterations", 0));
    if (j.contains("flags")) rec.flags = j["flags"].get<std::vector<std::string>>();
    if (!stationarity_check(rec.theta))
      detail::line_error(ErrorKind::stationarity, ln, "non-stationary theta " + describe(rec.theta));
    if (rec.a == rec.b) {
      if (diag[rec.a]) detail::line_error(ErrorKind::shape, ln, "duplicate diagonal record");
      diag[rec.a] = 1;
    }
    r.records.push_back(std::move(rec));
  }
  for (std::size_t a = 0; a < T; ++a)
    require(diag[a] != 0, ErrorKind::shape, "report lacks diagonal record " + std::to_string(a));
  std::stable_sort(r.records.begin(), r.records.end(), [](const NodeRecord& x, const NodeRecord& y) {
    return x.diagonal() != y.diagonal() ? x.diagonal() : (x.a != y.a ? x.a < y.a : x.b < y.b);
  });
  r.assemble();
  return r;
}

inline std::string eigen_table_csv(const EstimationReport& r) {
  std::string out = "p,lambda1_hat,lambda2_hat\n";
  const std::size_t k = std::min(r.eigenvalues1.size(), r.eigenvalues2.size());
  for (std::size_t p = 0; p < k; ++p)
    out += std::to_string(p + 1) + ',' + detail::format_double(r.eigenvalues1[p]) + ',' +
           detail::format_double(r.eigenvalues2[p]) + '\n';
  return out;
}

// --- other tables ----------------------------------------------------------

inline std::string periodogram_csv(const PeriodogramTable& t) {
  std::string out = "a,b,w1,w2,re,im\n";
  for (int a = 0; a < t.freq.s1(); ++a)
    for (int b = 0; b < t.freq.s2(); ++b) {
      const auto v = t.values[t.freq.index(a, b)];
      out += std::to_string(a) + ',' + std::to_string(b) + ',' +
             detail::format_double(t.freq.omega1(a)) + ',' + detail::format_double(t.freq.omega2(b)) +
             ',' + detail::format_double(v.real()) + ',' + detail::format_double(v.imag()) + '\n';
    }
  return out;
}

inline std::string counts_csv(const CountGrid& c) {
  std::string out = "p,q,count,mean\n";
  for (int p = 0; p < c.grid.s1(); ++p)
    for (int q = 0; q < c.grid.s2(); ++q)
      out += std::to_string(p) + ',' + std::to_string(q) + ',' + std::to_string(c.count(p, q)) +
             ',' + detail::format_double(c.mean(p, q)) + '\n';
  return out;
}

inline std::string folds_csv(const ValidationSummary& s) {
  std::string out = "fold,site_p,site_q,mafe\n";
  for (const auto& f : s.folds)
    out += std::to_string(f.fold) + ',' + std::to_string(f.site_p) + ',' +
           std::to_string(f.site_q) + ',' + detail::format_double(f.mafe) + '\n';
  return out;
}

inline std::string periods_csv(const ValidationSummary& s) {
  std::string out = "period,avg_error\n";
  for (std::size_t k = 0; k < s.period_errors.size(); ++k)
    out += std::to_string(k) + ',' + detail::format_double(s.period_errors[k]) + '\n';
  return out;
}

}  // namespace sarhcox
