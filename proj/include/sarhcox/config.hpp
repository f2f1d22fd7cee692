#pragma once

// Run configuration. A JSON document with the sections below; every key is
// optional, unknown keys are rejected with their full path.
//
//   grid        {s1, s2}
//   time        {depth, j0}
//   model       {eigenvalues1[], eigenvalues2[], eigenvalues3[],
//                innovation_variances[] | "default", couple_l3,
//                truncation (int | "auto")}
//   estimation  {domain_mode "box" | "finite_grid", bounds [[lo,hi] x3],
//                grid_points [[t1,t2,t3], ...], eta "w2w2", include_cross,
//                couple_l3, seeds_per_axis, tolerance}
//   simulation  {burn_in, seed, replications}
//   validation  {neighborhood_radius, period_length, fold_stride}
//   counts      {seed, area_scale}
//   ingest      {power, neighbours, offset}
//   report      {sides[], replications, slice_t}
//   io          {format "ndjson" | "csv", paths {input, estimates}}

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "sarhcox/detail/util.hpp"
#include "sarhcox/error.hpp"
#include "sarhcox/estimator.hpp"
#include "sarhcox/field_io.hpp"
#include "sarhcox/ingest.hpp"
#include "sarhcox/predict.hpp"
#include "sarhcox/sarh.hpp"

namespace sarhcox {

struct RunConfig {
  int s1 = 30, s2 = 30;
  int depth = 6, j0 = 3;

  std::vector<double> eigenvalues1{kReferenceEigenvalues1.begin(), kReferenceEigenvalues1.end()};
  std::vector<double> eigenvalues2{kReferenceEigenvalues2.begin(), kReferenceEigenvalues2.end()};
  std::vector<double> eigenvalues3;
  std::optional<std::vector<double>> innovation_variances;  ///< empty means the default profile
  bool couple_l3 = true;
  std::optional<int> truncation;  ///< empty means floor(ln N), capped by the eigenvalue count

  ThetaDomain domain = ThetaDomain::box();
  bool include_cross = false;

  int burn_in = kDefaultBurnIn;
  std::uint64_t seed = 1;
  int replications = 1;

  ValidationConfig validation;

  std::uint64_t counts_seed = 1;
  double area_scale = 1.0;

  double ingest_power = 2.0;
  int ingest_neighbours = 4;
  double ingest_offset = 1.0;

  std::vector<int> report_sides{10, 30};
  int report_replications = 5;
  double slice_t = 0.5;

  FieldFormat format = FieldFormat::ndjson;
  std::string input_path;
  std::string estimates_path;

  json source = json::object();  ///< the document as read, for hashing

  SpatialGrid grid() const { return {s1, s2}; }
  TimeGrid time() const { return TimeGrid(depth); }

  int effective_truncation() const {
    const int available = static_cast<int>(std::min(eigenvalues1.size(), eigenvalues2.size()));
    if (truncation) return *truncation;
    return std::min(available, truncation_for(grid().size()));
  }

  SarhSpec spec() const {
    SarhSpec s;
    s.eigenvalues1 = eigenvalues1;
    s.eigenvalues2 = eigenvalues2;
    s.eigenvalues3 = eigenvalues3;
    s.couple_l3 = couple_l3;
    s.truncation = effective_truncation();
    s.time = time();
    if (innovation_variances) {
      s.innovation_variances = *innovation_variances;
    } else {
      require(s.truncation >= 1 && eigenvalues1.size() >= static_cast<std::size_t>(s.truncation) &&
                  eigenvalues2.size() >= static_cast<std::size_t>(s.truncation) &&
                  (couple_l3 || eigenvalues3.size() >= static_cast<std::size_t>(s.truncation)),
              ErrorKind::config, "model: not enough eigenvalues for truncation " +
                                     std::to_string(s.truncation));
      s.innovation_variances =
          default_innovation_variances(eigenvalues1, eigenvalues2, eigenvalues3, couple_l3, s.truncation);
    }
    s.validate();
    return s;
  }

  IngestOptions ingest_options() const {
    return {s1, s2, depth, ingest_power, ingest_neighbours, ingest_offset};
  }

  std::uint64_t hash() const { return detail::fnv1a(source.dump()); }
};

namespace detail {

/// Reads one JSON object, remembering which keys were consumed.
class Section {
 public:
  Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) fail(ErrorKind::config, where() + " must be an object");
  }

  bool has(const char* key) {
    seen_.insert(key);
    return obj_.contains(key);
  }
  std::string at(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void integer(const char* key, int& out, int lo, int hi) {
    if (!has(key)) return;
    const auto& v = obj_[key];
    if (!v.is_number_integer()) fail(ErrorKind::config, at(key) + " must be an integer");
    const auto x = v.get<long long>();
    if (x < lo || x > hi)
      fail(ErrorKind::config, at(key) + " must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    out = static_cast<int>(x);
  }
  void u64(const char* key, std::uint64_t& out) {
    if (!has(key)) return;
    const auto& v = obj_[key];
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      fail(ErrorKind::config, at(key) + " must be a non-negative integer");
    out = v.get<std::uint64_t>();
  }
  void number(const char* key, double& out) {
    if (!has(key)) return;
    const auto& v = obj_[key];
    if (!v.is_number()) fail(ErrorKind::config, at(key) + " must be a number");
    out = v.get<double>();
  }
  void boolean(const char* key, bool& out) {
    if (!has(key)) return;
    const auto& v = obj_[key];
    if (!v.is_boolean()) fail(ErrorKind::config, at(key) + " must be true or false");
    out = v.get<bool>();
  }
  void string(const char* key, std::string& out) {
    if (!has(key)) return;
    const auto& v = obj_[key];
    if (!v.is_string()) fail(ErrorKind::config, at(key) + " must be a string");
    out = v.get<std::string>();
  }
  void numbers(const char* key, std::vector<double>& out) {
    if (!has(key)) return;
    out = number_array(obj_[key], at(key));
  }
  const json& raw(const char* key) {
    seen_.insert(key);
    return obj_.at(key);
  }
  std::optional<Section> section(const char* key) {
    if (!has(key)) return std::nullopt;
    return Section(obj_[key], at(key));
  }

  void finish() const {
    for (const auto& [k, v] : obj_.items())
      if (!seen_.count(k)) fail(ErrorKind::config, "unknown key " + at(k.c_str()));
  }

  static std::vector<double> number_array(const json& v, const std::string& path) {
    if (!v.is_array()) fail(ErrorKind::config, path + " must be an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number())
        fail(ErrorKind::config, path + "[" + std::to_string(i) + "] must be a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace detail

inline RunConfig parse_config(const json& doc) {
  RunConfig c;
  c.source = doc;
  detail::Section root(doc, "");

  if (auto s = root.section("grid")) {
    s->integer("s1", c.s1, 2, 1 << 16);
    s->integer("s2", c.s2, 2, 1 << 16);
    s->finish();
  }
  if (auto s = root.section("time")) {
    s->integer("depth", c.depth, 1, TimeGrid::kMaxDepth);
    s->integer("j0", c.j0, 0, TimeGrid::kMaxDepth);
    s->finish();
  }
  if (c.j0 > c.depth) fail(ErrorKind::config, "time.j0 must not exceed time.depth");

  if (auto s = root.section("model")) {
    s->numbers("eigenvalues1", c.eigenvalues1);
    s->numbers("eigenvalues2", c.eigenvalues2);
    s->numbers("eigenvalues3", c.eigenvalues3);
    if (s->has("innovation_variances")) {
      const auto& v = s->raw("innovation_variances");
      if (v.is_string()) {
        if (v.get<std::string>() != "default")
          fail(ErrorKind::config, "model.innovation_variances must be an array or \"default\"");
      } else {
        c.innovation_variances = detail::Section::number_array(v, "model.innovation_variances");
      }
    }
    s->boolean("couple_l3", c.couple_l3);
    if (s->has("truncation")) {
      const auto& v = s->raw("truncation");
      if (v.is_string() && v.get<std::string>() == "auto") {
      } else if (v.is_number_integer() && v.get<long long>() >= 1 && v.get<long long>() <= 1 << 20) {
        c.truncation = static_cast<int>(v.get<long long>());
      } else {
        fail(ErrorKind::config, "model.truncation must be a positive integer or \"auto\"");
      }
    }
    s->finish();
  }

  if (auto s = root.section("estimation")) {
    std::string mode = "box";
    s->string("domain_mode", mode);
    if (mode == "box") {
      c.domain = ThetaDomain::box();
      if (s->has("bounds")) {
        const auto& b = s->raw("bounds");
        if (!b.is_array() || b.size() != 3)
          fail(ErrorKind::config, "estimation.bounds must be three [lo, hi] pairs");
        for (std::size_t i = 0; i < 3; ++i) {
          const auto pair = detail::Section::number_array(b[i], "estimation.bounds[" + std::to_string(i) + "]");
          if (pair.size() != 2)
            fail(ErrorKind::config, "estimation.bounds[" + std::to_string(i) + "] must be [lo, hi]");
          c.domain.bounds[i] = {pair[0], pair[1]};
        }
      }
    } else if (mode == "finite_grid") {
      std::vector<Theta> pts;
      if (s->has("grid_points")) {
        const auto& g = s->raw("grid_points");
        if (!g.is_array()) fail(ErrorKind::config, "estimation.grid_points must be an array");
        for (std::size_t i = 0; i < g.size(); ++i) {
          const auto v = detail::Section::number_array(g[i], "estimation.grid_points[" + std::to_string(i) + "]");
          if (v.size() != 3)
            fail(ErrorKind::config, "estimation.grid_points[" + std::to_string(i) + "] must have 3 entries");
          pts.push_back({v[0], v[1], v[2]});
        }
      }
      c.domain = ThetaDomain::finite(std::move(pts));
    } else {
      fail(ErrorKind::config, "estimation.domain_mode must be \"box\" or \"finite_grid\"");
    }
    std::string eta = "w2w2";
    s->string("eta", eta);
    if (eta != "w2w2") fail(ErrorKind::config, "estimation.eta must be \"w2w2\"");
    s->boolean("include_cross", c.include_cross);
    s->boolean("couple_l3", c.domain.couple_l3);
    s->integer("seeds_per_axis", c.domain.seeds_per_axis, 2, 101);
    s->number("tolerance", c.domain.tolerance);
    s->finish();
  }
  try {
    c.domain.validate();
  } catch (const Error& e) {
    fail(ErrorKind::config, std::string("estimation: ") + e.what());
  }

  if (auto s = root.section("simulation")) {
    s->integer("burn_in", c.burn_in, 0, 1 << 20);
    s->u64("seed", c.seed);
    s->integer("replications", c.replications, 1, 1 << 20);
    s->finish();
  }
  if (auto s = root.section("validation")) {
    s->integer("neighborhood_radius", c.validation.neighborhood_radius, 0, 1 << 16);
    s->integer("period_length", c.validation.period_length, 1, 1 << 20);
    s->integer("fold_stride", c.validation.fold_stride, 1, 1 << 30);
    s->finish();
  }
  if (auto s = root.section("counts")) {
    s->u64("seed", c.counts_seed);
    s->number("area_scale", c.area_scale);
    if (!(c.area_scale > 0.0)) fail(ErrorKind::config, "counts.area_scale must be > 0");
    s->finish();
  }
  if (auto s = root.section("ingest")) {
    s->number("power", c.ingest_power);
    s->integer("neighbours", c.ingest_neighbours, 1, 1 << 20);
    s->number("offset", c.ingest_offset);
    if (!(c.ingest_power > 0.0)) fail(ErrorKind::config, "ingest.power must be > 0");
    if (!(c.ingest_offset > 0.0)) fail(ErrorKind::config, "ingest.offset must be > 0");
    s->finish();
  }
  if (auto s = root.section("report")) {
    if (s->has("sides")) {
      const auto v = detail::Section::number_array(s->raw("sides"), "report.sides");
      c.report_sides.clear();
      for (double x : v) {
        if (x != std::floor(x) || x < 2 || x > 1 << 16)
          fail(ErrorKind::config, "report.sides entries must be integers >= 2");
        c.report_sides.push_back(static_cast<int>(x));
      }
      if (c.report_sides.empty()) fail(ErrorKind::config, "report.sides must not be empty");
    }
    s->integer("replications", c.report_replications, 1, 1 << 20);
    s->number("slice_t", c.slice_t);
    if (!(c.slice_t >= 0.0 && c.slice_t <= 1.0)) fail(ErrorKind::config, "report.slice_t must lie in [0, 1]");
    s->finish();
  }
  if (auto s = root.section("io")) {
    std::string fmt = "ndjson";
    s->string("format", fmt);
    try {
      c.format = parse_format(fmt);
    } catch (const Error& e) {
      fail(ErrorKind::config, std::string("io.format: ") + e.what());
    }
    if (auto p = s->section("paths")) {
      p->string("input", c.input_path);
      p->string("estimates", c.estimates_path);
      p->finish();
    }
    s->finish();
  }
  root.finish();
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  const auto text = read_text(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::config, path.string() + ": invalid JSON: " + e.what());
  }
  return parse_config(doc);
}

}  // namespace sarhcox
