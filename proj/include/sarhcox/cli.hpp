#pragma once

// Command-line driver: sarhcox <command> [--config f] [--seed n] [--out dir]
// [--threads n] [--input f] [--estimates f].
//
// Every command writes its outputs plus manifest.json into --out. Failures
// print {"error": {"kind": ..., "message": ...}} on stderr and return 2.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sarhcox/config.hpp"
#include "sarhcox/cox.hpp"
#include "sarhcox/error.hpp"
#include "sarhcox/estimator.hpp"
#include "sarhcox/experiment.hpp"
#include "sarhcox/field_io.hpp"
#include "sarhcox/ingest.hpp"
#include "sarhcox/predict.hpp"
#include "sarhcox/sarh.hpp"
#include "sarhcox/wavelet.hpp"

namespace sarhcox::cli {

namespace fs = std::filesystem;

inline constexpr const char* kVersion = "1.0.0";

struct Options {
  std::string command;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  int threads = 1;
  std::string input;
  std::string estimates;
};

class Manifest {
 public:
  Manifest(std::string command, const RunConfig& cfg) {
    doc_["command"] = std::move(command);
    doc_["version"] = kVersion;
    doc_["config_hash"] = detail::hex64(cfg.hash());
    doc_["seeds"] = json::object();
    doc_["files"] = json::array();
    doc_["warnings"] = json::array();
  }
  void seed(const std::string& name, std::uint64_t v) { doc_["seeds"][name] = v; }
  void input(const std::string& name, const std::string& text) {
    doc_["inputs"][name] = detail::hex64(detail::fnv1a(text));
  }
  void warning(const std::string& w) { doc_["warnings"].push_back(w); }
  void set(const std::string& key, json v) { doc_[key] = std::move(v); }

  void write(const fs::path& dir, const std::string& name, const std::string& content) {
    write_text(dir / name, content);
    doc_["files"].push_back({{"name", name}, {"fnv1a", detail::hex64(detail::fnv1a(content))}});
  }
  void finish(const fs::path& dir) const { write_text(dir / "manifest.json", doc_.dump(2) + "\n"); }

 private:
  json doc_ = json::object();
};

inline std::string field_text(const FunctionalField& f, FieldFormat fmt) {
  return fmt == FieldFormat::csv ? field_to_csv(f) : field_to_ndjson(f);
}

inline const char* field_ext(FieldFormat fmt) { return fmt == FieldFormat::csv ? ".csv" : ".ndjson"; }

inline std::string require_input(const Options& o, const RunConfig& cfg) {
  const std::string p = o.input.empty() ? cfg.input_path : o.input;
  require(!p.empty(), ErrorKind::config, o.command + " needs --input (or io.paths.input)");
  return p;
}

inline FunctionalField read_field(const std::string& path, std::string& text) {
  text = read_text(path);
  return format_for_path(path) == FieldFormat::csv ? field_from_csv(text) : field_from_ndjson(text);
}

inline void check_time(const FunctionalField& f, const RunConfig& cfg) {
  require(cfg.j0 <= f.time().depth(), ErrorKind::config,
          "time.j0=" + std::to_string(cfg.j0) + " exceeds the input depth " +
              std::to_string(f.time().depth()));
}

inline int cmd_simulate(const Options& o, const RunConfig& cfg, Manifest& man, const fs::path& out) {
  const auto spec = cfg.spec();
  if (auto w = burn_in_warning(spec, cfg.burn_in)) man.warning(*w);
  man.seed("simulation", cfg.seed);
  man.set("truncation", spec.truncation);
  for (int r = 0; r < cfg.replications; ++r) {
    const std::uint64_t s = cfg.replications == 1
                                ? cfg.seed
                                : detail::derive_seed(cfg.seed, static_cast<std::uint64_t>(r), 0x51u);
    const auto field = simulate(spec, cfg.grid(), cfg.burn_in, s, o.threads);
    std::string name = "field";
    if (cfg.replications > 1) {
      char buf[16];
      std::snprintf(buf, sizeof buf, "_%04d", r);
      name += buf;
      man.seed("replication_" + std::to_string(r), s);
    }
    man.write(out, name + field_ext(cfg.format), field_text(field, cfg.format));
  }
  return 0;
}

inline int cmd_dwt(const Options& o, const RunConfig& cfg, Manifest& man, const fs::path& out) {
  std::string text;
  const auto path = require_input(o, cfg);
  const auto field = read_field(path, text);
  man.input("field", text);
  check_time(field, cfg);
  man.write(out, "coefficients.ndjson", coefficients_to_ndjson(field_dwt(field, cfg.j0)));
  return 0;
}

inline EstimationReport estimate_field(const FunctionalField& field, const RunConfig& cfg, int threads) {
  check_time(field, cfg);
  const auto centred = detrend(field).first;
  return estimate_all(field_dwt(centred, cfg.j0), cfg.domain, eta_weight,
                      {cfg.include_cross, threads});
}

inline int cmd_estimate(const Options& o, const RunConfig& cfg, Manifest& man, const fs::path& out) {
  std::string text;
  const auto field = read_field(require_input(o, cfg), text);
  man.input("field", text);
  const auto report = estimate_field(field, cfg, o.threads);
  std::size_t flagged = 0;
  for (const auto& r : report.records) flagged += r.flags.empty() ? 0 : 1;
  if (flagged) man.warning(std::to_string(flagged) + " records flagged (see report flags)");
  man.write(out, "report.ndjson", report_to_ndjson(report));
  man.write(out, "eigenvalues.csv", eigen_table_csv(report));
  return 0;
}

inline std::string prediction_csv(const FunctionalField& observed, const PredictionResult& pr,
                                  const MeanCurve& mean) {
  std::string s = "p,q,t_index,observed,predicted,residual\n";
  const auto& g = observed.grid();
  const std::size_t T = observed.time().size();
  for (int p = 0; p < g.s1(); ++p)
    for (int q = 0; q < g.s2(); ++q)
      for (std::size_t m = 0; m < T; ++m) {
        const bool ok = pr.predicted_at(p, q);
        s += std::to_string(p) + ',' + std::to_string(q) + ',' + std::to_string(m) + ',' +
             detail::format_double(observed.at(p, q, m)) + ',' +
             (ok ? detail::format_double(pr.predicted.at(p, q, m) + mean.values[m]) : "nan") + ',' +
             (ok ? detail::format_double(pr.residuals.at(p, q, m)) : "nan") + '\n';
      }
  return s;
}

inline int cmd_predict(const Options& o, const RunConfig& cfg, Manifest& man, const fs::path& out) {
  std::string text;
  const auto field = read_field(require_input(o, cfg), text);
  man.input("field", text);
  check_time(field, cfg);
  const std::string epath = o.estimates.empty() ? cfg.estimates_path : o.estimates;
  EstimationReport report;
  if (epath.empty()) {
    report = estimate_field(field, cfg, o.threads);
    man.write(out, "report.ndjson", report_to_ndjson(report));
  } else {
    const auto etext = read_text(epath);
    man.input("estimates", etext);
    report = report_from_ndjson(etext);
  }
  const auto [centred, mean] = detrend(field);
  const auto coeffs = field_dwt(centred, report.layout.j0());
  require(report.layout == coeffs.layout(), ErrorKind::shape,
          "report layout does not match the input field");
  const auto pr = predict(coeffs, report);
  man.write(out, "predictions.csv", prediction_csv(field, pr, mean));
  return 0;
}

inline int cmd_validate(const Options& o, const RunConfig& cfg, Manifest& man, const fs::path& out) {
  std::string text;
  const auto field = read_field(require_input(o, cfg), text);
  man.input("field", text);
  check_time(field, cfg);
  auto vc = cfg.validation;
  vc.threads = o.threads;
  const auto summary = loo_validate(field, vc, cfg.j0, cfg.domain);
  man.write(out, "folds.csv", folds_csv(summary));
  man.write(out, "periods.csv", periods_csv(summary));
  const json s{{"aloocve", summary.aloocve},
               {"folds", summary.folds.size()},
               {"periods", summary.period_errors.size()},
               {"period_length", summary.period_length},
               {"neighborhood_radius", vc.neighborhood_radius}};
  man.write(out, "summary.json", s.dump(2) + "\n");
  return 0;
}

inline int cmd_counts(const Options& o, const RunConfig& cfg, Manifest& man, const fs::path& out) {
  std::string text;
  const auto field = read_field(require_input(o, cfg), text);
  man.input("field", text);
  auto means = integrated_intensity(intensity(field));
  for (auto& m : means) m *= cfg.area_scale;
  man.seed("counts", cfg.counts_seed);
  man.write(out, "counts.csv", counts_csv(sample_counts(field.grid(), means, cfg.counts_seed)));
  return 0;
}

inline int cmd_ingest(const Options& o, const RunConfig& cfg, Manifest& man, const fs::path& out) {
  const auto text = read_text(require_input(o, cfg));
  man.input("counts", text);
  const auto field = ingest_counts(parse_count_csv(text), cfg.ingest_options());
  man.write(out, std::string("field") + field_ext(cfg.format), field_text(field, cfg.format));
  return 0;
}

/// Field value at time t by linear interpolation between midpoint samples.
inline std::string slice_csv(const FunctionalField& f, double t) {
  const std::size_t T = f.time().size();
  const double u = std::clamp(t * static_cast<double>(T) - 0.5, 0.0, static_cast<double>(T - 1));
  const auto i = std::min(static_cast<std::size_t>(u), T - 1);
  const std::size_t j = std::min(i + 1, T - 1);
  const double w = u - static_cast<double>(i);
  std::string s = "p,q,value\n";
  for (int p = 0; p < f.grid().s1(); ++p)
    for (int q = 0; q < f.grid().s2(); ++q) {
      const double a = f.at(p, q, i), b = f.at(p, q, j);
      s += std::to_string(p) + ',' + std::to_string(q) + ',' + detail::format_double(a + w * (b - a)) + '\n';
    }
  return s;
}

inline int cmd_report(const Options& o, const RunConfig& cfg, Manifest& man, const fs::path& out) {
  MseExperimentConfig mc;
  mc.spec = cfg.spec();
  mc.j0 = cfg.j0;
  mc.sides = cfg.report_sides;
  mc.replications = cfg.report_replications;
  mc.burn_in = cfg.burn_in;
  mc.seed = cfg.seed;
  mc.domain = cfg.domain;
  mc.threads = o.threads;
  man.seed("simulation", cfg.seed);
  const auto res = run_mse_experiment(mc);

  std::string mse = "N";
  for (int s : res.scales) mse += s < 0 ? std::string(",scaling") : ",j" + std::to_string(s);
  mse += '\n';
  for (std::size_t n = 0; n < res.sides.size(); ++n) {
    mse += std::to_string(res.sides[n] * res.sides[n]);
    for (std::size_t s = 0; s < res.scales.size(); ++s)
      mse += ',' + detail::format_double((res.mse[0][n][s] + res.mse[1][n][s] + res.mse[2][n][s]) / 3.0);
    mse += '\n';
  }
  man.write(out, "mse.csv", mse);

  std::string eig = "N,replication,operator,p,lambda_hat\n";
  for (std::size_t n = 0; n < res.sides.size(); ++n)
    for (std::size_t r = 0; r < res.runs[n].size(); ++r)
      for (int op = 1; op <= 2; ++op) {
        const auto& v = op == 1 ? res.runs[n][r].eigenvalues1 : res.runs[n][r].eigenvalues2;
        for (std::size_t p = 0; p < v.size(); ++p)
          eig += std::to_string(res.sides[n] * res.sides[n]) + ',' + std::to_string(r) + ",L" +
                 std::to_string(op) + ',' + std::to_string(p + 1) + ',' + detail::format_double(v[p]) + '\n';
      }
  man.write(out, "eigen_samples.csv", eig);

  const std::string in = o.input.empty() ? cfg.input_path : o.input;
  if (!in.empty()) {
    std::string text;
    const auto field = read_field(in, text);
    man.input("field", text);
    man.write(out, "slice.csv", slice_csv(field, cfg.slice_t));
  }
  return 0;
}

inline void print_error(std::ostream& err, const std::string& kind, const std::string& msg) {
  err << json{{"error", {{"kind", kind}, {"message", msg}}}}.dump() << "\n";
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Functional spatial autoregression and log-Gaussian Cox counts"};
  app.set_version_flag("--version", kVersion);
  app.add_option("command", o.command, "simulate | dwt | estimate | predict | validate | counts | ingest | report")
      ->required()
      ->check(CLI::IsMember({"simulate", "dwt", "estimate", "predict", "validate", "counts", "ingest", "report"}));
  app.add_option("--config", o.config_path, "run configuration (JSON)");
  app.add_option("--seed", o.seed, "override simulation.seed and counts.seed");
  app.add_option("--out", o.out_dir, "output directory");
  app.add_option("--threads", o.threads, "worker threads")->check(CLI::Range(1, 1024));
  app.add_option("--input", o.input, "input file");
  app.add_option("--estimates", o.estimates, "estimation report (NDJSON) for predict");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    print_error(err, "config", e.what());
    return 2;
  }

  try {
    RunConfig cfg = o.config_path.empty() ? parse_config(json::object()) : load_config(o.config_path);
    if (o.seed) {
      cfg.seed = *o.seed;
      cfg.counts_seed = *o.seed;
    }
    const fs::path dir(o.out_dir);
    Manifest man(o.command, cfg);
    int rc = 0;
    if (o.command == "simulate") rc = cmd_simulate(o, cfg, man, dir);
    else if (o.command == "dwt") rc = cmd_dwt(o, cfg, man, dir);
    else if (o.command == "estimate") rc = cmd_estimate(o, cfg, man, dir);
    else if (o.command == "predict") rc = cmd_predict(o, cfg, man, dir);
    else if (o.command == "validate") rc = cmd_validate(o, cfg, man, dir);
    else if (o.command == "counts") rc = cmd_counts(o, cfg, man, dir);
    else if (o.command == "ingest") rc = cmd_ingest(o, cfg, man, dir);
    else rc = cmd_report(o, cfg, man, dir);
    man.finish(dir);
    out << (dir / "manifest.json").string() << "\n";
    return rc;
  } catch (const Error& e) {
    print_error(err, std::string(to_string(e.kind())), e.what());
  } catch (const std::exception& e) {
    print_error(err, "internal", e.what());
  }
  return 2;
}

inline int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace sarhcox::cli
