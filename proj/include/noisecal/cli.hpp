#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "noisecal/calibration.hpp"
#include "noisecal/denoiser_io.hpp"
#include "noisecal/errors.hpp"
#include "noisecal/metrics.hpp"
#include "noisecal/parallel.hpp"
#include "noisecal/toy.hpp"
#include "noisecal/vio.hpp"

namespace noisecal::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

enum ExitCode : int { kOk = 0, kConfigError = 1, kIoError = 2, kNumericError = 3 };

/// A start step as written by the user. Integers are absolute timesteps,
/// reals are fractions of T ("600" and "0.6" agree when T = 1000).
struct T0Spec {
  bool fraction = true;
  double value = 0.6;

  static T0Spec absolute(Timestep t) { return {false, static_cast<double>(t)}; }

  static T0Spec parse(const std::string& text) {
    std::size_t used = 0;
    try {
      if (text.find_first_of(".eE") == std::string::npos) {
        const long long v = std::stoll(text, &used);
        if (used == text.size()) return absolute(static_cast<Timestep>(v));
      } else {
        const double v = std::stod(text, &used);
        if (used == text.size()) return {true, v};
      }
    } catch (const std::exception&) {
    }
    throw ConfigError("cannot parse t0 value \"" + text + "\"");
  }

  [[nodiscard]] Timestep resolve(const NoiseSchedule& schedule) const {
    const Timestep t = fraction ? resolve_t0(value, schedule) : static_cast<Timestep>(value);
    if (t < 1 || t > schedule.T()) {
      throw ConfigError("t0 resolves to " + std::to_string(t) + ", outside [1, " + std::to_string(schedule.T()) + "]");
    }
    return t;
  }
};

/// Everything a run needs, after defaults. Paths inside a config file are
/// relative to that file's directory.
struct RunConfig {
  ScheduleParams schedule;
  int num_steps = 30;
  double eta = 1.0;
  std::uint64_t seed = 0;
  T0Spec t0{};
  int iterations = 3;
  double nu = 1.0;
  MaskShape mask = MaskShape::Box;
  std::string denoiser_kind = "dataset";
  fs::path denoiser_path;
  double denoiser_variance = 0.0;
  fs::path input;
  fs::path output;
};

namespace detail {

inline void expect_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw ConfigError("unknown key \"" + key + "\" in " + where);
  }
}

template <typename T>
void read_field(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

inline MaskShape parse_mask(const std::string& name) {
  if (name == "box") return MaskShape::Box;
  if (name == "radial") return MaskShape::Radial;
  throw ConfigError("mask must be \"box\" or \"radial\", got \"" + name + "\"");
}

} // namespace detail

inline RunConfig parse_config(const json& doc, const fs::path& base_dir = {}) {
  using detail::expect_keys;
  using detail::read_field;
  expect_keys(doc, {"schedule", "sampler", "calibration", "denoiser", "io"}, "config");
  RunConfig cfg;
  auto rel = [&](const std::string& p) { return p.empty() ? fs::path{} : base_dir / p; };

  if (doc.contains("schedule")) {
    const json& s = doc["schedule"];
    expect_keys(s, {"T", "beta_start", "beta_end"}, "schedule");
    read_field(s, "T", cfg.schedule.T, "schedule");
    read_field(s, "beta_start", cfg.schedule.beta_start, "schedule");
    read_field(s, "beta_end", cfg.schedule.beta_end, "schedule");
  }
  if (doc.contains("sampler")) {
    const json& s = doc["sampler"];
    expect_keys(s, {"num_steps", "eta", "seed"}, "sampler");
    read_field(s, "num_steps", cfg.num_steps, "sampler");
    read_field(s, "eta", cfg.eta, "sampler");
    if (s.contains("seed") && !s["seed"].is_number_unsigned()) throw ConfigError("sampler.seed must be a non-negative integer");
    read_field(s, "seed", cfg.seed, "sampler");
  }
  if (doc.contains("calibration")) {
    const json& c = doc["calibration"];
    expect_keys(c, {"t0", "N", "nu", "mask"}, "calibration");
    if (c.contains("t0")) {
      const json& t = c["t0"];
      if (t.is_number_integer()) {
        cfg.t0 = T0Spec::absolute(t.get<Timestep>());
      } else if (t.is_number_float()) {
        cfg.t0 = {true, t.get<double>()};
      } else {
        throw ConfigError("calibration.t0 must be a number");
      }
    }
    read_field(c, "N", cfg.iterations, "calibration");
    read_field(c, "nu", cfg.nu, "calibration");
    std::string mask = "box";
    read_field(c, "mask", mask, "calibration");
    cfg.mask = detail::parse_mask(mask);
  }
  if (doc.contains("denoiser")) {
    const json& d = doc["denoiser"];
    expect_keys(d, {"kind", "path", "variance"}, "denoiser");
    read_field(d, "kind", cfg.denoiser_kind, "denoiser");
    std::string path;
    read_field(d, "path", path, "denoiser");
    cfg.denoiser_path = rel(path);
    read_field(d, "variance", cfg.denoiser_variance, "denoiser");
  }
  if (doc.contains("io")) {
    const json& io = doc["io"];
    expect_keys(io, {"input", "output"}, "io");
    std::string in, out;
    read_field(io, "input", in, "io");
    read_field(io, "output", out, "io");
    cfg.input = rel(in);
    cfg.output = rel(out);
  }
  if (cfg.denoiser_kind != "gmm" && cfg.denoiser_kind != "dataset") {
    throw ConfigError("denoiser.kind must be \"gmm\" or \"dataset\", got \"" + cfg.denoiser_kind + "\"");
  }
  if (cfg.iterations < 0) throw ConfigError("calibration.N must be >= 0");
  if (!(cfg.nu >= 0.0 && cfg.nu <= 1.0)) throw ConfigError("calibration.nu must lie in [0, 1]");
  return cfg;
}

inline RunConfig load_config(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(vio::read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

inline GmmDenoiser load_denoiser(const RunConfig& cfg) {
  if (cfg.denoiser_path.empty()) throw ConfigError("denoiser.path is required");
  if (cfg.denoiser_kind == "gmm") return load_gmm_spec(cfg.denoiser_path);
  return load_dataset_denoiser(cfg.denoiser_path, cfg.denoiser_variance);
}

inline NoiseSchedule build_schedule(const RunConfig& cfg) {
  try {
    return make_schedule(cfg.schedule);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("schedule: ") + e.what());
  }
}

/// Noise and sampler streams of one run; the sweep derives a run root per cell.
inline CalibrationConfig calibration_for(const RunConfig& cfg, Timestep t0, double nu, const RngSeed& root) {
  CalibrationConfig cc;
  cc.t0 = t0;
  cc.iterations = cfg.iterations;
  cc.nu = nu;
  cc.mask = cfg.mask;
  cc.rng = root.substream(0);
  return cc;
}

inline SamplerConfig sampler_for(const RunConfig& cfg, Timestep t0, const RngSeed& root) {
  SamplerConfig sc;
  sc.eta = cfg.eta;
  sc.num_steps = cfg.num_steps;
  sc.t0 = t0;
  sc.rng = root.substream(1);
  return sc;
}

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Runs `body`, mapping library exceptions onto exit codes.
template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumericError;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kIoError;
  } catch (const FormatError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kIoError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const fs::filesystem_error& e) {
    err << "i/o error: " << e.what() << '\n';
    return kIoError;
  }
}

// --- verbs ----------------------------------------------------------------

inline int cmd_enhance(const RunConfig& cfg_in, bool baseline, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    RunConfig cfg = cfg_in;
    if (baseline) {
      if (cfg.iterations > 0) {
        err << "warning: --baseline ignores calibration N=" << cfg.iterations << " and runs plain SDEdit (N=0)\n";
      }
      cfg.iterations = 0;
    }
    if (cfg.input.empty() || cfg.output.empty()) throw ConfigError("io.input and io.output are required");
    std::error_code ec;
    if (fs::exists(cfg.output) && fs::equivalent(cfg.input, cfg.output, ec)) {
      throw ConfigError("io.output must differ from io.input");
    }
    const NoiseSchedule schedule = build_schedule(cfg);
    const Timestep t0 = cfg.t0.resolve(schedule);
    const VideoTensor x_ref = vio::read_video(cfg.input);
    const GmmDenoiser denoiser = load_denoiser(cfg);

    const RngSeed root{cfg.seed, 0};
    const EnhanceResult r = nc_sdedit(x_ref, calibration_for(cfg, t0, cfg.nu, root), sampler_for(cfg, t0, root),
                                      denoiser, schedule);
    const MetricReport report = compare(r.x0, x_ref);

    vio::write_video(r.x0, cfg.output);
    std::ostringstream trace;
    write_trace_csv(trace, r.trace);
    vio::write_file_atomic(cfg.output / "trace.csv", trace.str());
    vio::write_file_atomic(cfg.output / "metrics.json", report.to_json().dump(2) + "\n");

    nlohmann::ordered_json summary;
    summary["t0"] = t0;
    summary["N"] = cfg.iterations;
    summary["nu"] = cfg.nu;
    summary["grid_length"] = r.grid.size();
    summary["calibration_calls"] = r.calibration_calls;
    summary["sampling_calls"] = r.sampling_calls;
    summary["total_calls"] = r.total_calls();
    summary["objectives"] = r.trace.objectives();
    summary["metrics"] = report.to_json();
    out << summary.dump() << '\n';
    return static_cast<int>(kOk);
  });
}

inline int cmd_metrics(const fs::path& dir_a, const fs::path& dir_b, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const VideoTensor a = vio::read_video(dir_a);
    const VideoTensor b = vio::read_video(dir_b);
    out << compare(a, b).to_json().dump() << '\n';
    return static_cast<int>(kOk);
  });
}

struct SweepOptions {
  std::vector<std::string> t0_list;
  std::vector<double> nu_list;
  int seeds = 1;
  fs::path summary; // optional per-cell means
};

inline int cmd_sweep(const RunConfig& cfg, const SweepOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opt.t0_list.empty() || opt.nu_list.empty()) throw ConfigError("--t0-list and --nu-list must be nonempty");
    if (opt.seeds < 1) throw ConfigError("--seeds must be >= 1");
    if (cfg.input.empty()) throw ConfigError("io.input is required");
    const NoiseSchedule schedule = build_schedule(cfg);
    std::vector<Timestep> t0s;
    for (const auto& t : opt.t0_list) t0s.push_back(T0Spec::parse(t).resolve(schedule));
    for (double nu : opt.nu_list) {
      if (!(nu >= 0.0 && nu <= 1.0)) throw ConfigError("nu values must lie in [0, 1]");
    }
    const VideoTensor x_ref = vio::read_video(cfg.input);
    const GmmDenoiser denoiser = load_denoiser(cfg);

    struct Row {
      MetricReport report;
      std::vector<double> objectives;
    };
    const std::size_t seeds = static_cast<std::size_t>(opt.seeds);
    const std::size_t cells = t0s.size() * opt.nu_list.size();
    std::vector<Row> rows(cells * seeds);
    const RngSeed root{cfg.seed, 0};
    parallel_for(rows.size(), [&](std::size_t i) {
      const Timestep t0 = t0s[i / seeds / opt.nu_list.size()];
      const double nu = opt.nu_list[(i / seeds) % opt.nu_list.size()];
      const RngSeed cell = root.substream(static_cast<std::uint64_t>(t0))
                               .substream(std::bit_cast<std::uint64_t>(nu))
                               .substream(i % seeds);
      const EnhanceResult r = nc_sdedit(x_ref, calibration_for(cfg, t0, nu, cell), sampler_for(cfg, t0, cell),
                                        denoiser, schedule);
      rows[i] = {compare(r.x0, x_ref), r.trace.objectives()};
    });

    std::string obj_header;
    for (int n = 0; n <= cfg.iterations; ++n) obj_header += ",obj_" + std::to_string(n);
    std::ostringstream csv;
    csv << "t0,nu,seed,mse_low,mse,ssim,d_sf" << obj_header << '\n';
    std::ostringstream summary;
    summary << "t0,nu,seeds,mse_low,mse,ssim,d_sf" << obj_header << '\n';
    for (std::size_t c = 0; c < cells; ++c) {
      const Timestep t0 = t0s[c / opt.nu_list.size()];
      const double nu = opt.nu_list[c % opt.nu_list.size()];
      Row mean{{}, std::vector<double>(static_cast<std::size_t>(cfg.iterations) + 1, 0.0)};
      for (std::size_t k = 0; k < seeds; ++k) {
        const Row& row = rows[c * seeds + k];
        csv << t0 << ',' << fmt(nu) << ',' << k << ',' << fmt(row.report.mse_low) << ',' << fmt(row.report.mse)
            << ',' << fmt(row.report.ssim) << ',' << fmt(row.report.d_sf);
        for (double o : row.objectives) csv << ',' << fmt(o);
        csv << '\n';
        const double w = 1.0 / static_cast<double>(seeds);
        mean.report.mse_low += w * row.report.mse_low;
        mean.report.mse += w * row.report.mse;
        mean.report.ssim += w * row.report.ssim;
        mean.report.d_sf += w * row.report.d_sf;
        for (std::size_t n = 0; n < row.objectives.size(); ++n) mean.objectives[n] += w * row.objectives[n];
      }
      summary << t0 << ',' << fmt(nu) << ',' << seeds << ',' << fmt(mean.report.mse_low) << ','
              << fmt(mean.report.mse) << ',' << fmt(mean.report.ssim) << ',' << fmt(mean.report.d_sf);
      for (double o : mean.objectives) summary << ',' << fmt(o);
      summary << '\n';
    }
    out << csv.str();
    if (!opt.summary.empty()) {
      vio::write_file_atomic(opt.summary, summary.str());
    } else {
      err << "per-cell means:\n" << summary.str();
    }
    return static_cast<int>(kOk);
  });
}

/// Unconditional samples from the denoiser's distribution, written to
/// <output>/sample_000, sample_001, ...
inline int cmd_sample(const RunConfig& cfg, int count, std::size_t frames, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (count < 0) throw ConfigError("--count must be >= 0");
    if (count == 0) return static_cast<int>(kOk);
    if (frames < 1) throw ConfigError("--frames must be >= 1");
    if (cfg.output.empty()) throw ConfigError("io.output is required");
    const NoiseSchedule schedule = build_schedule(cfg);
    const GmmDenoiser denoiser = load_denoiser(cfg);
    Shape shape = denoiser.component_shape();
    shape.frames = frames;

    const RngSeed root = RngSeed{cfg.seed, 0}.substream(2);
    std::vector<std::optional<VideoTensor>> samples(static_cast<std::size_t>(count));
    parallel_for(samples.size(), [&](std::size_t i) {
      samples[i] = ddpm_sample(shape, denoiser, schedule, root.substream(i));
    });
    json dirs = json::array();
    for (std::size_t i = 0; i < samples.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "sample_%03zu", i);
      vio::write_video(*samples[i], cfg.output / name);
      dirs.push_back(name);
    }
    out << json{{"count", count}, {"samples", dirs}}.dump() << '\n';
    return static_cast<int>(kOk);
  });
}

/// Writes a small synthetic benchmark case: dataset/ (denoiser frames),
/// clean/, reference/ (degraded clip) and a config.json that enhances it.
inline int cmd_make_toy(const fs::path& dir, std::uint64_t seed, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const toy::ToyConfig tc;
    const toy::ToyCase c = toy::make_case(tc, RngSeed{seed, 0});
    const auto& comps = c.denoiser.components();
    Shape ds = comps.front().mean.shape();
    ds.frames = comps.size();
    std::vector<double> data;
    for (const auto& comp : comps) data.insert(data.end(), comp.mean.values().begin(), comp.mean.values().end());
    vio::write_video(VideoTensor(ds, std::move(data)), dir / "dataset");
    vio::write_video(c.clean, dir / "clean");
    vio::write_video(c.reference, dir / "reference");
    nlohmann::ordered_json config;
    config["sampler"] = {{"num_steps", 30}, {"eta", 1.0}, {"seed", seed}};
    config["calibration"] = {{"t0", 600}, {"N", 3}, {"nu", 1.0}};
    config["denoiser"] = {{"kind", "dataset"}, {"path", "dataset"}};
    config["io"] = {{"input", "reference"}, {"output", "enhanced"}};
    vio::write_file_atomic(dir / "config.json", config.dump(2) + "\n");
    out << json{{"dir", dir.string()}, {"scene", c.scene}}.dump() << '\n';
    return static_cast<int>(kOk);
  });
}

// --- argument parsing -----------------------------------------------------

/// Entry point shared by the binary and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Noise-calibrated SDEdit video enhancement"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = all cores)");

  // Flags shared by the config-driven verbs; set values win over the file.
  struct Overrides {
    std::string config;
    std::optional<std::string> input, output, denoiser, kind, t0, mask;
    std::optional<std::uint64_t> seed;
    std::optional<int> iterations, steps;
    std::optional<double> nu, eta;
  };
  Overrides ov;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", ov.config, "JSON run config");
    sub->add_option("-i,--input", ov.input, "input frame directory");
    sub->add_option("-o,--output", ov.output, "output directory");
    sub->add_option("--denoiser", ov.denoiser, "denoiser path (frame dir or GMM spec)");
    sub->add_option("--denoiser-kind", ov.kind, "dataset | gmm");
    sub->add_option("--seed", ov.seed, "top-level seed");
    sub->add_option("--t0", ov.t0, "start step: integer = absolute, real = fraction of T");
    sub->add_option("-N,--iterations", ov.iterations, "calibration iterations");
    sub->add_option("--nu", ov.nu, "threshold frequency in [0, 1]");
    sub->add_option("--mask", ov.mask, "box | radial");
    sub->add_option("--steps", ov.steps, "DDIM steps over [1, T]");
    sub->add_option("--eta", ov.eta, "stochasticity of the reverse steps");
  };

  auto* enhance = app.add_subcommand("enhance", "NC-SDEdit a frame directory");
  add_common(enhance);
  bool baseline = false;
  enhance->add_flag("--baseline", baseline, "plain SDEdit (forces N = 0)");

  auto* metrics = app.add_subcommand("metrics", "compare two frame directories");
  std::string dir_a, dir_b;
  metrics->add_option("dir_a", dir_a, "candidate frames")->required();
  metrics->add_option("dir_b", dir_b, "reference frames")->required();

  auto* sweep = app.add_subcommand("sweep", "t0 x nu grid over several seeds");
  add_common(sweep);
  SweepOptions sweep_opt;
  std::string summary_path;
  sweep->add_option("--t0-list", sweep_opt.t0_list, "start steps")->required()->delimiter(',');
  sweep->add_option("--nu-list", sweep_opt.nu_list, "threshold frequencies")->required()->delimiter(',');
  sweep->add_option("--seeds", sweep_opt.seeds, "seeds per cell");
  sweep->add_option("--summary", summary_path, "CSV of per-cell means");

  auto* sample = app.add_subcommand("sample", "unconditional samples from the denoiser");
  add_common(sample);
  int count = 1;
  std::size_t frames = 1;
  sample->add_option("--count", count, "number of samples");
  sample->add_option("--frames", frames, "frames per sample");

  auto* make_toy = app.add_subcommand("make-toy", "write a synthetic benchmark case");
  std::string toy_dir;
  std::uint64_t toy_seed = 0;
  make_toy->add_option("dir", toy_dir, "output directory")->required();
  make_toy->add_option("--seed", toy_seed, "scene seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kConfigError;
  }
  set_num_threads(threads);

  auto build = [&](RunConfig& cfg) {
    return guarded(err, [&] {
      cfg = ov.config.empty() ? RunConfig{} : load_config(ov.config);
      if (ov.input) cfg.input = *ov.input;
      if (ov.output) cfg.output = *ov.output;
      if (ov.denoiser) cfg.denoiser_path = *ov.denoiser;
      if (ov.kind) cfg.denoiser_kind = *ov.kind;
      if (ov.seed) cfg.seed = *ov.seed;
      if (ov.t0) cfg.t0 = T0Spec::parse(*ov.t0);
      if (ov.iterations) cfg.iterations = *ov.iterations;
      if (ov.nu) cfg.nu = *ov.nu;
      if (ov.mask) cfg.mask = detail::parse_mask(*ov.mask);
      if (ov.steps) cfg.num_steps = *ov.steps;
      if (ov.eta) cfg.eta = *ov.eta;
      if (cfg.denoiser_kind != "gmm" && cfg.denoiser_kind != "dataset") throw ConfigError("unknown denoiser kind");
      if (cfg.iterations < 0) throw ConfigError("N must be >= 0");
      return static_cast<int>(kOk);
    });
  };

  if (*metrics) return cmd_metrics(dir_a, dir_b, out, err);
  if (*make_toy) return cmd_make_toy(toy_dir, toy_seed, out, err);

  RunConfig cfg;
  if (const int rc = build(cfg); rc != kOk) return rc;
  if (*enhance) return cmd_enhance(cfg, baseline, out, err);
  if (*sweep) {
    sweep_opt.summary = summary_path;
    return cmd_sweep(cfg, sweep_opt, out, err);
  }
  return cmd_sample(cfg, count, frames, out, err);
}

} // namespace noisecal::cli
