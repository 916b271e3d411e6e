#pragma once

// Config-driven subcommands: fit, tokenize, features, eval, stats, synth.

#include <fnmatch.h>

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "msteeg/analytics.hpp"
#include "msteeg/cluster.hpp"
#include "msteeg/codebook.hpp"
#include "msteeg/core.hpp"
#include "msteeg/dataset.hpp"
#include "msteeg/gfp.hpp"
#include "msteeg/io.hpp"
#include "msteeg/prep.hpp"
#include "msteeg/recording.hpp"
#include "msteeg/spectral.hpp"
#include "msteeg/synth.hpp"
#include "msteeg/tokenize.hpp"

namespace msteeg {

namespace fs = std::filesystem;
using nlohmann::json;

// 0 success, 2 input/config, 3 data contract, 4 internal.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIo:
    case ErrorKind::kParse:
    case ErrorKind::kFormat:
    case ErrorKind::kTruncation:
    case ErrorKind::kCalibration:
    case ErrorKind::kValue:
    case ErrorKind::kConfig:
    case ErrorKind::kParameter:
      return 2;
    case ErrorKind::kInternal:
      return 4;
    default:
      return 3;
  }
}

struct FilterConfig {
  bool enabled = true;
  double low = 1.0;
  double high = 40.0;
};

struct ResampleConfig {
  bool enabled = true;
  double target_fs = 100.0;
};

struct StftConfig {
  double window_s = 1.0;
  double overlap = 0.0;
  PowerScaling scaling = PowerScaling::kAngular;
};

struct StatsConfig {
  std::size_t groups = 0;  // 0: one group per recording
  std::size_t max_rows = 0;
};

struct PipelineConfig {
  std::vector<std::string> inputs;
  std::vector<std::string> channels = default_leads();
  double label_rate = 1.0 / 30.0;
  double csv_fs = 0.0;
  bool average_reference = false;
  FilterConfig filter;
  ResampleConfig resample;
  FitConfig fit;
  std::size_t fit_passes = 1;
  double window_s = 300.0;
  StftConfig stft;
  std::vector<Band> bands = default_bands();
  TrainConfig train;
  StatsConfig stats;
  std::string out = "out";
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  void validate() const;
};

namespace detail {

// Reads one JSON object, tracking which keys were consumed so that anything
// left over is reported.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail(ErrorKind::kConfig, where_ + " must be a JSON object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      fail(ErrorKind::kConfig, where_ + "." + key + " has the wrong type");
    }
  }

  std::optional<ObjectReader> sub(const char* key) {
    seen_.insert(key);
    if (!j_.contains(key)) return std::nullopt;
    return ObjectReader(j_.at(key), where_ + "." + key);
  }

  const json* raw(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) fail(ErrorKind::kConfig, "unknown key '" + where_ + "." + key + "'");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

inline PowerScaling parse_scaling(const std::string& s) {
  if (s == "angular") return PowerScaling::kAngular;
  if (s == "density") return PowerScaling::kDensity;
  fail(ErrorKind::kConfig, "unknown power scaling '" + s + "' (expected angular|density)");
}

inline const char* to_string(PowerScaling s) { return s == PowerScaling::kAngular ? "angular" : "density"; }

}  // namespace detail

inline void PipelineConfig::validate() const {
  auto bad = [](const std::string& m) { fail(ErrorKind::kConfig, m); };
  if (channels.size() < 2) bad("channels: at least 2 leads are required");
  if (!(label_rate > 0.0)) bad("label_rate must be > 0");
  if (csv_fs < 0.0) bad("csv_fs must be >= 0");
  if (filter.enabled && !(filter.low > 0.0 && filter.low < filter.high)) bad("filter: need 0 < low < high");
  if (resample.enabled && !(resample.target_fs > 0.0)) bad("resample.target_fs must be > 0");
  if (fit.k < 2) bad("fit.k must be >= 2");
  if (fit.batch_size < 1) bad("fit.batch_size must be >= 1");
  if (fit.max_iter < 1) bad("fit.max_iter must be >= 1");
  if (!(fit.tol > 0.0)) bad("fit.tol must be > 0");
  if (fit_passes < 1) bad("fit.passes must be >= 1");
  if (!(window_s > 0.0)) bad("window_s must be > 0");
  if (!(stft.window_s > 0.0)) bad("stft.window_s must be > 0");
  if (!(stft.overlap >= 0.0 && stft.overlap < 1.0)) bad("stft.overlap must be in [0, 1)");
  if (bands.empty()) bad("bands must not be empty");
  for (const auto& b : bands) {
    if (!(b.low >= 0.0 && b.low < b.high)) bad("band '" + b.name + "': need 0 <= low < high");
  }
  if (!(train.learning_rate > 0.0)) bad("train.learning_rate must be > 0");
}

inline PipelineConfig parse_config(const json& j) {
  PipelineConfig cfg;
  detail::ObjectReader r(j, "config");
  r.get("inputs", cfg.inputs);
  r.get("channels", cfg.channels);
  r.get("label_rate", cfg.label_rate);
  r.get("csv_fs", cfg.csv_fs);
  r.get("average_reference", cfg.average_reference);
  if (auto f = r.sub("filter")) {
    f->get("enabled", cfg.filter.enabled);
    f->get("low", cfg.filter.low);
    f->get("high", cfg.filter.high);
    f->finish();
  }
  if (auto f = r.sub("resample")) {
    f->get("enabled", cfg.resample.enabled);
    f->get("target_fs", cfg.resample.target_fs);
    f->finish();
  }
  if (auto f = r.sub("fit")) {
    f->get("k", cfg.fit.k);
    f->get("batch_size", cfg.fit.batch_size);
    f->get("max_iter", cfg.fit.max_iter);
    f->get("tol", cfg.fit.tol);
    f->get("passes", cfg.fit_passes);
    std::string mode = to_string(cfg.fit.mode);
    f->get("mode", mode);
    cfg.fit.mode = parse_fit_mode(mode);
    f->finish();
  }
  r.get("window_s", cfg.window_s);
  if (auto f = r.sub("stft")) {
    f->get("window_s", cfg.stft.window_s);
    f->get("overlap", cfg.stft.overlap);
    std::string scaling = detail::to_string(cfg.stft.scaling);
    f->get("scaling", scaling);
    cfg.stft.scaling = detail::parse_scaling(scaling);
    f->finish();
  }
  if (const json* bands = r.raw("bands")) {
    if (!bands->is_array()) fail(ErrorKind::kConfig, "config.bands must be an array");
    cfg.bands.clear();
    for (std::size_t i = 0; i < bands->size(); ++i) {
      detail::ObjectReader b((*bands)[i], "config.bands[" + std::to_string(i) + "]");
      Band band;
      b.get("name", band.name);
      b.get("low", band.low);
      b.get("high", band.high);
      b.finish();
      cfg.bands.push_back(band);
    }
  }
  if (auto f = r.sub("train")) {
    f->get("learning_rate", cfg.train.learning_rate);
    f->get("epochs", cfg.train.epochs);
    f->finish();
  }
  if (auto f = r.sub("stats")) {
    f->get("groups", cfg.stats.groups);
    f->get("max_rows", cfg.stats.max_rows);
    f->finish();
  }
  r.get("out", cfg.out);
  r.get("seed", cfg.seed);
  r.get("threads", cfg.threads);
  r.finish();
  cfg.fit.seed = cfg.seed;
  return cfg;
}

inline PipelineConfig load_config(const fs::path& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::kConfig, path.string() + ": " + e.what());
  }
  return parse_config(j);
}

inline json config_to_json(const PipelineConfig& cfg) {
  json j;
  j["inputs"] = cfg.inputs;
  j["channels"] = cfg.channels;
  j["label_rate"] = cfg.label_rate;
  j["csv_fs"] = cfg.csv_fs;
  j["average_reference"] = cfg.average_reference;
  j["filter"] = {{"enabled", cfg.filter.enabled}, {"low", cfg.filter.low}, {"high", cfg.filter.high}};
  j["resample"] = {{"enabled", cfg.resample.enabled}, {"target_fs", cfg.resample.target_fs}};
  j["fit"] = {{"k", cfg.fit.k},         {"batch_size", cfg.fit.batch_size}, {"max_iter", cfg.fit.max_iter},
              {"tol", cfg.fit.tol},     {"passes", cfg.fit_passes},        {"mode", to_string(cfg.fit.mode)}};
  j["window_s"] = cfg.window_s;
  j["stft"] = {{"window_s", cfg.stft.window_s},
               {"overlap", cfg.stft.overlap},
               {"scaling", detail::to_string(cfg.stft.scaling)}};
  j["bands"] = json::array();
  for (const auto& b : cfg.bands) j["bands"].push_back({{"name", b.name}, {"low", b.low}, {"high", b.high}});
  j["train"] = {{"learning_rate", cfg.train.learning_rate}, {"epochs", cfg.train.epochs}};
  j["stats"] = {{"groups", cfg.stats.groups}, {"max_rows", cfg.stats.max_rows}};
  j["out"] = cfg.out;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  return j;
}

// Prefixes the message of any library error with the failing stage.
template <typename F>
auto run_stage(const std::string& stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.kind(), stage + ": " + e.detail());
  } catch (const std::bad_alloc&) {
    throw;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kFormat, stage + ": " + e.what());
  }
}

// ---------------------------------------------------------------- ingest

inline bool supported_input(const fs::path& p) {
  const std::string ext = lowercase(p.extension().string());
  return ext == ".edf" || ext == ".csv" || ext == ".msr";
}

inline std::vector<fs::path> discover_inputs(const std::vector<std::string>& patterns) {
  std::set<fs::path> found;
  for (const auto& pattern : patterns) {
    const fs::path p(pattern);
    const std::string name = p.filename().string();
    if (name.find_first_of("*?[") != std::string::npos) {
      const fs::path dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
      if (!fs::is_directory(dir)) fail(ErrorKind::kIo, "input directory '" + dir.string() + "' does not exist");
      for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && supported_input(e.path()) &&
            fnmatch(name.c_str(), e.path().filename().c_str(), 0) == 0) {
          found.insert(e.path());
        }
      }
    } else if (fs::is_directory(p)) {
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.is_regular_file() && supported_input(e.path())) found.insert(e.path());
      }
    } else if (fs::is_regular_file(p)) {
      if (!supported_input(p)) fail(ErrorKind::kFormat, p.string() + ": unsupported extension (edf, csv, msr)");
      found.insert(p);
    } else {
      fail(ErrorKind::kIo, "input '" + pattern + "' does not exist");
    }
  }
  if (found.empty()) fail(ErrorKind::kIo, "no input recordings found");
  std::vector<fs::path> out(found.begin(), found.end());
  std::set<std::string> stems;
  for (const auto& path : out) {
    if (!stems.insert(path.stem().string()).second) {
      fail(ErrorKind::kConfig, "two inputs share the recording id '" + path.stem().string() + "'");
    }
  }
  return out;
}

inline fs::path label_sidecar(const fs::path& p) {
  fs::path s = p;
  s.replace_extension(".labels");
  return s;
}

inline Recording load_recording(const fs::path& path, const PipelineConfig& cfg) {
  const std::string ext = lowercase(path.extension().string());
  Recording rec;
  if (ext == ".edf") {
    rec = read_edf(path);
  } else if (ext == ".csv") {
    if (!(cfg.csv_fs > 0.0)) fail(ErrorKind::kConfig, "csv input requires csv_fs in the config");
    rec = read_csv_recording(path, cfg.csv_fs);
  } else if (ext == ".msr") {
    rec = read_raw(path);
  } else {
    fail(ErrorKind::kFormat, "unsupported extension '" + ext + "'");
  }
  if (ext != ".msr") {
    const fs::path side = label_sidecar(path);
    if (fs::exists(side)) {
      rec.labels = parse_label_lines(read_file(side));
      rec.label_rate = cfg.label_rate;
    }
  }
  validate(rec);
  require_finite(rec);
  return rec;
}

// Channel selection, optional average reference, bandpass and resampling.
inline MultichannelSignal preprocess(const Recording& rec, const PipelineConfig& cfg,
                                     const std::vector<std::string>& channels) {
  MultichannelSignal sig = select_channels(rec, channels);
  if (cfg.average_reference) sig = average_reference(std::move(sig));
  if (cfg.filter.enabled) sig = bandpass(std::move(sig), cfg.filter.low, cfg.filter.high);
  if (cfg.resample.enabled) sig = resample(std::move(sig), cfg.resample.target_fs);
  return sig;
}

struct PreparedRecording {
  std::string id;
  MultichannelSignal signal;
};

inline PreparedRecording prepare(const fs::path& path, const PipelineConfig& cfg,
                                 const std::vector<std::string>& channels) {
  PreparedRecording out;
  out.id = path.stem().string();
  const Recording rec = run_stage("ingest " + path.string(), [&] { return load_recording(path, cfg); });
  out.signal = run_stage("prep " + path.string(), [&] { return preprocess(rec, cfg, channels); });
  return out;
}

// Runs fn(i) for i in [0, n) on up to `threads` workers. Results must be
// written to per-index slots; the first failure by index is rethrown.
inline void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  std::vector<std::exception_ptr> errors(n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
        break;
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n && !stop; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
            stop = true;
          }
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

inline std::string group_of(const std::string& id, std::size_t position, const StatsConfig& stats) {
  if (stats.groups == 0) return id;
  return "group" + std::to_string(position % stats.groups);
}

inline void write_json(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

// ---------------------------------------------------------------- fit

struct FitSummary {
  Codebook codebook;
  FitResult result;
  std::size_t n_peaks = 0;
  std::size_t n_recordings = 0;
};

inline FitSummary fit_codebook(const PipelineConfig& cfg) {
  cfg.validate();
  const auto inputs = run_stage("ingest", [&] { return discover_inputs(cfg.inputs); });
  std::vector<MatrixD> peak_maps(inputs.size());
  std::vector<double> rates(inputs.size());
  parallel_for(inputs.size(), cfg.threads, [&](std::size_t i) {
    PreparedRecording prep = prepare(inputs[i], cfg, cfg.channels);
    rates[i] = prep.signal.fs;
    peak_maps[i] = run_stage("gfp " + inputs[i].string(), [&] {
      const auto peaks = gfp_peaks(gfp_series(prep.signal));
      return extract_peak_maps(prep.signal, peaks);
    });
  });
  for (std::size_t i = 1; i < rates.size(); ++i) {
    if (rates[i] != rates[0]) {
      fail(ErrorKind::kContract, "fit: recordings arrive at different rates (" + std::to_string(rates[0]) +
                                     " vs " + std::to_string(rates[i]) + " Hz); enable resampling");
    }
  }
  MatrixD points;
  for (const auto& m : peak_maps) {
    for (std::size_t r = 0; r < m.rows(); ++r) points.append_row(m.row(r));
  }
  MatrixBatchSource source(points, cfg.fit.batch_size, cfg.fit_passes, cfg.seed);
  FitConfig fc = cfg.fit;
  fc.seed = cfg.seed;
  FitResult res = run_stage("cluster", [&] { return streaming_fit(source, fc); });
  CodebookMeta meta;
  meta.fit_fs = rates.empty() ? 0.0 : rates[0];
  meta.filtered = cfg.filter.enabled;
  meta.filter_low = cfg.filter.enabled ? cfg.filter.low : 0.0;
  meta.filter_high = cfg.filter.enabled ? cfg.filter.high : 0.0;
  meta.average_reference = cfg.average_reference;
  Codebook cb = run_stage("cluster", [&] { return to_codebook(res, fc, cfg.channels, meta); });
  return {std::move(cb), std::move(res), points.rows(), inputs.size()};
}

inline void cmd_fit(const PipelineConfig& cfg) {
  FitSummary s = fit_codebook(cfg);
  const fs::path out(cfg.out);
  fs::create_directories(out);
  write_codebook(s.codebook, out / "codebook.mstcb");
  json report;
  report["k"] = cfg.fit.k;
  report["mode"] = to_string(cfg.fit.mode);
  report["seed"] = cfg.seed;
  report["recordings"] = s.n_recordings;
  report["gfp_peaks"] = s.n_peaks;
  report["fit_fs"] = s.codebook.meta().fit_fs;
  report["iterations"] = s.result.iterations;
  report["final_shift"] = s.result.final_shift;
  report["converged"] = s.result.converged;
  report["batch_inertia"] = s.result.batch_inertia;
  report["shift_trace"] = s.result.shift_trace;
  write_json(out / "fit_report.json", report);
  write_json(out / "fit_config.json", config_to_json(cfg));
}

// ---------------------------------------------------------------- tokenize

inline void cmd_tokenize(const PipelineConfig& cfg, const fs::path& codebook_path) {
  cfg.validate();
  const Codebook cb = run_stage("codebook", [&] { return read_codebook(codebook_path); });
  const auto inputs = run_stage("ingest", [&] { return discover_inputs(cfg.inputs); });
  const fs::path dir = fs::path(cfg.out) / "tokens";
  fs::create_directories(dir);
  DatasetIndex index{"tokens", std::vector<IndexEntry>(inputs.size())};
  parallel_for(inputs.size(), cfg.threads, [&](std::size_t i) {
    PreparedRecording prep = prepare(inputs[i], cfg, cb.channel_names());
    const std::string where = "tokenize " + inputs[i].string();
    if (cb.meta().fit_fs > 0.0 && prep.signal.fs != cb.meta().fit_fs) {
      fail(ErrorKind::kContract, where + ": signal at " + std::to_string(prep.signal.fs) +
                                     " Hz but the codebook was fitted at " + std::to_string(cb.meta().fit_fs) +
                                     " Hz");
    }
    TokenDataset ds;
    ds.recording = prep.id;
    ds.group = group_of(prep.id, i, cfg.stats);
    ds.k = cb.k();
    ds.fs = prep.signal.fs;
    ds.label_rate = prep.signal.has_labels() ? prep.signal.label_rate : 0.0;
    ds.window_s = cfg.window_s;
    run_stage(where, [&] {
      const TokenSequence seq = tokenize(cb, prep.signal);
      ds.windows = slice_windows(seq.tokens, prep.signal.labels, seq.fs, ds.label_rate, cfg.window_s, ds.group);
    });
    const std::string text = serialize_token_dataset(ds);
    // Validator subpass: the written form must decode to the same windows
    // and hold only ids below k.
    const TokenDataset back = parse_token_dataset(text);
    try {
      validate_token_dataset(back);
    } catch (const Error& e) {
      fail(ErrorKind::kInternal, where + ": validator: " + e.detail());
    }
    if (back.windows.size() != ds.windows.size()) fail(ErrorKind::kInternal, where + ": validator: window count");
    for (std::size_t w = 0; w < ds.windows.size(); ++w) {
      if (back.windows[w].tokens != ds.windows[w].tokens || back.windows[w].labels != ds.windows[w].labels) {
        fail(ErrorKind::kInternal, where + ": validator: window " + std::to_string(w) + " does not roundtrip");
      }
    }
    const std::string file = prep.id + ".mstok";
    write_file_atomic(dir / file, text);
    index.entries[i] = {ds.recording, ds.group, file, ds.windows.size()};
  });
  write_file_atomic(dir / "index.tsv", serialize_index(index));
}

// ---------------------------------------------------------------- features

inline FeatureDataset features_for(const PreparedRecording& prep, const PipelineConfig& cfg, const std::string& group) {
  FeatureDataset ds;
  ds.recording = prep.id;
  ds.group = group;
  for (const auto& b : cfg.bands) ds.bands.push_back(b.name);
  ds.fs = prep.signal.fs;
  ds.label_rate = prep.signal.has_labels() ? prep.signal.label_rate : 0.0;
  ds.window_s = cfg.window_s;
  ds.stft_window_s = cfg.stft.window_s;
  ds.overlap = cfg.stft.overlap;
  ds.scaling = detail::to_string(cfg.stft.scaling);
  const auto spans = plan_windows(prep.signal.n_samples(), prep.signal.labels, prep.signal.fs, ds.label_rate,
                                  cfg.window_s);
  for (const auto& span : spans) {
    MultichannelSignal win;
    win.fs = prep.signal.fs;
    win.channel_names = prep.signal.channel_names;
    win.data = MatrixD(prep.signal.n_channels(), span.stop - span.start);
    for (std::size_t c = 0; c < win.data.rows(); ++c) {
      const auto src = prep.signal.data.row(c).subspan(span.start, span.stop - span.start);
      std::copy(src.begin(), src.end(), win.data.row(c).begin());
    }
    FeatureWindow fw;
    fw.window_index = span.window_index;
    fw.labels = span.labels;
    fw.features = frequency_features(win, cfg.stft.window_s, cfg.stft.overlap, cfg.bands, cfg.stft.scaling);
    ds.frames = fw.features.cols() / cfg.bands.size();
    ds.windows.push_back(std::move(fw));
  }
  return ds;
}

inline void cmd_features(const PipelineConfig& cfg) {
  cfg.validate();
  const auto inputs = run_stage("ingest", [&] { return discover_inputs(cfg.inputs); });
  const fs::path dir = fs::path(cfg.out) / "features";
  fs::create_directories(dir);
  DatasetIndex index{"features", std::vector<IndexEntry>(inputs.size())};
  parallel_for(inputs.size(), cfg.threads, [&](std::size_t i) {
    PreparedRecording prep = prepare(inputs[i], cfg, cfg.channels);
    const std::string group = group_of(prep.id, i, cfg.stats);
    FeatureDataset ds = run_stage("features " + inputs[i].string(), [&] { return features_for(prep, cfg, group); });
    const std::string file = prep.id + ".msfeat";
    write_file_atomic(dir / file, serialize_feature_dataset(ds));
    index.entries[i] = {ds.recording, ds.group, file, ds.windows.size()};
  });
  write_file_atomic(dir / "index.tsv", serialize_index(index));
}

// ---------------------------------------------------------------- eval

// One row per labelled epoch.
struct EpochTable {
  MatrixD x;
  std::vector<int> labels;
  std::vector<std::string> recordings;
};

inline void add_token_epochs(const TokenDataset& ds, EpochTable& t) {
  for (const auto& w : ds.windows) {
    if (w.labels.empty()) continue;
    const std::size_t span = w.tokens.size() / w.labels.size();
    for (std::size_t e = 0; e < w.labels.size(); ++e) {
      const std::span<const TokenId> tokens(w.tokens.data() + e * span, span);
      t.x.append_row(microstate_histogram(tokens, ds.k));
      t.labels.push_back(w.labels[e]);
      t.recordings.push_back(ds.recording);
    }
  }
}

// Mean band power over the frames of each epoch, one value per channel and
// band.
inline void add_feature_epochs(const FeatureDataset& ds, EpochTable& t) {
  const std::size_t n_bands = ds.bands.size();
  for (const auto& w : ds.windows) {
    if (w.labels.empty()) continue;
    const std::size_t frames_per = ds.frames / w.labels.size();
    if (frames_per == 0) fail(ErrorKind::kAlignment, ds.recording + ": fewer STFT frames than labels in a window");
    for (std::size_t e = 0; e < w.labels.size(); ++e) {
      std::vector<double> row;
      for (std::size_t c = 0; c < w.features.rows(); ++c) {
        for (std::size_t b = 0; b < n_bands; ++b) {
          double acc = 0.0;
          for (std::size_t f = e * frames_per; f < (e + 1) * frames_per; ++f) acc += w.features(c, b * ds.frames + f);
          row.push_back(acc / static_cast<double>(frames_per));
        }
      }
      t.x.append_row(row);
      t.labels.push_back(w.labels[e]);
      t.recordings.push_back(ds.recording);
    }
  }
}

inline EpochTable load_epochs(const fs::path& dataset_dir, std::string* kind = nullptr) {
  const DatasetIndex index = run_stage("dataset", [&] { return parse_index(read_file(dataset_dir / "index.tsv")); });
  if (kind) *kind = index.kind;
  EpochTable t;
  for (const auto& e : index.entries) {
    run_stage("dataset " + e.file, [&] {
      const std::string text = read_file(dataset_dir / e.file);
      if (index.kind == "tokens") {
        const TokenDataset ds = parse_token_dataset(text);
        validate_token_dataset(ds);
        add_token_epochs(ds, t);
      } else {
        add_feature_epochs(parse_feature_dataset(text), t);
      }
    });
  }
  if (t.labels.empty()) fail(ErrorKind::kData, "dataset holds no labelled epochs");
  return t;
}

inline json metrics_json(const Metrics& m) {
  json j;
  j["n"] = m.n;
  j["accuracy"] = m.accuracy;
  j["kappa"] = m.kappa;
  j["kappa_degenerate"] = m.kappa_degenerate;
  json conf = json::array();
  for (std::size_t r = 0; r < m.confusion.rows(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < m.confusion.cols(); ++c) row.push_back(m.confusion(r, c));
    conf.push_back(row);
  }
  j["confusion"] = conf;
  json recall = json::array();
  for (double v : m.recall) recall.push_back(std::isnan(v) ? json(nullptr) : json(v));
  j["recall"] = recall;
  return j;
}

struct EvalReport {
  std::vector<int> classes;
  Metrics validation;
  Metrics test;
  double final_train_loss = 0.0;
  std::size_t train_epochs = 0;
  json to_json() const;
};

inline json EvalReport::to_json() const {
  json j;
  json cls = json::array();
  for (int c : classes) cls.push_back({{"label", c}, {"name", stage_name(c)}});
  j["classes"] = cls;
  j["train_samples"] = train_epochs;
  j["final_train_loss"] = final_train_loss;
  j["validation"] = metrics_json(validation);
  j["test"] = metrics_json(test);
  return j;
}

inline EvalReport evaluate_epochs(const EpochTable& t, const PipelineConfig& cfg) {
  std::vector<int> classes(t.labels.begin(), t.labels.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  std::map<int, int> class_of;
  for (std::size_t i = 0; i < classes.size(); ++i) class_of[classes[i]] = static_cast<int>(i);
  if (classes.size() < 2) fail(ErrorKind::kData, "eval needs at least two distinct labels");

  const auto split = split_recordings(t.recordings, cfg.seed);
  MatrixD x[3];
  std::vector<int> y[3];
  for (std::size_t i = 0; i < t.labels.size(); ++i) {
    const auto s = static_cast<std::size_t>(split.at(t.recordings[i]));
    x[s].append_row(t.x.row(i));
    y[s].push_back(class_of[t.labels[i]]);
  }
  const auto train = static_cast<std::size_t>(Split::kTrain);
  const auto val = static_cast<std::size_t>(Split::kValidation);
  const auto test = static_cast<std::size_t>(Split::kTest);
  if (y[train].empty()) fail(ErrorKind::kData, "training split is empty");
  if (y[test].empty()) fail(ErrorKind::kData, "test split is empty (need more recordings)");

  const Standardizer z = Standardizer::fit(x[train]);
  const TrainResult tr = train_softmax(z.transform(x[train]), y[train], classes.size(), cfg.train);
  EvalReport rep;
  rep.classes = classes;
  rep.train_epochs = y[train].size();
  rep.final_train_loss = tr.loss_trace.empty() ? 0.0 : tr.loss_trace.back();
  if (!y[val].empty()) rep.validation = evaluate(tr.model, z.transform(x[val]), y[val]);
  rep.test = evaluate(tr.model, z.transform(x[test]), y[test]);
  return rep;
}

inline EvalReport cmd_eval(const PipelineConfig& cfg, const fs::path& dataset_dir) {
  cfg.validate();
  std::string kind;
  const EpochTable t = load_epochs(dataset_dir, &kind);
  EvalReport rep = run_stage("eval", [&] { return evaluate_epochs(t, cfg); });
  fs::create_directories(cfg.out);
  json j = rep.to_json();
  j["dataset"] = kind;
  write_json(fs::path(cfg.out) / "metrics.json", j);
  return rep;
}

// ---------------------------------------------------------------- stats

inline std::string cmd_stats(const PipelineConfig& cfg, const fs::path& dataset_dir) {
  cfg.validate();
  const DatasetIndex index = run_stage("dataset", [&] { return parse_index(read_file(dataset_dir / "index.tsv")); });
  if (index.kind != "tokens") fail(ErrorKind::kContract, "stats needs a token dataset, got " + index.kind);
  std::vector<LabeledWindow> windows;
  std::size_t k = 0;
  for (const auto& e : index.entries) {
    const TokenDataset ds = run_stage("dataset " + e.file, [&] {
      TokenDataset d = parse_token_dataset(read_file(dataset_dir / e.file));
      validate_token_dataset(d);
      return d;
    });
    if (k != 0 && ds.k != k) fail(ErrorKind::kContract, "token files disagree on k");
    k = ds.k;
    for (auto w : ds.windows) {
      w.subject_id = e.group;
      windows.push_back(std::move(w));
    }
  }
  const std::string text = format_rank_tables(rank_microstates(windows, k), cfg.stats.max_rows);
  fs::create_directories(cfg.out);
  write_file_atomic(fs::path(cfg.out) / "rank_tables.txt", text);
  return text;
}

// ---------------------------------------------------------------- synth

struct SynthCorpusSpec {
  std::size_t n_wake = 30;
  std::size_t n_deep = 30;
  double duration_s = 300.0;
  double fs = 100.0;
  std::size_t channels = 6;
  std::string format = "msr";  // msr | csv | edf
  std::uint64_t seed = 0;
};

// Writes synth_W_<i> and synth_N3_<i> recordings; csv and edf outputs carry
// a .labels sidecar.
inline std::vector<fs::path> cmd_synth(const SynthCorpusSpec& spec, const fs::path& out) {
  if (spec.format != "msr" && spec.format != "csv" && spec.format != "edf") {
    fail(ErrorKind::kConfig, "unknown synth format '" + spec.format + "' (expected msr|csv|edf)");
  }
  fs::create_directories(out);
  CounterRng seeds(spec.seed, 4);
  std::vector<fs::path> written;
  auto emit = [&](SynthStage stage, std::size_t i) {
    SynthSpec s;
    s.stage = stage;
    s.duration_s = spec.duration_s;
    s.fs = spec.fs;
    s.channels = spec.channels;
    s.seed = seeds.next_u64();
    const Recording rec = generate(s);
    char name[64];
    std::snprintf(name, sizeof name, "synth_%s_%03zu.%s", stage == SynthStage::kWake ? "W" : "N3", i,
                  spec.format.c_str());
    const fs::path path = out / name;
    if (spec.format == "msr") {
      write_raw(rec, path);
    } else {
      if (spec.format == "csv") {
        write_file_atomic(path, format_csv_recording(rec));
      } else {
        write_edf(rec, path);
      }
      std::string labels;
      for (int l : rec.labels) labels += std::to_string(l) + "\n";
      write_file_atomic(label_sidecar(path), labels);
    }
    written.push_back(path);
  };
  for (std::size_t i = 0; i < spec.n_wake; ++i) emit(SynthStage::kWake, i);
  for (std::size_t i = 0; i < spec.n_deep; ++i) emit(SynthStage::kDeepSleep, i);
  return written;
}

}  // namespace msteeg
