#pragma once

// On-disk windowed datasets, one text file per recording plus an index.
//
// Token file (.mstok):
//   line 1   "#mstok 1"
//   line 2   JSON metadata: recording, group, k, pad_id, fs, label_rate, window_s
//   then one record per window:
//            <window_index> TAB <labels> TAB <tokens>
//   labels are comma-separated ids ("" when unlabeled); tokens are
//   comma-separated ids where a run of r >= 2 equal ids is written "id*r".
//
// Feature file (.msfeat):
//   line 1   "#msfeat 1"
//   line 2   JSON metadata: recording, group, rows, cols, bands, frames,
//            fs, label_rate, window_s, stft_window_s, overlap, scaling
//   records  <window_index> TAB <labels> TAB <rows*cols values, row-major>
//
// Index (index.tsv):
//   line 1   "#msidx 1 <kind>"   kind = tokens | features
//   line 2   "recording<TAB>group<TAB>file<TAB>windows"
//   then one line per recording.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "msteeg/core.hpp"
#include "msteeg/io.hpp"
#include "msteeg/spectral.hpp"
#include "msteeg/tokenize.hpp"

namespace msteeg {

struct TokenDataset {
  std::string recording;
  std::string group;
  std::size_t k = 0;
  double fs = 0.0;
  double label_rate = 0.0;
  double window_s = 0.0;
  std::vector<LabeledWindow> windows;

  TokenId pad_id() const { return static_cast<TokenId>(k); }
};

struct FeatureWindow {
  std::size_t window_index = 0;
  std::vector<int> labels;
  MatrixD features;  // channels x (bands * frames), band-major per row
};

struct FeatureDataset {
  std::string recording;
  std::string group;
  std::vector<std::string> bands;
  std::size_t frames = 0;
  double fs = 0.0;
  double label_rate = 0.0;
  double window_s = 0.0;
  double stft_window_s = 1.0;
  double overlap = 0.0;
  std::string scaling = "angular";
  std::vector<FeatureWindow> windows;
};

namespace detail {

inline std::string join_labels(const std::vector<int>& labels) {
  std::string out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(labels[i]);
  }
  return out;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream ss(s);
  while (std::getline(ss, cur, sep)) parts.push_back(cur);
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

template <typename T>
T parse_int(const std::string& s, const std::string& where) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    fail(ErrorKind::kParse, where + ": '" + s + "' is not an integer");
  }
  return v;
}

inline std::vector<int> parse_labels(const std::string& s, const std::string& where) {
  std::vector<int> out;
  if (s.empty()) return out;
  for (const auto& part : split(s, ',')) out.push_back(parse_int<int>(part, where));
  return out;
}

inline std::vector<std::string> data_lines(const std::string& text, const std::string& magic,
                                           nlohmann::json& meta, const std::string& what) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != magic) fail(ErrorKind::kFormat, what + ": missing '" + magic + "' header");
  if (!std::getline(in, line)) fail(ErrorKind::kTruncation, what + ": missing metadata line");
  try {
    meta = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, what + ": bad metadata: " + e.what());
  }
  std::vector<std::string> lines;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace detail

inline std::string encode_tokens(const std::vector<TokenId>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size();) {
    std::size_t j = i + 1;
    while (j < tokens.size() && tokens[j] == tokens[i]) ++j;
    if (i) out += ',';
    out += std::to_string(tokens[i]);
    if (j - i >= 2) {
      out += '*';
      out += std::to_string(j - i);
    }
    i = j;
  }
  return out;
}

inline std::vector<TokenId> decode_tokens(const std::string& s, const std::string& where = "tokens") {
  std::vector<TokenId> out;
  if (s.empty()) return out;
  for (const auto& item : detail::split(s, ',')) {
    const auto star = item.find('*');
    if (star == std::string::npos) {
      out.push_back(detail::parse_int<TokenId>(item, where));
    } else {
      const auto id = detail::parse_int<TokenId>(item.substr(0, star), where);
      const auto run = detail::parse_int<std::size_t>(item.substr(star + 1), where);
      out.insert(out.end(), run, id);
    }
  }
  return out;
}

inline std::string serialize_token_dataset(const TokenDataset& ds) {
  nlohmann::json meta;
  meta["recording"] = ds.recording;
  meta["group"] = ds.group;
  meta["k"] = ds.k;
  meta["pad_id"] = ds.pad_id();
  meta["fs"] = ds.fs;
  meta["label_rate"] = ds.label_rate;
  meta["window_s"] = ds.window_s;
  std::string out = "#mstok 1\n" + meta.dump() + "\n";
  for (const auto& w : ds.windows) {
    out += std::to_string(w.window_index);
    out += '\t';
    out += detail::join_labels(w.labels);
    out += '\t';
    out += encode_tokens(w.tokens);
    out += '\n';
  }
  return out;
}

inline TokenDataset parse_token_dataset(const std::string& text) {
  nlohmann::json meta;
  const auto lines = detail::data_lines(text, "#mstok 1", meta, "token dataset");
  TokenDataset ds;
  try {
    ds.recording = meta.at("recording").get<std::string>();
    ds.group = meta.at("group").get<std::string>();
    ds.k = meta.at("k").get<std::size_t>();
    ds.fs = meta.at("fs").get<double>();
    ds.label_rate = meta.at("label_rate").get<double>();
    ds.window_s = meta.at("window_s").get<double>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, std::string("token dataset metadata: ") + e.what());
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string where = "token dataset record " + std::to_string(i);
    const auto fields = detail::split(lines[i], '\t');
    if (fields.size() != 3) fail(ErrorKind::kParse, where + ": expected 3 tab-separated fields");
    LabeledWindow w;
    w.window_index = detail::parse_int<std::size_t>(fields[0], where);
    w.labels = detail::parse_labels(fields[1], where);
    w.tokens = decode_tokens(fields[2], where);
    w.subject_id = ds.group;
    ds.windows.push_back(std::move(w));
  }
  return ds;
}

// Every token must be a microstate id below k or the padding id k.
inline void validate_token_dataset(const TokenDataset& ds) {
  for (const auto& w : ds.windows) {
    for (TokenId t : w.tokens) {
      if (t > ds.k) {
        fail(ErrorKind::kRange, "recording " + ds.recording + " window " + std::to_string(w.window_index) +
                                    " holds token " + std::to_string(t) + " >= k=" + std::to_string(ds.k));
      }
    }
  }
}

inline std::string serialize_feature_dataset(const FeatureDataset& ds) {
  nlohmann::json meta;
  meta["recording"] = ds.recording;
  meta["group"] = ds.group;
  const std::size_t rows = ds.windows.empty() ? 0 : ds.windows.front().features.rows();
  const std::size_t cols = ds.windows.empty() ? 0 : ds.windows.front().features.cols();
  meta["rows"] = rows;
  meta["cols"] = cols;
  meta["bands"] = ds.bands;
  meta["frames"] = ds.frames;
  meta["fs"] = ds.fs;
  meta["label_rate"] = ds.label_rate;
  meta["window_s"] = ds.window_s;
  meta["stft_window_s"] = ds.stft_window_s;
  meta["overlap"] = ds.overlap;
  meta["scaling"] = ds.scaling;
  std::string out = "#msfeat 1\n" + meta.dump() + "\n";
  char buf[40];
  for (const auto& w : ds.windows) {
    out += std::to_string(w.window_index);
    out += '\t';
    out += detail::join_labels(w.labels);
    out += '\t';
    bool first = true;
    for (double v : w.features.values()) {
      if (!first) out += ',';
      first = false;
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

inline FeatureDataset parse_feature_dataset(const std::string& text) {
  nlohmann::json meta;
  const auto lines = detail::data_lines(text, "#msfeat 1", meta, "feature dataset");
  FeatureDataset ds;
  std::size_t rows = 0, cols = 0;
  try {
    ds.recording = meta.at("recording").get<std::string>();
    ds.group = meta.at("group").get<std::string>();
    rows = meta.at("rows").get<std::size_t>();
    cols = meta.at("cols").get<std::size_t>();
    ds.bands = meta.at("bands").get<std::vector<std::string>>();
    ds.frames = meta.at("frames").get<std::size_t>();
    ds.fs = meta.at("fs").get<double>();
    ds.label_rate = meta.at("label_rate").get<double>();
    ds.window_s = meta.at("window_s").get<double>();
    ds.stft_window_s = meta.at("stft_window_s").get<double>();
    ds.overlap = meta.at("overlap").get<double>();
    ds.scaling = meta.at("scaling").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, std::string("feature dataset metadata: ") + e.what());
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string where = "feature dataset record " + std::to_string(i);
    const auto fields = detail::split(lines[i], '\t');
    if (fields.size() != 3) fail(ErrorKind::kParse, where + ": expected 3 tab-separated fields");
    FeatureWindow w;
    w.window_index = detail::parse_int<std::size_t>(fields[0], where);
    w.labels = detail::parse_labels(fields[1], where);
    const auto values = detail::split(fields[2], ',');
    if (values.size() != rows * cols) {
      fail(ErrorKind::kTruncation, where + ": expected " + std::to_string(rows * cols) + " values, got " +
                                       std::to_string(values.size()));
    }
    w.features = MatrixD(rows, cols);
    for (std::size_t j = 0; j < values.size(); ++j) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(values[j].data(), values[j].data() + values[j].size(), v);
      if (ec != std::errc() || ptr != values[j].data() + values[j].size()) {
        fail(ErrorKind::kParse, where + ": value " + std::to_string(j) + " is not a number");
      }
      w.features.values()[j] = v;
    }
    ds.windows.push_back(std::move(w));
  }
  return ds;
}

struct IndexEntry {
  std::string recording;
  std::string group;
  std::string file;
  std::size_t windows = 0;
};

struct DatasetIndex {
  std::string kind;  // tokens | features
  std::vector<IndexEntry> entries;
};

inline std::string serialize_index(const DatasetIndex& idx) {
  std::string out = "#msidx 1 " + idx.kind + "\nrecording\tgroup\tfile\twindows\n";
  for (const auto& e : idx.entries) {
    out += e.recording + '\t' + e.group + '\t' + e.file + '\t' + std::to_string(e.windows) + '\n';
  }
  return out;
}

inline DatasetIndex parse_index(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  DatasetIndex idx;
  if (!std::getline(in, line) || line.rfind("#msidx 1 ", 0) != 0) {
    fail(ErrorKind::kFormat, "dataset index: missing '#msidx 1' header");
  }
  idx.kind = line.substr(9);
  if (idx.kind != "tokens" && idx.kind != "features") {
    fail(ErrorKind::kFormat, "dataset index: unknown kind '" + idx.kind + "'");
  }
  std::getline(in, line);  // column header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split(line, '\t');
    if (f.size() != 4) fail(ErrorKind::kParse, "dataset index: expected 4 columns in '" + line + "'");
    idx.entries.push_back({f[0], f[1], f[2], detail::parse_int<std::size_t>(f[3], "dataset index")});
  }
  return idx;
}

}  // namespace msteeg
