#pragma once

// Recording and codebook persistence: a continuous-EDF subset, CSV grids, a
// raw float32 container, and the codebook file.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "msteeg/codebook.hpp"
#include "msteeg/core.hpp"
#include "msteeg/recording.hpp"

namespace msteeg {

namespace fs = std::filesystem;

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes to a sibling temp file and renames it into place.
inline void write_file_atomic(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::kIo, "cannot write '" + tmp.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::kIo, "short write to '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// EDF

struct EdfSignal {
  std::string label;
  std::string physical_dimension;
  double physical_min = 0.0;
  double physical_max = 0.0;
  int digital_min = 0;
  int digital_max = 0;
  std::size_t samples_per_record = 0;
  std::vector<std::int16_t> digital;

  double gain() const {
    return (physical_max - physical_min) / static_cast<double>(digital_max - digital_min);
  }
  double to_physical(std::int16_t d) const {
    return (static_cast<double>(d) - digital_min) * gain() + physical_min;
  }
  bool is_annotation() const { return trim(label) == "EDF Annotations"; }
};

struct EdfFile {
  std::size_t n_records = 0;
  double record_duration = 0.0;
  std::vector<EdfSignal> signals;

  double sample_rate(const EdfSignal& s) const {
    return static_cast<double>(s.samples_per_record) / record_duration;
  }
};

namespace detail {

inline std::string edf_field(const std::string& bytes, std::size_t offset, std::size_t len) {
  return trim(std::string_view(bytes).substr(offset, len));
}

template <typename T>
T edf_number(const std::string& bytes, std::size_t offset, std::size_t len, const char* what) {
  const std::string field = edf_field(bytes, offset, len);
  for (unsigned char c : std::string_view(bytes).substr(offset, len)) {
    if (c < 0x20 || c > 0x7E) {
      fail(ErrorKind::kParse, std::string("non-ASCII byte in EDF ") + what + " at offset " +
                                  std::to_string(offset));
    }
  }
  T value{};
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (field.empty() || ec != std::errc() || ptr != last) {
    fail(ErrorKind::kParse, std::string("EDF ") + what + " '" + field +
                                "' is not numeric (byte offset " + std::to_string(offset) + ")");
  }
  return value;
}

}  // namespace detail

inline EdfFile parse_edf(const std::string& bytes) {
  if (bytes.size() < 256) {
    fail(ErrorKind::kTruncation, "EDF header needs 256 bytes, got " + std::to_string(bytes.size()));
  }
  EdfFile edf;
  const auto n_records = detail::edf_number<long>(bytes, 236, 8, "number of records");
  edf.record_duration = detail::edf_number<double>(bytes, 244, 8, "record duration");
  const auto ns_long = detail::edf_number<long>(bytes, 252, 4, "signal count");
  if (ns_long <= 0) fail(ErrorKind::kParse, "EDF declares no signals (byte offset 252)");
  if (!(edf.record_duration > 0.0)) {
    fail(ErrorKind::kParse, "EDF record duration must be positive (byte offset 244)");
  }
  const auto ns = static_cast<std::size_t>(ns_long);
  const std::size_t header_bytes = 256 + 256 * ns;
  if (bytes.size() < header_bytes) {
    fail(ErrorKind::kTruncation, "EDF signal headers need " + std::to_string(header_bytes) +
                                     " bytes, got " + std::to_string(bytes.size()));
  }

  edf.signals.resize(ns);
  std::size_t record_bytes = 0;
  for (std::size_t i = 0; i < ns; ++i) {
    EdfSignal& s = edf.signals[i];
    s.label = detail::edf_field(bytes, 256 + i * 16, 16);
    s.physical_dimension = detail::edf_field(bytes, 256 + ns * 96 + i * 8, 8);
    s.physical_min = detail::edf_number<double>(bytes, 256 + ns * 104 + i * 8, 8, "physical minimum");
    s.physical_max = detail::edf_number<double>(bytes, 256 + ns * 112 + i * 8, 8, "physical maximum");
    s.digital_min = detail::edf_number<int>(bytes, 256 + ns * 120 + i * 8, 8, "digital minimum");
    s.digital_max = detail::edf_number<int>(bytes, 256 + ns * 128 + i * 8, 8, "digital maximum");
    const auto spr = detail::edf_number<long>(bytes, 256 + ns * 216 + i * 8, 8, "samples per record");
    if (spr <= 0) {
      fail(ErrorKind::kParse, "EDF samples per record must be positive (byte offset " +
                                  std::to_string(256 + ns * 216 + i * 8) + ")");
    }
    s.samples_per_record = static_cast<std::size_t>(spr);
    if (!s.is_annotation() && s.digital_max == s.digital_min) {
      fail(ErrorKind::kCalibration, "signal '" + s.label + "' has digital_min == digital_max");
    }
    record_bytes += s.samples_per_record * 2;
  }

  const std::size_t available = bytes.size() - header_bytes;
  if (n_records < 0) {
    // -1 means "unknown" while a file is still being written.
    edf.n_records = available / record_bytes;
  } else {
    edf.n_records = static_cast<std::size_t>(n_records);
  }
  const std::size_t expected = edf.n_records * record_bytes;
  if (available < expected) {
    fail(ErrorKind::kTruncation, "EDF data section expected " + std::to_string(expected) +
                                     " bytes, got " + std::to_string(available));
  }

  for (auto& s : edf.signals) s.digital.reserve(s.samples_per_record * edf.n_records);
  const char* p = bytes.data() + header_bytes;
  for (std::size_t r = 0; r < edf.n_records; ++r) {
    for (auto& s : edf.signals) {
      for (std::size_t j = 0; j < s.samples_per_record; ++j, p += 2) {
        const auto lo = static_cast<std::uint16_t>(static_cast<unsigned char>(p[0]));
        const auto hi = static_cast<std::uint16_t>(static_cast<unsigned char>(p[1]));
        s.digital.push_back(static_cast<std::int16_t>(static_cast<std::uint16_t>(lo | (hi << 8))));
      }
    }
  }
  return edf;
}

// Converts the data signals of an EDF file to a Recording. Annotation signals
// are skipped. A Recording has a single sampling rate, so only signals at the
// most common rate are kept (ties go to the higher rate).
inline Recording edf_to_recording(const EdfFile& edf) {
  std::map<double, std::size_t> rate_counts;
  for (const auto& s : edf.signals) {
    if (!s.is_annotation()) ++rate_counts[edf.sample_rate(s)];
  }
  if (rate_counts.empty()) fail(ErrorKind::kData, "EDF file has no data signals");
  double fs = 0.0;
  std::size_t best = 0;
  for (const auto& [rate, count] : rate_counts) {
    if (count >= best) {
      best = count;
      fs = rate;
    }
  }

  Recording rec;
  rec.fs = fs;
  std::vector<const EdfSignal*> kept;
  for (const auto& s : edf.signals) {
    if (!s.is_annotation() && edf.sample_rate(s) == fs) kept.push_back(&s);
  }
  const std::size_t n = kept.front()->digital.size();
  rec.data = MatrixD(kept.size(), n);
  for (std::size_t c = 0; c < kept.size(); ++c) {
    rec.channel_names.push_back(kept[c]->label);
    auto row = rec.data.row(c);
    for (std::size_t j = 0; j < n; ++j) row[j] = kept[c]->to_physical(kept[c]->digital[j]);
  }
  return rec;
}

inline EdfFile read_edf_file(const fs::path& path) { return parse_edf(read_file(path)); }

inline Recording read_edf(const fs::path& path) { return edf_to_recording(read_edf_file(path)); }

namespace detail {

inline void put_field(std::string& out, std::size_t offset, std::size_t len, const std::string& value) {
  std::string v = value.substr(0, len);
  v.resize(len, ' ');
  out.replace(offset, len, v);
}

inline std::string edf_real(double v) {
  // Shortest representation that fits the 8-character field.
  for (int prec = 8; prec >= 1; --prec) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::string(buf).size() <= 8) return buf;
  }
  fail(ErrorKind::kParameter, "value does not fit an EDF field");
}

}  // namespace detail

// Serializes an EdfFile. Signals must carry n_records * samples_per_record
// digital samples each.
inline std::string serialize_edf(const EdfFile& edf) {
  const std::size_t ns = edf.signals.size();
  std::string out(256 + 256 * ns, ' ');
  detail::put_field(out, 0, 8, "0");
  detail::put_field(out, 8, 80, "X X X X");
  detail::put_field(out, 88, 80, "Startdate X X X X");
  detail::put_field(out, 168, 8, "01.01.00");
  detail::put_field(out, 176, 8, "00.00.00");
  detail::put_field(out, 184, 8, std::to_string(256 + 256 * ns));
  detail::put_field(out, 236, 8, std::to_string(edf.n_records));
  detail::put_field(out, 244, 8, detail::edf_real(edf.record_duration));
  detail::put_field(out, 252, 4, std::to_string(ns));
  for (std::size_t i = 0; i < ns; ++i) {
    const EdfSignal& s = edf.signals[i];
    if (s.digital.size() != s.samples_per_record * edf.n_records) {
      fail(ErrorKind::kShape, "EDF signal '" + s.label + "' sample count does not match records");
    }
    detail::put_field(out, 256 + i * 16, 16, s.label);
    detail::put_field(out, 256 + ns * 96 + i * 8, 8, s.physical_dimension);
    detail::put_field(out, 256 + ns * 104 + i * 8, 8, detail::edf_real(s.physical_min));
    detail::put_field(out, 256 + ns * 112 + i * 8, 8, detail::edf_real(s.physical_max));
    detail::put_field(out, 256 + ns * 120 + i * 8, 8, std::to_string(s.digital_min));
    detail::put_field(out, 256 + ns * 128 + i * 8, 8, std::to_string(s.digital_max));
    detail::put_field(out, 256 + ns * 216 + i * 8, 8, std::to_string(s.samples_per_record));
  }
  out.reserve(out.size() + ns * 2 * edf.n_records * 256);
  for (std::size_t r = 0; r < edf.n_records; ++r) {
    for (const auto& s : edf.signals) {
      for (std::size_t j = 0; j < s.samples_per_record; ++j) {
        const auto v = static_cast<std::uint16_t>(s.digital[r * s.samples_per_record + j]);
        out.push_back(static_cast<char>(v & 0xFF));
        out.push_back(static_cast<char>(v >> 8));
      }
    }
  }
  return out;
}

// Quantizes a recording into 16-bit EDF with one-second records. Requires an
// integral sampling rate; trailing samples short of a full record are dropped.
inline EdfFile recording_to_edf(const Recording& rec) {
  validate(rec);
  const double spr_f = std::round(rec.fs);
  if (std::abs(spr_f - rec.fs) > 1e-9) {
    fail(ErrorKind::kParameter, "EDF export needs an integral sampling rate");
  }
  const auto spr = static_cast<std::size_t>(spr_f);
  EdfFile edf;
  edf.record_duration = 1.0;
  edf.n_records = rec.n_samples() / spr;
  for (std::size_t c = 0; c < rec.n_channels(); ++c) {
    EdfSignal s;
    s.label = rec.channel_names[c];
    s.physical_dimension = "uV";
    s.digital_min = -32768;
    s.digital_max = 32767;
    s.samples_per_record = spr;
    auto row = rec.data.row(c);
    const std::size_t n = edf.n_records * spr;
    double lo = 0.0, hi = 0.0;
    if (n > 0) {
      lo = *std::min_element(row.begin(), row.begin() + static_cast<long>(n));
      hi = *std::max_element(row.begin(), row.begin() + static_cast<long>(n));
    }
    if (hi - lo < 1e-3) {
      lo -= 1.0;
      hi += 1.0;
    }
    // The header stores 8 characters; widen the range to what was written.
    s.physical_min = std::stod(detail::edf_real(std::floor(lo)));
    s.physical_max = std::stod(detail::edf_real(std::ceil(hi)));
    s.digital.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double d = (row[j] - s.physical_min) / s.gain() + s.digital_min;
      s.digital.push_back(static_cast<std::int16_t>(std::clamp(std::round(d), -32768.0, 32767.0)));
    }
    edf.signals.push_back(std::move(s));
  }
  return edf;
}

inline void write_edf(const Recording& rec, const fs::path& path) {
  write_file_atomic(path, serialize_edf(recording_to_edf(rec)));
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace detail

// Parses a numeric grid. If the first row is not numeric it is a channel
// header and columns are channels; otherwise each row is a channel.
// `channel_names`, when given, overrides the header or the default "chN" names.
inline Recording parse_csv_recording(const std::string& text, double fs,
                                     const std::vector<std::string>& channel_names = {}) {
  if (!(fs > 0.0)) fail(ErrorKind::kParameter, "CSV sampling rate must be positive");
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    rows.push_back(detail::split_csv_line(line));
  }
  if (rows.empty()) fail(ErrorKind::kParse, "CSV input is empty");

  std::vector<std::string> header;
  bool column_layout = false;
  {
    double tmp;
    for (const auto& cell : rows.front()) {
      if (!detail::parse_double(cell, tmp)) column_layout = true;
    }
  }
  std::size_t first_data = 0;
  if (column_layout) {
    header = rows.front();
    first_data = 1;
  }
  const std::size_t width = rows.front().size();
  std::vector<std::vector<double>> grid;
  for (std::size_t r = first_data; r < rows.size(); ++r) {
    if (rows[r].size() != width) {
      fail(ErrorKind::kParse, "CSV row " + std::to_string(r) + " has " +
                                  std::to_string(rows[r].size()) + " cells, expected " +
                                  std::to_string(width));
    }
    std::vector<double> values(width);
    for (std::size_t c = 0; c < width; ++c) {
      if (!detail::parse_double(rows[r][c], values[c])) {
        fail(ErrorKind::kParse, "CSV row " + std::to_string(r) + " column " + std::to_string(c) +
                                    ": '" + rows[r][c] + "' is not a number");
      }
      if (!std::isfinite(values[c])) {
        fail(ErrorKind::kValue, "CSV row " + std::to_string(r) + " column " + std::to_string(c) +
                                    " holds a non-finite value");
      }
    }
    grid.push_back(std::move(values));
  }

  Recording rec;
  rec.fs = fs;
  if (column_layout) {
    rec.data = MatrixD(width, grid.size());
    for (std::size_t s = 0; s < grid.size(); ++s)
      for (std::size_t c = 0; c < width; ++c) rec.data(c, s) = grid[s][c];
    rec.channel_names = header;
  } else {
    rec.data = MatrixD(grid.size(), width);
    for (std::size_t c = 0; c < grid.size(); ++c)
      for (std::size_t s = 0; s < width; ++s) rec.data(c, s) = grid[c][s];
    for (std::size_t c = 0; c < grid.size(); ++c) rec.channel_names.push_back("ch" + std::to_string(c));
  }
  if (!channel_names.empty()) {
    if (channel_names.size() != rec.n_channels()) {
      fail(ErrorKind::kShape, "CSV holds " + std::to_string(rec.n_channels()) + " channels but " +
                                  std::to_string(channel_names.size()) + " names were given");
    }
    rec.channel_names = channel_names;
  }
  return rec;
}

inline Recording read_csv_recording(const fs::path& path, double fs,
                                    const std::vector<std::string>& channel_names = {}) {
  return parse_csv_recording(read_file(path), fs, channel_names);
}

// Column layout with a header row; %.9g keeps float32-level precision.
inline std::string format_csv_recording(const Recording& rec) {
  std::string out;
  for (std::size_t c = 0; c < rec.n_channels(); ++c) {
    if (c) out += ',';
    out += rec.channel_names[c];
  }
  out += '\n';
  char buf[32];
  for (std::size_t s = 0; s < rec.n_samples(); ++s) {
    for (std::size_t c = 0; c < rec.n_channels(); ++c) {
      if (c) out += ',';
      std::snprintf(buf, sizeof buf, "%.9g", rec.data(c, s));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

// Label sidecar: one integer label id per line.
inline std::vector<int> parse_label_lines(const std::string& text) {
  std::vector<int> labels;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    int v = 0;
    auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
    if (ec != std::errc() || ptr != line.data() + line.size()) {
      fail(ErrorKind::kParse, "label line " + std::to_string(lineno) + " is not an integer");
    }
    labels.push_back(v);
  }
  return labels;
}

// ---------------------------------------------------------------------------
// Raw container: magic, one JSON metadata line, float32 LE payload C x S.

inline constexpr std::string_view kRawMagic = "MSTRAW1\n";

inline std::string serialize_raw(const Recording& rec) {
  validate(rec);
  nlohmann::json meta;
  meta["channel_names"] = rec.channel_names;
  meta["fs"] = rec.fs;
  meta["n_samples"] = rec.n_samples();
  if (rec.has_labels()) {
    meta["labels"] = rec.labels;
    meta["label_rate"] = rec.label_rate;
  }
  std::string out(kRawMagic);
  out += meta.dump();
  out += '\n';
  out.reserve(out.size() + rec.data.size() * 4);
  for (double v : rec.data.values()) append_f32_le(out, static_cast<float>(v));
  return out;
}

inline Recording parse_raw(const std::string& bytes) {
  if (bytes.compare(0, kRawMagic.size(), kRawMagic) != 0) {
    fail(ErrorKind::kFormat, "not a raw recording container (bad magic)");
  }
  const auto eol = bytes.find('\n', kRawMagic.size());
  if (eol == std::string::npos) fail(ErrorKind::kTruncation, "raw container metadata line is unterminated");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(bytes.substr(kRawMagic.size(), eol - kRawMagic.size()));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, std::string("raw container metadata: ") + e.what());
  }
  Recording rec;
  try {
    rec.channel_names = meta.at("channel_names").get<std::vector<std::string>>();
    rec.fs = meta.at("fs").get<double>();
    const auto n = meta.at("n_samples").get<std::size_t>();
    if (meta.contains("labels")) {
      rec.labels = meta.at("labels").get<std::vector<int>>();
      rec.label_rate = meta.at("label_rate").get<double>();
    }
    rec.data = MatrixD(rec.channel_names.size(), n);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, std::string("raw container metadata: ") + e.what());
  }
  const std::size_t expected = rec.data.size() * 4;
  const std::size_t available = bytes.size() - eol - 1;
  if (available != expected) {
    fail(ErrorKind::kTruncation, "raw container payload expected " + std::to_string(expected) +
                                     " bytes, got " + std::to_string(available));
  }
  const char* p = bytes.data() + eol + 1;
  for (double& v : rec.data.values()) {
    v = read_f32_le(p);
    p += 4;
  }
  validate(rec);
  return rec;
}

inline Recording read_raw(const fs::path& path) { return parse_raw(read_file(path)); }
inline void write_raw(const Recording& rec, const fs::path& path) {
  write_file_atomic(path, serialize_raw(rec));
}

// ---------------------------------------------------------------------------
// Codebook file: magic, one JSON metadata line, float32 LE centroids k x N.

inline constexpr std::string_view kCodebookMagic = "MSTCBK1\n";

inline std::string serialize_codebook(const Codebook& cb) {
  const CodebookMeta& m = cb.meta();
  nlohmann::json meta;
  meta["k"] = cb.k();
  meta["n_channels"] = cb.n_channels();
  meta["channel_names"] = cb.channel_names();
  meta["pad_id"] = cb.pad_id();
  meta["seed"] = m.seed;
  meta["mode"] = to_string(m.mode);
  meta["batch_size"] = m.batch_size;
  meta["max_iter"] = m.max_iter;
  meta["tol"] = m.tol;
  meta["iterations"] = m.iterations;
  meta["final_shift"] = m.final_shift;
  meta["fit_fs"] = m.fit_fs;
  meta["filtered"] = m.filtered;
  meta["filter_low"] = m.filter_low;
  meta["filter_high"] = m.filter_high;
  meta["average_reference"] = m.average_reference;
  std::string out(kCodebookMagic);
  out += meta.dump();
  out += '\n';
  for (double v : cb.centroids().values()) append_f32_le(out, static_cast<float>(v));
  return out;
}

inline Codebook parse_codebook(const std::string& bytes) {
  if (bytes.compare(0, kCodebookMagic.size(), kCodebookMagic) != 0) {
    fail(ErrorKind::kFormat, "not a codebook file (bad magic)");
  }
  const auto eol = bytes.find('\n', kCodebookMagic.size());
  if (eol == std::string::npos) fail(ErrorKind::kTruncation, "codebook metadata line is unterminated");
  std::size_t k = 0, n = 0;
  std::vector<std::string> names;
  CodebookMeta m;
  try {
    const auto meta = nlohmann::json::parse(bytes.substr(kCodebookMagic.size(), eol - kCodebookMagic.size()));
    k = meta.at("k").get<std::size_t>();
    n = meta.at("n_channels").get<std::size_t>();
    names = meta.at("channel_names").get<std::vector<std::string>>();
    m.seed = meta.at("seed").get<std::uint64_t>();
    m.mode = parse_fit_mode(meta.at("mode").get<std::string>());
    m.batch_size = meta.at("batch_size").get<std::size_t>();
    m.max_iter = meta.at("max_iter").get<std::size_t>();
    m.tol = meta.at("tol").get<double>();
    m.iterations = meta.at("iterations").get<std::size_t>();
    m.final_shift = meta.at("final_shift").get<double>();
    m.fit_fs = meta.at("fit_fs").get<double>();
    m.filtered = meta.at("filtered").get<bool>();
    m.filter_low = meta.at("filter_low").get<double>();
    m.filter_high = meta.at("filter_high").get<double>();
    m.average_reference = meta.at("average_reference").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, std::string("codebook metadata: ") + e.what());
  }
  const std::size_t expected = k * n * 4;
  const std::size_t available = bytes.size() - eol - 1;
  if (available != expected) {
    fail(ErrorKind::kTruncation, "codebook payload expected " + std::to_string(expected) +
                                     " bytes (k=" + std::to_string(k) + ", N=" + std::to_string(n) +
                                     "), got " + std::to_string(available));
  }
  MatrixD centroids(k, n);
  const char* p = bytes.data() + eol + 1;
  for (double& v : centroids.values()) {
    v = read_f32_le(p);
    p += 4;
  }
  return Codebook(std::move(centroids), std::move(names), m);
}

inline void write_codebook(const Codebook& cb, const fs::path& path) {
  write_file_atomic(path, serialize_codebook(cb));
}

inline Codebook read_codebook(const fs::path& path) { return parse_codebook(read_file(path)); }

}  // namespace msteeg
