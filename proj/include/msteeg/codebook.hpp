#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "msteeg/core.hpp"

namespace msteeg {

enum class FitMode { kLiteral, kWeighted };

inline const char* to_string(FitMode mode) {
  return mode == FitMode::kLiteral ? "literal" : "weighted";
}

inline FitMode parse_fit_mode(const std::string& s) {
  if (s == "literal") return FitMode::kLiteral;
  if (s == "weighted") return FitMode::kWeighted;
  fail(ErrorKind::kConfig, "unknown fit mode '" + s + "' (expected literal|weighted)");
}

// How the codebook was produced. Persisted verbatim in the file header.
struct CodebookMeta {
  std::uint64_t seed = 0;
  FitMode mode = FitMode::kLiteral;
  std::size_t batch_size = 0;
  std::size_t max_iter = 0;
  double tol = 0.0;
  std::size_t iterations = 0;
  double final_shift = 0.0;
  double fit_fs = 0.0;
  bool filtered = false;
  double filter_low = 0.0;
  double filter_high = 0.0;
  bool average_reference = false;

  bool operator==(const CodebookMeta&) const = default;
};

// k centroid topographies over N channels. Centroid values are rounded to
// float32 on construction so that the on-disk form is lossless.
class Codebook {
 public:
  Codebook() = default;

  Codebook(MatrixD centroids, std::vector<std::string> channel_names, CodebookMeta meta = {})
      : centroids_(std::move(centroids)),
        channel_names_(std::move(channel_names)),
        meta_(meta) {
    for (double& v : centroids_.values()) v = static_cast<double>(static_cast<float>(v));
    check();
  }

  const MatrixD& centroids() const { return centroids_; }
  const std::vector<std::string>& channel_names() const { return channel_names_; }
  const CodebookMeta& meta() const { return meta_; }

  std::size_t k() const { return centroids_.rows(); }
  std::size_t n_channels() const { return centroids_.cols(); }
  // The padding token sits just outside the microstate id range.
  std::uint32_t pad_id() const { return static_cast<std::uint32_t>(k()); }

  bool operator==(const Codebook&) const = default;

 private:
  void check() const {
    if (centroids_.rows() < 2) fail(ErrorKind::kParameter, "codebook needs k >= 2");
    if (centroids_.cols() < 1) fail(ErrorKind::kParameter, "codebook needs N >= 1");
    if (channel_names_.size() != centroids_.cols()) {
      fail(ErrorKind::kShape, "codebook has " + std::to_string(centroids_.cols()) +
                                  " columns but " + std::to_string(channel_names_.size()) +
                                  " channel names");
    }
    std::set<std::vector<double>> seen;
    for (std::size_t i = 0; i < centroids_.rows(); ++i) {
      for (double v : centroids_.row(i)) {
        if (!std::isfinite(v)) fail(ErrorKind::kData, "codebook contains a non-finite value");
      }
      auto row = centroids_.row(i);
      if (!seen.emplace(row.begin(), row.end()).second) {
        fail(ErrorKind::kData, "codebook centroid " + std::to_string(i) + " duplicates another row");
      }
    }
  }

  MatrixD centroids_;
  std::vector<std::string> channel_names_;
  CodebookMeta meta_;
};

}  // namespace msteeg
