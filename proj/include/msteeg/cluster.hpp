#pragma once

// k-means machinery for fitting microstate codebooks: nearest-centroid
// assignment, k-means++ seeding, streaming (mini-batch) fitting, and a plain
// Lloyd's implementation used as a reference.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "msteeg/codebook.hpp"
#include "msteeg/core.hpp"

namespace msteeg {

struct Assignment {
  std::vector<std::uint32_t> labels;
  double inertia = 0.0;  // sum of squared distances to the chosen centroid
};

// Nearest centroid by squared Euclidean distance; ties go to the lower index.
template <typename C, typename P>
Assignment assign(const Matrix<C>& centroids, const Matrix<P>& points) {
  if (centroids.cols() != points.cols()) {
    fail(ErrorKind::kShape, "assign: point width " + std::to_string(points.cols()) +
                                " != centroid width " + std::to_string(centroids.cols()));
  }
  Assignment out;
  out.labels.resize(points.rows());
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const auto x = points.row(i);
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t best_id = 0;
    for (std::size_t c = 0; c < centroids.rows(); ++c) {
      const auto mu = centroids.row(c);
      double d = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) {
        const double diff = static_cast<double>(x[j]) - static_cast<double>(mu[j]);
        d += diff * diff;
      }
      if (d < best) {
        best = d;
        best_id = static_cast<std::uint32_t>(c);
      }
    }
    out.labels[i] = best_id;
    out.inertia += best;
  }
  return out;
}

// k-means++ seeding: the first center uniformly, each further center with
// probability proportional to its squared distance from the chosen set.
inline MatrixD kmeanspp_init(const MatrixD& points, std::size_t k, std::uint64_t seed) {
  const std::size_t m = points.rows();
  if (k == 0) fail(ErrorKind::kParameter, "k must be positive");
  if (m < k) {
    fail(ErrorKind::kInsufficientData, "k-means++ needs at least k=" + std::to_string(k) +
                                           " points, got " + std::to_string(m));
  }
  CounterRng rng(seed, /*stream=*/1);
  MatrixD centers(k, points.cols());
  std::vector<double> d2(m, std::numeric_limits<double>::infinity());

  std::size_t pick = static_cast<std::size_t>(rng.below(m));
  for (std::size_t c = 0; c < k; ++c) {
    if (c > 0) {
      double total = 0.0;
      for (double v : d2) total += v;
      if (!(total > 0.0)) {
        fail(ErrorKind::kInsufficientData, "only " + std::to_string(c) +
                                               " distinct points available for k=" + std::to_string(k));
      }
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = m;
      std::size_t last_positive = m;
      for (std::size_t i = 0; i < m; ++i) {
        if (d2[i] <= 0.0) continue;
        last_positive = i;
        acc += d2[i];
        if (acc > target) {
          pick = i;
          break;
        }
      }
      if (pick == m) pick = last_positive;  // rounding at the top of the range
    }
    const auto chosen = points.row(pick);
    std::copy(chosen.begin(), chosen.end(), centers.row(c).begin());
    for (std::size_t i = 0; i < m; ++i) {
      d2[i] = std::min(d2[i], squared_distance(points.row(i), chosen));
    }
  }
  return centers;
}

struct BatchKmeansResult {
  MatrixD centers;
  double inertia = 0.0;  // against the returned centers
  std::size_t iterations = 0;
  double final_shift = 0.0;
  bool converged = false;
  std::vector<double> inertia_trace;  // per iteration, then the final value
};

// Lloyd's algorithm from the given centers. An empty cluster keeps its center.
inline BatchKmeansResult batch_kmeans(const MatrixD& points, std::size_t k, MatrixD init_centers,
                                      std::size_t max_iter, double tol) {
  if (points.rows() < k) {
    fail(ErrorKind::kInsufficientData, "batch k-means needs at least k points");
  }
  if (init_centers.rows() != k || init_centers.cols() != points.cols()) {
    fail(ErrorKind::kShape, "initial centers must be k x N");
  }
  BatchKmeansResult res;
  res.centers = std::move(init_centers);
  const std::size_t dim = points.cols();
  while (res.iterations < max_iter) {
    const Assignment a = assign(res.centers, points);
    res.inertia_trace.push_back(a.inertia);

    MatrixD sums(k, dim);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.rows(); ++i) {
      const auto x = points.row(i);
      auto s = sums.row(a.labels[i]);
      for (std::size_t j = 0; j < dim; ++j) s[j] += x[j];
      ++counts[a.labels[i]];
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      double moved = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        const double updated = sums(c, j) / static_cast<double>(counts[c]);
        const double d = updated - res.centers(c, j);
        moved += d * d;
        res.centers(c, j) = updated;
      }
      shift = std::max(shift, std::sqrt(moved));
    }
    ++res.iterations;
    res.final_shift = shift;
    if (shift < tol) {
      res.converged = true;
      break;
    }
  }
  res.inertia = assign(res.centers, points).inertia;
  res.inertia_trace.push_back(res.inertia);
  return res;
}

struct FitConfig {
  std::size_t k = 1000;
  std::size_t batch_size = 50;
  std::size_t max_iter = 300;
  double tol = 1e-4;  // microvolts of center displacement
  FitMode mode = FitMode::kLiteral;
  std::uint64_t seed = 0;

  void validate() const {
    if (k < 2) fail(ErrorKind::kParameter, "k must be >= 2");
    if (batch_size < 1) fail(ErrorKind::kParameter, "batch size must be >= 1");
    if (!(tol > 0.0)) fail(ErrorKind::kParameter, "tol must be > 0");
  }

  // Rows buffered for k-means++ seeding before streaming updates begin.
  std::size_t reservoir_rows() const {
    const std::size_t batches = (k + batch_size - 1) / batch_size;
    return std::max(k, 10 * batches * batch_size);
  }
};

// A pull-based source of point batches (rows are points). std::nullopt ends
// the stream.
template <typename S>
concept BatchSource = requires(S s) {
  { s.next() } -> std::same_as<std::optional<MatrixD>>;
};

// Cycles over an in-memory point matrix in batches of fixed size, reshuffling
// the row order (seeded) before each pass.
class MatrixBatchSource {
 public:
  MatrixBatchSource(const MatrixD& points, std::size_t batch_size, std::size_t passes,
                    std::uint64_t seed, bool shuffle = true)
      : points_(&points), batch_size_(batch_size), passes_(passes), shuffle_(shuffle), rng_(seed, 2) {
    order_.resize(points.rows());
    start_pass();
  }

  std::optional<MatrixD> next() {
    if (points_->rows() == 0 || batch_size_ == 0) return std::nullopt;
    if (cursor_ >= order_.size()) {
      ++pass_;
      start_pass();
    }
    if (pass_ >= passes_) return std::nullopt;
    const std::size_t n = std::min(batch_size_, order_.size() - cursor_);
    MatrixD batch(n, points_->cols());
    for (std::size_t i = 0; i < n; ++i) {
      const auto src = points_->row(order_[cursor_ + i]);
      std::copy(src.begin(), src.end(), batch.row(i).begin());
    }
    cursor_ += n;
    return batch;
  }

 private:
  void start_pass() {
    cursor_ = 0;
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    if (shuffle_) rng_.shuffle(order_);
  }

  const MatrixD* points_;
  std::size_t batch_size_;
  std::size_t passes_;
  bool shuffle_;
  CounterRng rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::size_t pass_ = 0;
};

struct FitResult {
  MatrixD centers;
  std::size_t iterations = 0;
  double final_shift = 0.0;
  bool converged = false;
  std::vector<double> batch_inertia;  // inertia of each batch at assignment
  std::vector<double> shift_trace;
};

namespace detail {

class StreamingState {
 public:
  StreamingState(MatrixD centers, FitMode mode)
      : centers_(std::move(centers)), counts_(centers_.rows(), 0), mode_(mode) {}

  // One update step. Returns the largest center displacement.
  double update(const MatrixD& batch, FitResult& res) {
    const std::size_t k = centers_.rows();
    const std::size_t dim = centers_.cols();
    const Assignment a = assign(centers_, batch);
    res.batch_inertia.push_back(a.inertia);

    double shift = 0.0;
    if (mode_ == FitMode::kLiteral) {
      // Each center becomes the mean of the batch points assigned to it.
      MatrixD sums(k, dim);
      std::vector<std::size_t> members(k, 0);
      for (std::size_t i = 0; i < batch.rows(); ++i) {
        const auto x = batch.row(i);
        auto s = sums.row(a.labels[i]);
        for (std::size_t j = 0; j < dim; ++j) s[j] += x[j];
        ++members[a.labels[i]];
      }
      for (std::size_t c = 0; c < k; ++c) {
        if (members[c] == 0) continue;
        double moved = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
          const double updated = sums(c, j) / static_cast<double>(members[c]);
          const double d = updated - centers_(c, j);
          moved += d * d;
          centers_(c, j) = updated;
        }
        shift = std::max(shift, std::sqrt(moved));
      }
    } else {
      // c <- c + (1/count) * sum(x - c), counts accumulated over the stream.
      MatrixD delta(k, dim);
      std::vector<std::size_t> members(k, 0);
      for (std::size_t i = 0; i < batch.rows(); ++i) {
        const std::uint32_t c = a.labels[i];
        const auto x = batch.row(i);
        for (std::size_t j = 0; j < dim; ++j) delta(c, j) += x[j] - centers_(c, j);
        ++members[c];
      }
      for (std::size_t c = 0; c < k; ++c) {
        if (members[c] == 0) continue;
        counts_[c] += members[c];
        const double rate = 1.0 / static_cast<double>(counts_[c]);
        double moved = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
          const double step = rate * delta(c, j);
          centers_(c, j) += step;
          moved += step * step;
        }
        shift = std::max(shift, std::sqrt(moved));
      }
    }
    return shift;
  }

  const MatrixD& centers() const { return centers_; }
  MatrixD take_centers() { return std::move(centers_); }

 private:
  MatrixD centers_;
  std::vector<std::size_t> counts_;
  FitMode mode_;
};

}  // namespace detail

// Streaming k-means. Without explicit initial centers the first
// config.reservoir_rows() rows are buffered, seeded with k-means++, and then
// replayed as the first update batches. Stops after max_iter updates, when the
// largest center displacement drops below tol, or when the stream ends.
template <BatchSource Source>
FitResult streaming_fit(Source& source, const FitConfig& config,
                        std::optional<MatrixD> init_centers = std::nullopt) {
  config.validate();
  std::vector<MatrixD> replay;
  std::size_t width = 0;
  auto pull = [&]() -> std::optional<MatrixD> {
    auto batch = source.next();
    if (batch && batch->rows() > 0) {
      if (width == 0) width = batch->cols();
      if (batch->cols() != width) {
        fail(ErrorKind::kShape, "batch width " + std::to_string(batch->cols()) + " != " +
                                    std::to_string(width));
      }
    }
    return batch;
  };

  MatrixD centers;
  if (init_centers) {
    if (init_centers->rows() != config.k) fail(ErrorKind::kShape, "initial centers must have k rows");
    width = init_centers->cols();
    centers = std::move(*init_centers);
  } else {
    MatrixD reservoir;
    while (reservoir.rows() < config.reservoir_rows()) {
      auto batch = pull();
      if (!batch) break;
      for (std::size_t i = 0; i < batch->rows(); ++i) reservoir.append_row(batch->row(i));
      replay.push_back(std::move(*batch));
    }
    if (reservoir.rows() == 0) fail(ErrorKind::kInsufficientData, "stream yielded no points");
    centers = kmeanspp_init(reservoir, config.k, config.seed);
  }

  FitResult res;
  detail::StreamingState state(std::move(centers), config.mode);
  std::size_t replay_pos = 0;
  bool saw_batch = !replay.empty();
  while (res.iterations < config.max_iter) {
    std::optional<MatrixD> batch;
    if (replay_pos < replay.size()) {
      batch = std::move(replay[replay_pos++]);
    } else {
      batch = pull();
    }
    if (!batch) break;
    saw_batch = true;
    if (batch->rows() == 0) continue;
    const double shift = state.update(*batch, res);
    ++res.iterations;
    res.final_shift = shift;
    res.shift_trace.push_back(shift);
    if (shift < config.tol) {
      res.converged = true;
      break;
    }
  }
  if (!saw_batch) fail(ErrorKind::kInsufficientData, "stream yielded no batches");
  res.centers = state.take_centers();
  return res;
}

inline Codebook to_codebook(const FitResult& res, const FitConfig& config,
                            std::vector<std::string> channel_names, CodebookMeta meta = {}) {
  meta.seed = config.seed;
  meta.mode = config.mode;
  meta.batch_size = config.batch_size;
  meta.max_iter = config.max_iter;
  meta.tol = config.tol;
  meta.iterations = res.iterations;
  meta.final_shift = res.final_shift;
  return Codebook(res.centers, std::move(channel_names), meta);
}

}  // namespace msteeg
