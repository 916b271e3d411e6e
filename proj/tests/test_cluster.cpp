#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include "msteeg/cluster.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace msteeg;
using testutil::error_kind;

namespace {

MatrixD column(std::initializer_list<double> v) {
  MatrixD m(v.size(), 1);
  std::copy(v.begin(), v.end(), m.values().begin());
  return m;
}

MatrixD random_points(std::size_t m, std::size_t n, std::uint64_t seed, double scale = 10.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, scale);
  MatrixD p(m, n);
  for (double& v : p.values()) v = nd(gen);
  return p;
}

std::vector<std::vector<double>> rows_of(const MatrixD& m) {
  std::vector<std::vector<double>> out;
  for (std::size_t r = 0; r < m.rows(); ++r) out.emplace_back(m.row(r).begin(), m.row(r).end());
  return out;
}

// Yields the given batches in order.
struct ListSource {
  std::vector<MatrixD> batches;
  std::size_t pos = 0;
  std::optional<MatrixD> next() {
    if (pos >= batches.size()) return std::nullopt;
    return batches[pos++];
  }
};

std::vector<double> center0_trace(FitMode mode) {
  std::vector<double> trace;
  // One update per call keeps the whole trajectory observable.
  detail::StreamingState state(column({4.0, 100.0}), mode);
  FitResult scratch;
  for (int i = 0; i < 6; ++i) {
    state.update(column({i % 2 == 0 ? 0.0 : 10.0}), scratch);
    trace.push_back(state.centers()(0, 0));
  }
  return trace;
}

}  // namespace

TEST(Assign, ExactMatchAndTieRule) {
  MatrixD centroids(10, 2);
  for (std::size_t c = 0; c < 10; ++c) {
    centroids(c, 0) = static_cast<double>(c);
    centroids(c, 1) = 0.0;
  }
  MatrixD p(1, 2);
  p(0, 0) = 7.0;
  Assignment a = assign(centroids, p);
  EXPECT_EQ(a.labels[0], 7u);
  EXPECT_EQ(a.inertia, 0.0);

  // Equidistant from centroids 2 and 5 only.
  MatrixD c2(6, 1);
  for (std::size_t c = 0; c < 6; ++c) c2(c, 0) = 100.0 + static_cast<double>(c);
  c2(2, 0) = -1.0;
  c2(5, 0) = 1.0;
  EXPECT_EQ(assign(c2, column({0.0})).labels[0], 2u);
}

TEST(Assign, RandomMatchesExhaustiveSearch) {
  const MatrixD centroids = random_points(10, 6, 1);
  const MatrixD points = random_points(100, 6, 2);
  const auto labels = assign(centroids, points).labels;
  const auto cs = rows_of(centroids);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    EXPECT_EQ(labels[i], oracle::nearest(cs, rows_of(points)[i]));
  }
}

TEST(Assign, WidthMismatch) {
  EXPECT_EQ(error_kind([] { assign(MatrixD(2, 3), MatrixD(4, 2)); }), ErrorKind::kShape);
}

TEST(KmeansPlusPlus, MEqualsKPicksEveryRow) {
  const MatrixD points = random_points(7, 3, 9);
  const MatrixD c = kmeanspp_init(points, 7, 123);
  auto a = rows_of(points), b = rows_of(c);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  EXPECT_EQ(a, b);
}

TEST(KmeansPlusPlus, DeterministicPerSeed) {
  const MatrixD points = random_points(200, 4, 3);
  EXPECT_EQ(kmeanspp_init(points, 8, 5), kmeanspp_init(points, 8, 5));
  EXPECT_NE(kmeanspp_init(points, 8, 5), kmeanspp_init(points, 8, 6));
}

TEST(KmeansPlusPlus, CrossBlobProbability) {
  // Blobs {0,1} and {100,101}. With the first pick uniform, the second pick
  // lands in the other blob with probability
  //   0.5 * (20201/20202) + 0.5 * (19801/19802).
  const MatrixD points = column({0.0, 1.0, 100.0, 101.0});
  const double p_cross = 0.5 * (20201.0 / 20202.0) + 0.5 * (19801.0 / 19802.0);
  const int trials = 20000;
  int same_blob = 0;
  int first_counts[4] = {0, 0, 0, 0};
  for (int s = 0; s < trials; ++s) {
    const MatrixD c = kmeanspp_init(points, 2, static_cast<std::uint64_t>(s));
    const bool a = c(0, 0) > 50.0, b = c(1, 0) > 50.0;
    if (a == b) ++same_blob;
    ++first_counts[static_cast<int>(c(0, 0) > 50.0) * 2 + static_cast<int>(std::fmod(c(0, 0), 2.0))];
  }
  const double expected_same = trials * (1.0 - p_cross);  // about 1
  EXPECT_LE(same_blob, static_cast<int>(expected_same + 8.0));
  for (int n : first_counts) EXPECT_NEAR(n / static_cast<double>(trials), 0.25, 0.02);
}

TEST(KmeansPlusPlus, InsufficientData) {
  EXPECT_EQ(error_kind([] { kmeanspp_init(column({1.0, 2.0}), 3, 0); }), ErrorKind::kInsufficientData);
  EXPECT_EQ(error_kind([] { kmeanspp_init(column({1.0, 1.0, 1.0}), 2, 0); }), ErrorKind::kInsufficientData);
}

TEST(BatchKmeans, AlreadyAtCentersConvergesImmediately) {
  const MatrixD points = column({0.0, 5.0, 9.0});
  const auto res = batch_kmeans(points, 3, points, 10, 1e-9);
  EXPECT_EQ(res.iterations, 1u);
  EXPECT_TRUE(res.converged);
  EXPECT_EQ(res.inertia, 0.0);
}

TEST(BatchKmeans, RectangleLowestInertiaPartition) {
  MatrixD points(4, 2);
  const double corners[4][2] = {{0, 0}, {10, 0}, {0, 1}, {10, 1}};
  for (int i = 0; i < 4; ++i) {
    points(i, 0) = corners[i][0];
    points(i, 1) = corners[i][1];
  }
  double best = 1e300;
  MatrixD best_centers;
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = a + 1; b < 4; ++b) {
      MatrixD init(2, 2);
      std::copy(points.row(a).begin(), points.row(a).end(), init.row(0).begin());
      std::copy(points.row(b).begin(), points.row(b).end(), init.row(1).begin());
      const auto res = batch_kmeans(points, 2, init, 50, 1e-12);
      if (res.inertia < best) {
        best = res.inertia;
        best_centers = res.centers;
      }
    }
  }
  EXPECT_NEAR(best, 1.0, 1e-12);
  auto rows = rows_of(best_centers);
  std::sort(rows.begin(), rows.end());
  EXPECT_EQ(rows, (std::vector<std::vector<double>>{{0.0, 0.5}, {10.0, 0.5}}));
}

TEST(BatchKmeans, InertiaNonIncreasing) {
  const MatrixD points = random_points(400, 3, 17);
  const auto res = batch_kmeans(points, 6, kmeanspp_init(points, 6, 2), 100, 1e-12);
  for (std::size_t i = 1; i < res.inertia_trace.size(); ++i) {
    EXPECT_LE(res.inertia_trace[i], res.inertia_trace[i - 1] * (1.0 + 1e-12));
  }
}

TEST(Streaming, LiteralSingleBatchOneStep) {
  ListSource src{{column({0.0, 10.0})}};
  FitConfig cfg;
  cfg.k = 2;
  cfg.batch_size = 2;
  cfg.max_iter = 1;
  const FitResult res = streaming_fit(src, cfg, column({1.0, 9.0}));
  EXPECT_EQ(res.centers, column({0.0, 10.0}));
  EXPECT_EQ(res.iterations, 1u);
}

TEST(Streaming, LiteralOscillates) {
  EXPECT_EQ(center0_trace(FitMode::kLiteral), (std::vector<double>{0, 10, 0, 10, 0, 10}));
}

TEST(Streaming, WeightedRunningMean) {
  // Hand iteration of c <- c + (x - c) / count.
  const std::vector<double> expected = {0.0, 5.0, 10.0 / 3.0, 5.0, 4.0, 5.0};
  const auto trace = center0_trace(FitMode::kWeighted);
  ASSERT_EQ(trace.size(), expected.size());
  for (std::size_t i = 0; i < trace.size(); ++i) EXPECT_NEAR(trace[i], expected[i], 1e-12);
}

TEST(Streaming, FullBatchLiteralEqualsLloyd) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const MatrixD points = random_points(120, 3, 100 + seed);
    const MatrixD init = kmeanspp_init(points, 5, seed);
    FitConfig cfg;
    cfg.k = 5;
    cfg.batch_size = points.rows();
    cfg.max_iter = 25;
    cfg.tol = 1e-9;
    MatrixBatchSource src(points, points.rows(), cfg.max_iter, seed, /*shuffle=*/false);
    const FitResult s = streaming_fit(src, cfg, init);
    const auto b = batch_kmeans(points, 5, init, cfg.max_iter, cfg.tol);
    EXPECT_EQ(s.centers, b.centers);
    EXPECT_EQ(s.iterations, b.iterations);
    EXPECT_EQ(s.converged, b.converged);
  }
}

TEST(Streaming, StopsAtMaxIterAndIsDeterministic) {
  const MatrixD points = random_points(3000, 4, 8);
  FitConfig cfg;
  cfg.k = 12;
  cfg.batch_size = 20;
  cfg.max_iter = 40;
  cfg.seed = 3;
  MatrixBatchSource a(points, cfg.batch_size, 5, cfg.seed);
  MatrixBatchSource b(points, cfg.batch_size, 5, cfg.seed);
  const FitResult ra = streaming_fit(a, cfg);
  const FitResult rb = streaming_fit(b, cfg);
  EXPECT_EQ(ra.centers, rb.centers);
  EXPECT_EQ(ra.iterations, 40u);
  EXPECT_EQ(ra.batch_inertia.size(), 40u);
  EXPECT_EQ(ra.shift_trace.size(), 40u);
}

TEST(Streaming, EndOfStreamStops) {
  const MatrixD points = random_points(100, 2, 8);
  FitConfig cfg;
  cfg.k = 3;
  cfg.batch_size = 10;
  cfg.max_iter = 1000;
  cfg.tol = 1e-300;
  MatrixBatchSource src(points, cfg.batch_size, 2, 0);
  EXPECT_EQ(streaming_fit(src, cfg).iterations, 20u);
}

TEST(Streaming, ReservoirSize) {
  FitConfig cfg;
  cfg.k = 1000;
  cfg.batch_size = 50;
  EXPECT_EQ(cfg.reservoir_rows(), 10000u);
  cfg.k = 32;
  EXPECT_EQ(cfg.reservoir_rows(), 500u);
  cfg.batch_size = 1;
  EXPECT_EQ(cfg.reservoir_rows(), 320u);
}

TEST(Streaming, Errors) {
  const MatrixD points = random_points(5, 2, 1);
  FitConfig cfg;
  cfg.k = 10;
  cfg.batch_size = 2;
  MatrixBatchSource src(points, 2, 1, 0);
  EXPECT_EQ(error_kind([&] { streaming_fit(src, cfg); }), ErrorKind::kInsufficientData);
  cfg.k = 1;
  MatrixBatchSource src2(points, 2, 1, 0);
  EXPECT_EQ(error_kind([&] { streaming_fit(src2, cfg); }), ErrorKind::kParameter);
}

TEST(Streaming, CodebookRoundsToFloat) {
  const MatrixD points = random_points(500, 3, 4);
  FitConfig cfg;
  cfg.k = 4;
  cfg.batch_size = 50;
  cfg.max_iter = 30;
  MatrixBatchSource src(points, 50, 3, 0);
  const FitResult res = streaming_fit(src, cfg);
  const Codebook cb = to_codebook(res, cfg, {"a", "b", "c"});
  for (std::size_t i = 0; i < res.centers.size(); ++i) {
    EXPECT_EQ(cb.centroids().values()[i], static_cast<double>(static_cast<float>(res.centers.values()[i])));
  }
  EXPECT_EQ(cb.meta().iterations, res.iterations);
  EXPECT_EQ(cb.pad_id(), 4u);
}
