#pragma once

// Microstate distribution statistics and a softmax-regression classifier
// trained with cross-entropy, evaluated by accuracy and Cohen's kappa.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "msteeg/core.hpp"
#include "msteeg/recording.hpp"
#include "msteeg/tokenize.hpp"

namespace msteeg {

// Relative frequency of each microstate id in [0, k). Tokens equal to the
// padding id k are skipped; an input with no countable token gives zeros.
inline std::vector<double> microstate_histogram(std::span<const TokenId> tokens, std::size_t k) {
  std::vector<double> hist(k, 0.0);
  std::size_t total = 0;
  for (TokenId t : tokens) {
    if (t == k) continue;
    if (t > k) fail(ErrorKind::kRange, "token " + std::to_string(t) + " outside 0.." + std::to_string(k));
    hist[t] += 1.0;
    ++total;
  }
  if (total > 0) {
    for (double& h : hist) h /= static_cast<double>(total);
  }
  return hist;
}

struct RankTable {
  std::string group_id;
  int label = 0;
  std::map<TokenId, std::size_t> counts;  // nonzero counts only
  std::vector<TokenId> ranks;             // most frequent first

  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& [id, c] : counts) n += c;
    return n;
  }

  // 1-based rank, or nullopt for an id that never occurs.
  std::optional<std::size_t> rank_of(TokenId id) const {
    const auto it = std::find(ranks.begin(), ranks.end(), id);
    if (it == ranks.end()) return std::nullopt;
    return static_cast<std::size_t>(it - ranks.begin()) + 1;
  }
};

// Descending count, ties by ascending id.
inline RankTable rank_microstates(const std::string& group_id, int label,
                                  std::span<const TokenId> tokens, std::size_t k) {
  RankTable t;
  t.group_id = group_id;
  t.label = label;
  for (TokenId id : tokens) {
    if (id == k) continue;
    if (id > k) fail(ErrorKind::kRange, "token " + std::to_string(id) + " outside 0.." + std::to_string(k));
    ++t.counts[id];
  }
  for (const auto& [id, c] : t.counts) t.ranks.push_back(id);
  std::stable_sort(t.ranks.begin(), t.ranks.end(),
                   [&](TokenId a, TokenId b) { return t.counts.at(a) > t.counts.at(b); });
  return t;
}

// Groups labelled windows by (subject, label). Each window is split into equal
// per-label spans so that a 300 s window with ten 30 s labels contributes each
// epoch to its own stage.
inline std::vector<RankTable> rank_microstates(const std::vector<LabeledWindow>& windows, std::size_t k) {
  std::map<std::pair<std::string, int>, std::vector<TokenId>> grouped;
  for (const auto& w : windows) {
    if (w.labels.empty()) continue;
    const std::size_t span = w.tokens.size() / w.labels.size();
    for (std::size_t e = 0; e < w.labels.size(); ++e) {
      auto& dst = grouped[{w.subject_id, w.labels[e]}];
      dst.insert(dst.end(), w.tokens.begin() + static_cast<long>(e * span),
                 w.tokens.begin() + static_cast<long>((e + 1) * span));
    }
  }
  std::vector<RankTable> out;
  for (const auto& [key, tokens] : grouped) out.push_back(rank_microstates(key.first, key.second, tokens, k));
  return out;
}

// One aligned-column table per label: rows are microstate ids that occur in
// any group of that label, columns are groups, cells are 1-based ranks ("-"
// where the id never occurs in that group).
inline std::string format_rank_tables(const std::vector<RankTable>& tables, std::size_t max_rows = 0) {
  std::map<int, std::vector<const RankTable*>> by_label;
  for (const auto& t : tables) by_label[t.label].push_back(&t);
  std::ostringstream out;
  for (const auto& [label, group] : by_label) {
    std::set<TokenId> ids;
    for (const auto* t : group)
      for (const auto& [id, c] : t->counts) ids.insert(id);
    std::vector<TokenId> rows(ids.begin(), ids.end());
    // Order rows by their best rank across groups so the dominant states lead.
    auto best_rank = [&](TokenId id) {
      std::size_t best = std::numeric_limits<std::size_t>::max();
      for (const auto* t : group) {
        if (auto r = t->rank_of(id)) best = std::min(best, *r);
      }
      return best;
    };
    std::stable_sort(rows.begin(), rows.end(), [&](TokenId a, TokenId b) { return best_rank(a) < best_rank(b); });
    if (max_rows > 0 && rows.size() > max_rows) rows.resize(max_rows);

    std::vector<std::vector<std::string>> cells;
    std::vector<std::string> header = {"microstate"};
    for (const auto* t : group) header.push_back(t->group_id);
    cells.push_back(header);
    for (TokenId id : rows) {
      std::vector<std::string> line = {std::to_string(id)};
      for (const auto* t : group) {
        const auto r = t->rank_of(id);
        line.push_back(r ? std::to_string(*r) : "-");
      }
      cells.push_back(std::move(line));
    }
    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& line : cells)
      for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());

    out << "Rank among groups under " << stage_name(label) << " (label " << label << ")\n";
    for (const auto& line : cells) {
      for (std::size_t c = 0; c < line.size(); ++c) {
        if (c) out << "  ";
        out << std::string(width[c] - line[c].size(), ' ') << line[c];
      }
      out << '\n';
    }
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Classifier

struct SoftmaxModel {
  MatrixD weights;  // classes x features
  std::vector<double> bias;

  std::size_t n_classes() const { return weights.rows(); }
  std::size_t n_features() const { return weights.cols(); }

  std::vector<double> scores(std::span<const double> x) const {
    std::vector<double> h(bias);
    for (std::size_t c = 0; c < n_classes(); ++c) {
      const auto w = weights.row(c);
      for (std::size_t j = 0; j < x.size(); ++j) h[c] += w[j] * x[j];
    }
    return h;
  }

  std::size_t predict(std::span<const double> x) const {
    const auto h = scores(x);
    return static_cast<std::size_t>(std::max_element(h.begin(), h.end()) - h.begin());
  }
};

// Numerically stable log-softmax.
inline std::vector<double> log_softmax(std::vector<double> h) {
  const double mx = *std::max_element(h.begin(), h.end());
  double sum = 0.0;
  for (double v : h) sum += std::exp(v - mx);
  const double lse = mx + std::log(sum);
  for (double& v : h) v -= lse;
  return h;
}

// Mean over samples of -sum_i p(i) log softmax(h)_i with one-hot p.
inline double cross_entropy_loss(const SoftmaxModel& model, const MatrixD& x, const std::vector<int>& y) {
  double loss = 0.0;
  for (std::size_t s = 0; s < x.rows(); ++s) {
    loss -= log_softmax(model.scores(x.row(s)))[static_cast<std::size_t>(y[s])];
  }
  return x.rows() ? loss / static_cast<double>(x.rows()) : 0.0;
}

struct SoftmaxGradient {
  MatrixD weights;
  std::vector<double> bias;
};

inline SoftmaxGradient cross_entropy_gradient(const SoftmaxModel& model, const MatrixD& x,
                                              const std::vector<int>& y) {
  SoftmaxGradient g{MatrixD(model.n_classes(), model.n_features()), std::vector<double>(model.n_classes(), 0.0)};
  const double inv_m = x.rows() ? 1.0 / static_cast<double>(x.rows()) : 0.0;
  for (std::size_t s = 0; s < x.rows(); ++s) {
    auto p = log_softmax(model.scores(x.row(s)));
    for (double& v : p) v = std::exp(v);
    p[static_cast<std::size_t>(y[s])] -= 1.0;
    const auto xs = x.row(s);
    for (std::size_t c = 0; c < model.n_classes(); ++c) {
      const double r = p[c] * inv_m;
      g.bias[c] += r;
      auto gw = g.weights.row(c);
      for (std::size_t j = 0; j < xs.size(); ++j) gw[j] += r * xs[j];
    }
  }
  return g;
}

struct TrainConfig {
  double learning_rate = 0.1;
  std::size_t epochs = 500;
};

struct TrainResult {
  SoftmaxModel model;
  std::vector<double> loss_trace;  // loss before each epoch, then the final loss
};

// Full-batch gradient descent from a zero model.
inline TrainResult train_softmax(const MatrixD& x, const std::vector<int>& y, std::size_t n_classes,
                                 const TrainConfig& cfg = {}) {
  if (x.rows() != y.size()) fail(ErrorKind::kShape, "feature rows and labels differ in length");
  if (n_classes < 2) fail(ErrorKind::kParameter, "need at least two classes");
  std::vector<std::size_t> seen(n_classes, 0);
  for (int label : y) {
    if (label < 0 || static_cast<std::size_t>(label) >= n_classes) {
      fail(ErrorKind::kRange, "label " + std::to_string(label) + " outside 0.." + std::to_string(n_classes - 1));
    }
    ++seen[static_cast<std::size_t>(label)];
  }
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (seen[c] == 0) fail(ErrorKind::kData, "class " + std::to_string(c) + " is absent from the training labels");
  }
  for (double v : x.values()) {
    if (!std::isfinite(v)) fail(ErrorKind::kValue, "non-finite training feature");
  }

  TrainResult res;
  res.model.weights = MatrixD(n_classes, x.cols());
  res.model.bias.assign(n_classes, 0.0);
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    res.loss_trace.push_back(cross_entropy_loss(res.model, x, y));
    const auto g = cross_entropy_gradient(res.model, x, y);
    for (std::size_t i = 0; i < res.model.weights.size(); ++i) {
      res.model.weights.values()[i] -= cfg.learning_rate * g.weights.values()[i];
    }
    for (std::size_t c = 0; c < n_classes; ++c) res.model.bias[c] -= cfg.learning_rate * g.bias[c];
  }
  res.loss_trace.push_back(cross_entropy_loss(res.model, x, y));
  return res;
}

// Per-feature z-scoring with statistics from the training split. Constant
// features get unit scale.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const MatrixD& x) {
    Standardizer s;
    s.mean.assign(x.cols(), 0.0);
    s.scale.assign(x.cols(), 1.0);
    if (x.rows() == 0) return s;
    const double inv = 1.0 / static_cast<double>(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t c = 0; c < x.cols(); ++c) s.mean[c] += x(r, c) * inv;
    std::vector<double> var(x.cols(), 0.0);
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t c = 0; c < x.cols(); ++c) {
        const double d = x(r, c) - s.mean[c];
        var[c] += d * d * inv;
      }
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const double sd = std::sqrt(var[c]);
      s.scale[c] = sd > 1e-12 ? sd : 1.0;
    }
    return s;
  }

  MatrixD transform(MatrixD x) const {
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t c = 0; c < x.cols(); ++c) x(r, c) = (x(r, c) - mean[c]) / scale[c];
    return x;
  }
};

struct Metrics {
  double accuracy = 0.0;
  double kappa = 0.0;
  bool kappa_degenerate = false;  // chance agreement p_e == 1
  Matrix<std::size_t> confusion;  // row = true class, column = predicted
  std::vector<double> recall;     // per true class; NaN for absent classes
  std::size_t n = 0;
};

inline Metrics metrics_from_predictions(const std::vector<int>& predicted, const std::vector<int>& truth,
                                        std::size_t n_classes) {
  if (predicted.size() != truth.size()) fail(ErrorKind::kShape, "prediction and label counts differ");
  Metrics m;
  m.n = truth.size();
  m.confusion = Matrix<std::size_t>(n_classes, n_classes, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i], p = predicted[i];
    if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= n_classes || static_cast<std::size_t>(p) >= n_classes) {
      fail(ErrorKind::kRange, "class id outside 0.." + std::to_string(n_classes - 1));
    }
    ++m.confusion(static_cast<std::size_t>(t), static_cast<std::size_t>(p));
  }
  if (m.n == 0) return m;
  const double n = static_cast<double>(m.n);
  double agree = 0.0, chance = 0.0;
  m.recall.assign(n_classes, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t c = 0; c < n_classes; ++c) {
    double row = 0.0, col = 0.0;
    for (std::size_t j = 0; j < n_classes; ++j) {
      row += static_cast<double>(m.confusion(c, j));
      col += static_cast<double>(m.confusion(j, c));
    }
    agree += static_cast<double>(m.confusion(c, c));
    chance += (row / n) * (col / n);
    if (row > 0.0) m.recall[c] = static_cast<double>(m.confusion(c, c)) / row;
  }
  const double p_o = agree / n;
  m.accuracy = p_o;
  if (chance >= 1.0 - 1e-12) {
    m.kappa_degenerate = true;
    m.kappa = p_o >= 1.0 - 1e-12 ? 1.0 : 0.0;
  } else {
    m.kappa = (p_o - chance) / (1.0 - chance);
  }
  return m;
}

inline Metrics evaluate(const SoftmaxModel& model, const MatrixD& x, const std::vector<int>& y) {
  if (x.rows() != y.size()) fail(ErrorKind::kShape, "feature rows and labels differ in length");
  if (x.cols() != model.n_features()) fail(ErrorKind::kShape, "feature width does not match the model");
  std::vector<int> pred(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) pred[i] = static_cast<int>(model.predict(x.row(i)));
  return metrics_from_predictions(pred, y, model.n_classes());
}

enum class Split { kTrain, kValidation, kTest };

// Assigns each distinct recording id to train/validation/test in proportion
// 7:1:2 after a seeded shuffle of the sorted ids.
inline std::map<std::string, Split> split_recordings(std::vector<std::string> ids, std::uint64_t seed) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  CounterRng rng(seed, 3);
  rng.shuffle(ids);
  const auto n = static_cast<double>(ids.size());
  const auto n_train = static_cast<std::size_t>(std::llround(0.7 * n));
  const auto n_val = std::min(ids.size() - n_train, static_cast<std::size_t>(std::llround(0.1 * n)));
  std::map<std::string, Split> out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out[ids[i]] = i < n_train ? Split::kTrain : (i < n_train + n_val ? Split::kValidation : Split::kTest);
  }
  return out;
}

}  // namespace msteeg
