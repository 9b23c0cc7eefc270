#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mindlink/errors.hpp"
#include "mindlink/pipeline.hpp"
#include "mindlink/stimulus.hpp"

namespace mindlink {

struct TrainingMeta {
  std::size_t n_trials = 0;
  std::size_t n_rounds = 0;
  std::uint64_t seed = 0;

  bool operator==(const TrainingMeta&) const = default;
};

struct LabeledFeature {
  std::vector<double> values;
  int label = -1;  // +1 target, -1 nontarget
};

inline constexpr double kDefaultRidgeLambda = 1.0;

// Linear P300 scorer: score(x) = w.x + b. Immutable once built.
//
// Training computes the posterior mode of Bayesian linear regression with an isotropic
// Gaussian prior on w, which is ridge regression on the per-sample mean squared error:
//
//   minimize (1/n) sum_i (y_i - w.x_i - b)^2 + lambda |w|^2
//
// The bias is unpenalized, so it is fitted on centred data: w solves
// (Xc'Xc / n + lambda I) w = Xc'yc / n and b = mean(y) - mean(x).w. Normalizing by n makes
// the solution invariant to replicating the training set.
class P300Decoder {
 public:
  P300Decoder(std::vector<double> weights, double bias, double lambda, TrainingMeta meta = {})
      : weights_(std::move(weights)), bias_(bias), lambda_(lambda), meta_(meta) {
    if (weights_.empty()) throw ParameterError("decoder needs at least one weight");
    if (!(lambda_ > 0.0)) throw ParameterError("regularization lambda must be positive");
  }

  static P300Decoder train(std::span<const LabeledFeature> examples,
                           double lambda = kDefaultRidgeLambda, TrainingMeta meta = {}) {
    if (!(lambda > 0.0)) throw ParameterError("regularization lambda must be positive");
    if (examples.empty()) throw TrainingError("no training examples");
    const std::size_t dim = examples.front().values.size();
    if (dim == 0) throw ParameterError("zero-length feature vectors");
    std::size_t positives = 0;
    std::size_t negatives = 0;
    for (const auto& e : examples) {
      if (e.values.size() != dim) throw ParameterError("training features differ in dimension");
      if (e.label == 1) {
        ++positives;
      } else if (e.label == -1) {
        ++negatives;
      } else {
        throw ParameterError("labels must be +1 or -1");
      }
    }
    if (positives < 2 || negatives < 2) {
      throw TrainingError("training needs at least two examples of each class");
    }

    const auto n = static_cast<Eigen::Index>(examples.size());
    const auto d = static_cast<Eigen::Index>(dim);
    Eigen::MatrixXd x(n, d);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& e = examples[static_cast<std::size_t>(i)];
      x.row(i) = Eigen::Map<const Eigen::RowVectorXd>(e.values.data(), d);
      y(i) = static_cast<double>(e.label);
    }
    const Eigen::RowVectorXd x_mean = x.colwise().mean();
    const double y_mean = y.mean();
    x.rowwise() -= x_mean;
    y.array() -= y_mean;

    const double inv_n = 1.0 / static_cast<double>(n);
    Eigen::MatrixXd gram = inv_n * (x.transpose() * x);
    gram.diagonal().array() += lambda;
    const Eigen::VectorXd rhs = inv_n * (x.transpose() * y);
    const Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) throw TrainingError("normal equations are not positive definite");
    const Eigen::VectorXd w = llt.solve(rhs);

    std::vector<double> weights(w.data(), w.data() + w.size());
    const double bias = y_mean - x_mean.dot(w);
    return P300Decoder(std::move(weights), bias, lambda, meta);
  }

  double score(std::span<const double> features) const {
    if (features.size() != weights_.size()) {
      throw ParameterError("feature dimension " + std::to_string(features.size()) +
                           " does not match decoder dimension " + std::to_string(weights_.size()));
    }
    double s = bias_;
    for (std::size_t i = 0; i < weights_.size(); ++i) s += weights_[i] * features[i];
    return s;
  }

  double score(const AveragedFeature& f) const { return score(f.values); }

  const std::vector<double>& weights() const { return weights_; }
  double bias() const { return bias_; }
  double lambda() const { return lambda_; }
  const TrainingMeta& training_meta() const { return meta_; }
  std::size_t dimension() const { return weights_.size(); }

 private:
  std::vector<double> weights_;
  double bias_;
  double lambda_;
  TrainingMeta meta_;
};

inline void to_json(nlohmann::json& j, const P300Decoder& d) {
  j = nlohmann::json{{"lambda", d.lambda()},
                     {"bias", d.bias()},
                     {"weights", d.weights()},
                     {"training_meta",
                      {{"n_trials", d.training_meta().n_trials},
                       {"n_rounds", d.training_meta().n_rounds},
                       {"seed", d.training_meta().seed}}}};
}

inline P300Decoder decoder_from_json(const nlohmann::json& j) {
  TrainingMeta meta;
  if (j.contains("training_meta")) {
    const auto& m = j.at("training_meta");
    meta.n_trials = m.value("n_trials", std::size_t{0});
    meta.n_rounds = m.value("n_rounds", std::size_t{0});
    meta.seed = m.value("seed", std::uint64_t{0});
  }
  return P300Decoder(j.at("weights").get<std::vector<double>>(), j.at("bias").get<double>(),
                     j.at("lambda").get<double>(), meta);
}

inline void save_decoder(const P300Decoder& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << nlohmann::json(d).dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

inline P300Decoder load_decoder(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open decoder file " + path);
  try {
    return decoder_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed decoder file " + path + ": " + e.what());
  }
}

enum class Outcome { selected, proceed };

struct Decision {
  Outcome outcome = Outcome::proceed;
  std::size_t button = 0;  // argmax, meaningful when selected
  std::vector<double> scores;
  std::size_t rounds_used = 0;
  double gap = 0.0;  // top score minus runner-up

  bool selected() const { return outcome == Outcome::selected; }
};

// Adaptive stopping rule on raw scores. Ties at the top resolve to the lowest button index.
inline Decision decide_scores(std::vector<double> scores, double threshold, std::size_t rounds_used,
                              std::size_t max_rounds) {
  if (scores.empty()) throw ParameterError("no buttons to decide between");
  if (!(threshold >= 0.0)) throw ParameterError("threshold must be non-negative");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  double runner_up = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i != best) runner_up = std::max(runner_up, scores[i]);
  }
  Decision d;
  d.button = best;
  d.rounds_used = rounds_used;
  d.gap = scores.size() > 1 ? scores[best] - runner_up : std::numeric_limits<double>::infinity();
  d.outcome = (d.gap > threshold || rounds_used >= max_rounds) ? Outcome::selected : Outcome::proceed;
  d.scores = std::move(scores);
  return d;
}

// `per_button[b]` must hold the averaged feature of button b.
inline Decision decide(const P300Decoder& decoder, std::span<const AveragedFeature> per_button,
                       double threshold, std::size_t rounds_used, std::size_t max_rounds) {
  if (per_button.empty()) throw ParameterError("no buttons to decide between");
  std::vector<double> scores;
  scores.reserve(per_button.size());
  for (std::size_t b = 0; b < per_button.size(); ++b) {
    if (per_button[b].button != b) throw ConsistencyError("averaged features out of button order");
    scores.push_back(decoder.score(per_button[b]));
  }
  return decide_scores(std::move(scores), threshold, rounds_used, max_rounds);
}

struct OnlineOptions {
  double threshold = 0.2;
  std::size_t max_rounds = 10;
  BandConfig band{};
  EpochWindow window{};
};

struct OnlineResult {
  std::size_t button = 0;
  std::size_t rounds_used = 0;
  std::vector<Decision> history;  // one decision per completed round
};

// Replays a recording round by round: after round R, averages the first R epochs of every
// button and stops at the first Selected decision.
inline OnlineResult run_online_trial(const P300Decoder& decoder, const EegRecording& recording,
                                     const StimulusSchedule& schedule,
                                     const OnlineOptions& options = {}) {
  if (options.max_rounds == 0) throw ParameterError("max_rounds must be positive");
  const std::size_t n = schedule.n_buttons;
  const std::size_t needed = n * options.max_rounds;
  if (schedule.flashes.size() < needed || recording.events.size() < needed) {
    throw ConsistencyError("recording/schedule hold fewer flashes than max_rounds requires");
  }
  for (std::size_t k = 0; k < needed; ++k) {
    if (recording.events[k].button != schedule.flashes[k].button) {
      throw ConsistencyError("recording event " + std::to_string(k) +
                             " does not match the scheduled button");
    }
  }

  // Whole-record zero-phase filtering. The simulated session has the full recording at
  // hand, so no causal filter is needed.
  const EegRecording filtered = bandpass(recording, options.band);
  const std::size_t points = options.window.points(filtered.sample_rate_hz);

  std::vector<std::vector<FeatureVector>> per_button(n);
  OnlineResult result;
  for (std::size_t r = 0; r < options.max_rounds; ++r) {
    for (std::size_t k = r * n; k < (r + 1) * n; ++k) {
      const auto& e = filtered.events[k];
      per_button[e.button].push_back(
          flatten(extract_epoch(filtered, e.sample_index, options.window), points, e.button, r));
    }
    std::vector<AveragedFeature> averaged;
    averaged.reserve(n);
    for (std::size_t b = 0; b < n; ++b) averaged.push_back(average_rounds(per_button[b], r + 1));
    result.history.push_back(decide(decoder, averaged, options.threshold, r + 1, options.max_rounds));
    if (result.history.back().selected()) {
      result.button = result.history.back().button;
      result.rounds_used = r + 1;
      return result;
    }
  }
  throw ComputationError("online trial ended without a decision");  // unreachable
}

}  // namespace mindlink
