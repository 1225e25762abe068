#include "depthwatch/simulate.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>

#include "depthwatch/errors.hpp"
#include "depthwatch/metrics.hpp"
#include "depthwatch/reference.hpp"
#include "depthwatch/stats.hpp"

namespace depthwatch {

Eigen::MatrixXd sample_gaussian(const GaussianClassSpec& spec, Rng& rng) {
  const Eigen::Index dim = spec.mean.size();
  Eigen::LLT<Eigen::MatrixXd> llt(spec.covariance);
  if (llt.info() != Eigen::Success) {
    throw NumericError("sample_gaussian: covariance is not positive definite");
  }
  const Eigen::MatrixXd chol = llt.matrixL();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(spec.count), dim);
  Eigen::VectorXd z(dim);
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    for (Eigen::Index i = 0; i < dim; ++i) z(i) = rng.normal();
    out.row(r) = (spec.mean + chol * z).transpose();
  }
  return out;
}

Eigen::MatrixXd band_covariance(int dim, double offdiag) {
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(dim, dim);
  for (int i = 0; i + 1 < dim; ++i) {
    cov(i, i + 1) = offdiag;
    cov(i + 1, i) = offdiag;
  }
  return cov;
}

ToyData gen_toy_data(std::uint64_t seed) {
  constexpr int kDim = 7;
  Rng rng(derive_seed(seed, seed_tag::kToyData, 0));

  GaussianClassSpec class1{Eigen::VectorXd::Zero(kDim), band_covariance(kDim, 0.3), 100};
  GaussianClassSpec class2{Eigen::VectorXd::Constant(kDim, 10.0), band_covariance(kDim, -0.3),
                           100};
  GaussianClassSpec shifted{Eigen::VectorXd::Constant(kDim, 5.0), band_covariance(kDim, 0.3), 50};

  ToyData data;
  data.train_x.resize(200, kDim);
  data.train_x.topRows(100) = sample_gaussian(class1, rng);
  data.train_x.bottomRows(100) = sample_gaussian(class2, rng);
  data.train_y.assign(200, 1);
  std::fill(data.train_y.begin() + 100, data.train_y.end(), 2);

  class1.count = 50;
  class2.count = 50;
  data.ic_x.resize(100, kDim);
  data.ic_x.topRows(50) = sample_gaussian(class1, rng);
  data.ic_x.bottomRows(50) = sample_gaussian(class2, rng);
  data.ic_y.assign(100, 1);
  std::fill(data.ic_y.begin() + 50, data.ic_y.end(), 2);

  data.ooc_x = sample_gaussian(shifted, rng);
  return data;
}

namespace {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Forward pass keeping pre-activations; hidden layers are ReLU, the last
// layer is left as a raw logit.
struct ForwardState {
  std::vector<Eigen::MatrixXd> pre;  // pre[i]: sizes[i+1] x N
  std::vector<Eigen::MatrixXd> act;  // act[i]: sizes[i] x N (act[0] = input)
};

ForwardState forward_all(const TinyFnn& fnn, const Eigen::MatrixXd& x) {
  const std::size_t layers = fnn.weights.size();
  ForwardState state;
  state.pre.resize(layers);
  state.act.resize(layers + 1);
  state.act[0] = x.transpose();
  for (std::size_t i = 0; i < layers; ++i) {
    state.pre[i] = (fnn.weights[i] * state.act[i]).colwise() + fnn.biases[i];
    if (i + 1 < layers) {
      state.act[i + 1] = state.pre[i].cwiseMax(0.0);
    } else {
      state.act[i + 1] = state.pre[i];  // logits
    }
  }
  return state;
}

void check_arch(const TinyFnn& fnn) {
  if (fnn.layer_sizes.size() < 2) throw NumericError("TinyFnn: need at least two layers");
  if (fnn.layer_sizes.back() != 1) throw NumericError("TinyFnn: output layer must have one unit");
  if (fnn.embedding_layer < 1 ||
      fnn.embedding_layer >= static_cast<int>(fnn.layer_sizes.size())) {
    throw NumericError("TinyFnn: embedding_layer must index a non-input layer");
  }
}

}  // namespace

Eigen::VectorXd TinyFnn::embed(const Eigen::VectorXd& x) const {
  check_arch(*this);
  if (x.size() != layer_sizes.front()) {
    throw DataError("TinyFnn::embed: input dimension " + std::to_string(x.size()) +
                    " does not match the input layer (" + std::to_string(layer_sizes.front()) +
                    ")");
  }
  Eigen::VectorXd act = x;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    Eigen::VectorXd pre = weights[i] * act + biases[i];
    if (static_cast<int>(i) + 1 == embedding_layer) return pre;
    act = pre.cwiseMax(0.0);
  }
  return act;  // unreachable given check_arch
}

double TinyFnn::output_score(const Eigen::VectorXd& x) const {
  if (x.size() != layer_sizes.front()) {
    throw DataError("TinyFnn::output_score: input dimension mismatch");
  }
  Eigen::VectorXd act = x;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    Eigen::VectorXd pre = weights[i] * act + biases[i];
    if (i + 1 == weights.size()) return sigmoid(pre(0));
    act = pre.cwiseMax(0.0);
  }
  return 0.5;
}

std::pair<int, double> TinyFnn::predict(const Eigen::VectorXd& x) const {
  const double score = output_score(x);
  return {score >= 0.5 ? 2 : 1, score};
}

TinyFnn make_fnn(std::vector<int> layer_sizes, int embedding_layer, std::uint64_t seed) {
  TinyFnn fnn;
  fnn.layer_sizes = std::move(layer_sizes);
  fnn.embedding_layer = embedding_layer;
  check_arch(fnn);
  Rng rng(derive_seed(seed, seed_tag::kFnnInit, 0));
  const std::size_t layers = fnn.layer_sizes.size() - 1;
  fnn.weights.resize(layers);
  fnn.biases.resize(layers);
  for (std::size_t i = 0; i < layers; ++i) {
    const int fan_in = fnn.layer_sizes[i];
    const int fan_out = fnn.layer_sizes[i + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    fnn.weights[i].resize(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) {
        fnn.weights[i](r, c) = bound * (2.0 * rng.uniform() - 1.0);
      }
    }
    fnn.biases[i] = Eigen::VectorXd::Zero(fan_out);
  }
  return fnn;
}

double fnn_loss(const TinyFnn& fnn, const Eigen::MatrixXd& x, const std::vector<int>& y) {
  check_arch(fnn);
  const ForwardState state = forward_all(fnn, x);
  const Eigen::MatrixXd& logits = state.pre.back();
  double loss = 0.0;
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const double target = y[static_cast<std::size_t>(j)] == 2 ? 1.0 : 0.0;
    const double z = logits(0, j);
    // log(1 + e^z) evaluated stably on both tails
    const double log1pexp = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    loss += log1pexp - target * z;
  }
  return loss / static_cast<double>(logits.cols());
}

FnnGradients fnn_gradients(const TinyFnn& fnn, const Eigen::MatrixXd& x,
                           const std::vector<int>& y) {
  check_arch(fnn);
  const ForwardState state = forward_all(fnn, x);
  const std::size_t layers = fnn.weights.size();
  const Eigen::Index n = x.rows();

  FnnGradients grads;
  grads.weights.resize(layers);
  grads.biases.resize(layers);

  // delta at the output: (sigmoid(z) - target) / N
  Eigen::MatrixXd delta(1, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double target = y[static_cast<std::size_t>(j)] == 2 ? 1.0 : 0.0;
    delta(0, j) = (sigmoid(state.pre.back()(0, j)) - target) / static_cast<double>(n);
  }
  for (std::size_t i = layers; i-- > 0;) {
    grads.weights[i] = delta * state.act[i].transpose();
    grads.biases[i] = delta.rowwise().sum();
    if (i > 0) {
      Eigen::MatrixXd back = fnn.weights[i].transpose() * delta;
      delta = back.cwiseProduct(
          (state.pre[i - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return grads;
}

TrainResult train_fnn(TinyFnn& fnn, const Eigen::MatrixXd& x, const std::vector<int>& y,
                      int max_epochs, double learning_rate) {
  check_arch(fnn);
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw DataError("train_fnn: label count does not match the sample count");
  }
  auto accuracy = [&]() {
    std::size_t correct = 0;
    for (Eigen::Index j = 0; j < x.rows(); ++j) {
      const auto [cls, score] = fnn.predict(x.row(j).transpose());
      if (cls == y[static_cast<std::size_t>(j)]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(x.rows());
  };

  for (int epoch = 1; epoch <= max_epochs; ++epoch) {
    const FnnGradients grads = fnn_gradients(fnn, x, y);
    for (std::size_t i = 0; i < fnn.weights.size(); ++i) {
      fnn.weights[i] -= learning_rate * grads.weights[i];
      fnn.biases[i] -= learning_rate * grads.biases[i];
    }
    const double acc = accuracy();
    if (acc >= 1.0) return {epoch, acc};
  }
  throw NumericError("train_fnn: did not reach 100% training accuracy within " +
                     std::to_string(max_epochs) + " epochs; try a different seed");
}

std::vector<EmbeddingRecord> toy_records(const ToyData& data, const TinyFnn& fnn) {
  std::vector<EmbeddingRecord> records;
  records.reserve(static_cast<std::size_t>(data.train_x.rows() + data.ic_x.rows() +
                                           data.ooc_x.rows()));
  std::size_t index = 0;
  auto push = [&](const Eigen::VectorXd& x, std::optional<int> true_label, Phase phase) {
    const auto [cls, score] = fnn.predict(x);
    EmbeddingRecord rec;
    rec.index = index++;
    rec.embedding = fnn.embed(x);
    rec.true_label = true_label;
    rec.predicted_label = cls;
    Eigen::VectorXd sm(2);
    sm << 1.0 - score, score;
    rec.softmax = sm;
    rec.phase = phase;
    records.push_back(std::move(rec));
  };
  for (Eigen::Index i = 0; i < data.train_x.rows(); ++i) {
    push(data.train_x.row(i).transpose(), data.train_y[static_cast<std::size_t>(i)],
         Phase::PhaseI);
  }
  for (Eigen::Index i = 0; i < data.ic_x.rows(); ++i) {
    push(data.ic_x.row(i).transpose(), data.ic_y[static_cast<std::size_t>(i)],
         Phase::PhaseII_InControl);
  }
  for (Eigen::Index i = 0; i < data.ooc_x.rows(); ++i) {
    push(data.ooc_x.row(i).transpose(), std::nullopt, Phase::PhaseII_OutOfControl);
  }
  return records;
}

BetaParams fit_beta_moments(const std::vector<double>& values) {
  if (values.size() < 2) throw NumericError("fit_beta_moments: need at least two values");
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw NumericError("fit_beta_moments: values must lie in [0, 1]");
    }
  }
  const double m = mean(values);
  const double var = sample_variance(values);
  if (var <= 1e-24) throw NumericError("fit_beta_moments: degenerate (zero) variance");
  const double common = m * (1.0 - m) / var - 1.0;
  if (common <= 0.0) {
    throw NumericError("fit_beta_moments: moments incompatible with a beta distribution");
  }
  return {m * common, (1.0 - m) * common};
}

double gamma_draw(double shape, Rng& rng) {
  // Marsaglia-Tsang; the shape < 1 case boosts and rescales.
  if (shape < 1.0) {
    const double u = rng.uniform();
    return gamma_draw(shape + 1.0, rng) * std::pow(u > 0.0 ? u : 1e-300, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double x = rng.normal();
    const double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    const double v = t * t * t;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double beta_draw(const BetaParams& params, Rng& rng) {
  const double gx = gamma_draw(params.alpha, rng);
  const double gy = gamma_draw(params.beta, rng);
  const double sum = gx + gy;
  return sum > 0.0 ? gx / sum : 0.5;
}

BetaRatioSampler::BetaRatioSampler(BetaParams class1, BetaParams class2, std::uint64_t seed)
    : rng_(derive_seed(seed, seed_tag::kBetaSampler, 0)) {
  if (class2.alpha <= 0.0 || class2.beta <= 0.0) {
    throw NumericError("BetaRatioSampler: class 2 parameters must be positive");
  }
  ratio_.alpha = class1.alpha / class2.alpha;
  ratio_.beta = class1.beta / class2.beta;
  if (ratio_.alpha <= 0.0 || ratio_.beta <= 0.0) {
    throw NumericError("BetaRatioSampler: ratio parameters must be positive");
  }
}

Eigen::VectorXd BetaRatioSampler::sample_vector(int dim) {
  Eigen::VectorXd out(dim);
  for (int i = 0; i < dim; ++i) out(i) = beta_draw(ratio_, rng_);
  return out;
}

StudySummary monte_carlo_study(const std::vector<EmbeddingRecord>& records,
                               std::size_t ref_size, const std::vector<DepthSpec>& specs,
                               const ChartConfig& config,
                               const std::vector<std::uint64_t>& run_seeds) {
  if (run_seeds.size() < 2) throw DataError("monte_carlo_study: need at least two runs");

  std::vector<EmbeddingRecord> phase1, phase2;
  for (const auto& rec : records) {
    (rec.phase == Phase::PhaseI ? phase1 : phase2).push_back(rec);
  }
  const auto validated = validate_phase1(phase1);
  const auto labels = class_labels(validated.kept);

  // metric -> per-run values, keyed by method label
  std::map<std::string, std::map<std::string, std::vector<double>>> runs;

  for (std::uint64_t run_seed : run_seeds) {
    std::map<int, ReferenceSet> refs;
    for (int label : labels) {
      refs.emplace(label,
                   build_reference_random(validated.kept, label, ref_size, run_seed));
    }
    for (const auto& spec : specs) {
      for (auto& [label, ref] : refs) populate_depth_cache(ref, spec);

      std::vector<RankedObs> phase1_obs;
      for (const auto& [label, ref] : refs) {
        const auto& cache = *ref.cached_depths(spec.cache_key());
        for (std::size_t row = 0; row < ref.size(); ++row) {
          phase1_obs.push_back({ref.source_indices()[row], label,
                                r_statistic(cache[row], cache), Phase::PhaseI});
        }
      }
      std::sort(phase1_obs.begin(), phase1_obs.end(),
                [](const RankedObs& a, const RankedObs& b) { return a.index < b.index; });
      auto signals = fold_ranked_stream(phase1_obs, config);
      const auto phase2_signals = monitor_stream(phase2, refs, spec, config);
      signals.insert(signals.end(), phase2_signals.begin(), phase2_signals.end());

      const MonitoringReport report = build_report(signals);
      auto& slot = runs[spec.method_label()];
      if (report.far()) slot["far"].push_back(*report.far());
      if (report.sr_weighted()) slot["sr"].push_back(*report.sr_weighted());
      if (report.cdr()) slot["cdr"].push_back(*report.cdr());
    }
  }

  StudySummary summary;
  for (const auto& [method, metrics] : runs) {
    for (const auto& [metric, values] : metrics) {
      MetricStats stats;
      stats.mean = mean(values);
      stats.stddev = values.size() >= 2 ? std::sqrt(sample_variance(values)) : 0.0;
      summary[method][metric] = stats;
    }
  }
  return summary;
}

}  // namespace depthwatch
