#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "depthwatch/charting.hpp"
#include "depthwatch/rng.hpp"
#include "depthwatch/types.hpp"

namespace depthwatch {

struct GaussianClassSpec {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;  // symmetric positive definite
  std::size_t count = 0;
};

// count x dim sample, deterministic given the Rng state.
Eigen::MatrixXd sample_gaussian(const GaussianClassSpec& spec, Rng& rng);

// dim x dim: unit diagonal, `offdiag` on the first off-diagonal band.
Eigen::MatrixXd band_covariance(int dim, double offdiag);

// Two well-separated 7-dimensional Gaussian classes plus a shifted
// out-of-control block: 100 training points per class, 50 Phase II
// in-control points per class, 50 out-of-control points.
struct ToyData {
  Eigen::MatrixXd train_x;  // 200 x 7, class 1 rows first
  std::vector<int> train_y;
  Eigen::MatrixXd ic_x;  // 100 x 7
  std::vector<int> ic_y;
  Eigen::MatrixXd ooc_x;  // 50 x 7
};

ToyData gen_toy_data(std::uint64_t seed);

// Fully connected net with ReLU hidden layers and a single logistic output
// scoring class 2. The embedding is the pre-activation of the layer at
// embedding_layer (an index into layer_sizes, so k = layer_sizes[index]).
struct TinyFnn {
  std::vector<int> layer_sizes;
  int embedding_layer = 0;
  std::vector<Eigen::MatrixXd> weights;  // weights[i]: sizes[i+1] x sizes[i]
  std::vector<Eigen::VectorXd> biases;

  Eigen::VectorXd embed(const Eigen::VectorXd& x) const;
  double output_score(const Eigen::VectorXd& x) const;        // logistic score of class 2
  std::pair<int, double> predict(const Eigen::VectorXd& x) const;  // class 2 iff score >= 0.5
};

TinyFnn make_fnn(std::vector<int> layer_sizes, int embedding_layer, std::uint64_t seed);

struct FnnGradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

// Mean binary cross-entropy over the batch; labels in {1, 2}.
double fnn_loss(const TinyFnn& fnn, const Eigen::MatrixXd& x, const std::vector<int>& y);
FnnGradients fnn_gradients(const TinyFnn& fnn, const Eigen::MatrixXd& x,
                           const std::vector<int>& y);

struct TrainResult {
  int epochs = 0;
  double accuracy = 0.0;
};

// Full-batch gradient descent; stops at 100% training accuracy or errors at
// the epoch cap advising a new seed.
TrainResult train_fnn(TinyFnn& fnn, const Eigen::MatrixXd& x, const std::vector<int>& y,
                      int max_epochs, double learning_rate);

// Assembles the monitored stream for the toy study: Phase I = training data,
// then the in-control and out-of-control blocks, indices consecutive.
std::vector<EmbeddingRecord> toy_records(const ToyData& data, const TinyFnn& fnn);

struct BetaParams {
  double alpha = 1.0;
  double beta = 1.0;
};

// Method-of-moments fit on values in [0, 1]; degenerate variance is an error.
BetaParams fit_beta_moments(const std::vector<double>& values);

// Out-of-control sampler: fits each class, then draws from
// Beta(a1/a2, b1/b2). Deterministic given the seed.
class BetaRatioSampler {
 public:
  BetaRatioSampler(BetaParams class1, BetaParams class2, std::uint64_t seed);
  BetaParams ratio() const { return ratio_; }
  Eigen::VectorXd sample_vector(int dim);

 private:
  BetaParams ratio_;
  Rng rng_;
};

double gamma_draw(double shape, Rng& rng);
double beta_draw(const BetaParams& params, Rng& rng);

struct MetricStats {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
};

// method label -> {"far", "sr", "cdr"} -> stats
using StudySummary = std::map<std::string, std::map<std::string, MetricStats>>;

// Repeats the Phase I/II pipeline with a fresh random reference sample per
// run (one run per entry of run_seeds) and aggregates FAR, SR and CDR.
StudySummary monte_carlo_study(const std::vector<EmbeddingRecord>& records,
                               std::size_t ref_size, const std::vector<DepthSpec>& specs,
                               const ChartConfig& config,
                               const std::vector<std::uint64_t>& run_seeds);

}  // namespace depthwatch
