#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace h2sched {

struct RnnDims {
  int input = 1;
  int hidden = 5;
  int stack_layers = 4;  // feedforward tanh layers between recurrent state and output
  int output = 1;
};

// Recurrent forecaster: one tanh recurrent layer followed by a stack of tanh
// feedforward layers and a linear output.
//   a_k = W h_{k-1} + U x_k + c1,  h_k = tanh(a_k),  h0 = 0
//   z   = stack of tanh layers applied to h_k
//   y_k = V z + c2
struct RnnModel {
  RnnDims dims;
  Eigen::MatrixXd W;   // hidden x hidden
  Eigen::MatrixXd U;   // hidden x input
  Eigen::VectorXd c1;  // hidden
  std::vector<Eigen::MatrixXd> stack_w;  // each hidden x hidden
  std::vector<Eigen::VectorXd> stack_b;  // each hidden
  Eigen::MatrixXd V;   // output x hidden
  Eigen::VectorXd c2;  // output
};

// Weights uniform in [-0.5, 0.5] / sqrt(fan-in), biases zero. Deterministic
// for a fixed seed.
RnnModel init_model(const RnnDims& dims, std::uint64_t seed);

struct ForwardTrace {
  Eigen::MatrixXd rec_state;                 // hidden x tau, post-tanh
  std::vector<Eigen::MatrixXd> stack_state;  // per layer, hidden x tau
  Eigen::MatrixXd outputs;                   // output x tau
};

// inputs is input x tau, one column per time step. The hidden state resets to
// zero at the start of every window. Throws DataError naming the first
// non-finite input column.
ForwardTrace forward(const RnnModel& m, const Eigen::MatrixXd& inputs);

// (1/tau) * sum_t |y_t - yhat_t|^2
double sequence_loss(const Eigen::MatrixXd& targets, const Eigen::MatrixXd& predictions);

struct RnnGradients {
  Eigen::MatrixXd W, U;
  Eigen::VectorXd c1;
  std::vector<Eigen::MatrixXd> stack_w;
  std::vector<Eigen::VectorXd> stack_b;
  Eigen::MatrixXd V;
  Eigen::VectorXd c2;

  static RnnGradients zeros(const RnnDims& dims);
  void accumulate(const RnnGradients& other);
  void scale(double s);
  double squared_norm() const;
  bool finite() const;
};

// Exact gradients of sequence_loss w.r.t. every parameter, accumulated over
// all time steps by backpropagation through time.
RnnGradients backward(const RnnModel& m, const Eigen::MatrixXd& inputs,
                      const Eigen::MatrixXd& targets, const ForwardTrace& trace);

void apply_update(RnnModel& m, const RnnGradients& g, double step);

struct Normalizer {
  double mean = 0.0;
  double std = 1.0;
  double normalize(double v) const { return (v - mean) / std; }
  double denormalize(double v) const { return v * std + mean; }
};

// Population mean/std; std clamps to 1 when the values are constant.
Normalizer fit_normalizer(std::span<const double> values);

struct Window {
  Eigen::MatrixXd inputs;   // input x tau
  Eigen::MatrixXd targets;  // output x tau
};

enum class Split { train, validation, test };

struct WindowSet {
  std::vector<Window> windows;  // normalized
  std::vector<Split> split;     // parallel to windows
  int tau = 0;
  Normalizer norm;  // fitted on the training split only
};

// Slices the series into one-step-ahead windows (targets are the inputs
// shifted by one), randomly assigns them 70/15/15 to train/validation/test,
// fits the normalizer on the training windows, and normalizes everything.
WindowSet make_window_set(const std::vector<double>& series, int tau, int stride,
                          std::uint64_t seed);

struct TrainConfig {
  double learning_rate = 0.01;
  int max_iterations = 1000;
  int patience = 30;       // early stop after this many iterations w/o val improvement
  double clip_norm = 5.0;  // global gradient norm clip; <= 0 disables
  std::uint64_t seed = 0;
};

struct IterationStats {
  double train_mse = 0.0;
  double val_mse = 0.0;
  double test_mse = 0.0;
};

struct TrainResult {
  RnnModel best;  // snapshot with minimum validation MSE
  std::vector<IterationStats> history;
  int best_iteration = 0;  // 1-based index into history
};

// Full-batch gradient descent. The learning rate is halved (and the step
// retried) whenever the candidate update would raise the training MSE, so the
// recorded training MSE never increases. Throws DataError naming the
// iteration if the loss or a gradient becomes non-finite.
TrainResult train(RnnModel model, const WindowSet& data, const TrainConfig& cfg);

double mse_over(const RnnModel& m, const WindowSet& data, Split split);

// Runs the recurrence over the last tau normalized points of the history,
// then feeds 4 one-step predictions back recursively; each step is
// denormalized and clamped at zero, and the sum of the 4 steps is returned.
double forecast_next_hour(const RnnModel& m, const Normalizer& norm,
                          std::span<const double> history_kg, int tau);

void save_model(std::ostream& out, const RnnModel& m, const Normalizer& norm);
void save_model(const std::string& path, const RnnModel& m, const Normalizer& norm);

struct LoadedModel {
  RnnModel model;
  Normalizer norm;
};

// Strict parse; throws DataError naming the offending field. When expected
// dims are given, a mismatch throws ConfigError.
LoadedModel load_model(std::istream& in);
LoadedModel load_model(const std::string& path);
LoadedModel load_model(const std::string& path, const RnnDims& expected);

}  // namespace h2sched
