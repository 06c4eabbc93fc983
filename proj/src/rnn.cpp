#include "h2sched/rnn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "h2sched/errors.hpp"
#include "h2sched/text_io.hpp"

namespace h2sched {

namespace {

constexpr char kModelTag[] = "h2sched-rnn-v1";
constexpr int kMaxHalvings = 60;

// [0, 1) from the top 53 bits; identical on every platform for a given seed.
double unit_uniform(std::mt19937_64& rng) {
  return double(rng() >> 11) * 0x1.0p-53;
}

void validate_dims(const RnnDims& d) {
  if (d.input < 1 || d.hidden < 1 || d.stack_layers < 0 || d.output < 1)
    throw ConfigError("invalid network dimensions: input " + std::to_string(d.input) +
                      ", hidden " + std::to_string(d.hidden) + ", stack " +
                      std::to_string(d.stack_layers) + ", output " +
                      std::to_string(d.output));
}

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  Eigen::MatrixXd m(rows, cols);
  double scale = 0.5 / std::sqrt(double(cols));
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = (2.0 * unit_uniform(rng) - 1.0) * scale;
  return m;
}

Eigen::VectorXd stack_apply(const RnnModel& m, Eigen::VectorXd z) {
  for (std::size_t l = 0; l < m.stack_w.size(); ++l)
    z = (m.stack_w[l] * z + m.stack_b[l]).array().tanh();
  return z;
}

}  // namespace

RnnModel init_model(const RnnDims& dims, std::uint64_t seed) {
  validate_dims(dims);
  std::mt19937_64 rng(seed);
  RnnModel m;
  m.dims = dims;
  m.W = random_matrix(dims.hidden, dims.hidden, rng);
  m.U = random_matrix(dims.hidden, dims.input, rng);
  m.c1 = Eigen::VectorXd::Zero(dims.hidden);
  m.stack_w.reserve(std::size_t(dims.stack_layers));
  m.stack_b.reserve(std::size_t(dims.stack_layers));
  for (int l = 0; l < dims.stack_layers; ++l) {
    m.stack_w.push_back(random_matrix(dims.hidden, dims.hidden, rng));
    m.stack_b.push_back(Eigen::VectorXd::Zero(dims.hidden));
  }
  m.V = random_matrix(dims.output, dims.hidden, rng);
  m.c2 = Eigen::VectorXd::Zero(dims.output);
  return m;
}

ForwardTrace forward(const RnnModel& m, const Eigen::MatrixXd& inputs) {
  if (inputs.rows() != m.dims.input)
    throw ConfigError("input rows " + std::to_string(inputs.rows()) +
                      " do not match network input size " + std::to_string(m.dims.input));
  Eigen::Index tau = inputs.cols();
  if (tau == 0) throw ConfigError("empty input sequence");
  for (Eigen::Index t = 0; t < tau; ++t)
    if (!inputs.col(t).allFinite())
      throw DataError("non-finite input at step " + std::to_string(t));

  ForwardTrace trace;
  trace.rec_state.resize(m.dims.hidden, tau);
  trace.stack_state.assign(m.stack_w.size(), Eigen::MatrixXd(m.dims.hidden, tau));
  trace.outputs.resize(m.dims.output, tau);

  Eigen::VectorXd h = Eigen::VectorXd::Zero(m.dims.hidden);
  for (Eigen::Index t = 0; t < tau; ++t) {
    h = (m.W * h + m.U * inputs.col(t) + m.c1).array().tanh();
    trace.rec_state.col(t) = h;
    Eigen::VectorXd z = h;
    for (std::size_t l = 0; l < m.stack_w.size(); ++l) {
      z = (m.stack_w[l] * z + m.stack_b[l]).array().tanh();
      trace.stack_state[l].col(t) = z;
    }
    trace.outputs.col(t) = m.V * z + m.c2;
  }
  return trace;
}

double sequence_loss(const Eigen::MatrixXd& targets, const Eigen::MatrixXd& predictions) {
  if (targets.rows() != predictions.rows() || targets.cols() != predictions.cols())
    throw ConfigError("target/prediction shape mismatch: " +
                      std::to_string(targets.cols()) + " vs " +
                      std::to_string(predictions.cols()) + " steps");
  if (targets.cols() == 0) throw ConfigError("empty sequences");
  return (targets - predictions).squaredNorm() / double(targets.cols());
}

RnnGradients RnnGradients::zeros(const RnnDims& dims) {
  RnnGradients g;
  g.W = Eigen::MatrixXd::Zero(dims.hidden, dims.hidden);
  g.U = Eigen::MatrixXd::Zero(dims.hidden, dims.input);
  g.c1 = Eigen::VectorXd::Zero(dims.hidden);
  g.stack_w.assign(std::size_t(dims.stack_layers),
                   Eigen::MatrixXd::Zero(dims.hidden, dims.hidden));
  g.stack_b.assign(std::size_t(dims.stack_layers), Eigen::VectorXd::Zero(dims.hidden));
  g.V = Eigen::MatrixXd::Zero(dims.output, dims.hidden);
  g.c2 = Eigen::VectorXd::Zero(dims.output);
  return g;
}

void RnnGradients::accumulate(const RnnGradients& other) {
  W += other.W;
  U += other.U;
  c1 += other.c1;
  for (std::size_t l = 0; l < stack_w.size(); ++l) {
    stack_w[l] += other.stack_w[l];
    stack_b[l] += other.stack_b[l];
  }
  V += other.V;
  c2 += other.c2;
}

void RnnGradients::scale(double s) {
  W *= s;
  U *= s;
  c1 *= s;
  for (std::size_t l = 0; l < stack_w.size(); ++l) {
    stack_w[l] *= s;
    stack_b[l] *= s;
  }
  V *= s;
  c2 *= s;
}

double RnnGradients::squared_norm() const {
  double n = W.squaredNorm() + U.squaredNorm() + c1.squaredNorm() + V.squaredNorm() +
             c2.squaredNorm();
  for (std::size_t l = 0; l < stack_w.size(); ++l)
    n += stack_w[l].squaredNorm() + stack_b[l].squaredNorm();
  return n;
}

bool RnnGradients::finite() const {
  bool ok = W.allFinite() && U.allFinite() && c1.allFinite() && V.allFinite() &&
            c2.allFinite();
  for (std::size_t l = 0; ok && l < stack_w.size(); ++l)
    ok = stack_w[l].allFinite() && stack_b[l].allFinite();
  return ok;
}

RnnGradients backward(const RnnModel& m, const Eigen::MatrixXd& inputs,
                      const Eigen::MatrixXd& targets, const ForwardTrace& trace) {
  Eigen::Index tau = inputs.cols();
  if (targets.cols() != tau || targets.rows() != m.dims.output)
    throw ConfigError("target shape does not match outputs");

  RnnGradients g = RnnGradients::zeros(m.dims);
  std::size_t layers = m.stack_w.size();
  Eigen::VectorXd dh_carry = Eigen::VectorXd::Zero(m.dims.hidden);

  for (Eigen::Index t = tau - 1; t >= 0; --t) {
    Eigen::VectorXd dy =
        (2.0 / double(tau)) * (trace.outputs.col(t) - targets.col(t));
    const auto& z_top =
        layers > 0 ? trace.stack_state[layers - 1].col(t) : trace.rec_state.col(t);
    g.V.noalias() += dy * z_top.transpose();
    g.c2 += dy;

    Eigen::VectorXd dz = m.V.transpose() * dy;
    for (std::size_t l = layers; l-- > 0;) {
      Eigen::VectorXd z = trace.stack_state[l].col(t);
      Eigen::VectorXd da = dz.cwiseProduct((1.0 - z.array().square()).matrix());
      const auto& below = l > 0 ? trace.stack_state[l - 1].col(t) : trace.rec_state.col(t);
      g.stack_w[l].noalias() += da * below.transpose();
      g.stack_b[l] += da;
      dz = m.stack_w[l].transpose() * da;
    }

    Eigen::VectorXd h = trace.rec_state.col(t);
    Eigen::VectorXd da_rec =
        (dz + dh_carry).cwiseProduct((1.0 - h.array().square()).matrix());
    if (t > 0)
      g.W.noalias() += da_rec * trace.rec_state.col(t - 1).transpose();
    g.U.noalias() += da_rec * inputs.col(t).transpose();
    g.c1 += da_rec;
    dh_carry = m.W.transpose() * da_rec;
  }
  return g;
}

void apply_update(RnnModel& m, const RnnGradients& g, double step) {
  m.W += step * g.W;
  m.U += step * g.U;
  m.c1 += step * g.c1;
  for (std::size_t l = 0; l < m.stack_w.size(); ++l) {
    m.stack_w[l] += step * g.stack_w[l];
    m.stack_b[l] += step * g.stack_b[l];
  }
  m.V += step * g.V;
  m.c2 += step * g.c2;
}

Normalizer fit_normalizer(std::span<const double> values) {
  if (values.empty()) throw ConfigError("cannot fit normalizer on empty data");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= double(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= double(values.size());
  double std = std::sqrt(var);
  if (std < 1e-12) std = 1.0;
  return Normalizer{mean, std};
}

WindowSet make_window_set(const std::vector<double>& series, int tau, int stride,
                          std::uint64_t seed) {
  if (tau < 1) throw ConfigError("window length must be >= 1");
  if (stride < 1) throw ConfigError("window stride must be >= 1");
  if (series.size() < std::size_t(tau) + 1)
    throw ConfigError("series too short for window length " + std::to_string(tau) +
                      ": " + std::to_string(series.size()) + " points");

  std::size_t count = (series.size() - std::size_t(tau) - 1) / std::size_t(stride) + 1;

  WindowSet set;
  set.tau = tau;
  set.windows.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    std::size_t start = w * std::size_t(stride);
    Window win;
    win.inputs.resize(1, tau);
    win.targets.resize(1, tau);
    for (int t = 0; t < tau; ++t) {
      win.inputs(0, t) = series[start + std::size_t(t)];
      win.targets(0, t) = series[start + std::size_t(t) + 1];
    }
    set.windows.push_back(std::move(win));
  }

  // Random 70/15/15 assignment over whole windows.
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = count; i > 1; --i)
    std::swap(order[i - 1], order[rng() % i]);

  std::size_t n_val = std::size_t(std::llround(0.15 * double(count)));
  std::size_t n_test = std::size_t(std::llround(0.15 * double(count)));
  set.split.assign(count, Split::train);
  for (std::size_t i = 0; i < n_val; ++i) set.split[order[i]] = Split::validation;
  for (std::size_t i = n_val; i < n_val + n_test; ++i) set.split[order[i]] = Split::test;

  std::vector<double> train_values;
  for (std::size_t w = 0; w < count; ++w) {
    if (set.split[w] != Split::train) continue;
    for (int t = 0; t < tau; ++t) train_values.push_back(set.windows[w].inputs(0, t));
    train_values.push_back(set.windows[w].targets(0, tau - 1));
  }
  if (train_values.empty()) throw ConfigError("no training windows after split");
  set.norm = fit_normalizer(train_values);

  for (Window& w : set.windows) {
    w.inputs = (w.inputs.array() - set.norm.mean) / set.norm.std;
    w.targets = (w.targets.array() - set.norm.mean) / set.norm.std;
  }
  return set;
}

double mse_over(const RnnModel& m, const WindowSet& data, Split split) {
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t w = 0; w < data.windows.size(); ++w) {
    if (data.split[w] != split) continue;
    ForwardTrace trace = forward(m, data.windows[w].inputs);
    total += sequence_loss(data.windows[w].targets, trace.outputs);
    ++n;
  }
  if (n == 0) throw ConfigError("no windows in requested split");
  return total / double(n);
}

TrainResult train(RnnModel model, const WindowSet& data, const TrainConfig& cfg) {
  if (cfg.learning_rate < 0.0) throw ConfigError("learning rate must be >= 0");
  if (cfg.max_iterations < 1) throw ConfigError("max iterations must be >= 1");
  if (cfg.patience < 1) throw ConfigError("patience must be >= 1");
  if (data.windows.size() != data.split.size())
    throw ConfigError("window/split size mismatch");

  std::vector<std::size_t> train_idx;
  bool has_val = false, has_test = false;
  for (std::size_t w = 0; w < data.windows.size(); ++w) {
    if (data.split[w] == Split::train) train_idx.push_back(w);
    has_val |= data.split[w] == Split::validation;
    has_test |= data.split[w] == Split::test;
  }
  if (train_idx.empty() || !has_val || !has_test)
    throw ConfigError("each split needs at least one window");

  double cur_train = mse_over(model, data, Split::train);
  if (!std::isfinite(cur_train))
    throw DataError("training diverged at iteration 1: non-finite loss");

  TrainResult result;
  result.history.reserve(std::size_t(cfg.max_iterations));
  double best_val = std::numeric_limits<double>::infinity();
  int since_best = 0;
  double lr = cfg.learning_rate;

  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    RnnGradients grads = RnnGradients::zeros(model.dims);
    for (std::size_t w : train_idx) {
      ForwardTrace trace = forward(model, data.windows[w].inputs);
      grads.accumulate(backward(model, data.windows[w].inputs,
                                data.windows[w].targets, trace));
    }
    grads.scale(1.0 / double(train_idx.size()));
    if (!grads.finite())
      throw DataError("training diverged at iteration " + std::to_string(iter) +
                      ": non-finite gradient");
    if (cfg.clip_norm > 0.0) {
      double norm = std::sqrt(grads.squared_norm());
      if (norm > cfg.clip_norm) grads.scale(cfg.clip_norm / norm);
    }

    // Backtrack: halve the learning rate until the step no longer raises the
    // training MSE; give up and keep the current parameters if it never does.
    RnnModel candidate = model;
    double cand_train = cur_train;
    for (int halvings = 0;; ++halvings) {
      candidate = model;
      apply_update(candidate, grads, -lr);
      cand_train = mse_over(candidate, data, Split::train);
      if (std::isfinite(cand_train) && cand_train <= cur_train) break;
      if (halvings >= kMaxHalvings) {
        candidate = model;
        cand_train = cur_train;
        break;
      }
      lr /= 2.0;
    }
    model = std::move(candidate);
    cur_train = cand_train;

    double val = mse_over(model, data, Split::validation);
    double test = mse_over(model, data, Split::test);
    if (!std::isfinite(val) || !std::isfinite(test))
      throw DataError("training diverged at iteration " + std::to_string(iter) +
                      ": non-finite loss");
    result.history.push_back(IterationStats{cur_train, val, test});

    if (val < best_val) {
      best_val = val;
      result.best = model;
      result.best_iteration = iter;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  return result;
}

double forecast_next_hour(const RnnModel& m, const Normalizer& norm,
                          std::span<const double> history_kg, int tau) {
  if (m.dims.input != 1 || m.dims.output != 1)
    throw ConfigError("hourly forecasting requires a scalar input/output network");
  if (tau < 1) throw ConfigError("window length must be >= 1");
  if (history_kg.size() < std::size_t(tau))
    throw ConfigError("history too short: " + std::to_string(history_kg.size()) +
                      " points, need " + std::to_string(tau));

  Eigen::MatrixXd inputs(1, tau);
  std::size_t offset = history_kg.size() - std::size_t(tau);
  for (int t = 0; t < tau; ++t)
    inputs(0, t) = norm.normalize(history_kg[offset + std::size_t(t)]);

  ForwardTrace trace = forward(m, inputs);
  Eigen::VectorXd h = trace.rec_state.col(tau - 1);
  double pred = trace.outputs(0, tau - 1);

  double total_kg = std::max(0.0, norm.denormalize(pred));
  for (int step = 1; step < 4; ++step) {
    Eigen::VectorXd x(1);
    x(0) = pred;  // feed the raw normalized prediction back as input
    h = (m.W * h + m.U * x + m.c1).array().tanh();
    pred = (m.V * stack_apply(m, h) + m.c2)(0);
    total_kg += std::max(0.0, norm.denormalize(pred));
  }
  return total_kg;
}

namespace {

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ' ';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

void write_vector(std::ostream& out, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out << ' ';
    out << format_double(v(i));
  }
  out << '\n';
}

struct ModelReader {
  std::istream& in;
  std::string field;

  std::string line() {
    std::string l;
    if (!std::getline(in, l))
      throw DataError("model file truncated in " + field);
    return l;
  }

  void expect_header(const std::string& name) {
    field = name;
    if (std::string(trim(line())) != name)
      throw DataError("model file: expected section '" + name + "'");
  }

  std::vector<double> values(std::size_t count) {
    auto fields = split_line(std::string(trim(line())), ' ');
    std::vector<double> out;
    for (const auto& f : fields) {
      if (f.empty()) continue;
      auto v = parse_double(f);
      if (!v) throw DataError("model file: bad value in " + field);
      out.push_back(*v);
    }
    if (out.size() != count)
      throw DataError("model file: wrong value count in " + field + ": expected " +
                      std::to_string(count) + ", got " + std::to_string(out.size()));
    return out;
  }

  Eigen::MatrixXd matrix(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    expect_header(name);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      field = name + " row " + std::to_string(r + 1);
      auto vals = values(std::size_t(cols));
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = vals[std::size_t(c)];
    }
    return m;
  }

  Eigen::VectorXd vector(const std::string& name, Eigen::Index size) {
    expect_header(name);
    field = name;
    auto vals = values(std::size_t(size));
    Eigen::VectorXd v(size);
    for (Eigen::Index i = 0; i < size; ++i) v(i) = vals[std::size_t(i)];
    return v;
  }
};

}  // namespace

void save_model(std::ostream& out, const RnnModel& m, const Normalizer& norm) {
  out << kModelTag << '\n';
  out << "dims " << m.dims.input << ' ' << m.dims.hidden << ' ' << m.dims.stack_layers
      << ' ' << m.dims.output << '\n';
  out << "W\n";
  write_matrix(out, m.W);
  out << "U\n";
  write_matrix(out, m.U);
  out << "c1\n";
  write_vector(out, m.c1);
  for (std::size_t l = 0; l < m.stack_w.size(); ++l) {
    out << "stack_w " << l << '\n';
    write_matrix(out, m.stack_w[l]);
    out << "stack_b " << l << '\n';
    write_vector(out, m.stack_b[l]);
  }
  out << "V\n";
  write_matrix(out, m.V);
  out << "c2\n";
  write_vector(out, m.c2);
  out << "normalizer\n";
  out << format_double(norm.mean) << ' ' << format_double(norm.std) << '\n';
}

void save_model(const std::string& path, const RnnModel& m, const Normalizer& norm) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  save_model(out, m, norm);
  if (!out) throw DataError("write failed: " + path);
}

LoadedModel load_model(std::istream& in) {
  ModelReader reader{in, "header"};
  if (std::string(trim(reader.line())) != kModelTag)
    throw DataError("model file: missing version tag " + std::string(kModelTag));

  reader.field = "dims";
  auto dims_line = reader.line();
  auto dims_fields = split_line(std::string(trim(dims_line)), ' ');
  if (dims_fields.size() != 5 || dims_fields[0] != "dims")
    throw DataError("model file: malformed dims line");
  RnnDims dims;
  auto geti = [&](std::size_t i) {
    auto v = parse_int(dims_fields[i]);
    if (!v) throw DataError("model file: bad value in dims");
    return int(*v);
  };
  dims.input = geti(1);
  dims.hidden = geti(2);
  dims.stack_layers = geti(3);
  dims.output = geti(4);
  validate_dims(dims);

  LoadedModel loaded;
  RnnModel& m = loaded.model;
  m.dims = dims;
  m.W = reader.matrix("W", dims.hidden, dims.hidden);
  m.U = reader.matrix("U", dims.hidden, dims.input);
  m.c1 = reader.vector("c1", dims.hidden);
  for (int l = 0; l < dims.stack_layers; ++l) {
    m.stack_w.push_back(
        reader.matrix("stack_w " + std::to_string(l), dims.hidden, dims.hidden));
    m.stack_b.push_back(reader.vector("stack_b " + std::to_string(l), dims.hidden));
  }
  m.V = reader.matrix("V", dims.output, dims.hidden);
  m.c2 = reader.vector("c2", dims.output);
  reader.expect_header("normalizer");
  reader.field = "normalizer";
  auto nv = reader.values(2);
  loaded.norm.mean = nv[0];
  loaded.norm.std = nv[1];
  if (!(loaded.norm.std > 0.0)) throw DataError("model file: normalizer std must be > 0");
  return loaded;
}

LoadedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file: " + path);
  return load_model(in);
}

LoadedModel load_model(const std::string& path, const RnnDims& expected) {
  LoadedModel loaded = load_model(path);
  const RnnDims& d = loaded.model.dims;
  if (d.input != expected.input || d.hidden != expected.hidden ||
      d.stack_layers != expected.stack_layers || d.output != expected.output)
    throw ConfigError("model dimensions (" + std::to_string(d.input) + "," +
                      std::to_string(d.hidden) + "," + std::to_string(d.stack_layers) +
                      "," + std::to_string(d.output) + ") do not match configured (" +
                      std::to_string(expected.input) + "," +
                      std::to_string(expected.hidden) + "," +
                      std::to_string(expected.stack_layers) + "," +
                      std::to_string(expected.output) + ")");
  return loaded;
}

}  // namespace h2sched
