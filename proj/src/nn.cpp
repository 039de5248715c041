#include "uavzone/nn.hpp"

#include "uavzone/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace uavzone::nn {

namespace {

void check(bool ok, const char* op, const std::string& what) {
  if (!ok) throw std::invalid_argument(std::string(op) + ": shape mismatch, " + what);
}

std::size_t batch_of(const Mat& x, std::size_t steps, const char* op) {
  check(steps > 0 && x.rows() % static_cast<Eigen::Index>(steps) == 0, op,
        "rows not divisible by steps");
  return static_cast<std::size_t>(x.rows()) / steps;
}

Eigen::Map<const Eigen::RowVectorXd> row_view(const Tensor& t) {
  return {t.data().data(), static_cast<Eigen::Index>(t.size())};
}

Eigen::Map<Eigen::RowVectorXd> row_view(Tensor& t) {
  return {t.data().data(), static_cast<Eigen::Index>(t.size())};
}

Mat sigmoid(const Mat& x) { return (1.0 + (-x.array()).exp()).inverse().matrix(); }

}  // namespace

// ---------------------------------------------------------------------------

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)),
      data_(std::accumulate(shape_.begin(), shape_.end(), std::size_t{1},
                            std::multiplies<>()),
            fill) {}

Eigen::Map<Mat> Tensor::matrix() {
  const auto rows = shape_.empty() ? std::size_t{1} : shape_.front();
  const auto cols = rows == 0 ? 0 : data_.size() / rows;
  return {data_.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

Eigen::Map<const Mat> Tensor::matrix() const {
  const auto rows = shape_.empty() ? std::size_t{1} : shape_.front();
  const auto cols = rows == 0 ? 0 : data_.size() / rows;
  return {data_.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Tensor::shape_string() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape_.size(); ++i) os << (i ? "," : "") << shape_[i];
  os << ']';
  return os.str();
}

Parameter::Parameter(std::string name_, std::vector<std::size_t> shape)
    : name(std::move(name_)), value(shape), grad(shape), moment1(shape), moment2(shape) {}

// ---------------------------------------------------------------------------

namespace {

struct ConvShape {
  std::size_t out, in, width, pad, batch;
};

ConvShape conv_shape(const Mat& x, std::size_t steps, const Parameter& kernel,
                     const Parameter& bias) {
  const auto& ks = kernel.value.shape();
  check(ks.size() == 3, "conv1d", "kernel must be F_out x F_in x K");
  check(ks[2] % 2 == 1, "conv1d", "kernel width must be odd");
  check(static_cast<std::size_t>(x.cols()) == ks[1], "conv1d",
        "input has " + std::to_string(x.cols()) + " channels, kernel expects " +
            std::to_string(ks[1]));
  check(bias.value.size() == ks[0], "conv1d", "bias length differs from F_out");
  return {ks[0], ks[1], ks[2], (ks[2] - 1) / 2, batch_of(x, steps, "conv1d")};
}

// Tap k of the kernel as an F_in x F_out matrix.
Mat kernel_tap(const Tensor& kernel, const ConvShape& s, std::size_t k) {
  Mat tap(s.in, s.out);
  for (std::size_t o = 0; o < s.out; ++o)
    for (std::size_t i = 0; i < s.in; ++i) tap(i, o) = kernel[(o * s.in + i) * s.width + k];
  return tap;
}

struct TapRange {
  Eigen::Index out_row, in_row, rows;
};

// Output steps t whose input t + shift lies inside [0, steps).
TapRange tap_range(const ConvShape& s, std::size_t steps, std::size_t k) {
  const auto shift = static_cast<long>(k) - static_cast<long>(s.pad);
  const long begin = std::max(0L, -shift);
  const long end = std::min(static_cast<long>(steps), static_cast<long>(steps) - shift);
  const auto b = static_cast<long>(s.batch);
  return {begin * b, (begin + shift) * b, std::max(0L, end - begin) * b};
}

}  // namespace

Mat conv1d_forward(const Mat& x, std::size_t steps, const Parameter& kernel,
                   const Parameter& bias) {
  const auto s = conv_shape(x, steps, kernel, bias);
  Mat out(x.rows(), static_cast<Eigen::Index>(s.out));
  out.rowwise() = row_view(bias.value);
  for (std::size_t k = 0; k < s.width; ++k) {
    const auto r = tap_range(s, steps, k);
    if (r.rows == 0) continue;
    const Mat tap = kernel_tap(kernel.value, s, k);
    out.middleRows(r.out_row, r.rows).noalias() += x.middleRows(r.in_row, r.rows) * tap;
  }
  return out;
}

Mat conv1d_backward(const Mat& x, std::size_t steps, Parameter& kernel, Parameter& bias,
                    const Mat& grad_out) {
  const auto s = conv_shape(x, steps, kernel, bias);
  check(grad_out.rows() == x.rows() && static_cast<std::size_t>(grad_out.cols()) == s.out,
        "conv1d", "output gradient shape");
  Mat grad_x = Mat::Zero(x.rows(), x.cols());
  for (std::size_t k = 0; k < s.width; ++k) {
    const auto r = tap_range(s, steps, k);
    if (r.rows == 0) continue;
    const Mat tap = kernel_tap(kernel.value, s, k);
    const auto g = grad_out.middleRows(r.out_row, r.rows);
    grad_x.middleRows(r.in_row, r.rows).noalias() += g * tap.transpose();
    const Mat tap_grad = x.middleRows(r.in_row, r.rows).transpose() * g;
    for (std::size_t o = 0; o < s.out; ++o)
      for (std::size_t i = 0; i < s.in; ++i)
        kernel.grad[(o * s.in + i) * s.width + k] += tap_grad(i, o);
  }
  row_view(bias.grad) += grad_out.colwise().sum();
  return grad_x;
}

// ---------------------------------------------------------------------------

Mat layer_norm_forward(const Mat& x, const Parameter& gain, const Parameter& bias, double eps,
                       LayerNormCache& cache) {
  check(static_cast<std::size_t>(x.cols()) == gain.value.size() &&
            gain.value.size() == bias.value.size(),
        "layer_norm", "gain/bias length differs from channel count");
  const Vec mean = x.rowwise().mean();
  Mat centered = x.colwise() - mean;
  const Vec var = centered.array().square().rowwise().mean();
  cache.inv_std = (var.array() + eps).rsqrt();
  cache.normalized = centered.array().colwise() * cache.inv_std.array();
  Mat out = cache.normalized.array().rowwise() * row_view(gain.value).array();
  out.rowwise() += row_view(bias.value);
  return out;
}

Mat layer_norm_backward(const LayerNormCache& cache, Parameter& gain, Parameter& bias,
                        const Mat& grad_out) {
  const auto& xhat = cache.normalized;
  row_view(gain.grad) += (grad_out.array() * xhat.array()).colwise().sum().matrix();
  row_view(bias.grad) += grad_out.colwise().sum();
  const Mat dxhat = grad_out.array().rowwise() * row_view(gain.value).array();
  const Vec m1 = dxhat.rowwise().mean();
  const Vec m2 = (dxhat.array() * xhat.array()).rowwise().mean();
  Mat grad_x = (dxhat.colwise() - m1).array() - xhat.array().colwise() * m2.array();
  grad_x.array().colwise() *= cache.inv_std.array();
  return grad_x;
}

Mat relu(const Mat& x) { return x.cwiseMax(0.0); }

Mat relu_backward(const Mat& output, const Mat& grad_out) {
  return (output.array() > 0.0).select(grad_out, 0.0);
}

// ---------------------------------------------------------------------------

LstmWeights::LstmWeights(const std::string& prefix, std::size_t input_size, std::size_t hidden)
    : w_ih(prefix + ".w_ih", {4 * hidden, input_size}),
      w_hh(prefix + ".w_hh", {4 * hidden, hidden}),
      bias(prefix + ".bias", {4 * hidden}) {}

namespace {

void check_lstm(const LstmWeights& w, Eigen::Index input_cols) {
  const auto h = w.hidden();
  check(w.w_ih.value.shape()[0] == 4 * h && w.w_hh.value.shape()[0] == 4 * h &&
            w.bias.value.size() == 4 * h,
        "lstm", "gate parameters must stack 4 gates of the hidden size");
  check(static_cast<std::size_t>(input_cols) == w.input_size(), "lstm",
        "input has " + std::to_string(input_cols) + " features, weights expect " +
            std::to_string(w.input_size()));
}

// gates: pre-activations (B x 4H) including input projection and bias.
LstmState cell_forward(const Mat& gates, const Mat& c_prev, LstmStepCache& cache) {
  const auto h = c_prev.cols();
  cache.input_gate = sigmoid(gates.leftCols(h));
  cache.forget_gate = sigmoid(gates.middleCols(h, h));
  cache.candidate = gates.middleCols(2 * h, h).array().tanh().matrix();
  cache.output_gate = sigmoid(gates.rightCols(h));
  LstmState out;
  out.c = cache.forget_gate.cwiseProduct(c_prev) + cache.input_gate.cwiseProduct(cache.candidate);
  cache.tanh_c = out.c.array().tanh().matrix();
  out.h = cache.output_gate.cwiseProduct(cache.tanh_c);
  return out;
}

// Returns d(gate pre-activations); accumulates the recurrent weight gradient.
Mat cell_backward(const LstmStepCache& cache, Parameter& w_hh, const Mat& grad_h,
                  const Mat& grad_c, Mat& grad_c_prev) {
  const auto h = grad_h.cols();
  const auto& i = cache.input_gate.array();
  const auto& f = cache.forget_gate.array();
  const auto& g = cache.candidate.array();
  const auto& o = cache.output_gate.array();
  const auto& tc = cache.tanh_c.array();
  const Eigen::ArrayXXd dc = grad_c.array() + grad_h.array() * o * (1.0 - tc.square());
  Mat dgates(grad_h.rows(), 4 * h);
  dgates.leftCols(h) = (dc * g * i * (1.0 - i)).matrix();
  dgates.middleCols(h, h) = (dc * cache.c_prev.array() * f * (1.0 - f)).matrix();
  dgates.middleCols(2 * h, h) = (dc * i * (1.0 - g.square())).matrix();
  dgates.rightCols(h) = (grad_h.array() * tc * o * (1.0 - o)).matrix();
  grad_c_prev = (dc * f).matrix();
  w_hh.grad.matrix().noalias() += dgates.transpose() * cache.h_prev;
  return dgates;
}

}  // namespace

LstmState lstm_step(const Mat& x, const Mat& h_prev, const Mat& c_prev, const LstmWeights& w,
                    LstmStepCache* cache) {
  check_lstm(w, x.cols());
  check(h_prev.cols() == static_cast<Eigen::Index>(w.hidden()) && c_prev.cols() == h_prev.cols() &&
            h_prev.rows() == x.rows() && c_prev.rows() == x.rows(),
        "lstm", "state shape");
  Mat gates = x * w.w_ih.value.matrix().transpose() + h_prev * w.w_hh.value.matrix().transpose();
  gates.rowwise() += row_view(w.bias.value);
  LstmStepCache local;
  LstmStepCache& c = cache ? *cache : local;
  c.x = x;
  c.h_prev = h_prev;
  c.c_prev = c_prev;
  return cell_forward(gates, c_prev, c);
}

LstmStepGrads lstm_step_backward(const LstmStepCache& cache, LstmWeights& w, const Mat& grad_h,
                                 const Mat& grad_c) {
  LstmStepGrads out;
  const Mat dgates = cell_backward(cache, w.w_hh, grad_h, grad_c, out.c_prev);
  w.w_ih.grad.matrix().noalias() += dgates.transpose() * cache.x;
  row_view(w.bias.grad) += dgates.colwise().sum();
  out.x = dgates * w.w_ih.value.matrix();
  out.h_prev = dgates * w.w_hh.value.matrix();
  return out;
}

Mat lstm_forward(const Mat& x, std::size_t steps, const LstmWeights& w, bool reverse,
                 LstmCache& cache) {
  check_lstm(w, x.cols());
  const auto batch = static_cast<Eigen::Index>(batch_of(x, steps, "lstm"));
  const auto hidden = static_cast<Eigen::Index>(w.hidden());
  cache.steps = steps;
  cache.reverse = reverse;
  cache.input = x;
  cache.cells.assign(steps, {});

  Mat pre = x * w.w_ih.value.matrix().transpose();
  pre.rowwise() += row_view(w.bias.value);
  const Mat w_hh_t = w.w_hh.value.matrix().transpose();

  Mat out(x.rows(), hidden);
  Mat h = Mat::Zero(batch, hidden);
  Mat c = Mat::Zero(batch, hidden);
  for (std::size_t n = 0; n < steps; ++n) {
    const std::size_t t = reverse ? steps - 1 - n : n;
    auto& cell = cache.cells[t];
    Mat gates = pre.middleRows(static_cast<Eigen::Index>(t) * batch, batch);
    gates.noalias() += h * w_hh_t;
    cell.h_prev = h;
    cell.c_prev = c;
    auto state = cell_forward(gates, c, cell);
    h = std::move(state.h);
    c = std::move(state.c);
    out.middleRows(static_cast<Eigen::Index>(t) * batch, batch) = h;
  }
  return out;
}

Mat lstm_backward(const LstmCache& cache, LstmWeights& w, const Mat& grad_out) {
  const auto steps = cache.steps;
  const auto batch = static_cast<Eigen::Index>(batch_of(cache.input, steps, "lstm"));
  const auto hidden = static_cast<Eigen::Index>(w.hidden());
  check(grad_out.rows() == cache.input.rows() && grad_out.cols() == hidden, "lstm",
        "output gradient shape");

  Mat dpre(cache.input.rows(), 4 * hidden);
  Mat dh_next = Mat::Zero(batch, hidden);
  Mat dc_next = Mat::Zero(batch, hidden);
  const auto& w_hh = w.w_hh.value.matrix();
  for (std::size_t n = steps; n-- > 0;) {
    const std::size_t t = cache.reverse ? steps - 1 - n : n;
    const auto rows = static_cast<Eigen::Index>(t) * batch;
    const Mat dh = grad_out.middleRows(rows, batch) + dh_next;
    Mat dc_prev;
    const Mat dgates = cell_backward(cache.cells[t], w.w_hh, dh, dc_next, dc_prev);
    dpre.middleRows(rows, batch) = dgates;
    dh_next.noalias() = dgates * w_hh;
    dc_next = std::move(dc_prev);
  }
  w.w_ih.grad.matrix().noalias() += dpre.transpose() * cache.input;
  row_view(w.bias.grad) += dpre.colwise().sum();
  return dpre * w.w_ih.value.matrix();
}

Mat bilstm_forward(const Mat& x, std::size_t steps, const LstmWeights& fwd,
                   const LstmWeights& bwd, BiLstmCache& cache) {
  check(fwd.hidden() == bwd.hidden(), "bilstm", "directions must share the hidden size");
  const Mat hf = lstm_forward(x, steps, fwd, false, cache.forward);
  const Mat hb = lstm_forward(x, steps, bwd, true, cache.backward);
  Mat out(x.rows(), hf.cols() + hb.cols());
  out << hf, hb;
  return out;
}

Mat bilstm_backward(const BiLstmCache& cache, LstmWeights& fwd, LstmWeights& bwd,
                    const Mat& grad_out) {
  const auto h = static_cast<Eigen::Index>(fwd.hidden());
  Mat grad_x = lstm_backward(cache.forward, fwd, grad_out.leftCols(h));
  grad_x += lstm_backward(cache.backward, bwd, grad_out.rightCols(h));
  return grad_x;
}

// ---------------------------------------------------------------------------

AttentionOutput additive_attention_forward(const Mat& states, std::size_t steps,
                                           const Parameter& weight, const Parameter& bias,
                                           AttentionCache& cache) {
  check(weight.value.size() == static_cast<std::size_t>(states.cols()), "attention",
        "score weight length differs from state width");
  check(bias.value.size() == 1, "attention", "score bias must be scalar");
  const auto batch = static_cast<Eigen::Index>(batch_of(states, steps, "attention"));
  const auto n = static_cast<Eigen::Index>(steps);
  const Eigen::Map<const Vec> w(weight.value.data().data(), states.cols());

  const Vec scores = (states * w).array() + bias.value[0];
  Mat alphas(batch, n);
  for (Eigen::Index t = 0; t < n; ++t) alphas.col(t) = scores.segment(t * batch, batch);
  const Vec row_max = alphas.rowwise().maxCoeff();
  alphas = (alphas.colwise() - row_max).array().exp();
  const Vec row_sum = alphas.rowwise().sum();
  alphas.array().colwise() /= row_sum.array();

  AttentionOutput out;
  out.context = Mat::Zero(batch, states.cols());
  for (Eigen::Index t = 0; t < n; ++t)
    out.context += (states.middleRows(t * batch, batch).array().colwise() *
                    alphas.col(t).array())
                       .matrix();
  out.alphas = alphas;
  cache.steps = steps;
  cache.states = states;
  cache.alphas = std::move(alphas);
  return out;
}

Mat additive_attention_backward(const AttentionCache& cache, Parameter& weight, Parameter& bias,
                                const Mat& grad_context) {
  const auto& states = cache.states;
  const auto& alphas = cache.alphas;
  const auto batch = alphas.rows();
  const auto n = alphas.cols();
  check(grad_context.rows() == batch && grad_context.cols() == states.cols(), "attention",
        "context gradient shape");
  Mat dalpha(batch, n);
  for (Eigen::Index t = 0; t < n; ++t)
    dalpha.col(t) =
        (grad_context.array() * states.middleRows(t * batch, batch).array()).rowwise().sum();
  const Vec weighted = (alphas.array() * dalpha.array()).rowwise().sum();
  const Mat dscore = alphas.array() * (dalpha.colwise() - weighted).array();

  const Eigen::Map<const Eigen::RowVectorXd> w(weight.value.data().data(), states.cols());
  Eigen::Map<Eigen::RowVectorXd> dw(weight.grad.data().data(), states.cols());
  Mat grad_states(states.rows(), states.cols());
  for (Eigen::Index t = 0; t < n; ++t) {
    auto block = grad_states.middleRows(t * batch, batch);
    block = (grad_context.array().colwise() * alphas.col(t).array()).matrix();
    block.noalias() += dscore.col(t) * w;
    dw.noalias() += dscore.col(t).transpose() * states.middleRows(t * batch, batch);
  }
  bias.grad[0] += dscore.sum();
  return grad_states;
}

// ---------------------------------------------------------------------------

Mat linear_forward(const Mat& x, const Parameter& weight, const Parameter& bias) {
  const auto& ws = weight.value.shape();
  check(ws.size() == 2 && static_cast<std::size_t>(x.cols()) == ws[1], "linear",
        "input width " + std::to_string(x.cols()) + " vs weight " + weight.value.shape_string());
  check(bias.value.size() == ws[0], "linear", "bias length differs from output width");
  Mat out = x * weight.value.matrix().transpose();
  out.rowwise() += row_view(bias.value);
  return out;
}

Mat linear_backward(const Mat& x, Parameter& weight, Parameter& bias, const Mat& grad_out) {
  check(grad_out.rows() == x.rows() &&
            static_cast<std::size_t>(grad_out.cols()) == weight.value.shape()[0],
        "linear", "output gradient shape");
  weight.grad.matrix().noalias() += grad_out.transpose() * x;
  row_view(bias.grad) += grad_out.colwise().sum();
  return grad_out * weight.value.matrix();
}

Mat dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0))
    throw std::invalid_argument("dropout: rate must lie in [0, 1)");
  Rng rng(seed);
  const double keep_scale = 1.0 / (1.0 - rate);
  Mat mask(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) mask(r, c) = uniform01(rng) < rate ? 0.0 : keep_scale;
  return mask;
}

Mat dropout(const Mat& x, double rate, bool training, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0))
    throw std::invalid_argument("dropout: rate must lie in [0, 1)");
  if (!training || rate == 0.0) return x;
  return x.cwiseProduct(dropout_mask(x.rows(), x.cols(), rate, seed));
}

Mat softmax(const Mat& logits) {
  const Vec row_max = logits.rowwise().maxCoeff();
  Mat p = (logits.colwise() - row_max).array().exp();
  const Vec row_sum = p.rowwise().sum();
  p.array().colwise() /= row_sum.array();
  return p;
}

LossResult weighted_cross_entropy(const Mat& probs, std::span<const int> labels,
                                  std::span<const double> class_weights) {
  check(static_cast<std::size_t>(probs.rows()) == labels.size(), "cross_entropy",
        "label count differs from batch");
  check(static_cast<std::size_t>(probs.cols()) == class_weights.size(), "cross_entropy",
        "class weight count differs from class count");
  LossResult r;
  r.grad_logits = probs;
  const double inv_batch = 1.0 / static_cast<double>(labels.size());
  for (std::size_t b = 0; b < labels.size(); ++b) {
    const auto y = labels[b];
    check(y >= 0 && y < probs.cols(), "cross_entropy", "label out of range");
    const double w = class_weights[static_cast<std::size_t>(y)];
    double p = probs(static_cast<Eigen::Index>(b), y);
    if (p < 1e-12) {
      p = 1e-12;
      ++r.clamped;
    }
    r.loss -= w * std::log(p);
    auto g = r.grad_logits.row(static_cast<Eigen::Index>(b));
    g(y) -= 1.0;
    g *= w * inv_batch;
  }
  r.loss *= inv_batch;
  return r;
}

// ---------------------------------------------------------------------------

void adamw_step(const ParameterList& params, const AdamWConfig& config,
                std::uint64_t step_count) {
  if (step_count < 1) throw std::invalid_argument("adamw: step_count must be >= 1");
  const double t = static_cast<double>(step_count);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  for (auto* p : params) {
    auto theta = p->value.flat();
    const auto g = p->grad.flat();
    auto m = p->moment1.flat();
    auto v = p->moment2.flat();
    theta -= (config.lr * config.weight_decay) * theta;
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseAbs2();
    theta.array() -=
        config.lr * (m.array() / correction1) / ((v.array() / correction2).sqrt() + config.eps);
  }
}

double clip_grad_norm(const ParameterList& params, double max_norm) {
  if (!(max_norm > 0.0)) throw std::invalid_argument("clip_grad_norm: max_norm must be > 0");
  double sq = 0.0;
  for (const auto* p : params) sq += p->grad.flat().squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto* p : params) p->grad.flat() *= scale;
  }
  return norm;
}

void zero_grads(const ParameterList& params) {
  for (auto* p : params) p->zero_grad();
}

std::size_t parameter_count(const ParameterList& params) {
  std::size_t n = 0;
  for (const auto* p : params) n += p->value.size();
  return n;
}

// ---------------------------------------------------------------------------

FiniteDiffReport finite_diff_check(const std::function<double()>& objective,
                                   std::span<const GradientProbe> probes,
                                   const FiniteDiffOptions& options) {
  FiniteDiffReport report;
  Rng rng(options.seed);
  for (const auto& probe : probes) {
    if (probe.values.size() != probe.analytic.size())
      throw std::invalid_argument("finite_diff_check: probe '" + probe.name +
                                  "' has mismatched gradient length");
    std::vector<std::size_t> coords(probe.values.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (options.max_coords > 0 && coords.size() > options.max_coords) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.max_coords);
      std::sort(coords.begin(), coords.end());
    }
    double diff_sq = 0.0, analytic_sq = 0.0, numeric_sq = 0.0;
    for (auto i : coords) {
      const double saved = probe.values[i];
      probe.values[i] = saved + options.step;
      const double up = objective();
      probe.values[i] = saved - options.step;
      const double down = objective();
      probe.values[i] = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double analytic = probe.analytic[i];
      diff_sq += (analytic - numeric) * (analytic - numeric);
      analytic_sq += analytic * analytic;
      numeric_sq += numeric * numeric;
    }
    const double denom =
        std::max({std::sqrt(analytic_sq), std::sqrt(numeric_sq), options.abs_floor});
    const double err = std::sqrt(diff_sq) / denom;
    if (report.worst_probe.empty() || err > report.max_rel_error) {
      report.max_rel_error = err;
      report.worst_probe = probe.name;
    }
  }
  return report;
}

void xavier_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, std::uint64_t seed) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Rng rng(seed);
  for (auto& v : t.data()) v = (2.0 * uniform01(rng) - 1.0) * a;
}

}  // namespace uavzone::nn
