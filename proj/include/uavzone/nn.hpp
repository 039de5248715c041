#pragma once

// Differentiable building blocks for the sequence classifier. Every op has an
// explicit forward and a hand-derived backward; no tape.
//
// Batched sequences are stored "time-major stacked": a matrix with
// steps * batch rows where row (t * batch + b) holds time step t of batch item b.
// A single L x C sequence is the batch == 1 special case.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace uavzone::nn {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

// Dense row-major float64 array with an explicit shape.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // First axis as rows, remaining axes flattened into columns.
  Eigen::Map<Mat> matrix();
  Eigen::Map<const Mat> matrix() const;
  Eigen::Map<Vec> flat() { return {data_.data(), static_cast<Eigen::Index>(data_.size())}; }
  Eigen::Map<const Vec> flat() const {
    return {data_.data(), static_cast<Eigen::Index>(data_.size())};
  }

  void fill(double value);
  bool all_finite() const;
  std::string shape_string() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double, Eigen::aligned_allocator<double>> data_;
};

// A learnable tensor plus its gradient accumulator and AdamW moments.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, std::vector<std::size_t> shape);

  std::string name;
  Tensor value;
  Tensor grad;
  Tensor moment1;
  Tensor moment2;

  void zero_grad() { grad.fill(0.0); }
};

using ParameterList = std::vector<Parameter*>;

// ---------------------------------------------------------------------------
// Convolution along time. kernel: F_out x F_in x K, bias: F_out; K odd,
// zero padding (K - 1) / 2 so the sequence length is preserved.

Mat conv1d_forward(const Mat& x, std::size_t steps, const Parameter& kernel,
                   const Parameter& bias);
// Accumulates kernel/bias gradients, returns the input gradient.
Mat conv1d_backward(const Mat& x, std::size_t steps, Parameter& kernel, Parameter& bias,
                    const Mat& grad_out);

// ---------------------------------------------------------------------------
// Layer normalization across columns, independently for every row.

struct LayerNormCache {
  Mat normalized;
  Vec inv_std;
};

Mat layer_norm_forward(const Mat& x, const Parameter& gain, const Parameter& bias, double eps,
                       LayerNormCache& cache);
Mat layer_norm_backward(const LayerNormCache& cache, Parameter& gain, Parameter& bias,
                        const Mat& grad_out);

Mat relu(const Mat& x);
// `output` is the forward result of relu.
Mat relu_backward(const Mat& output, const Mat& grad_out);

// ---------------------------------------------------------------------------
// LSTM. Gate order in the stacked 4H dimension is input, forget, cell, output.

struct LstmWeights {
  LstmWeights() = default;
  LstmWeights(const std::string& prefix, std::size_t input_size, std::size_t hidden);

  Parameter w_ih;  // 4H x C
  Parameter w_hh;  // 4H x H
  Parameter bias;  // 4H

  std::size_t hidden() const { return w_hh.value.shape()[1]; }
  std::size_t input_size() const { return w_ih.value.shape()[1]; }
  void append_to(ParameterList& list) {
    list.push_back(&w_ih);
    list.push_back(&w_hh);
    list.push_back(&bias);
  }
};

struct LstmStepCache {
  Mat x;
  Mat h_prev;
  Mat c_prev;
  Mat input_gate;
  Mat forget_gate;
  Mat candidate;
  Mat output_gate;
  Mat tanh_c;
};

struct LstmState {
  Mat h;
  Mat c;
};

struct LstmStepGrads {
  Mat x;
  Mat h_prev;
  Mat c_prev;
};

// One recurrence step for a batch (rows) of inputs.
LstmState lstm_step(const Mat& x, const Mat& h_prev, const Mat& c_prev, const LstmWeights& w,
                    LstmStepCache* cache = nullptr);
// Accumulates weight gradients; grad_h / grad_c are the gradients arriving at h_t / c_t.
LstmStepGrads lstm_step_backward(const LstmStepCache& cache, LstmWeights& w, const Mat& grad_h,
                                 const Mat& grad_c);

struct LstmCache {
  std::size_t steps = 0;
  bool reverse = false;
  Mat input;
  std::vector<LstmStepCache> cells;  // indexed by time step, not processing order
};

// Runs the recurrence over all steps (right-to-left when `reverse`), zero
// initial state. Returns the hidden state at every time step, stacked like x.
Mat lstm_forward(const Mat& x, std::size_t steps, const LstmWeights& w, bool reverse,
                 LstmCache& cache);
Mat lstm_backward(const LstmCache& cache, LstmWeights& w, const Mat& grad_out);

struct BiLstmCache {
  LstmCache forward;
  LstmCache backward;
};

// [forward hidden ; backward hidden] per step: steps*batch x 2H.
Mat bilstm_forward(const Mat& x, std::size_t steps, const LstmWeights& fwd,
                   const LstmWeights& bwd, BiLstmCache& cache);
Mat bilstm_backward(const BiLstmCache& cache, LstmWeights& fwd, LstmWeights& bwd,
                    const Mat& grad_out);

// ---------------------------------------------------------------------------
// Additive attention: e_t = h_t . w + b, alpha = softmax_t(e), context = sum alpha_t h_t.

struct AttentionCache {
  std::size_t steps = 0;
  Mat states;
  Mat alphas;  // batch x steps
};

struct AttentionOutput {
  Mat context;  // batch x D
  Mat alphas;   // batch x steps
};

AttentionOutput additive_attention_forward(const Mat& states, std::size_t steps,
                                           const Parameter& weight, const Parameter& bias,
                                           AttentionCache& cache);
Mat additive_attention_backward(const AttentionCache& cache, Parameter& weight, Parameter& bias,
                                const Mat& grad_context);

// ---------------------------------------------------------------------------
// Dense layers. weight: out x in, bias: out.

Mat linear_forward(const Mat& x, const Parameter& weight, const Parameter& bias);
Mat linear_backward(const Mat& x, Parameter& weight, Parameter& bias, const Mat& grad_out);

// Inverted dropout mask: entries are 0 or 1 / (1 - rate). Throws when rate >= 1.
Mat dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, std::uint64_t seed);
Mat dropout(const Mat& x, double rate, bool training, std::uint64_t seed);

// Row-wise softmax, max-shifted.
Mat softmax(const Mat& logits);

struct LossResult {
  double loss = 0.0;        // mean over rows of -w_y log p_y
  Mat grad_logits;          // d loss / d logits
  std::size_t clamped = 0;  // rows where p_y was clamped at 1e-12
};

LossResult weighted_cross_entropy(const Mat& probs, std::span<const int> labels,
                                  std::span<const double> class_weights);

// ---------------------------------------------------------------------------
// Optimization.

struct AdamWConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

// Decoupled weight decay followed by the bias-corrected Adam step; step_count >= 1.
void adamw_step(const ParameterList& params, const AdamWConfig& config, std::uint64_t step_count);

// Global L2 norm over all gradients, scaled down to max_norm when above it.
// Returns the norm observed before scaling.
double clip_grad_norm(const ParameterList& params, double max_norm);

void zero_grads(const ParameterList& params);
std::size_t parameter_count(const ParameterList& params);

// ---------------------------------------------------------------------------
// Gradient verification.

struct GradientProbe {
  std::string name;
  std::span<double> values;
  std::span<const double> analytic;
};

struct FiniteDiffOptions {
  double step = 1e-5;
  // Coordinates sampled per probe; 0 checks every coordinate.
  std::size_t max_coords = 0;
  std::uint64_t seed = 0;
  // Norms below this are treated as this value in the denominator.
  double abs_floor = 1e-3;
};

struct FiniteDiffReport {
  double max_rel_error = 0.0;
  std::string worst_probe;
};

// Compares analytic gradients of `objective` against central differences.
// Per probe, error = |a - n|_2 / max(|a|_2, |n|_2, abs_floor) over the checked
// coordinates; the maximum over probes is reported.
FiniteDiffReport finite_diff_check(const std::function<double()>& objective,
                                   std::span<const GradientProbe> probes,
                                   const FiniteDiffOptions& options = {});

// Xavier-uniform fill: U(-a, a), a = sqrt(6 / (fan_in + fan_out)).
void xavier_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, std::uint64_t seed);

}  // namespace uavzone::nn
