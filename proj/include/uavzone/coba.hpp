#pragma once

// Convolution + BiLSTM + attention sequence classifier with a residual logit
// path, and its unidirectional-LSTM ablation.
//
// Full graph for one L x f window:
//   h1 = relu(layernorm(conv1(x)))          L x c
//   h2 = relu(layernorm(conv2(h1)))         L x c
//   hs = bilstm(h2)                         L x 2h
//   ctx, alpha = attention(hs)              2h, L
//   z1 = relu(fc1(ctx))                     h
//   z2 = dropout(z1)
//   logits = fc2(z2) + residual(ctx)        2
//
// LSTM-only ablation: x -> lstm (h) -> last hidden -> relu(fc1) -> dropout -> fc2.
//
// Parameter count, full (f features, c channels, kernel K, hidden h, n classes):
//   conv1 c*f*K + c, ln1 2c, conv2 c*c*K + c, ln2 2c,
//   2 * (4h*c + 4h*h + 4h), attention 2h + 1,
//   fc1 2h*h + h, fc2 h*n + n, residual 2h*n + n.
// LSTM-only: 4h*f + 4h*h + 4h, fc1 h*h + h, fc2 h*n + n.

#include "uavzone/nn.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace uavzone {

enum class Ablation { full, lstm_only };

std::string_view to_string(Ablation a);
Ablation parse_ablation(std::string_view name);

struct CobaConfig {
  std::size_t seq_len = 10;
  std::size_t n_features = 7;
  std::size_t cnn_channels = 64;
  std::size_t kernel_size = 3;
  std::size_t lstm_hidden = 64;
  double dropout = 0.3;
  std::size_t n_classes = 2;
  Ablation ablation = Ablation::full;
  double layer_norm_eps = 1e-5;

  void validate() const;
  bool operator==(const CobaConfig&) const = default;
};

CobaConfig lstm_only_variant(CobaConfig config);

// Closed-form count from the table above.
std::size_t expected_parameter_count(const CobaConfig& config);

struct ForwardResult {
  nn::Mat logits;  // batch x n_classes
  nn::Mat probs;   // batch x n_classes
  nn::Mat alphas;  // batch x seq_len (empty for the LSTM-only ablation)
};

class CobaModel {
 public:
  // Activations retained by forward() for backward().
  struct Trace {
    nn::Mat input;
    nn::Mat h1;
    nn::LayerNormCache ln1;
    nn::Mat h2;
    nn::LayerNormCache ln2;
    nn::BiLstmCache bilstm;
    nn::LstmCache lstm;
    nn::Mat last_hidden;
    nn::AttentionCache attention;
    nn::Mat context;
    nn::Mat z1;
    nn::Mat dropout_mask;
    nn::Mat z2;
  };

  explicit CobaModel(CobaConfig config, std::uint64_t seed = 0);

  const CobaConfig& config() const { return config_; }

  nn::ParameterList parameters();
  std::vector<const nn::Parameter*> parameters() const;
  nn::Parameter& parameter(std::string_view name);
  const nn::Parameter& parameter(std::string_view name) const;
  std::size_t parameter_count() const;

  // x: time-major stacked batch (seq_len * batch rows, n_features columns).
  ForwardResult forward(const nn::Mat& x, bool training = false, std::uint64_t dropout_seed = 0,
                        Trace* trace = nullptr) const;
  // Accumulates parameter gradients for d loss / d logits.
  void backward(const Trace& trace, const nn::Mat& grad_logits);

  // Feature column names the model was trained on (metadata, carried in checkpoints).
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  void set_feature_names(std::vector<std::string> names);

  // JSON listing layer shapes and parameter counts.
  std::string describe() const;

  void save(const std::filesystem::path& path) const;
  static CobaModel load(const std::filesystem::path& path);
  std::string to_json() const;
  static CobaModel from_json(std::string_view text);

 private:
  void init(std::uint64_t seed);

  CobaConfig config_;
  std::vector<std::string> feature_names_;

  nn::Parameter conv1_w_, conv1_b_, ln1_g_, ln1_b_;
  nn::Parameter conv2_w_, conv2_b_, ln2_g_, ln2_b_;
  nn::LstmWeights lstm_fwd_, lstm_bwd_;
  nn::Parameter attn_w_, attn_b_;
  nn::Parameter fc1_w_, fc1_b_, fc2_w_, fc2_b_;
  nn::Parameter res_w_, res_b_;
};

// Stacks windows (each seq_len x n_features) into one time-major batch matrix.
nn::Mat stack_windows(std::span<const nn::Mat* const> windows);

// argmax of class probabilities; ties resolve to the lowest class index.
int argmax_class(const nn::Mat& probs, Eigen::Index row);

int predict(const CobaModel& model, const nn::Mat& window);

}  // namespace uavzone
