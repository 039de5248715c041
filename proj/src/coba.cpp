#include "uavzone/coba.hpp"

#include "uavzone/error.hpp"
#include "uavzone/rng.hpp"

#include "json.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace uavzone {

using nn::Mat;
using nn::Parameter;
using json = nlohmann::json;

namespace {

template <class F>
auto at_layer(const char* layer, F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string(layer) + ": " + e.what());
  }
}

}  // namespace

std::string_view to_string(Ablation a) { return a == Ablation::full ? "full" : "lstm_only"; }

Ablation parse_ablation(std::string_view name) {
  if (name == "full") return Ablation::full;
  if (name == "lstm_only") return Ablation::lstm_only;
  throw ConfigError("unknown ablation '" + std::string(name) + "' (expected full or lstm_only)");
}

void CobaConfig::validate() const {
  if (seq_len < 1) throw ConfigError("seq_len must be >= 1");
  if (n_features < 1) throw ConfigError("n_features must be >= 1");
  if (cnn_channels < 1 || lstm_hidden < 1) throw ConfigError("channel and hidden sizes must be >= 1");
  if (kernel_size % 2 == 0) throw ConfigError("kernel_size must be odd");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (n_classes < 2) throw ConfigError("n_classes must be >= 2");
  if (!(layer_norm_eps > 0.0)) throw ConfigError("layer_norm_eps must be > 0");
}

CobaConfig lstm_only_variant(CobaConfig config) {
  config.ablation = Ablation::lstm_only;
  return config;
}

std::size_t expected_parameter_count(const CobaConfig& c) {
  const auto f = c.n_features, ch = c.cnn_channels, k = c.kernel_size, h = c.lstm_hidden,
             n = c.n_classes;
  if (c.ablation == Ablation::lstm_only)
    return (4 * h * f + 4 * h * h + 4 * h) + (h * h + h) + (h * n + n);
  return (ch * f * k + ch) + 2 * ch + (ch * ch * k + ch) + 2 * ch +
         2 * (4 * h * ch + 4 * h * h + 4 * h) + (2 * h + 1) + (2 * h * h + h) + (h * n + n) +
         (2 * h * n + n);
}

// ---------------------------------------------------------------------------

CobaModel::CobaModel(CobaConfig config, std::uint64_t seed) : config_(config) {
  config_.validate();
  init(seed);
}

void CobaModel::init(std::uint64_t seed) {
  const auto f = config_.n_features, ch = config_.cnn_channels, k = config_.kernel_size,
             h = config_.lstm_hidden, n = config_.n_classes;
  std::uint64_t stream = 0;
  auto xavier = [&](Parameter& p, std::size_t fan_in, std::size_t fan_out) {
    nn::xavier_uniform(p.value, fan_in, fan_out, mix_seed(seed, stream++));
  };
  auto init_lstm = [&](nn::LstmWeights& w) {
    xavier(w.w_ih, w.input_size(), 4 * h);
    xavier(w.w_hh, h, 4 * h);
    for (std::size_t j = h; j < 2 * h; ++j) w.bias.value[j] = 1.0;  // forget gate
  };

  if (config_.ablation == Ablation::full) {
    conv1_w_ = Parameter("conv1.weight", {ch, f, k});
    conv1_b_ = Parameter("conv1.bias", {ch});
    ln1_g_ = Parameter("ln1.gain", {ch});
    ln1_b_ = Parameter("ln1.bias", {ch});
    conv2_w_ = Parameter("conv2.weight", {ch, ch, k});
    conv2_b_ = Parameter("conv2.bias", {ch});
    ln2_g_ = Parameter("ln2.gain", {ch});
    ln2_b_ = Parameter("ln2.bias", {ch});
    lstm_fwd_ = nn::LstmWeights("lstm_fwd", ch, h);
    lstm_bwd_ = nn::LstmWeights("lstm_bwd", ch, h);
    attn_w_ = Parameter("attention.weight", {2 * h});
    attn_b_ = Parameter("attention.bias", {1});
    fc1_w_ = Parameter("fc1.weight", {h, 2 * h});
    fc1_b_ = Parameter("fc1.bias", {h});
    fc2_w_ = Parameter("fc2.weight", {n, h});
    fc2_b_ = Parameter("fc2.bias", {n});
    res_w_ = Parameter("residual.weight", {n, 2 * h});
    res_b_ = Parameter("residual.bias", {n});

    xavier(conv1_w_, f * k, ch * k);
    ln1_g_.value.fill(1.0);
    xavier(conv2_w_, ch * k, ch * k);
    ln2_g_.value.fill(1.0);
    init_lstm(lstm_fwd_);
    init_lstm(lstm_bwd_);
    xavier(attn_w_, 2 * h, 1);
    xavier(fc1_w_, 2 * h, h);
    xavier(fc2_w_, h, n);
    xavier(res_w_, 2 * h, n);
  } else {
    lstm_fwd_ = nn::LstmWeights("lstm", f, h);
    fc1_w_ = Parameter("fc1.weight", {h, h});
    fc1_b_ = Parameter("fc1.bias", {h});
    fc2_w_ = Parameter("fc2.weight", {n, h});
    fc2_b_ = Parameter("fc2.bias", {n});
    init_lstm(lstm_fwd_);
    xavier(fc1_w_, h, h);
    xavier(fc2_w_, h, n);
  }
}

nn::ParameterList CobaModel::parameters() {
  nn::ParameterList list;
  if (config_.ablation == Ablation::full) {
    list = {&conv1_w_, &conv1_b_, &ln1_g_, &ln1_b_, &conv2_w_, &conv2_b_, &ln2_g_, &ln2_b_};
    lstm_fwd_.append_to(list);
    lstm_bwd_.append_to(list);
    for (auto* p : {&attn_w_, &attn_b_, &fc1_w_, &fc1_b_, &fc2_w_, &fc2_b_, &res_w_, &res_b_})
      list.push_back(p);
  } else {
    lstm_fwd_.append_to(list);
    for (auto* p : {&fc1_w_, &fc1_b_, &fc2_w_, &fc2_b_}) list.push_back(p);
  }
  return list;
}

std::vector<const Parameter*> CobaModel::parameters() const {
  auto list = const_cast<CobaModel*>(this)->parameters();
  return {list.begin(), list.end()};
}

Parameter& CobaModel::parameter(std::string_view name) {
  for (auto* p : parameters())
    if (p->name == name) return *p;
  throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

const Parameter& CobaModel::parameter(std::string_view name) const {
  return const_cast<CobaModel*>(this)->parameter(name);
}

std::size_t CobaModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : parameters()) n += p->value.size();
  return n;
}

void CobaModel::set_feature_names(std::vector<std::string> names) {
  if (names.size() != config_.n_features)
    throw ConfigError("feature name count " + std::to_string(names.size()) +
                      " differs from n_features " + std::to_string(config_.n_features));
  feature_names_ = std::move(names);
}

// ---------------------------------------------------------------------------

ForwardResult CobaModel::forward(const Mat& x, bool training, std::uint64_t dropout_seed,
                                 Trace* trace) const {
  const auto steps = config_.seq_len;
  if (static_cast<std::size_t>(x.cols()) != config_.n_features ||
      x.rows() % static_cast<Eigen::Index>(steps) != 0 || x.rows() == 0)
    throw std::invalid_argument("input: shape mismatch, expected (" + std::to_string(steps) +
                                " * batch) x " + std::to_string(config_.n_features) + ", got " +
                                std::to_string(x.rows()) + " x " + std::to_string(x.cols()));
  const auto batch = x.rows() / static_cast<Eigen::Index>(steps);
  Trace local;
  Trace& tr = trace ? *trace : local;
  tr.input = x;

  ForwardResult out;
  Mat head_input;
  if (config_.ablation == Ablation::full) {
    const double eps = config_.layer_norm_eps;
    tr.h1 = at_layer("conv1", [&] {
      return nn::relu(nn::layer_norm_forward(nn::conv1d_forward(x, steps, conv1_w_, conv1_b_),
                                             ln1_g_, ln1_b_, eps, tr.ln1));
    });
    tr.h2 = at_layer("conv2", [&] {
      return nn::relu(nn::layer_norm_forward(
          nn::conv1d_forward(tr.h1, steps, conv2_w_, conv2_b_), ln2_g_, ln2_b_, eps, tr.ln2));
    });
    const Mat hs = at_layer("bilstm", [&] {
      return nn::bilstm_forward(tr.h2, steps, lstm_fwd_, lstm_bwd_, tr.bilstm);
    });
    auto att = at_layer("attention", [&] {
      return nn::additive_attention_forward(hs, steps, attn_w_, attn_b_, tr.attention);
    });
    tr.context = std::move(att.context);
    out.alphas = std::move(att.alphas);
    head_input = tr.context;
  } else {
    const Mat hs =
        at_layer("lstm", [&] { return nn::lstm_forward(x, steps, lstm_fwd_, false, tr.lstm); });
    tr.last_hidden = hs.bottomRows(batch);
    head_input = tr.last_hidden;
  }

  tr.z1 = at_layer("fc1", [&] { return nn::relu(nn::linear_forward(head_input, fc1_w_, fc1_b_)); });
  if (training && config_.dropout > 0.0) {
    tr.dropout_mask = nn::dropout_mask(tr.z1.rows(), tr.z1.cols(), config_.dropout, dropout_seed);
    tr.z2 = tr.z1.cwiseProduct(tr.dropout_mask);
  } else {
    tr.dropout_mask.resize(0, 0);
    tr.z2 = tr.z1;
  }
  out.logits = at_layer("fc2", [&] { return nn::linear_forward(tr.z2, fc2_w_, fc2_b_); });
  if (config_.ablation == Ablation::full)
    out.logits += at_layer("residual",
                           [&] { return nn::linear_forward(tr.context, res_w_, res_b_); });
  out.probs = nn::softmax(out.logits);
  return out;
}

void CobaModel::backward(const Trace& tr, const Mat& grad_logits) {
  const auto steps = config_.seq_len;
  Mat dz2 = nn::linear_backward(tr.z2, fc2_w_, fc2_b_, grad_logits);
  if (tr.dropout_mask.size() > 0) dz2 = dz2.cwiseProduct(tr.dropout_mask);
  const Mat dfc1 = nn::relu_backward(tr.z1, dz2);

  if (config_.ablation == Ablation::lstm_only) {
    const Mat dlast = nn::linear_backward(tr.last_hidden, fc1_w_, fc1_b_, dfc1);
    Mat dhs = Mat::Zero(tr.input.rows(), dlast.cols());
    dhs.bottomRows(dlast.rows()) = dlast;
    nn::lstm_backward(tr.lstm, lstm_fwd_, dhs);
    return;
  }

  Mat dctx = nn::linear_backward(tr.context, res_w_, res_b_, grad_logits);
  dctx += nn::linear_backward(tr.context, fc1_w_, fc1_b_, dfc1);
  const Mat dhs = nn::additive_attention_backward(tr.attention, attn_w_, attn_b_, dctx);
  const Mat dh2 = nn::bilstm_backward(tr.bilstm, lstm_fwd_, lstm_bwd_, dhs);
  const Mat dconv2 = nn::layer_norm_backward(tr.ln2, ln2_g_, ln2_b_, nn::relu_backward(tr.h2, dh2));
  const Mat dh1 = nn::conv1d_backward(tr.h1, steps, conv2_w_, conv2_b_, dconv2);
  const Mat dconv1 = nn::layer_norm_backward(tr.ln1, ln1_g_, ln1_b_, nn::relu_backward(tr.h1, dh1));
  nn::conv1d_backward(tr.input, steps, conv1_w_, conv1_b_, dconv1);
}

// ---------------------------------------------------------------------------

namespace {

json config_to_json(const CobaConfig& c) {
  return {{"seq_len", c.seq_len},         {"n_features", c.n_features},
          {"cnn_channels", c.cnn_channels}, {"kernel_size", c.kernel_size},
          {"lstm_hidden", c.lstm_hidden}, {"dropout", c.dropout},
          {"n_classes", c.n_classes},     {"ablation", std::string(to_string(c.ablation))},
          {"layer_norm_eps", c.layer_norm_eps}};
}

CobaConfig config_from_json(const json& j) {
  CobaConfig c;
  c.seq_len = j.at("seq_len").get<std::size_t>();
  c.n_features = j.at("n_features").get<std::size_t>();
  c.cnn_channels = j.at("cnn_channels").get<std::size_t>();
  c.kernel_size = j.at("kernel_size").get<std::size_t>();
  c.lstm_hidden = j.at("lstm_hidden").get<std::size_t>();
  c.dropout = j.at("dropout").get<double>();
  c.n_classes = j.at("n_classes").get<std::size_t>();
  c.ablation = parse_ablation(j.at("ablation").get<std::string>());
  c.layer_norm_eps = j.value("layer_norm_eps", 1e-5);
  return c;
}

}  // namespace

std::string CobaModel::describe() const {
  json layers = json::array();
  auto layer_of = [](const std::string& name) { return name.substr(0, name.find('.')); };
  for (const auto* p : parameters()) {
    const auto layer = layer_of(p->name);
    if (layers.empty() || layers.back()["name"] != layer)
      layers.push_back({{"name", layer}, {"parameters", json::array()}, {"count", 0}});
    auto& l = layers.back();
    l["parameters"].push_back({{"name", p->name}, {"shape", p->value.shape()}});
    l["count"] = l["count"].get<std::size_t>() + p->value.size();
  }
  json j = {{"config", config_to_json(config_)},
            {"layers", layers},
            {"total_parameters", parameter_count()},
            {"expected_parameters", expected_parameter_count(config_)}};
  return j.dump(2);
}

std::string CobaModel::to_json() const {
  json tensors = json::array();
  for (const auto* p : parameters()) {
    tensors.push_back({{"name", p->name},
                       {"shape", p->value.shape()},
                       {"data", std::vector<double>(p->value.data().begin(), p->value.data().end())}});
  }
  json j = {{"format", "uavzone-checkpoint"},
            {"version", 1},
            {"config", config_to_json(config_)},
            {"feature_names", feature_names_},
            {"tensors", tensors}};
  return j.dump();
}

CobaModel CobaModel::from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  if (j.value("format", "") != "uavzone-checkpoint")
    throw DataError("not a uavzone checkpoint");
  CobaModel model(config_from_json(j.at("config")));
  const auto names = j.value("feature_names", std::vector<std::string>{});
  if (!names.empty()) model.set_feature_names(names);

  std::vector<std::string> seen;
  for (const auto& t : j.at("tensors")) {
    const auto name = t.at("name").get<std::string>();
    Parameter* target = nullptr;
    for (auto* p : model.parameters())
      if (p->name == name) target = p;
    if (!target) throw DataError("checkpoint tensor '" + name + "' is not part of the model");
    const auto shape = t.at("shape").get<std::vector<std::size_t>>();
    if (shape != target->value.shape()) {
      nn::Tensor probe(shape);
      throw DataError("checkpoint tensor '" + name + "' has shape " + probe.shape_string() +
                      ", model expects " + target->value.shape_string());
    }
    const auto data = t.at("data").get<std::vector<double>>();
    if (data.size() != target->value.size())
      throw DataError("checkpoint tensor '" + name + "' has wrong element count");
    std::copy(data.begin(), data.end(), target->value.data().begin());
    seen.push_back(name);
  }
  for (const auto* p : model.parameters())
    if (std::find(seen.begin(), seen.end(), p->name) == seen.end())
      throw DataError("checkpoint is missing tensor '" + p->name + "'");
  return model;
}

void CobaModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out << to_json() << '\n';
}

CobaModel CobaModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

// ---------------------------------------------------------------------------

Mat stack_windows(std::span<const Mat* const> windows) {
  if (windows.empty()) throw std::invalid_argument("stack_windows: empty batch");
  const auto steps = windows.front()->rows();
  const auto cols = windows.front()->cols();
  const auto batch = static_cast<Eigen::Index>(windows.size());
  Mat x(steps * batch, cols);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const auto& w = *windows[static_cast<std::size_t>(b)];
    if (w.rows() != steps || w.cols() != cols)
      throw std::invalid_argument("stack_windows: windows differ in shape");
    for (Eigen::Index t = 0; t < steps; ++t) x.row(t * batch + b) = w.row(t);
  }
  return x;
}

int argmax_class(const Mat& probs, Eigen::Index row) {
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < probs.cols(); ++k)
    if (probs(row, k) > probs(row, best)) best = k;
  return static_cast<int>(best);
}

int predict(const CobaModel& model, const Mat& window) {
  const Mat* one[] = {&window};
  const auto r = model.forward(stack_windows(one), false);
  return argmax_class(r.probs, 0);
}

}  // namespace uavzone
