#include "uavzone/train.hpp"

#include "uavzone/error.hpp"
#include "uavzone/rng.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

namespace uavzone {

using nn::Mat;

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be finite and >= 0");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (max_grad_norm && !(*max_grad_norm > 0.0)) throw ConfigError("max_grad_norm must be > 0");
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (eval_batch < 1) throw ConfigError("eval_batch must be >= 1");
}

namespace {

constexpr std::uint64_t kSampleStream = 1;
constexpr std::uint64_t kDropoutStream = 2;

std::vector<double> make_cdf(std::span<const double> probs, std::size_t n) {
  if (probs.size() != n) throw DataError("sampler probabilities do not match training windows");
  std::vector<double> cdf(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(probs[i] >= 0.0)) throw DataError("negative sampler probability");
    acc += probs[i];
    cdf[i] = acc;
  }
  if (!(acc > 0.0)) throw DataError("sampler probabilities sum to zero");
  for (double& c : cdf) c /= acc;
  return cdf;
}

std::size_t draw(Rng& rng, const std::vector<double>& cdf, std::size_t n) {
  const double u = uniform01(rng);
  if (cdf.empty()) return std::min(static_cast<std::size_t>(u * static_cast<double>(n)), n - 1);
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return std::min(static_cast<std::size_t>(it - cdf.begin()), n - 1);
}

double global_grad_norm(const nn::ParameterList& params) {
  double s = 0.0;
  for (const auto* p : params) s += p->grad.flat().squaredNorm();
  return std::sqrt(s);
}

std::string nonfinite_diagnostic(std::size_t epoch, std::size_t batch, double loss,
                                 const nn::ParameterList& params) {
  std::ostringstream os;
  os << "non-finite training state at epoch " << epoch << ", batch " << batch << ": loss=" << loss
     << ", grad norm=" << global_grad_norm(params);
  std::string sep = "; non-finite grads in ";
  for (const auto* p : params) {
    if (!p->grad.all_finite()) {
      os << sep << p->name;
      sep = ", ";
    }
  }
  return os.str();
}

std::vector<nn::Tensor> snapshot(const nn::ParameterList& params) {
  std::vector<nn::Tensor> out;
  out.reserve(params.size());
  for (const auto* p : params) out.push_back(p->value);
  return out;
}

void restore(const nn::ParameterList& params, const std::vector<nn::Tensor>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

}  // namespace

EvalResult evaluate_windows(const CobaModel& model, std::span<const data::FeatureWindow> windows,
                            std::span<const double> class_weights, std::size_t batch) {
  if (windows.empty()) throw DataError("evaluation set is empty");
  if (batch == 0) batch = 1;
  const std::vector<double> unit(model.config().n_classes, 1.0);
  if (class_weights.empty()) class_weights = unit;

  EvalResult res;
  res.predictions.reserve(windows.size());
  res.labels.reserve(windows.size());
  double loss_sum = 0.0;
  std::vector<const Mat*> ptrs;
  std::vector<int> labels;
  for (std::size_t start = 0; start < windows.size(); start += batch) {
    const std::size_t end = std::min(windows.size(), start + batch);
    ptrs.clear();
    labels.clear();
    for (std::size_t i = start; i < end; ++i) {
      ptrs.push_back(&windows[i].x);
      labels.push_back(windows[i].y);
    }
    const auto out = model.forward(stack_windows(ptrs));
    const auto lr = nn::weighted_cross_entropy(out.probs, labels, class_weights);
    loss_sum += lr.loss * static_cast<double>(end - start);
    for (Eigen::Index r = 0; r < out.probs.rows(); ++r) res.predictions.push_back(argmax_class(out.probs, r));
    res.labels.insert(res.labels.end(), labels.begin(), labels.end());
  }
  res.loss = loss_sum / static_cast<double>(windows.size());
  res.metrics = compute_metrics(res.predictions, res.labels);
  return res;
}

Metrics evaluate(const CobaModel& model, std::span<const data::FeatureWindow> windows) {
  return evaluate_windows(model, windows).metrics;
}

TrainResult train(CobaModel& model, std::span<const data::FeatureWindow> train_windows,
                  std::span<const data::FeatureWindow> val_windows,
                  std::span<const double> class_weights, std::span<const double> sampler_probs,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  const std::size_t n = train_windows.size();
  if (n == 0) throw DataError("no training windows");
  const std::size_t n_classes = model.config().n_classes;
  const std::vector<double> unit(n_classes, 1.0);
  std::span<const double> loss_weights = unit;
  if (config.weighted_loss) {
    if (class_weights.size() != n_classes) throw DataError("class weight count does not match classes");
    loss_weights = class_weights;
  }
  const std::vector<double> cdf =
      config.weighted_sampling ? make_cdf(sampler_probs, n) : std::vector<double>{};

  const auto params = model.parameters();
  nn::AdamWConfig opt;
  opt.lr = config.lr;
  opt.weight_decay = config.weight_decay;

  Rng sampler(mix_seed(config.seed, kSampleStream));
  const std::uint64_t dropout_base = mix_seed(config.seed, kDropoutStream);

  TrainResult result;
  std::vector<nn::Tensor> best;
  double best_acc = -1.0;
  std::vector<const Mat*> ptrs;
  std::vector<int> labels;
  CobaModel::Trace trace;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochReport rep;
    rep.epoch = epoch;
    double loss_sum = 0.0;
    std::size_t batch_idx = 0;
    for (std::size_t done = 0; done < n; done += config.batch_size, ++batch_idx) {
      const std::size_t bs = std::min(config.batch_size, n - done);
      ptrs.clear();
      labels.clear();
      for (std::size_t k = 0; k < bs; ++k) {
        const auto& w = train_windows[draw(sampler, cdf, n)];
        ptrs.push_back(&w.x);
        labels.push_back(w.y);
      }
      ++result.steps;
      const auto out = model.forward(stack_windows(ptrs), true, mix_seed(dropout_base, result.steps), &trace);
      const auto loss = nn::weighted_cross_entropy(out.probs, labels, loss_weights);

      nn::zero_grads(params);
      model.backward(trace, loss.grad_logits);
      const double norm = config.max_grad_norm ? nn::clip_grad_norm(params, *config.max_grad_norm)
                                               : global_grad_norm(params);
      if (!std::isfinite(loss.loss) || !std::isfinite(norm))
        throw NumericError(nonfinite_diagnostic(epoch, batch_idx, loss.loss, params));
      nn::adamw_step(params, opt, result.steps);
      loss_sum += loss.loss * static_cast<double>(bs);
    }
    rep.train_loss = loss_sum / static_cast<double>(n);

    const bool eval_now = !val_windows.empty() &&
                          (epoch % config.eval_every == 0 || epoch == config.epochs);
    if (eval_now) {
      const auto ev = evaluate_windows(model, val_windows, loss_weights, config.eval_batch);
      rep.val_loss = ev.loss;
      rep.val = ev.metrics;
      if (ev.metrics.accuracy > best_acc) {
        best_acc = ev.metrics.accuracy;
        result.best_epoch = epoch;
        if (config.keep_best) best = snapshot(params);
      }
    }
    rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.epochs.push_back(rep);
    if (on_epoch) on_epoch(rep);
  }
  if (config.keep_best && !best.empty()) restore(params, best);
  return result;
}

TrainResult train(CobaModel& model, const data::ModelInputs& inputs, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  return train(model, inputs.train_windows, inputs.val_windows, inputs.class_weights,
               inputs.sampler_probs, config, on_epoch);
}

std::string epoch_report_json(const EpochReport& r) {
  nlohmann::ordered_json j;
  j["epoch"] = r.epoch;
  j["train_loss"] = r.train_loss;
  if (r.val_loss) j["val_loss"] = *r.val_loss;
  if (r.val) {
    j["val_accuracy"] = r.val->accuracy;
    j["val_precision"] = r.val->precision;
    j["val_recall"] = r.val->recall;
    j["val_f1"] = r.val->f1;
  }
  return j.dump();
}

std::string curves_csv_header() {
  return "epoch,train_loss,val_loss,val_accuracy,val_precision,val_recall,val_f1";
}

std::string curves_csv_row(const EpochReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << r.epoch << ',' << r.train_loss << ',';
  if (r.val_loss) os << *r.val_loss;
  os << ',';
  if (r.val) os << r.val->accuracy << ',' << r.val->precision << ',' << r.val->recall << ',' << r.val->f1;
  else os << ",,";
  return os.str();
}

}  // namespace uavzone
