#include "uavzone/complexity.hpp"

#include "uavzone/error.hpp"

#include "json.hpp"

namespace uavzone {

namespace {

using Terms = std::vector<std::pair<std::string, std::uint64_t>>;

std::uint64_t sum(const Terms& t) {
  std::uint64_t s = 0;
  for (const auto& [_, v] : t) s += v;
  return s;
}

Terms coba_terms(const CobaConfig& cfg) {
  const std::uint64_t L = cfg.seq_len, f = cfg.n_features, c = cfg.cnn_channels, K = cfg.kernel_size,
                      h = cfg.lstm_hidden, n = cfg.n_classes;
  return {
      {"conv1", L * c * f * K},
      {"layernorm1", 5 * L * c},
      {"conv2", L * c * c * K},
      {"layernorm2", 5 * L * c},
      {"bilstm", 2 * L * (4 * h * c + 4 * h * h + 5 * h)},
      {"attention", 4 * L * h + 3 * L},
      {"fc1", 2 * h * h},
      {"fc2", h * n},
      {"residual", 2 * h * n},
  };
}

Terms lstm_terms(const CobaConfig& cfg) {
  const std::uint64_t L = cfg.seq_len, f = cfg.n_features, h = cfg.lstm_hidden, n = cfg.n_classes;
  return {
      {"lstm", L * (4 * h * f + 4 * h * h + 5 * h)},
      {"fc1", h * h},
      {"fc2", h * n},
  };
}

}  // namespace

std::vector<std::string> complexity_model_kinds() { return {"coba", "lstm_only", "knn", "logreg"}; }

ComplexityReport count_ops(std::string_view kind, const CobaConfig& config, std::size_t n_train,
                           std::size_t epochs, std::size_t feature_count) {
  if (feature_count == 0) throw ConfigError("feature count must be >= 1");
  if (n_train == 0) throw ConfigError("training size must be >= 1");
  ComplexityReport r;
  r.model = std::string(kind);
  r.feature_count = feature_count;
  r.n_train = n_train;
  r.epochs = epochs;
  const std::uint64_t N = n_train, f = feature_count, E = epochs;
  CobaConfig cfg = config;
  cfg.n_features = feature_count;

  if (kind == "coba" || kind == "lstm_only") {
    if (epochs == 0) throw ConfigError("epochs must be >= 1");
    r.predict_terms = kind == "coba" ? coba_terms(cfg) : lstm_terms(cfg);
    r.predict_madds = sum(r.predict_terms);
    r.train_madds = E * N * 3 * r.predict_madds;
  } else if (kind == "knn") {
    r.predict_terms = {{"distances", N * f}};
    r.predict_madds = N * f;
    r.train_madds = N * f;
  } else if (kind == "logreg") {
    if (epochs == 0) throw ConfigError("epochs must be >= 1");
    r.predict_terms = {{"dot", f}};
    r.predict_madds = f;
    r.predict_adds = 1;
    r.train_madds = E * N * f;
  } else {
    throw ConfigError("unknown model kind '" + std::string(kind) + "'");
  }
  return r;
}

std::string complexity_json(const CobaConfig& config, std::size_t n_train, std::size_t epochs,
                            std::size_t f_a, std::size_t f_b, int indent) {
  nlohmann::ordered_json j;
  j["n_train"] = n_train;
  j["epochs"] = epochs;
  j["feature_counts"] = {f_a, f_b};
  auto models = nlohmann::ordered_json::array();
  for (const auto& kind : complexity_model_kinds()) {
    const auto a = count_ops(kind, config, n_train, epochs, f_a);
    const auto b = count_ops(kind, config, n_train, epochs, f_b);
    nlohmann::ordered_json m;
    m["model"] = kind;
    for (const auto* r : {&a, &b}) {
      nlohmann::ordered_json e;
      e["features"] = r->feature_count;
      e["train_madds"] = r->train_madds;
      e["predict_madds"] = r->predict_madds;
      e["predict_adds"] = r->predict_adds;
      nlohmann::ordered_json terms;
      for (const auto& [name, v] : r->predict_terms) terms[name] = v;
      e["predict_terms"] = terms;
      m["counts"].push_back(e);
    }
    m["train_ratio"] = static_cast<double>(a.train_madds) / static_cast<double>(b.train_madds);
    m["predict_ratio"] = static_cast<double>(a.predict_madds) / static_cast<double>(b.predict_madds);
    models.push_back(m);
  }
  j["models"] = models;
  return j.dump(indent);
}

}  // namespace uavzone
