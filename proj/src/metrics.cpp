#include "uavzone/metrics.hpp"

#include "uavzone/error.hpp"

#include "json.hpp"

namespace uavzone {

Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
  Metrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.tn = tn;
  const std::size_t n = tp + fp + fn + tn;
  if (n == 0) throw DataError("metrics of an empty evaluation set");
  m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(n);
  if (tp + fp == 0) {
    m.precision_undefined = true;
  } else {
    m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  if (tp + fn == 0) {
    m.recall_undefined = true;
  } else {
    m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  }
  if (m.precision + m.recall == 0.0) {
    m.f1_undefined = true;
  } else {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  }
  return m;
}

Metrics compute_metrics(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size())
    throw DataError("prediction and label counts differ");
  if (labels.empty()) throw DataError("metrics of an empty evaluation set");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int p = predictions[i], y = labels[i];
    if ((p != 0 && p != 1) || (y != 0 && y != 1)) throw DataError("labels must be 0 or 1");
    if (p == 1 && y == 1) ++tp;
    else if (p == 1) ++fp;
    else if (y == 1) ++fn;
    else ++tn;
  }
  return metrics_from_counts(tp, fp, fn, tn);
}

std::string metrics_json(const Metrics& m, int indent) {
  nlohmann::ordered_json j;
  j["accuracy"] = m.accuracy;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["f1"] = m.f1;
  j["confusion"] = {{"tp", m.tp}, {"fp", m.fp}, {"fn", m.fn}, {"tn", m.tn}};
  j["n"] = m.count();
  auto undefined = nlohmann::ordered_json::array();
  if (m.precision_undefined) undefined.push_back("precision");
  if (m.recall_undefined) undefined.push_back("recall");
  if (m.f1_undefined) undefined.push_back("f1");
  j["undefined"] = undefined;
  return j.dump(indent);
}

}  // namespace uavzone
