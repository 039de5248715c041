#pragma once

// Binary classification scores with class 1 (restricted) as the positive class.
// A score whose denominator is zero is reported as 0 and flagged.

#include <cstddef>
#include <span>
#include <string>

namespace uavzone {

struct Metrics {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;

  std::size_t count() const { return tp + fp + fn + tn; }
};

Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);

// Throws DataError on empty input or mismatched lengths; labels must be 0/1.
Metrics compute_metrics(std::span<const int> predictions, std::span<const int> labels);

// {"accuracy":..,"precision":..,"recall":..,"f1":..,"confusion":{..},"n":..,"undefined":[..]}
std::string metrics_json(const Metrics& m, int indent = 2);

}  // namespace uavzone
