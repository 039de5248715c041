#pragma once

// Per-sample reference classifiers: k-nearest neighbors and logistic regression.

#include "uavzone/dataset.hpp"
#include "uavzone/nn.hpp"

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace uavzone::baselines {

struct KnnModel {
  nn::Mat x;  // N x f
  std::vector<int> y;
  std::size_t k = 5;
};

KnnModel knn_fit(nn::Mat x, std::vector<int> y, std::size_t k = 5);
// Euclidean; distance ties -> lower training index; vote ties -> 1.
int knn_predict(const KnnModel& model, std::span<const double> query);
std::vector<int> knn_predict_all(const KnnModel& model, const nn::Mat& queries);

struct LogRegConfig {
  double lr = 0.1;
  std::size_t epochs = 200;
};

struct LogRegModel {
  nn::Vec w;
  double b = 0.0;
  LogRegConfig config;
};

// Mean binary cross-entropy; fills the gradient when requested.
double logreg_loss(const LogRegModel& model, const nn::Mat& x, std::span<const int> y,
                   nn::Vec* grad_w = nullptr, double* grad_b = nullptr);
// Full-batch gradient descent from zero; NumericError on a non-finite loss.
LogRegModel logreg_fit(const nn::Mat& x, std::span<const int> y, const LogRegConfig& config = {});
// 1 iff sigmoid(w.x + b) > 0.5.
int logreg_predict(const LogRegModel& model, std::span<const double> x);
std::vector<int> logreg_predict_all(const LogRegModel& model, const nn::Mat& x);

// Windows flattened row-wise into L*f columns, for parity runs against the
// sequence model.
std::pair<nn::Mat, std::vector<int>> flatten_windows(std::span<const data::FeatureWindow> windows);

std::string logreg_to_json(const LogRegModel& model, int indent = 2);

}  // namespace uavzone::baselines
