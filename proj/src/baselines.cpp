#include "uavzone/baselines.hpp"

#include "uavzone/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>

namespace uavzone::baselines {

using nn::Mat;
using nn::Vec;

namespace {

void check_labels(std::span<const int> y, std::size_t rows) {
  if (y.size() != rows) throw DataError("label count does not match feature rows");
  for (int v : y)
    if (v != 0 && v != 1) throw DataError("labels must be 0 or 1");
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

KnnModel knn_fit(Mat x, std::vector<int> y, std::size_t k) {
  check_labels(y, static_cast<std::size_t>(x.rows()));
  if (y.empty()) throw DataError("knn needs at least one training sample");
  if (k < 1 || k > y.size()) throw ConfigError("knn k must be in [1, N]");
  if (!x.allFinite()) throw DataError("knn training features must be finite");
  return {std::move(x), std::move(y), k};
}

int knn_predict(const KnnModel& model, std::span<const double> query) {
  const auto n = static_cast<std::size_t>(model.x.rows());
  if (n == 0) throw DataError("knn model is empty");
  if (query.size() != static_cast<std::size_t>(model.x.cols()))
    throw std::invalid_argument("knn: query has the wrong feature count");
  const Eigen::Map<const Eigen::RowVectorXd> q(query.data(), static_cast<Eigen::Index>(query.size()));
  std::vector<std::pair<double, std::size_t>> d(n);
  for (std::size_t i = 0; i < n; ++i)
    d[i] = {(model.x.row(static_cast<Eigen::Index>(i)) - q).squaredNorm(), i};
  const std::size_t k = std::min(model.k, n);
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k - 1), d.end());
  std::size_t ones = 0;
  for (std::size_t i = 0; i < k; ++i) ones += model.y[d[i].second] == 1;
  return 2 * ones >= k ? 1 : 0;
}

std::vector<int> knn_predict_all(const KnnModel& model, const Mat& queries) {
  std::vector<int> out(static_cast<std::size_t>(queries.rows()));
  for (Eigen::Index r = 0; r < queries.rows(); ++r)
    out[static_cast<std::size_t>(r)] = knn_predict(model, {queries.row(r).data(), static_cast<std::size_t>(queries.cols())});
  return out;
}

double logreg_loss(const LogRegModel& model, const Mat& x, std::span<const int> y, Vec* grad_w,
                   double* grad_b) {
  check_labels(y, static_cast<std::size_t>(x.rows()));
  if (y.empty()) throw DataError("logistic regression needs data");
  const Vec z = (x * model.w).array() + model.b;
  double loss = 0.0;
  Vec r(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double t = y[static_cast<std::size_t>(i)];
    loss += softplus(z[i]) - t * z[i];
    r[i] = sigmoid(z[i]) - t;
  }
  const double inv_n = 1.0 / static_cast<double>(y.size());
  if (grad_w) *grad_w = (x.transpose() * r) * inv_n;
  if (grad_b) *grad_b = r.sum() * inv_n;
  return loss * inv_n;
}

LogRegModel logreg_fit(const Mat& x, std::span<const int> y, const LogRegConfig& config) {
  if (!(config.lr > 0.0)) throw ConfigError("logreg lr must be > 0");
  LogRegModel m;
  m.config = config;
  m.w = Vec::Zero(x.cols());
  Vec gw;
  double gb = 0.0;
  for (std::size_t e = 0; e < config.epochs; ++e) {
    const double loss = logreg_loss(m, x, y, &gw, &gb);
    if (!std::isfinite(loss)) throw NumericError("logreg: non-finite loss at epoch " + std::to_string(e + 1));
    m.w -= config.lr * gw;
    m.b -= config.lr * gb;
  }
  if (!m.w.allFinite() || !std::isfinite(m.b)) throw NumericError("logreg: non-finite parameters");
  return m;
}

int logreg_predict(const LogRegModel& model, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(model.w.size()))
    throw std::invalid_argument("logreg: input has the wrong feature count");
  const Eigen::Map<const Vec> v(x.data(), static_cast<Eigen::Index>(x.size()));
  return sigmoid(model.w.dot(v) + model.b) > 0.5 ? 1 : 0;
}

std::vector<int> logreg_predict_all(const LogRegModel& model, const Mat& x) {
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    out[static_cast<std::size_t>(r)] = logreg_predict(model, {x.row(r).data(), static_cast<std::size_t>(x.cols())});
  return out;
}

std::pair<Mat, std::vector<int>> flatten_windows(std::span<const data::FeatureWindow> windows) {
  if (windows.empty()) return {Mat(0, 0), {}};
  const auto cols = windows.front().x.size();
  Mat out(static_cast<Eigen::Index>(windows.size()), cols);
  std::vector<int> y(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (windows[i].x.size() != cols) throw std::invalid_argument("flatten_windows: ragged windows");
    out.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::RowVectorXd>(windows[i].x.data(), cols);
    y[i] = windows[i].y;
  }
  return {std::move(out), std::move(y)};
}

std::string logreg_to_json(const LogRegModel& model, int indent) {
  nlohmann::ordered_json j;
  j["format"] = "uavzone-logreg";
  j["weights"] = std::vector<double>(model.w.data(), model.w.data() + model.w.size());
  j["bias"] = model.b;
  j["lr"] = model.config.lr;
  j["epochs"] = model.config.epochs;
  return j.dump(indent);
}

}  // namespace uavzone::baselines
