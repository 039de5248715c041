#pragma once

#include "uavzone/dataset.hpp"
#include "uavzone/nn.hpp"
#include "uavzone/rng.hpp"

#include <random>
#include <vector>

namespace uavzone::testing {

inline nn::Mat random_mat(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                          double scale = 1.0) {
  Rng rng(mix_seed(seed, 77));
  std::normal_distribution<double> normal(0.0, scale);
  nn::Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

inline void randomize(nn::Tensor& t, std::uint64_t seed, double scale = 0.5) {
  Rng rng(mix_seed(seed, 78));
  std::normal_distribution<double> normal(0.0, scale);
  for (auto& v : t.data()) v = normal(rng);
}

// Windows whose every step is drawn around -mean (class 0) or +mean (class 1)
// in all f coordinates. Labels are assigned in order, positives spread evenly.
inline std::vector<data::FeatureWindow> blob_windows(std::size_t n, double positive_fraction,
                                                     std::size_t steps, std::size_t f,
                                                     double mean, double noise,
                                                     std::uint64_t seed) {
  Rng rng(mix_seed(seed, 79));
  std::normal_distribution<double> normal(0.0, noise);
  std::vector<data::FeatureWindow> out(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += positive_fraction;
    int y = 0;
    if (acc >= 1.0) {
      acc -= 1.0;
      y = 1;
    }
    auto& w = out[i];
    w.y = y;
    w.origin_index = i;
    w.x.resize(static_cast<Eigen::Index>(steps), static_cast<Eigen::Index>(f));
    const double c = y == 1 ? mean : -mean;
    for (Eigen::Index k = 0; k < w.x.size(); ++k) w.x.data()[k] = c + normal(rng);
  }
  return out;
}

}  // namespace uavzone::testing
