#pragma once

// Analytic multiply-add counts. Formulas (one window / sample, L steps,
// f features, c channels, kernel K, hidden h, n classes, N training items):
//
//   coba forward  conv1 L*c*f*K, layernorm 5*L*c (x2), conv2 L*c*c*K,
//                 bilstm 2*L*(4h*c + 4h*h + 5h), attention 4*L*h + 3*L,
//                 fc1 2h*h, fc2 h*n, residual 2h*n
//   lstm_only     L*(4h*f + 4h*h + 5h) + h*h + h*n
//   neural train  epochs * N * 3 * forward   (backward ~ 2x forward)
//   knn           predict N*f, train N*f (copying the reference set)
//   logreg        predict f (+1 bias add), train epochs*N*f

#include "uavzone/coba.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace uavzone {

struct ComplexityReport {
  std::string model;
  std::size_t feature_count = 0;
  std::size_t n_train = 0;
  std::size_t epochs = 0;
  std::uint64_t train_madds = 0;
  std::uint64_t predict_madds = 0;  // per query
  std::uint64_t predict_adds = 0;   // additions with no multiply (bias terms)
  std::vector<std::pair<std::string, std::uint64_t>> predict_terms;
};

// kind: coba | lstm_only | knn | logreg. `config` supplies L, c, K, h, n for
// the neural kinds; its n_features is replaced by `feature_count`.
ComplexityReport count_ops(std::string_view kind, const CobaConfig& config, std::size_t n_train,
                           std::size_t epochs, std::size_t feature_count);

std::vector<std::string> complexity_model_kinds();

// Per-model counts for two feature counts plus train/predict ratios (a over b).
std::string complexity_json(const CobaConfig& config, std::size_t n_train, std::size_t epochs,
                            std::size_t f_a, std::size_t f_b, int indent = 2);

}  // namespace uavzone
