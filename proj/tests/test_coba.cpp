#include "doctest.h"

#include "test_support.hpp"
#include "uavzone/coba.hpp"
#include "uavzone/error.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>

using namespace uavzone;
using namespace uavzone::nn;
using uavzone::testing::random_mat;
using uavzone::testing::randomize;

namespace {

CobaConfig small_config() {
  CobaConfig c;
  c.seq_len = 5;
  c.n_features = 3;
  c.cnn_channels = 4;
  c.lstm_hidden = 3;
  return c;
}

// Projects the logits on a fixed random matrix and checks every parameter.
double model_fd_error(CobaModel& model, std::uint64_t seed, bool training, std::size_t max_coords) {
  const auto& cfg = model.config();
  const Eigen::Index batch = 2;
  const Mat x = random_mat(static_cast<Eigen::Index>(cfg.seq_len) * batch,
                           static_cast<Eigen::Index>(cfg.n_features), seed);
  const Mat r = random_mat(batch, static_cast<Eigen::Index>(cfg.n_classes), seed + 1000);
  const std::uint64_t drop_seed = seed + 7;

  zero_grads(model.parameters());
  CobaModel::Trace trace;
  model.forward(x, training, drop_seed, &trace);
  model.backward(trace, r);

  std::vector<GradientProbe> probes;
  for (auto* p : model.parameters()) probes.push_back({p->name, p->value.data(), p->grad.data()});
  auto objective = [&] { return model.forward(x, training, drop_seed).logits.cwiseProduct(r).sum(); };
  FiniteDiffOptions opt;
  opt.max_coords = max_coords;
  opt.seed = seed;
  const auto rep = finite_diff_check(objective, probes, opt);
  INFO("worst probe: " << rep.worst_probe);
  return rep.max_rel_error;
}

}  // namespace

TEST_CASE("forward shape and normalization contract") {
  CobaModel m(small_config(), 1);
  const Mat x = random_mat(5 * 4, 3, 2);
  const auto r = m.forward(x);
  CHECK(r.logits.rows() == 4);
  CHECK(r.logits.cols() == 2);
  CHECK(r.alphas.rows() == 4);
  CHECK(r.alphas.cols() == 5);
  for (Eigen::Index b = 0; b < 4; ++b) {
    CHECK(std::abs(r.probs.row(b).sum() - 1.0) < 1e-12);
    CHECK(std::abs(r.alphas.row(b).sum() - 1.0) < 1e-12);
  }
  CHECK_THROWS_WITH_AS(m.forward(random_mat(10, 4, 3)), doctest::Contains("input"), std::invalid_argument);
  CHECK_THROWS_AS(m.forward(random_mat(7, 3, 3)), std::invalid_argument);
}

TEST_CASE("all-zero parameters give logits b2 + br") {
  CobaModel m(small_config(), 1);
  for (auto* p : m.parameters()) p->value.fill(0.0);
  m.parameter("fc2.bias").value[0] = 0.25;
  m.parameter("fc2.bias").value[1] = -1.5;
  m.parameter("residual.bias").value[0] = 2.0;
  m.parameter("residual.bias").value[1] = 0.125;
  const auto r = m.forward(random_mat(10, 3, 5));
  for (Eigen::Index b = 0; b < 2; ++b) {
    CHECK(r.logits(b, 0) == 2.25);
    CHECK(r.logits(b, 1) == -1.375);
  }
}

TEST_CASE("full model gradients match central differences") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    CobaModel m(small_config(), seed);
    for (auto* p : m.parameters()) randomize(p->value, seed * 31 + p->name.size(), 0.4);
    CHECK(model_fd_error(m, seed, false, 0) < 1e-5);
    CHECK(model_fd_error(m, seed, true, 0) < 1e-5);
  }
}

TEST_CASE("default-size model gradients (subsampled coordinates)") {
  CobaConfig cfg;  // L=10, f=7, c=h=64
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    CobaModel m(cfg, seed);
    CHECK(model_fd_error(m, seed, true, 12) < 1e-5);
  }
}

TEST_CASE("lstm_only variant") {
  const CobaConfig full = small_config();
  const CobaConfig abl = lstm_only_variant(full);
  CHECK(abl.ablation == Ablation::lstm_only);
  CobaModel m(abl, 4);
  CHECK(m.parameter_count() < CobaModel(full, 4).parameter_count());
  const auto r = m.forward(random_mat(15, 3, 1));
  CHECK(r.logits.rows() == 3);
  CHECK(r.logits.cols() == 2);
  CHECK(r.alphas.size() == 0);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    CobaModel v(abl, seed);
    for (auto* p : v.parameters()) randomize(p->value, seed * 17 + p->name.size(), 0.4);
    CHECK(model_fd_error(v, seed, true, 0) < 1e-5);
  }
  CHECK_THROWS_AS(m.parameter("conv1.weight"), std::out_of_range);
}

TEST_CASE("parameter count matches the closed form") {
  for (std::size_t f : {1, 2, 7})
    for (std::size_t c : {1, 8, 64})
      for (std::size_t h : {1, 5, 64}) {
        CobaConfig cfg;
        cfg.n_features = f;
        cfg.cnn_channels = c;
        cfg.lstm_hidden = h;
        CHECK(CobaModel(cfg).parameter_count() == expected_parameter_count(cfg));
        const auto v = lstm_only_variant(cfg);
        CHECK(CobaModel(v).parameter_count() == expected_parameter_count(v));
      }
  // hand count for f=7, c=h=64: 1408+128+12352+128+2*(16384+16384+256)+129+8256+130+258
  CHECK(expected_parameter_count(CobaConfig{}) == 88837);
}

TEST_CASE("eval forward is deterministic and shift-invariant at the argmax") {
  CobaModel m(CobaConfig{}, 9);
  const Mat x = random_mat(10 * 3, 7, 4);
  const auto a = m.forward(x);
  const auto b = m.forward(x);
  CHECK(a.logits == b.logits);
  CHECK(a.alphas == b.alphas);

  Mat shifted = a.logits.array() + 3.75;
  const Mat p = softmax(shifted);
  for (Eigen::Index r = 0; r < 3; ++r) CHECK(argmax_class(p, r) == argmax_class(a.probs, r));
}

TEST_CASE("attention context lies in the convex hull of BiLSTM states") {
  CobaModel m(small_config(), 3);
  for (auto* p : m.parameters()) randomize(p->value, 5 + p->name.size(), 0.8);
  const Eigen::Index batch = 4;
  const Mat x = random_mat(5 * batch, 3, 8);
  CobaModel::Trace tr;
  m.forward(x, false, 0, &tr);
  const Mat& hs = tr.attention.states;
  for (Eigen::Index b = 0; b < batch; ++b)
    for (Eigen::Index d = 0; d < hs.cols(); ++d) {
      double lo = 1e300, hi = -1e300;
      for (Eigen::Index t = 0; t < 5; ++t) {
        lo = std::min(lo, hs(t * batch + b, d));
        hi = std::max(hi, hs(t * batch + b, d));
      }
      CHECK(tr.context(b, d) >= lo - 1e-12);
      CHECK(tr.context(b, d) <= hi + 1e-12);
    }
}

TEST_CASE("predict") {
  Mat p(3, 2);
  p << 0.9, 0.1, 0.5, 0.5, 0.2, 0.8;
  CHECK(argmax_class(p, 0) == 0);
  CHECK(argmax_class(p, 1) == 0);
  CHECK(argmax_class(p, 2) == 1);

  CobaModel m(small_config(), 2);
  for (auto* q : m.parameters()) q->value.fill(0.0);
  CHECK(predict(m, random_mat(5, 3, 1)) == 0);  // logits tie at zero
  m.parameter("fc2.bias").value[1] = 1.0;
  CHECK(predict(m, random_mat(5, 3, 1)) == 1);
}

TEST_CASE("checkpoint round trip and validation") {
  CobaConfig cfg = small_config();
  CobaModel m(cfg, 12);
  for (auto* p : m.parameters()) randomize(p->value, 99 + p->name.size(), 0.3);
  m.set_feature_names({"pci", "ssb_idx", "rssi"});
  const auto path = std::filesystem::temp_directory_path() / "uavzone_ckpt_test.json";
  m.save(path);
  const CobaModel back = CobaModel::load(path);
  CHECK(back.config() == cfg);
  CHECK(back.feature_names() == m.feature_names());
  const Mat x = random_mat(10, 3, 6);
  CHECK(back.forward(x).logits == m.forward(x).logits);
  CHECK(back.to_json() == m.to_json());

  SUBCASE("shape mismatch names the tensor") {
    CobaConfig other = cfg;
    other.n_features = 4;
    CobaModel o(other, 1);
    std::string text = o.to_json();
    // swap in the original config so the tensor shapes disagree
    auto good = nlohmann::json::parse(m.to_json());
    auto bad = nlohmann::json::parse(text);
    bad["config"] = good["config"];
    bad["feature_names"] = good["feature_names"];
    CHECK_THROWS_WITH_AS(CobaModel::from_json(bad.dump()), doctest::Contains("conv1.weight"), DataError);
  }
  SUBCASE("missing tensor") {
    auto j = nlohmann::json::parse(m.to_json());
    j["tensors"].erase(j["tensors"].begin());
    CHECK_THROWS_WITH_AS(CobaModel::from_json(j.dump()), doctest::Contains("missing tensor"), DataError);
  }
  SUBCASE("garbage") {
    CHECK_THROWS_AS(CobaModel::from_json("{not json"), DataError);
    CHECK_THROWS_AS(CobaModel::from_json("{\"format\":\"other\"}"), DataError);
  }
  std::filesystem::remove(path);
}

TEST_CASE("config validation") {
  CobaConfig c;
  c.kernel_size = 4;
  CHECK_THROWS_AS(CobaModel(c, 0), ConfigError);
  c = CobaConfig{};
  c.seq_len = 0;
  CHECK_THROWS_AS(CobaModel(c, 0), ConfigError);
  CHECK(parse_ablation("lstm_only") == Ablation::lstm_only);
  CHECK_THROWS_AS(parse_ablation("transformer"), ConfigError);
  CHECK(!CobaModel(CobaConfig{}).describe().empty());
}
