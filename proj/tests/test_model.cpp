#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ltr3o/common.hpp"
#include "ltr3o/losses.hpp"
#include "ltr3o/model.hpp"
#include "ltr3o/rng.hpp"
#include "support/tmpdir.hpp"

using namespace ltr3o;

namespace {

std::vector<Image> random_inputs(int k, int size, std::uint64_t seed) {
  auto rng = make_rng(seed, "inputs");
  std::vector<Image> out;
  for (int j = 0; j < k; ++j) {
    Image im = Image::zeros(size, size, 3);
    for (auto& p : im.px) p = static_cast<float>(rng.normal(0.0, 0.3));
    out.push_back(std::move(im));
  }
  return out;
}

// Independent scoring oracle: plain sigmoid + normalize, no ordering tricks.
std::vector<double> naive_scores(const std::vector<double>& logits) {
  std::vector<double> s(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    s[i] = 1.0 / (1.0 + std::exp(-logits[i]));
    sum += s[i];
  }
  for (double& x : s) x /= sum;
  return s;
}

std::vector<double> naive_softmax(const std::vector<double>& logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    sum += p[i];
  }
  for (double& x : p) x /= sum;
  return p;
}

Ltr3oModel tiny_model(int n_classes = 3, int image_size = 32, int feature_dim = 32) {
  BackboneSpec spec;
  spec.name = "tiny";
  spec.feature_dim = feature_dim;
  return Ltr3oModel(spec, n_classes, image_size);
}

}  // namespace

TEST_CASE("ruler scores equal sigmoid over the sigmoid sum") {
  const std::vector<double> a = ruler_scores_from_logits({2.0, 0.0, 0.0});
  CHECK(a[0] == doctest::Approx(0.4683105).epsilon(1e-6));
  CHECK(a[1] == doctest::Approx(0.2658447).epsilon(1e-6));
  CHECK(a[2] == doctest::Approx(0.2658447).epsilon(1e-6));

  auto rng = make_rng(5, "ruler");
  for (int trial = 0; trial < 200; ++trial) {
    const int k = rng.uniform_int(2, 16);
    std::vector<double> logits(static_cast<std::size_t>(k));
    for (double& x : logits) x = rng.normal(0.0, 3.0);
    const std::vector<double> scores = ruler_scores_from_logits(logits);
    const std::vector<double> expect = naive_scores(logits);
    double sum = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      CHECK(scores[i] == doctest::Approx(expect[i]).epsilon(1e-9));
      CHECK(scores[i] > 0.0);
      CHECK(scores[i] < 1.0);
      sum += scores[i];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

    // Higher logit, higher share.
    for (std::size_t i = 0; i + 1 < logits.size(); ++i)
      for (std::size_t j = i + 1; j < logits.size(); ++j)
        if (logits[i] > logits[j]) CHECK(scores[i] > scores[j]);
  }
}

TEST_CASE("ruler scores permute bit-exactly with their logits") {
  auto rng = make_rng(7, "perm");
  for (int trial = 0; trial < 100; ++trial) {
    const int k = rng.uniform_int(2, 10);
    std::vector<double> logits(static_cast<std::size_t>(k));
    for (double& x : logits) x = rng.normal(0.0, 2.0);
    const std::vector<double> base = ruler_scores_from_logits(logits);

    std::vector<std::size_t> perm(logits.size());
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    std::vector<double> shuffled(logits.size());
    for (std::size_t i = 0; i < perm.size(); ++i) shuffled[i] = logits[perm[i]];
    const std::vector<double> out = ruler_scores_from_logits(shuffled);
    for (std::size_t i = 0; i < perm.size(); ++i) CHECK(out[i] == base[perm[i]]);  // exact
  }
}

TEST_CASE("forward produces a convex fusion of per-candidate features") {
  Ltr3oModel model = tiny_model();
  model.init_params(11);
  const auto inputs = random_inputs(4, 32, 13);
  const auto f = model.forward(inputs);

  REQUIRE(f.alpha.size() == 4);
  REQUIRE(f.probs.size() == 3);
  REQUIRE(f.fused.size() == static_cast<std::size_t>(model.feature_dim()));
  REQUIRE(f.features.size() == f.fused.size() * 4);

  double asum = 0.0;
  for (double a : f.alpha) {
    CHECK(a > 0.0);
    CHECK(a < 1.0);
    asum += a;
  }
  CHECK(asum == doctest::Approx(1.0).epsilon(1e-12));

  // alpha agrees with the exported scoring function on the same logits.
  const auto expect_alpha = ruler_scores_from_logits(f.ruler_logits);
  for (std::size_t j = 0; j < f.alpha.size(); ++j) CHECK(f.alpha[j] == expect_alpha[j]);
  for (std::size_t j = 0; j < f.sigma.size(); ++j)
    CHECK(f.sigma[j] == doctest::Approx(1.0 / (1.0 + std::exp(-f.ruler_logits[j]))).epsilon(1e-12));

  // fused = sum_j alpha_j * feature_row_j.
  const int d = model.feature_dim();
  for (int i = 0; i < d; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < f.alpha.size(); ++j)
      acc += f.alpha[j] * f.features[j * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)];
    CHECK(f.fused[static_cast<std::size_t>(i)] == doctest::Approx(acc).epsilon(1e-10));
  }

  // probs = softmax(class_logits); sums to one; matches the naive oracle.
  const auto expect_probs = naive_softmax(f.class_logits);
  double psum = 0.0;
  for (std::size_t c = 0; c < f.probs.size(); ++c) {
    CHECK(f.probs[c] == doctest::Approx(expect_probs[c]).epsilon(1e-12));
    psum += f.probs[c];
  }
  CHECK(psum == doctest::Approx(1.0).epsilon(1e-12));

  // Oracle sanity: softmax of (ln 1, ln 2, ln 3) is (1/6, 2/6, 3/6).
  const auto frac = naive_softmax({std::log(1.0), std::log(2.0), std::log(3.0)});
  CHECK(frac[0] == doctest::Approx(1.0 / 6).epsilon(1e-12));
  CHECK(frac[1] == doctest::Approx(2.0 / 6).epsilon(1e-12));
  CHECK(frac[2] == doctest::Approx(3.0 / 6).epsilon(1e-12));
}

TEST_CASE("identical candidates share features and split alpha evenly") {
  Ltr3oModel model = tiny_model();
  model.init_params(17);
  std::vector<Image> inputs = random_inputs(1, 32, 19);
  inputs.push_back(inputs[0]);
  inputs.push_back(inputs[0]);
  const auto f = model.forward(inputs);

  const int d = model.feature_dim();
  for (int j = 1; j < 3; ++j)
    for (int i = 0; i < d; ++i)
      CHECK(f.features[static_cast<std::size_t>(j * d + i)] ==
            f.features[static_cast<std::size_t>(i)]);
  for (int j = 0; j < 3; ++j) CHECK(f.alpha[static_cast<std::size_t>(j)] == f.alpha[0]);
  CHECK(f.alpha[0] == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("permuting the candidates permutes the outputs and nothing else") {
  Ltr3oModel model = tiny_model();
  model.init_params(23);
  const auto inputs = random_inputs(5, 32, 29);
  const auto base = model.forward(inputs);

  std::vector<std::size_t> perm = {3, 0, 4, 1, 2};
  std::vector<Image> shuffled;
  for (std::size_t p : perm) shuffled.push_back(inputs[p]);
  const auto out = model.forward(shuffled);

  // alpha and features move with their candidate, bit for bit.
  const int d = model.feature_dim();
  for (std::size_t j = 0; j < perm.size(); ++j) {
    CHECK(out.alpha[j] == base.alpha[perm[j]]);
    CHECK(out.ruler_logits[j] == base.ruler_logits[perm[j]]);
    for (int i = 0; i < d; ++i)
      CHECK(out.features[j * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)] ==
            base.features[perm[j] * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)]);
  }
  // The fused vector and prediction only see reordering noise.
  for (std::size_t i = 0; i < base.fused.size(); ++i)
    CHECK(out.fused[i] == doctest::Approx(base.fused[i]).epsilon(1e-9));
  for (std::size_t c = 0; c < base.probs.size(); ++c)
    CHECK(out.probs[c] == doctest::Approx(base.probs[c]).epsilon(1e-9));
}

TEST_CASE("a single candidate gets the whole weight") {
  Ltr3oModel model = tiny_model();
  model.init_params(31);
  const auto f = model.forward(random_inputs(1, 32, 37));
  REQUIRE(f.alpha.size() == 1);
  CHECK(f.alpha[0] == 1.0);
}

TEST_CASE("forward validates its inputs") {
  Ltr3oModel model = tiny_model();
  model.init_params(41);
  CHECK_THROWS_AS(model.forward({}), ValidationError);
  CHECK_THROWS_AS(model.forward(random_inputs(2, 16, 43)), ValidationError);  // wrong size
  std::vector<Image> gray = {Image::zeros(32, 32, 1)};
  CHECK_THROWS_AS(model.forward(gray), ValidationError);
  CHECK_THROWS_AS(tiny_model(3, 8), ValidationError);    // image too small
  CHECK_THROWS_AS(tiny_model(3, 40), ValidationError);   // not a multiple of 16
  CHECK_THROWS_AS(tiny_model(0, 32), ValidationError);   // no classes
}

TEST_CASE("parameter init is seed-deterministic") {
  Ltr3oModel a = tiny_model();
  Ltr3oModel b = tiny_model();
  a.init_params(7);
  b.init_params(7);
  CHECK(a.params() == b.params());
  b.init_params(8);
  CHECK(a.params() != b.params());
}

TEST_CASE("loss gradients through the whole model match finite differences") {
  Ltr3oModel model = tiny_model(3, 32, 16);
  model.init_params(47);
  const auto inputs = random_inputs(3, 32, 53);
  const std::vector<double> onehot = {0.0, 1.0, 0.0};
  const double delta = 0.9, gamma = 0.34, lambda = 1.0;  // hinge active, k_h = 1

  auto f = model.forward(inputs);

  // Analytic gradient: CE through the classifier plus the ranking term into
  // the scoring head.
  std::vector<double> dlogits(3);
  for (int c = 0; c < 3; ++c)
    dlogits[static_cast<std::size_t>(c)] = f.probs[static_cast<std::size_t>(c)] -
                                           onehot[static_cast<std::size_t>(c)];
  std::vector<double> dalpha = ro_loss_grad(f.alpha, delta, gamma);
  for (double& g : dalpha) g *= lambda;
  std::vector<double> grad(model.params().size(), 0.0);
  model.backward(f, dlogits, dalpha, grad.data());

  auto loss = [&]() {
    const auto r = model.forward(inputs);
    return ce_loss(r.probs, onehot) + lambda * ro_loss(r.alpha, delta, gamma);
  };

  // Probe a spread of parameters: first/last plus a stride through the
  // middle keeps the run fast while touching every tensor.
  std::vector<std::size_t> probes;
  const std::size_t n = model.params().size();
  for (std::size_t i = 0; i < n; i += n / 37 + 1) probes.push_back(i);
  probes.push_back(n - 1);

  const double worst = grad_check(loss, model.params(), grad, 1e-5, &probes);
  CHECK(worst < 1e-4);
}

TEST_CASE("checkpoints round-trip the model, config, and labels") {
  fixtures::TempDir tmp("model_ckpt");
  Ltr3oModel model = tiny_model(4, 32, 24);
  model.init_params(59);
  Config cfg;
  cfg.k = 6;
  cfg.delta = 0.55;
  cfg.image_size = 32;
  cfg.backbone = model.backbone_spec();
  const LabelSpace labels(std::vector<std::string>{"a", "b", "c", "d"});

  save_checkpoint(tmp / "m.bin", model, cfg, labels);
  const Checkpoint ck = load_checkpoint(tmp / "m.bin");
  CHECK(ck.model.params() == model.params());
  CHECK(ck.model.feature_dim() == 24);
  CHECK(ck.model.n_classes() == 4);
  CHECK(ck.config.k == 6);
  CHECK(ck.config.delta == 0.55);
  CHECK(ck.labels.names() == labels.names());

  // Same architecture pulls back every tensor.
  Ltr3oModel same = tiny_model(4, 32, 24);
  same.init_params(61);
  const int copied = same.load_matching_params(tmp / "m.bin");
  CHECK(copied == static_cast<int>(model.registry().size()));
  CHECK(same.params() == model.params());

  // A different class count skips the classifier head but keeps the trunk.
  Ltr3oModel fewer = tiny_model(2, 32, 24);
  fewer.init_params(67);
  const int partial = fewer.load_matching_params(tmp / "m.bin");
  CHECK(partial > 0);
  CHECK(partial < copied);

  CHECK_THROWS_AS(load_checkpoint(tmp / "missing.bin"), ValidationError);
}
