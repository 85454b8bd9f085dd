#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ltr3o/common.hpp"
#include "ltr3o/losses.hpp"
#include "ltr3o/rng.hpp"

using namespace ltr3o;

namespace {

// Brute-force reference written independently of the library: sort a copy
// descending (stable on value only; ties cannot occur in the random draws
// used with it), take ceil(gamma * k) for the top group, mean both groups,
// hinge against delta.
double ro_reference(std::vector<double> alpha, double delta, double gamma) {
  const int k = static_cast<int>(alpha.size());
  const int kh = static_cast<int>(std::ceil(gamma * k - 1e-9));
  std::sort(alpha.begin(), alpha.end(), std::greater<double>());
  double high = 0.0, low = 0.0;
  for (int i = 0; i < kh; ++i) high += alpha[static_cast<std::size_t>(i)];
  for (int i = kh; i < k; ++i) low += alpha[static_cast<std::size_t>(i)];
  high /= kh;
  low /= (k - kh);
  return std::max(0.0, delta - (high - low));
}

std::vector<double> random_alpha(int k, RngStream& rng) {
  std::vector<double> a(static_cast<std::size_t>(k));
  double sum = 0.0;
  for (double& x : a) {
    x = -std::log(1.0 - rng.next_real() + 1e-12);  // exponential draws
    sum += x;
  }
  for (double& x : a) x /= sum;  // uniform on the simplex
  return a;
}

}  // namespace

TEST_CASE("rank split orders scores and breaks ties by original position") {
  const RankSplit s = rank_split({0.2, 0.3, 0.2, 0.3}, 0.5);
  CHECK(s.k_h == 2);
  CHECK(s.sorted == std::vector<double>{0.3, 0.3, 0.2, 0.2});
  CHECK(s.order == std::vector<int>{1, 3, 0, 2});  // stable among equals
  CHECK(s.alpha_h == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(s.alpha_l == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(s.gap() == doctest::Approx(0.1).epsilon(1e-12));

  CHECK_THROWS_AS(rank_split({1.0}, 0.5), ValidationError);
  CHECK_THROWS_AS(rank_split({0.5, 0.5}, 1.0), ValidationError);   // high group = everything
  CHECK_THROWS_AS(rank_split({0.5, 0.5}, 0.0), ValidationError);
  CHECK_THROWS_AS(rank_split({0.5, 0.5}, -0.1), ValidationError);
}

TEST_CASE("ranking loss reproduces hand-computed cases") {
  // Uniform scores: no gap, full margin.
  CHECK(ro_loss(std::vector<double>(8, 0.125), 0.7, 0.1) == doctest::Approx(0.7).epsilon(1e-12));

  // One dominant candidate clears the margin.
  std::vector<double> dominant = {0.93, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01};
  CHECK(ro_loss(dominant, 0.7, 0.1) == 0.0);

  // gamma = 0.25 over 8 scores: top two average 0.25, rest average 1/12.
  const std::vector<double> mixed = {0.25, 0.25, 0.125, 0.125, 0.125, 0.125, 0.0, 0.0};
  CHECK(ro_loss(mixed, 0.7, 0.25) == doctest::Approx(0.7 - (0.25 - 0.5 / 6)).epsilon(1e-12));

  CHECK_THROWS_AS(ro_loss(mixed, 0.0, 0.25), ValidationError);
}

TEST_CASE("ranking loss agrees with a brute-force reference") {
  auto rng = make_rng(3, "ro");
  for (int trial = 0; trial < 10000; ++trial) {
    const int k = rng.uniform_int(2, 16);
    const double gamma = 0.05 + 0.9 * rng.next_real() * (k - 1) / k;  // keep k_h < k
    const double delta = 0.05 + 0.9 * rng.next_real();
    const std::vector<double> alpha = random_alpha(k, rng);
    const double expect = ro_reference(alpha, delta, gamma);
    const double got = ro_loss(alpha, delta, gamma);
    CHECK(std::abs(got - expect) <= 1e-12);

    // Bounds, and zero exactly when the gap clears the margin.
    CHECK(got >= 0.0);
    CHECK(got <= delta);
    const RankSplit s = rank_split(alpha, gamma);
    if (s.gap() >= delta)
      CHECK(got == 0.0);
    else
      CHECK(got == doctest::Approx(delta - s.gap()).epsilon(1e-12));
  }
}

TEST_CASE("ranking loss ignores the order of its scores") {
  auto rng = make_rng(5, "perm");
  for (int trial = 0; trial < 500; ++trial) {
    const int k = rng.uniform_int(3, 12);
    std::vector<double> alpha = random_alpha(k, rng);
    const double loss = ro_loss(alpha, 0.7, 0.25);
    rng.shuffle(alpha);
    CHECK(ro_loss(alpha, 0.7, 0.25) == doctest::Approx(loss).epsilon(1e-12));
  }
}

TEST_CASE("a wider gap never increases the ranking loss") {
  auto rng = make_rng(7, "mono");
  for (int trial = 0; trial < 2000; ++trial) {
    const int k = rng.uniform_int(2, 10);
    const double gamma = 0.3;
    const std::vector<double> a = random_alpha(k, rng);
    const std::vector<double> b = random_alpha(k, rng);
    const double ga = rank_split(a, gamma).gap();
    const double gb = rank_split(b, gamma).gap();
    const double la = ro_loss(a, 0.6, gamma);
    const double lb = ro_loss(b, 0.6, gamma);
    if (ga >= gb)
      CHECK(la <= lb + 1e-15);
    else
      CHECK(lb <= la + 1e-15);
  }
}

TEST_CASE("ranking-loss gradient matches finite differences off the kink") {
  auto rng = make_rng(11, "rograd");
  const double eps = 1e-5;
  int checked = 0;
  while (checked < 300) {
    const int k = rng.uniform_int(2, 12);
    const double gamma = 0.05 + 0.4 * rng.next_real();  // k_h always lands in [1, k-1]
    const double delta = 0.1 + 0.8 * rng.next_real();
    std::vector<double> alpha = random_alpha(k, rng);

    // Skip configurations where a probe could cross the hinge or reorder
    // two scores: the loss is not differentiable there.
    const RankSplit s = rank_split(alpha, gamma);
    if (std::abs(s.gap() - delta) < 10 * eps) continue;
    bool tie = false;
    for (std::size_t i = 0; i + 1 < s.sorted.size(); ++i)
      if (s.sorted[i] - s.sorted[i + 1] < 10 * eps) tie = true;
    if (tie) continue;

    const std::vector<double> analytic = ro_loss_grad(alpha, delta, gamma);
    const double worst = grad_check([&]() { return ro_loss(alpha, delta, gamma); }, alpha,
                                    analytic, eps);
    CHECK(worst < 1e-4);
    ++checked;
  }
}

TEST_CASE("the inactive hinge and the kink both take a zero gradient") {
  // gap = 0.92 > delta: hinge off.
  const std::vector<double> wide = {0.93, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01};
  for (double g : ro_loss_grad(wide, 0.7, 0.1)) CHECK(g == 0.0);

  // gap exactly delta: subgradient choice is zero.
  const std::vector<double> edge = {0.85, 0.15};
  CHECK(rank_split(edge, 0.5).gap() == doctest::Approx(0.7).epsilon(1e-15));
  for (double g : ro_loss_grad(edge, 0.7, 0.5)) CHECK(g == 0.0);
}

TEST_CASE("cross-entropy matches hand values and floors impossible predictions") {
  CHECK(ce_loss({1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}) == doctest::Approx(0.0).epsilon(1e-12));
  const std::vector<double> third(3, 1.0 / 3);
  CHECK(ce_loss(third, {0.0, 1.0, 0.0}) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  const std::vector<double> quarter(4, 0.25);
  CHECK(ce_loss(quarter, {0.0, 0.0, 0.0, 1.0}) == doctest::Approx(std::log(4.0)).epsilon(1e-12));

  // A zero probability at the true class is clamped, not infinite.
  CHECK(ce_loss({0.0, 1.0, 0.0}, {1.0, 0.0, 0.0}) ==
        doctest::Approx(-std::log(1e-12)).epsilon(1e-9));

  CHECK_THROWS_AS(ce_loss({0.5, 0.5}, {0.5, 0.5}), ValidationError);       // not one-hot
  CHECK_THROWS_AS(ce_loss({0.5, 0.5}, {1.0, 1.0}), ValidationError);       // two hot
  CHECK_THROWS_AS(ce_loss({0.5, 0.5}, {0.0, 0.0}), ValidationError);       // none hot
  CHECK_THROWS_AS(ce_loss({0.5, 0.5}, {1.0}), ValidationError);            // size mismatch
}

TEST_CASE("the total objective averages per-sample ce plus weighted ranking terms") {
  // Single item engineered to ce = 1 and ro = 0.7.
  LossItem item;
  item.prediction = {std::exp(-1.0), 1.0 - std::exp(-1.0)};
  item.y_g = {1.0, 0.0};
  item.alpha = {0.25, 0.25, 0.25, 0.25};
  CHECK(total_loss({item}, 0.7, 0.25, 1.0) == doctest::Approx(1.7).epsilon(1e-12));

  // Half-weighted ranking term: gap 0.3 at delta 0.7 leaves ro = 0.4.
  LossItem half = item;
  half.alpha = {0.475, 0.175, 0.175, 0.175};  // alpha_h 0.475, alpha_l 0.175
  CHECK(rank_split(half.alpha, 0.25).gap() == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(total_loss({half}, 0.7, 0.25, 0.5) == doctest::Approx(1.2).epsilon(1e-12));

  // lambda = 0 equals the mean cross-entropy bit for bit.
  auto rng = make_rng(13, "total");
  std::vector<LossItem> batch;
  double ce_sum = 0.0;
  for (int i = 0; i < 9; ++i) {
    LossItem it;
    it.prediction = random_alpha(4, rng);
    it.y_g.assign(4, 0.0);
    it.y_g[static_cast<std::size_t>(rng.uniform_int(0, 3))] = 1.0;
    it.alpha = random_alpha(6, rng);
    ce_sum += ce_loss(it.prediction, it.y_g);
    batch.push_back(std::move(it));
  }
  CHECK(total_loss(batch, 0.7, 0.1, 0.0) == ce_sum / 9);

  // The weighted version equals the independently accumulated mean.
  double expect = 0.0;
  for (const auto& it : batch)
    expect += ce_loss(it.prediction, it.y_g) + 0.8 * ro_loss(it.alpha, 0.7, 0.1);
  CHECK(total_loss(batch, 0.7, 0.1, 0.8) == doctest::Approx(expect / 9).epsilon(1e-12));

  CHECK_THROWS_AS(total_loss({}, 0.7, 0.1, 1.0), ValidationError);
  CHECK_THROWS_AS(total_loss({item}, 0.7, 0.1, -1.0), ValidationError);
}
