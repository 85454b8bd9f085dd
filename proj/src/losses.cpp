#include "ltr3o/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ltr3o/common.hpp"
#include "ltr3o/config.hpp"

namespace ltr3o {

RankSplit rank_split(const std::vector<double>& alpha, double gamma) {
  const int k = static_cast<int>(alpha.size());
  if (k < 2) throw ValidationError("rank_split: need at least 2 scores");
  const int kh = high_group_size(gamma, k);
  if (kh < 1 || kh > k - 1)
    throw ValidationError("rank_split: gamma " + std::to_string(gamma) +
                          " leaves an empty group for K=" + std::to_string(k));

  RankSplit r;
  r.k_h = kh;
  r.order.resize(static_cast<std::size_t>(k));
  std::iota(r.order.begin(), r.order.end(), 0);
  std::stable_sort(r.order.begin(), r.order.end(), [&](int a, int b) {
    return alpha[static_cast<std::size_t>(a)] > alpha[static_cast<std::size_t>(b)];
  });
  r.sorted.resize(static_cast<std::size_t>(k));
  for (int p = 0; p < k; ++p)
    r.sorted[static_cast<std::size_t>(p)] = alpha[static_cast<std::size_t>(r.order[static_cast<std::size_t>(p)])];

  double sh = 0.0, sl = 0.0;
  for (int p = 0; p < kh; ++p) sh += r.sorted[static_cast<std::size_t>(p)];
  for (int p = kh; p < k; ++p) sl += r.sorted[static_cast<std::size_t>(p)];
  r.alpha_h = sh / kh;
  r.alpha_l = sl / (k - kh);
  return r;
}

double ro_loss(const std::vector<double>& alpha, double delta, double gamma) {
  if (!(delta > 0.0)) throw ValidationError("ro_loss: delta must be positive");
  const RankSplit r = rank_split(alpha, gamma);
  return std::max(0.0, delta - r.gap());
}

std::vector<double> ro_loss_grad(const std::vector<double>& alpha, double delta, double gamma) {
  const RankSplit r = rank_split(alpha, gamma);
  std::vector<double> g(alpha.size(), 0.0);
  if (r.gap() >= delta) return g;  // inactive hinge; kink takes 0
  const int k = static_cast<int>(alpha.size());
  for (int p = 0; p < k; ++p) {
    const int src = r.order[static_cast<std::size_t>(p)];
    g[static_cast<std::size_t>(src)] = p < r.k_h ? -1.0 / r.k_h : 1.0 / (k - r.k_h);
  }
  return g;
}

double ce_loss(const std::vector<double>& prediction, const std::vector<double>& y_g) {
  if (prediction.size() != y_g.size())
    throw ValidationError("ce_loss: prediction and label lengths differ");
  if (prediction.empty()) throw ValidationError("ce_loss: empty prediction");
  int true_idx = -1;
  for (std::size_t c = 0; c < y_g.size(); ++c) {
    if (y_g[c] == 1.0) {
      if (true_idx >= 0) throw ValidationError("ce_loss: label is not one-hot");
      true_idx = static_cast<int>(c);
    } else if (y_g[c] != 0.0) {
      throw ValidationError("ce_loss: label is not one-hot");
    }
  }
  if (true_idx < 0) throw ValidationError("ce_loss: label is not one-hot");
  const double p = std::max(prediction[static_cast<std::size_t>(true_idx)], 1e-12);
  return -std::log(p);
}

double total_loss(const std::vector<LossItem>& batch, double delta, double gamma,
                  double lambda_) {
  if (batch.empty()) throw ValidationError("total_loss: empty batch");
  if (lambda_ < 0.0) throw ValidationError("total_loss: lambda must be >= 0");
  double sum = 0.0;
  for (const auto& item : batch)
    sum += ce_loss(item.prediction, item.y_g) + lambda_ * ro_loss(item.alpha, delta, gamma);
  return sum / static_cast<double>(batch.size());
}

double grad_check(const std::function<double()>& loss, std::vector<double>& x,
                  const std::vector<double>& analytic, double eps,
                  const std::vector<std::size_t>* indices) {
  if (analytic.size() != x.size()) throw ValidationError("grad_check: gradient size mismatch");
  if (!(eps > 0.0)) throw ValidationError("grad_check: eps must be positive");

  std::vector<std::size_t> all;
  if (!indices) {
    all.resize(x.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    indices = &all;
  }
  double worst = 0.0;
  for (std::size_t i : *indices) {
    const double keep = x[i];
    x[i] = keep + eps;
    const double fp = loss();
    x[i] = keep - eps;
    const double fm = loss();
    x[i] = keep;
    const double fd = (fp - fm) / (2.0 * eps);
    const double a = analytic[i];
    const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-8});
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace ltr3o
