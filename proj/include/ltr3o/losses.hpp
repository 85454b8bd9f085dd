#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace ltr3o {

// Scores split into the high group (top k_h after a descending stable sort,
// original index as tiebreak) and the rest.
struct RankSplit {
  std::vector<double> sorted;  // descending
  std::vector<int> order;      // sorted position -> original index
  int k_h = 0;
  double alpha_h = 0.0;  // mean of the top k_h
  double alpha_l = 0.0;  // mean of the remaining entries
  double gap() const { return alpha_h - alpha_l; }
};

RankSplit rank_split(const std::vector<double>& alpha, double gamma);

// max{0, delta - (alpha_h - alpha_l)}; value lies in [0, delta].
double ro_loss(const std::vector<double>& alpha, double delta, double gamma);

// d(ro_loss)/d(alpha). Zero when the hinge is inactive; the kink itself
// (gap == delta) also takes the zero subgradient.
std::vector<double> ro_loss_grad(const std::vector<double>& alpha, double delta, double gamma);

// -log p_true with probabilities floored at 1e-12. y_g must be one-hot.
double ce_loss(const std::vector<double>& prediction, const std::vector<double>& y_g);

struct LossItem {
  std::vector<double> prediction;
  std::vector<double> y_g;
  std::vector<double> alpha;
};

// Mean over the batch of [ce + lambda * ro]. With lambda == 0 this equals
// the mean cross-entropy bit for bit.
double total_loss(const std::vector<LossItem>& batch, double delta, double gamma, double lambda_);

// Central-difference gradient verification: perturbs x[i] by +/-eps,
// evaluates loss(), and returns the max over checked coordinates of
// |analytic - fd| / max(|analytic|, |fd|, 1e-8). `indices` restricts the
// check to a subset (nullptr checks everything).
double grad_check(const std::function<double()>& loss, std::vector<double>& x,
                  const std::vector<double>& analytic, double eps,
                  const std::vector<std::size_t>* indices = nullptr);

}  // namespace ltr3o
