#include "ltr3o/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <numbers>
#include <string>
#include <vector>

#include "ltr3o/augment.hpp"
#include "ltr3o/common.hpp"
#include "ltr3o/losses.hpp"
#include "ltr3o/rng.hpp"

namespace ltr3o {

namespace {

// Cosine annealing from initial_lr at step 0 down to 0 after the final step.
double cosine_lr(double initial_lr, long step, long total_steps) {
  if (total_steps <= 0) return initial_lr;
  double t = static_cast<double>(step) / static_cast<double>(total_steps);
  return initial_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

int check_uniform_k(const std::vector<PreparedSample>& data) {
  if (data.empty()) throw ValidationError("train: no samples");
  auto k = static_cast<int>(data[0].inputs.size());
  for (const auto& s : data) {
    if (static_cast<int>(s.inputs.size()) != k)
      throw ValidationError("train: sample " + s.sample_id + " has " +
                            std::to_string(s.inputs.size()) + " inputs, expected " +
                            std::to_string(k));
    if (k < 1) throw ValidationError("train: sample " + s.sample_id + " has no inputs");
  }
  return k;
}

// Exceptions must not escape an OpenMP region; catch the shape/size problems
// serially, with a hint at the usual cause.
void check_input_shapes(const std::vector<PreparedSample>& data, int side) {
  for (const auto& s : data)
    for (const auto& im : s.inputs)
      if (im.c != 3 || im.h != side || im.w != side)
        throw ValidationError("sample " + s.sample_id + ": input is " + std::to_string(im.h) +
                              "x" + std::to_string(im.w) + "x" + std::to_string(im.c) +
                              ", expected " + std::to_string(side) + "x" + std::to_string(side) +
                              "x3 (was the cache prepared with a different image_size?)");
}

// schedule(dynamic) loop that carries the first worker exception out.
template <typename Fn>
void parallel_for(int n, int jobs, Fn&& body) {
  std::exception_ptr err = nullptr;
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
  for (int i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
}

}  // namespace

TrainStats train_model(Ltr3oModel& model, const std::vector<PreparedSample>& train,
                       const LabelSpace& labels, const Config& cfg, bool flow_inputs,
                       const std::string& run_tag, int jobs) {
  auto t0 = std::chrono::steady_clock::now();
  int k_eff = check_uniform_k(train);
  check_input_shapes(train, cfg.image_size);
  bool rank = k_eff >= 2 && cfg.lambda_ != 0.0;
  int n = static_cast<int>(train.size());
  int batch = std::min(cfg.batch_size, n);
  if (jobs < 1) jobs = 1;

  std::vector<int> y(n);
  for (int i = 0; i < n; ++i) y[i] = labels.index_of(train[i].label);

  auto& theta = model.params();
  auto dim = theta.size();
  std::vector<double> m(dim, 0.0), v(dim, 0.0);
  std::vector<std::vector<double>> grads(batch, std::vector<double>(dim));
  long steps_per_epoch = (n + batch - 1) / batch;
  long total_steps = steps_per_epoch * cfg.epochs;
  long step = 0;

  // Per-slot scratch filled inside the parallel region.
  std::vector<double> slot_ce(batch), slot_ro(batch), slot_gap(batch);
  std::vector<std::vector<Image>> slot_inputs(batch);

  TrainStats stats;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::string etag = run_tag + ":" + std::to_string(epoch);
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    auto order_rng = make_rng(cfg.seed, "order:" + etag);
    order_rng.shuffle(order);
    auto aug_rng = make_rng(cfg.seed, "aug:" + etag);

    EpochStats es;
    es.epoch = epoch;
    for (int start = 0; start < n; start += batch) {
      int b = std::min(batch, n - start);
      double lr = cosine_lr(cfg.initial_lr, step, total_steps);

      // Draw every sample's transform up front so the stream consumption is
      // independent of worker scheduling.
      std::vector<AugmentParams> aug(b);
      for (int s = 0; s < b; ++s) aug[s] = draw_augment(cfg.image_size, aug_rng);

      parallel_for(b, jobs, [&](int s) {
        const auto& sample = train[order[start + s]];
        auto& inputs = slot_inputs[s];
        inputs.clear();
        inputs.reserve(sample.inputs.size());
        for (const auto& im : sample.inputs)
          inputs.push_back(apply_augment(im, aug[s], flow_inputs));

        auto f = model.forward(inputs);
        auto y_g = labels.one_hot(y[order[start + s]]);
        slot_ce[s] = ce_loss(f.probs, y_g);
        slot_ro[s] = rank ? ro_loss(f.alpha, cfg.delta, cfg.gamma) : 0.0;
        slot_gap[s] = k_eff >= 2 ? rank_split(f.alpha, cfg.gamma).gap() : 0.0;

        std::vector<double> dlogits(f.probs.size());
        for (std::size_t c = 0; c < f.probs.size(); ++c)
          dlogits[c] = (f.probs[c] - y_g[c]) / b;
        std::vector<double> dalpha;
        if (rank) {
          dalpha = ro_loss_grad(f.alpha, cfg.delta, cfg.gamma);
          for (auto& g : dalpha) g *= cfg.lambda_ / b;
        }
        std::memset(grads[s].data(), 0, dim * sizeof(double));
        model.backward(f, dlogits, dalpha, grads[s].data());
      });

      // Fixed-order reduction keeps the sum independent of thread count.
      auto& g = grads[0];
      for (int s = 1; s < b; ++s)
        for (std::size_t i = 0; i < dim; ++i) g[i] += grads[s][i];

      double batch_total = 0.0;
      for (int s = 0; s < b; ++s) {
        batch_total += (slot_ce[s] + cfg.lambda_ * slot_ro[s]) / b;
        es.ce += slot_ce[s];
        es.ro += slot_ro[s];
        es.mean_gap += slot_gap[s];
      }
      if (!std::isfinite(batch_total))
        throw RuntimeError("train: non-finite loss at epoch " + std::to_string(epoch) +
                           " step " + std::to_string(step) + " (lr " + std::to_string(lr) +
                           "); lower the rate or inspect the inputs");

      ++step;
      double bc1 = 1.0 - std::pow(0.9, static_cast<double>(step));
      double bc2 = 1.0 - std::pow(0.999, static_cast<double>(step));
      for (std::size_t i = 0; i < dim; ++i) {
        m[i] = 0.9 * m[i] + 0.1 * g[i];
        v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
        theta[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + 1e-8);
      }
      es.lr = lr;
    }
    es.ce /= n;
    es.ro /= n;
    es.mean_gap /= n;
    es.total = es.ce + cfg.lambda_ * es.ro;
    stats.epochs.push_back(es);
  }
  stats.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return stats;
}

std::vector<int> predict(const Ltr3oModel& model, const std::vector<PreparedSample>& samples,
                         int jobs) {
  if (jobs < 1) jobs = 1;
  check_input_shapes(samples, model.image_size());
  std::vector<int> out(samples.size());
  parallel_for(static_cast<int>(samples.size()), jobs, [&](int i) {
    auto f = model.forward(samples[i].inputs);
    out[i] = static_cast<int>(std::max_element(f.probs.begin(), f.probs.end()) -
                              f.probs.begin());
  });
  return out;
}

std::vector<double> sample_gaps(const Ltr3oModel& model,
                                const std::vector<PreparedSample>& samples, double gamma,
                                int jobs) {
  if (jobs < 1) jobs = 1;
  check_input_shapes(samples, model.image_size());
  std::vector<double> out(samples.size());
  parallel_for(static_cast<int>(samples.size()), jobs, [&](int i) {
    auto f = model.forward(samples[i].inputs);
    out[i] = rank_split(f.alpha, gamma).gap();
  });
  return out;
}

}  // namespace ltr3o
