#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "ausam/error.hpp"
#include "ausam/model.hpp"
#include "ausam/sampler.hpp"

namespace ausam {

enum class Schedule { constant, cosine, inverse_square };

inline std::string to_string(Schedule s) {
  switch (s) {
    case Schedule::constant: return "constant";
    case Schedule::cosine: return "cosine";
    case Schedule::inverse_square: return "inverse-square";
  }
  return "?";
}

inline Schedule parse_schedule(const std::string& s) {
  if (s == "constant") return Schedule::constant;
  if (s == "cosine") return Schedule::cosine;
  if (s == "inverse-square") return Schedule::inverse_square;
  throw ValidationError("optimizer.schedule: unknown schedule '" + s + "' (constant|cosine|inverse-square)");
}

struct OptimizerConfig {
  double base_lr = 0.05;
  double momentum = 0.9;
  double weight_decay = 0.001;
  double rho = 0.1;
  std::uint32_t total_epochs = 200;
  Schedule schedule = Schedule::cosine;

  // `perturbs` is true for SAM-family optimizers, which need rho > 0.
  void validate(bool perturbs) const {
    if (!(base_lr >= 0.0) || !std::isfinite(base_lr)) throw ValidationError("optimizer.lr must be finite and >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ValidationError("optimizer.momentum must be in [0, 1)");
    if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay))
      throw ValidationError("optimizer.weight_decay must be finite and >= 0");
    if (perturbs && !(rho > 0.0 && std::isfinite(rho))) throw ValidationError("optimizer.rho must be > 0");
  }
};

struct OptimizerState {
  Gradient velocity;
  std::uint64_t step = 0;
  std::uint32_t epoch = 0;

  static OptimizerState zeros(std::size_t d) {
    OptimizerState s;
    s.velocity = Gradient::Zero(static_cast<Eigen::Index>(d));
    return s;
  }
};

// What one optimizer step did. Losses are batch means over the samples that
// drove the step; the counters are per-sample forward/backward evaluations.
struct StepRecord {
  double lr = 0.0;
  double loss = 0.0;
  double perturbed_loss = std::numeric_limits<double>::quiet_NaN();
  double grad_norm = 0.0;
  double perturbed_grad_norm = std::numeric_limits<double>::quiet_NaN();
  std::size_t batch_size = 0;
  std::uint64_t forward_samples = 0;
  std::uint64_t backward_samples = 0;
  std::vector<SampleId> selected;
  bool zero_gradient = false;
};

struct StepResult {
  ParamVector w;
  OptimizerState state;
  StepRecord record;
};

inline double lr_at(const OptimizerConfig& cfg, std::uint32_t epoch) {
  if (epoch >= cfg.total_epochs) {
    throw ValidationError("lr_at: epoch " + std::to_string(epoch) + " outside schedule of " +
                          std::to_string(cfg.total_epochs) + " epochs");
  }
  switch (cfg.schedule) {
    case Schedule::constant:
      return cfg.base_lr;
    case Schedule::cosine:
      return cfg.base_lr * 0.5 *
             (1.0 + std::cos(std::numbers::pi * static_cast<double>(epoch) / static_cast<double>(cfg.total_epochs)));
    case Schedule::inverse_square: {
      const double t = static_cast<double>(epoch) + 1.0;  // epochs are 1-based in eta0 / t^2
      return cfg.base_lr / (t * t);
    }
  }
  return cfg.base_lr;
}

// rho * g / ||g||. Throws ZeroGradient when ||g|| <= eps * sqrt(d).
inline Gradient sam_perturbation(const Gradient& g, double rho) {
  const double norm = g.norm();
  const double floor = std::numeric_limits<double>::epsilon() * std::sqrt(static_cast<double>(g.size()));
  if (!(norm > floor)) throw ZeroGradient("gradient norm " + std::to_string(norm) + " too small to perturb");
  return (rho / norm) * g;
}

namespace detail {

// v <- mu v + g ; w <- w - lr (v + lambda w)
inline void apply_update(ParamVector& w, const Gradient& g, const OptimizerConfig& cfg, OptimizerState& state,
                         double lr) {
  state.velocity = cfg.momentum * state.velocity + g;
  w -= lr * (state.velocity + cfg.weight_decay * w);
  if (!w.allFinite()) throw NumericError("non-finite parameters after update at step " + std::to_string(state.step));
  ++state.step;
}

inline void check_state(const ParamVector& w, const OptimizerState& state) {
  if (state.velocity.size() != w.size()) throw DimensionError("optimizer state does not match parameter count");
}

}  // namespace detail

inline StepResult sgd_step(const Model& model, const ParamVector& w, const MiniBatch& batch,
                           const OptimizerConfig& cfg, const OptimizerState& state) {
  detail::check_state(w, state);
  StepResult r{w, state, {}};
  const auto k = batch.size();
  const BatchEval e = model.evaluate(w, batch, true);
  r.record.lr = lr_at(cfg, state.epoch);
  r.record.batch_size = k;
  r.record.loss = e.losses.mean();
  r.record.grad_norm = e.gradient.norm();
  r.record.forward_samples = k;
  r.record.backward_samples = k;
  detail::apply_update(r.w, e.gradient, cfg, r.state, r.record.lr);
  return r;
}

inline StepResult sam_step(const Model& model, const ParamVector& w, const MiniBatch& batch,
                           const OptimizerConfig& cfg, const OptimizerState& state) {
  detail::check_state(w, state);
  StepResult r{w, state, {}};
  const auto k = batch.size();
  r.record.lr = lr_at(cfg, state.epoch);
  r.record.batch_size = k;

  const BatchEval first = model.evaluate(w, batch, true);
  r.record.loss = first.losses.mean();
  r.record.grad_norm = first.gradient.norm();
  r.record.forward_samples = k;
  r.record.backward_samples = k;

  Gradient eps;
  try {
    eps = sam_perturbation(first.gradient, cfg.rho);
  } catch (const ZeroGradient&) {
    r.record.zero_gradient = true;
    detail::apply_update(r.w, first.gradient, cfg, r.state, r.record.lr);
    return r;
  }
  const BatchEval second = model.evaluate(w + eps, batch, true);
  r.record.perturbed_loss = second.losses.mean();
  r.record.perturbed_grad_norm = second.gradient.norm();
  r.record.forward_samples += k;
  r.record.backward_samples += k;
  detail::apply_update(r.w, second.gradient, cfg, r.state, r.record.lr);
  return r;
}

// One step of subset-sampled SAM: pick ceil(alpha K) samples by their ADLP
// scores, run both SAM passes on the subset only, then feed each selected
// sample's |loss(w + eps) - loss(w)| back into the sampler's table.
inline StepResult ausam_step(const Model& model, const ParamVector& w, const MiniBatch& batch,
                             const OptimizerConfig& cfg, Sampler& sampler, const OptimizerState& state) {
  detail::check_state(w, state);
  if (batch.empty()) throw ValidationError("ausam_step: empty mini-batch");
  StepResult r{w, state, {}};
  r.record.lr = lr_at(cfg, state.epoch);

  const std::vector<SampleId> ids = batch.ids();
  const ScoreVector scores = sampler.probabilities(ids, state.epoch);
  const std::size_t n = sampler.subset_size(batch.size());
  const std::vector<std::size_t> picked = sampler.select(scores, n);
  const MiniBatch sub = batch.subset(picked);
  r.record.batch_size = n;
  r.record.selected = sub.ids();

  const BatchEval first = model.evaluate(w, sub, true);
  r.record.loss = first.losses.mean();
  r.record.grad_norm = first.gradient.norm();
  r.record.forward_samples = n;
  r.record.backward_samples = n;

  Gradient eps;
  try {
    eps = sam_perturbation(first.gradient, cfg.rho);
  } catch (const ZeroGradient&) {
    r.record.zero_gradient = true;
    detail::apply_update(r.w, first.gradient, cfg, r.state, r.record.lr);
    for (SampleId id : r.record.selected) sampler.record(id, 0.0);
    return r;
  }
  const BatchEval second = model.evaluate(w + eps, sub, true);
  r.record.perturbed_loss = second.losses.mean();
  r.record.perturbed_grad_norm = second.gradient.norm();
  r.record.forward_samples += n;
  r.record.backward_samples += n;
  detail::apply_update(r.w, second.gradient, cfg, r.state, r.record.lr);
  for (std::size_t i = 0; i < n; ++i) {
    sampler.record(r.record.selected[i], std::abs(second.losses[static_cast<Eigen::Index>(i)] -
                                                  first.losses[static_cast<Eigen::Index>(i)]));
  }
  return r;
}

}  // namespace ausam
