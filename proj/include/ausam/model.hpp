#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <type_traits>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include "ausam/error.hpp"

namespace ausam {

using ParamVector = Eigen::VectorXd;
using Gradient = Eigen::VectorXd;
using SampleId = std::uint64_t;

// One datum. `id` is stable for the lifetime of the dataset and keys the
// per-sample loss history kept by the sampler.
struct Sample {
  SampleId id = 0;
  Eigen::VectorXd features;
  double label = 0.0;  // class index for classifiers, unused for quadratics
};

// Ordered, duplicate-free view over samples owned elsewhere (normally a
// Dataset). The owner must outlive the batch.
class MiniBatch {
 public:
  MiniBatch() = default;

  explicit MiniBatch(std::vector<const Sample*> samples) : samples_(std::move(samples)) {
    std::unordered_set<SampleId> seen;
    seen.reserve(samples_.size());
    for (const Sample* s : samples_) {
      if (s == nullptr) throw ValidationError("mini-batch holds a null sample");
      if (!seen.insert(s->id).second) {
        throw ValidationError("duplicate sample id " + std::to_string(s->id) + " in mini-batch");
      }
    }
  }

  static MiniBatch of(std::span<const Sample> samples) {
    std::vector<const Sample*> ptrs;
    ptrs.reserve(samples.size());
    for (const Sample& s : samples) ptrs.push_back(&s);
    return MiniBatch(std::move(ptrs));
  }

  [[nodiscard]] std::size_t size() const { return samples_.size(); }
  [[nodiscard]] bool empty() const { return samples_.empty(); }
  const Sample& operator[](std::size_t i) const { return *samples_[i]; }

  [[nodiscard]] std::vector<SampleId> ids() const {
    std::vector<SampleId> out;
    out.reserve(samples_.size());
    for (const Sample* s : samples_) out.push_back(s->id);
    return out;
  }

  // Positions index into this batch; order is preserved.
  [[nodiscard]] MiniBatch subset(std::span<const std::size_t> positions) const {
    std::vector<const Sample*> picked;
    picked.reserve(positions.size());
    for (std::size_t p : positions) {
      if (p >= samples_.size()) throw ValidationError("subset position out of range");
      picked.push_back(samples_[p]);
    }
    return MiniBatch(std::move(picked));
  }

 private:
  std::vector<const Sample*> samples_;
};

// ---------------------------------------------------------------------------
// Architectures

// Linear classifier without hidden layers. With two classes the model is a
// single sigmoid unit (one weight per feature); with more it is a softmax
// layer holding `classes` weight rows.
struct LogisticRegression {
  std::size_t input_dim = 0;
  std::size_t classes = 2;
  bool bias = false;
};

// Fully connected ReLU network with a softmax cross-entropy head.
// widths = {input, hidden..., classes}. Per layer the parameters are the
// row-major (out x in) weight matrix followed by the bias vector.
struct Mlp {
  std::vector<std::size_t> widths;
};

// Per-sample loss 0.5 w'Aw - (b + x)'w where x is the sample's feature vector
// (an empty feature vector means x = 0). A is shared by every sample, so the
// per-sample and the averaged loss have the same smoothness constant.
struct Quadratic {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

using Architecture = std::variant<LogisticRegression, Mlp, Quadratic>;

// Per-sample losses plus the gradient of their mean.
struct BatchEval {
  Eigen::VectorXd losses;
  Gradient gradient;
};

namespace detail {

inline double softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline void require_finite(const Eigen::Ref<const Eigen::MatrixXd>& m, const std::string& where) {
  if (!m.allFinite()) throw NumericError("non-finite value in " + where);
}

inline std::size_t class_label(double label, std::size_t classes) {
  if (!(label >= 0.0) || label != std::floor(label) || label >= static_cast<double>(classes)) {
    std::ostringstream os;
    os << "label " << label << " outside [0, " << classes << ")";
    throw ValidationError(os.str());
  }
  return static_cast<std::size_t>(label);
}

// Column-wise softmax cross-entropy. Writes per-column losses and replaces
// `logits` by d(loss)/d(logits) scaled by `scale`.
inline void softmax_xent(Eigen::MatrixXd& logits, std::span<const std::size_t> labels, double scale,
                         Eigen::VectorXd& losses) {
  const auto cols = logits.cols();
  losses.resize(cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    auto col = logits.col(c);
    const auto y = static_cast<Eigen::Index>(labels[static_cast<std::size_t>(c)]);
    const double mx = col.maxCoeff();
    const double shifted_y = col[y] - mx;
    col.array() = (col.array() - mx).exp();
    const double sum = col.sum();
    losses[c] = std::log(sum) - shifted_y;
    col /= sum;
    col[y] -= 1.0;
    col *= scale;
  }
}

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace detail

class Model {
 public:
  explicit Model(Architecture arch) : arch_(std::move(arch)) { validate(); }

  [[nodiscard]] const Architecture& architecture() const { return arch_; }

  [[nodiscard]] std::size_t param_count() const {
    return std::visit(
        [](const auto& a) -> std::size_t {
          using T = std::decay_t<decltype(a)>;
          if constexpr (std::is_same_v<T, LogisticRegression>) {
            const std::size_t in = a.input_dim + (a.bias ? 1 : 0);
            return a.classes == 2 ? in : in * a.classes;
          } else if constexpr (std::is_same_v<T, Mlp>) {
            std::size_t n = 0;
            for (std::size_t l = 1; l < a.widths.size(); ++l) n += a.widths[l] * (a.widths[l - 1] + 1);
            return n;
          } else {
            return static_cast<std::size_t>(a.b.size());
          }
        },
        arch_);
  }

  [[nodiscard]] std::size_t input_dim() const {
    return std::visit(
        [](const auto& a) -> std::size_t {
          using T = std::decay_t<decltype(a)>;
          if constexpr (std::is_same_v<T, LogisticRegression>) return a.input_dim;
          else if constexpr (std::is_same_v<T, Mlp>) return a.widths.front();
          else return static_cast<std::size_t>(a.b.size());
        },
        arch_);
  }

  // 0 for the quadratic (regression-free) model.
  [[nodiscard]] std::size_t classes() const {
    return std::visit(
        [](const auto& a) -> std::size_t {
          using T = std::decay_t<decltype(a)>;
          if constexpr (std::is_same_v<T, LogisticRegression>) return a.classes;
          else if constexpr (std::is_same_v<T, Mlp>) return a.widths.back();
          else return 0;
        },
        arch_);
  }

  [[nodiscard]] bool is_quadratic() const { return std::holds_alternative<Quadratic>(arch_); }

  [[nodiscard]] std::string describe() const {
    std::ostringstream os;
    std::visit(
        [&os](const auto& a) {
          using T = std::decay_t<decltype(a)>;
          if constexpr (std::is_same_v<T, LogisticRegression>) {
            os << "logistic(" << a.input_dim << "," << a.classes << (a.bias ? ",bias" : "") << ")";
          } else if constexpr (std::is_same_v<T, Mlp>) {
            os << "mlp(";
            for (std::size_t i = 0; i < a.widths.size(); ++i) os << (i ? "-" : "") << a.widths[i];
            os << ")";
          } else {
            os << "quadratic(" << a.b.size() << ")";
          }
        },
        arch_);
    return os.str();
  }

  // Batched forward (and optionally backward) pass. Gradient is of the mean
  // loss over the batch; empty when `want_grad` is false.
  [[nodiscard]] BatchEval evaluate(const ParamVector& w, const MiniBatch& batch, bool want_grad) const {
    check_params(w);
    if (batch.empty()) throw ValidationError("empty mini-batch");
    for (std::size_t i = 0; i < batch.size(); ++i) check_features(batch[i]);
    return std::visit([&](const auto& a) { return eval_batch(a, w, batch, want_grad); }, arch_);
  }

  // Single-sample path, kept independent of the batched code. Writes the
  // exact per-sample gradient into `grad` when non-null.
  double sample_loss(const ParamVector& w, const Sample& s, Gradient* grad) const {
    check_params(w);
    check_features(s);
    return std::visit([&](const auto& a) { return eval_single(a, w, s, grad); }, arch_);
  }

  // Arg-max class for one sample; throws for the quadratic model.
  [[nodiscard]] std::size_t predict(const ParamVector& w, const Sample& s) const {
    check_params(w);
    check_features(s);
    return std::visit(
        [&](const auto& a) -> std::size_t {
          using T = std::decay_t<decltype(a)>;
          if constexpr (std::is_same_v<T, Quadratic>) {
            throw ValidationError("quadratic model has no class prediction");
          } else if constexpr (std::is_same_v<T, LogisticRegression>) {
            Eigen::VectorXd x = augment(a, s.features);
            if (a.classes == 2) return x.dot(w) > 0 ? 1 : 0;
            Eigen::Map<const detail::RowMajor> W(w.data(), static_cast<Eigen::Index>(a.classes), x.size());
            Eigen::Index best = 0;
            (W * x).maxCoeff(&best);
            return static_cast<std::size_t>(best);
          } else {
            Eigen::MatrixXd act = s.features;
            std::size_t off = 0;
            const std::size_t layers = a.widths.size() - 1;
            for (std::size_t l = 0; l < layers; ++l) {
              act = dense_forward(a, l, w, off, act);
              if (l + 1 < layers) act = act.cwiseMax(0.0);
            }
            Eigen::Index best = 0;
            act.col(0).maxCoeff(&best);
            return static_cast<std::size_t>(best);
          }
        },
        arch_);
  }

 private:
  void validate() const {
    std::visit(
        [](const auto& a) {
          using T = std::decay_t<decltype(a)>;
          if constexpr (std::is_same_v<T, LogisticRegression>) {
            if (a.input_dim == 0) throw ValidationError("logistic: input_dim must be >= 1");
            if (a.classes < 2) throw ValidationError("logistic: classes must be >= 2");
          } else if constexpr (std::is_same_v<T, Mlp>) {
            if (a.widths.size() < 2) throw ValidationError("mlp: need at least input and output widths");
            for (std::size_t wd : a.widths)
              if (wd == 0) throw ValidationError("mlp: layer widths must be >= 1");
            if (a.widths.back() < 2) throw ValidationError("mlp: need at least 2 output classes");
          } else {
            if (a.b.size() < 1) throw ValidationError("quadratic: d must be >= 1");
            if (a.A.rows() != a.b.size() || a.A.cols() != a.b.size())
              throw ValidationError("quadratic: A must be d x d");
            if (!a.A.isApprox(a.A.transpose(), 1e-12)) throw ValidationError("quadratic: A must be symmetric");
          }
        },
        arch_);
  }

  void check_params(const ParamVector& w) const {
    if (static_cast<std::size_t>(w.size()) != param_count()) {
      throw DimensionError("parameter vector has " + std::to_string(w.size()) + " entries, model " +
                           describe() + " expects " + std::to_string(param_count()));
    }
  }

  void check_features(const Sample& s) const {
    const auto n = static_cast<std::size_t>(s.features.size());
    if (n == input_dim()) return;
    if (is_quadratic() && n == 0) return;
    throw DimensionError("sample " + std::to_string(s.id) + " has " + std::to_string(n) +
                         " features, model " + describe() + " expects " + std::to_string(input_dim()));
  }

  static Eigen::VectorXd augment(const LogisticRegression& a, const Eigen::VectorXd& x) {
    if (!a.bias) return x;
    Eigen::VectorXd out(x.size() + 1);
    out << x, 1.0;
    return out;
  }

  // Dense layer l applied to the columns of `in`; advances `off`.
  static Eigen::MatrixXd dense_forward(const Mlp& a, std::size_t l, const ParamVector& w, std::size_t& off,
                                       const Eigen::MatrixXd& in) {
    const auto rows = static_cast<Eigen::Index>(a.widths[l + 1]);
    const auto cols = static_cast<Eigen::Index>(a.widths[l]);
    Eigen::Map<const detail::RowMajor> W(w.data() + off, rows, cols);
    Eigen::Map<const Eigen::VectorXd> bias(w.data() + off + rows * cols, rows);
    off += static_cast<std::size_t>(rows * (cols + 1));
    Eigen::MatrixXd z = W * in;
    z.colwise() += bias;
    detail::require_finite(z, "dense layer " + std::to_string(l + 1));
    return z;
  }

  // --- logistic regression -------------------------------------------------

  static BatchEval eval_batch(const LogisticRegression& a, const ParamVector& w, const MiniBatch& batch,
                              bool want_grad) {
    const auto K = static_cast<Eigen::Index>(batch.size());
    const auto in = static_cast<Eigen::Index>(a.input_dim + (a.bias ? 1 : 0));
    Eigen::MatrixXd X(in, K);
    std::vector<std::size_t> labels(batch.size());
    for (Eigen::Index k = 0; k < K; ++k) {
      X.col(k) = augment(a, batch[static_cast<std::size_t>(k)].features);
      labels[static_cast<std::size_t>(k)] = detail::class_label(batch[static_cast<std::size_t>(k)].label, a.classes);
    }
    BatchEval out;
    out.losses.resize(K);
    if (a.classes == 2) {
      Eigen::VectorXd z = X.transpose() * w;
      detail::require_finite(z, "logistic layer");
      Eigen::VectorXd resid(K);
      for (Eigen::Index k = 0; k < K; ++k) {
        const double y = static_cast<double>(labels[static_cast<std::size_t>(k)]);
        out.losses[k] = detail::softplus(z[k]) - y * z[k];
        resid[k] = detail::sigmoid(z[k]) - y;
      }
      if (want_grad) out.gradient = X * resid / static_cast<double>(K);
    } else {
      const auto C = static_cast<Eigen::Index>(a.classes);
      Eigen::Map<const detail::RowMajor> W(w.data(), C, in);
      Eigen::MatrixXd logits = W * X;
      detail::require_finite(logits, "logistic layer");
      detail::softmax_xent(logits, labels, 1.0 / static_cast<double>(K), out.losses);
      if (want_grad) {
        detail::RowMajor dW = logits * X.transpose();
        out.gradient = Eigen::Map<const Eigen::VectorXd>(dW.data(), dW.size());
      }
    }
    detail::require_finite(out.losses, "logistic loss");
    if (want_grad) detail::require_finite(out.gradient, "logistic gradient");
    return out;
  }

  static double eval_single(const LogisticRegression& a, const ParamVector& w, const Sample& s, Gradient* grad) {
    const std::size_t y = detail::class_label(s.label, a.classes);
    const Eigen::VectorXd x = augment(a, s.features);
    double loss = 0.0;
    if (a.classes == 2) {
      const double z = x.dot(w);
      loss = detail::softplus(z) - static_cast<double>(y) * z;
      if (grad) *grad = (detail::sigmoid(z) - static_cast<double>(y)) * x;
    } else {
      const auto C = static_cast<Eigen::Index>(a.classes);
      Eigen::Map<const detail::RowMajor> W(w.data(), C, x.size());
      Eigen::VectorXd z = W * x;
      const double mx = z.maxCoeff();
      Eigen::VectorXd p = (z.array() - mx).exp();
      const double sum = p.sum();
      loss = std::log(sum) + mx - z[static_cast<Eigen::Index>(y)];
      if (grad) {
        p /= sum;
        p[static_cast<Eigen::Index>(y)] -= 1.0;
        grad->resize(w.size());
        for (Eigen::Index c = 0; c < C; ++c) grad->segment(c * x.size(), x.size()) = p[c] * x;
      }
    }
    if (!std::isfinite(loss)) throw NumericError("non-finite value in logistic loss");
    return loss;
  }

  // --- MLP -----------------------------------------------------------------

  static BatchEval eval_batch(const Mlp& a, const ParamVector& w, const MiniBatch& batch, bool want_grad) {
    const auto K = static_cast<Eigen::Index>(batch.size());
    const std::size_t layers = a.widths.size() - 1;
    std::vector<Eigen::MatrixXd> acts;  // acts[l] is the input to dense layer l
    acts.reserve(layers + 1);
    Eigen::MatrixXd X(static_cast<Eigen::Index>(a.widths[0]), K);
    std::vector<std::size_t> labels(batch.size());
    for (Eigen::Index k = 0; k < K; ++k) {
      X.col(k) = batch[static_cast<std::size_t>(k)].features;
      labels[static_cast<std::size_t>(k)] = detail::class_label(batch[static_cast<std::size_t>(k)].label, a.widths.back());
    }
    acts.push_back(std::move(X));
    std::size_t off = 0;
    std::vector<std::size_t> offsets(layers);
    Eigen::MatrixXd z;
    for (std::size_t l = 0; l < layers; ++l) {
      offsets[l] = off;
      z = dense_forward(a, l, w, off, acts.back());
      if (l + 1 < layers) acts.push_back(z.cwiseMax(0.0));
    }
    BatchEval out;
    detail::softmax_xent(z, labels, 1.0 / static_cast<double>(K), out.losses);
    detail::require_finite(out.losses, "softmax cross-entropy");
    if (!want_grad) return out;

    out.gradient = Gradient::Zero(w.size());
    Eigen::MatrixXd delta = std::move(z);  // d loss / d pre-activation of the current layer
    for (std::size_t l = layers; l-- > 0;) {
      const auto rows = static_cast<Eigen::Index>(a.widths[l + 1]);
      const auto cols = static_cast<Eigen::Index>(a.widths[l]);
      const auto base = static_cast<Eigen::Index>(offsets[l]);
      Eigen::Map<detail::RowMajor> dW(out.gradient.data() + base, rows, cols);
      dW.noalias() = delta * acts[l].transpose();
      out.gradient.segment(base + rows * cols, rows) = delta.rowwise().sum();
      if (l == 0) break;
      Eigen::Map<const detail::RowMajor> W(w.data() + base, rows, cols);
      Eigen::MatrixXd back = W.transpose() * delta;
      // relu'(z) == 1 exactly where the stored activation is positive
      delta = back.cwiseProduct((acts[l].array() > 0.0).cast<double>().matrix());
    }
    detail::require_finite(out.gradient, "mlp backward pass");
    return out;
  }

  static double eval_single(const Mlp& a, const ParamVector& w, const Sample& s, Gradient* grad) {
    const std::size_t layers = a.widths.size() - 1;
    const std::size_t y = detail::class_label(s.label, a.widths.back());
    std::vector<Eigen::VectorXd> inputs;
    std::vector<Eigen::VectorXd> pre;
    std::size_t off = 0;
    Eigen::VectorXd h = s.features;
    for (std::size_t l = 0; l < layers; ++l) {
      const auto rows = static_cast<Eigen::Index>(a.widths[l + 1]);
      const auto cols = static_cast<Eigen::Index>(a.widths[l]);
      Eigen::Map<const detail::RowMajor> W(w.data() + off, rows, cols);
      Eigen::Map<const Eigen::VectorXd> bias(w.data() + off + rows * cols, rows);
      off += static_cast<std::size_t>(rows * (cols + 1));
      Eigen::VectorXd zl = W * h + bias;
      detail::require_finite(zl, "dense layer " + std::to_string(l + 1));
      inputs.push_back(h);
      h = (l + 1 < layers) ? Eigen::VectorXd(zl.cwiseMax(0.0)) : zl;
      pre.push_back(std::move(zl));
    }
    const Eigen::VectorXd& logits = pre.back();
    const double mx = logits.maxCoeff();
    Eigen::VectorXd p = (logits.array() - mx).exp();
    const double sum = p.sum();
    const double loss = std::log(sum) + mx - logits[static_cast<Eigen::Index>(y)];
    if (!std::isfinite(loss)) throw NumericError("non-finite value in softmax cross-entropy");
    if (!grad) return loss;

    grad->setZero(w.size());
    Eigen::VectorXd delta = p / sum;
    delta[static_cast<Eigen::Index>(y)] -= 1.0;
    for (std::size_t l = layers; l-- > 0;) {
      const auto rows = static_cast<Eigen::Index>(a.widths[l + 1]);
      const auto cols = static_cast<Eigen::Index>(a.widths[l]);
      off -= static_cast<std::size_t>(rows * (cols + 1));
      const auto base = static_cast<Eigen::Index>(off);
      for (Eigen::Index r = 0; r < rows; ++r) grad->segment(base + r * cols, cols) = delta[r] * inputs[l];
      grad->segment(base + rows * cols, rows) = delta;
      if (l == 0) break;
      Eigen::Map<const detail::RowMajor> W(w.data() + base, rows, cols);
      Eigen::VectorXd back = W.transpose() * delta;
      for (Eigen::Index i = 0; i < back.size(); ++i) back[i] = pre[l - 1][i] > 0.0 ? back[i] : 0.0;
      delta = std::move(back);
    }
    detail::require_finite(*grad, "mlp backward pass");
    return loss;
  }

  // --- quadratic -----------------------------------------------------------

  static BatchEval eval_batch(const Quadratic& a, const ParamVector& w, const MiniBatch& batch, bool want_grad) {
    const auto K = static_cast<Eigen::Index>(batch.size());
    const Eigen::VectorXd Aw = a.A * w;
    const double base = 0.5 * w.dot(Aw) - a.b.dot(w);
    BatchEval out;
    out.losses.resize(K);
    Eigen::VectorXd offset_sum = Eigen::VectorXd::Zero(w.size());
    for (Eigen::Index k = 0; k < K; ++k) {
      const Eigen::VectorXd& x = batch[static_cast<std::size_t>(k)].features;
      out.losses[k] = x.size() == 0 ? base : base - x.dot(w);
      if (x.size() != 0) offset_sum += x;
    }
    detail::require_finite(out.losses, "quadratic loss");
    if (want_grad) {
      out.gradient = Aw - a.b - offset_sum / static_cast<double>(K);
      detail::require_finite(out.gradient, "quadratic gradient");
    }
    return out;
  }

  static double eval_single(const Quadratic& a, const ParamVector& w, const Sample& s, Gradient* grad) {
    Eigen::VectorXd shift = a.b;
    if (s.features.size() != 0) shift += s.features;
    const Eigen::VectorXd Aw = a.A * w;
    const double loss = 0.5 * w.dot(Aw) - shift.dot(w);
    if (!std::isfinite(loss)) throw NumericError("non-finite value in quadratic loss");
    if (grad) *grad = Aw - shift;
    return loss;
  }

  Architecture arch_;
};

// ---------------------------------------------------------------------------
// Free-function surface

inline Eigen::VectorXd per_sample_losses(const Model& model, const ParamVector& w, const MiniBatch& batch) {
  return model.evaluate(w, batch, false).losses;
}

inline Gradient batch_gradient(const Model& model, const ParamVector& w, const MiniBatch& batch) {
  return model.evaluate(w, batch, true).gradient;
}

inline Gradient per_sample_gradient(const Model& model, const ParamVector& w, const Sample& sample) {
  Gradient g;
  model.sample_loss(w, sample, &g);
  return g;
}

inline double sample_loss(const Model& model, const ParamVector& w, const Sample& sample) {
  return model.sample_loss(w, sample, nullptr);
}

// Largest eigenvalue of A for quadratic models; nullopt otherwise.
inline std::optional<double> loss_smoothness_constant(const Model& model) {
  const auto* q = std::get_if<Quadratic>(&model.architecture());
  if (!q) return std::nullopt;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q->A, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

// He-normal weights and zero biases for MLPs; zeros for the linear models.
inline ParamVector init_params(const Model& model, std::uint64_t seed) {
  ParamVector w = ParamVector::Zero(static_cast<Eigen::Index>(model.param_count()));
  if (const auto* mlp = std::get_if<Mlp>(&model.architecture())) {
    std::mt19937_64 rng(seed);
    std::size_t off = 0;
    for (std::size_t l = 1; l < mlp->widths.size(); ++l) {
      const std::size_t fan_in = mlp->widths[l - 1];
      std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
      for (std::size_t i = 0; i < mlp->widths[l] * fan_in; ++i) w[static_cast<Eigen::Index>(off + i)] = dist(rng);
      off += mlp->widths[l] * (fan_in + 1);
    }
  }
  return w;
}

}  // namespace ausam
