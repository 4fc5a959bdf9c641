#pragma once

// Run configuration, the training loop and the file-producing commands
// behind the `ausam` CLI.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "ausam/checkpoint.hpp"
#include "ausam/data.hpp"
#include "ausam/error.hpp"
#include "ausam/model.hpp"
#include "ausam/optimizers.hpp"
#include "ausam/sampler.hpp"
#include "ausam/verify.hpp"

namespace ausam {

enum class OptimizerKind { sgd, sam, ausam, sam_random };

inline std::string to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::sgd: return "sgd";
    case OptimizerKind::sam: return "sam";
    case OptimizerKind::ausam: return "ausam";
    case OptimizerKind::sam_random: return "sam-random";
  }
  return "?";
}

inline OptimizerKind parse_optimizer_kind(const std::string& s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "sam") return OptimizerKind::sam;
  if (s == "ausam") return OptimizerKind::ausam;
  if (s == "sam-random") return OptimizerKind::sam_random;
  throw ValidationError("run.optimizer: unknown optimizer '" + s + "' (sgd|sam|ausam|sam-random)");
}

struct DataSpec {
  std::string kind = "two-moons";  // two-moons | quadratic | csv | idx
  std::size_t n = 1000;
  double noise = 0.2;
  std::size_t dim = 5;
  double condition = 10.0;
  double offset_sd = 0.5;
  std::filesystem::path path;
  std::string label_column = "label";
  std::size_t classes = 0;
  std::filesystem::path images;
  std::filesystem::path labels;
  std::size_t limit = 0;

  bool operator==(const DataSpec&) const = default;
};

struct ModelSpec {
  std::string kind = "mlp";  // mlp | logistic | quadratic
  std::vector<std::size_t> widths{2, 16, 16, 2};
  bool bias = true;

  bool operator==(const ModelSpec&) const = default;
};

struct RunConfig {
  std::string name = "run";
  OptimizerKind optimizer = OptimizerKind::ausam;
  std::uint32_t epochs = 100;
  std::size_t batch_size = 128;
  double eval_fraction = 0.2;
  std::uint64_t seed = 1;
  std::filesystem::path out_dir;
  bool record_selected = false;
  DataSpec data;
  ModelSpec model;
  OptimizerConfig opt;
  SamplerConfig sampler;
  bool sampler_seed_set = false;

  [[nodiscard]] bool perturbs() const { return optimizer != OptimizerKind::sgd; }
  [[nodiscard]] bool subsamples() const {
    return optimizer == OptimizerKind::ausam || optimizer == OptimizerKind::sam_random;
  }

  void validate() const {
    if (batch_size == 0) throw ValidationError("run.batch_size must be >= 1");
    if (!(eval_fraction >= 0.0 && eval_fraction < 1.0)) throw ValidationError("run.eval_fraction must be in [0, 1)");
    opt.validate(perturbs());
    if (subsamples()) sampler.validate();
    const std::set<std::string> data_kinds{"two-moons", "quadratic", "csv", "idx"};
    if (!data_kinds.count(data.kind)) throw ValidationError("data.kind: unknown kind '" + data.kind + "'");
    const std::set<std::string> model_kinds{"mlp", "logistic", "quadratic"};
    if (!model_kinds.count(model.kind)) throw ValidationError("model.kind: unknown kind '" + model.kind + "'");
    if ((model.kind == "quadratic") != (data.kind == "quadratic"))
      throw ValidationError("model.kind: quadratic models go with data.kind = quadratic and nothing else");
    if (data.kind == "csv" && data.path.empty()) throw ValidationError("data.path is required for csv data");
    if (data.kind == "idx" && (data.images.empty() || data.labels.empty()))
      throw ValidationError("data.images and data.labels are required for idx data");
    if (data.kind == "idx" && data.limit == 0) throw ValidationError("data.limit must be >= 1 for idx data");
    if (model.kind == "mlp" && model.widths.size() < 2) throw ValidationError("model.widths needs at least 2 entries");
  }
};

namespace detail {

// Independent sub-seed for one purpose of a run.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint32_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), purpose};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

enum SeedPurpose : std::uint32_t { kDataSeed = 1, kInitSeed = 2, kBatchSeed = 3, kSamplerSeed = 4 };

template <class T>
T get_value(const boost::property_tree::ptree& sec, const std::string& section, const std::string& key, T fallback) {
  const auto node = sec.get_child_optional(key);
  if (!node) return fallback;
  const std::string raw = node->get_value<std::string>();
  if constexpr (std::is_same_v<T, std::string>) {
    return raw;
  } else if constexpr (std::is_same_v<T, bool>) {
    if (raw == "true" || raw == "1" || raw == "yes") return true;
    if (raw == "false" || raw == "0" || raw == "no") return false;
    throw ValidationError(section + "." + key + ": expected true or false, got '" + raw + "'");
  } else if constexpr (std::is_floating_point_v<T>) {
    double v = 0.0;
    if (!parse_double(raw, v)) throw ValidationError(section + "." + key + ": expected a number, got '" + raw + "'");
    return v;
  } else {
    T v{};
    const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
    if (ec != std::errc() || ptr != raw.data() + raw.size())
      throw ValidationError(section + "." + key + ": expected a non-negative integer, got '" + raw + "'");
    return v;
  }
}

inline std::vector<std::size_t> parse_widths(const std::string& raw) {
  std::vector<std::size_t> out;
  for (auto cell : split_commas(raw)) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || v == 0)
      throw ValidationError("model.widths: expected positive integers separated by commas, got '" + raw + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace detail

// INI text with sections [run] [data] [model] [optimizer] [sampler]. Unknown
// sections or keys are errors. Relative data paths resolve against `base`.
inline RunConfig parse_config(std::istream& in, const std::filesystem::path& base = {}) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  const std::map<std::string, std::set<std::string>> allowed{
      {"run", {"name", "optimizer", "epochs", "batch_size", "eval_fraction", "seed", "out", "record_selected"}},
      {"data", {"kind", "n", "noise", "dim", "condition", "offset_sd", "path", "label_column", "classes", "images",
                "labels", "limit"}},
      {"model", {"kind", "widths", "bias"}},
      {"optimizer", {"lr", "momentum", "weight_decay", "rho", "schedule"}},
      {"sampler", {"alpha", "s_min", "s_max", "e_start", "seed"}},
  };
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ValidationError("config: key '" + section + "' outside a section");
    auto it = allowed.find(section);
    if (it == allowed.end()) throw ValidationError("config: unknown section [" + section + "]");
    for (const auto& [key, value] : body)
      if (!it->second.count(key)) throw ValidationError("config: unknown key " + section + "." + key);
  }
  const pt::ptree empty;
  auto section = [&](const std::string& s) -> const pt::ptree& {
    auto c = tree.get_child_optional(s);
    return c ? *c : empty;
  };
  using detail::get_value;
  RunConfig c;
  const auto& run = section("run");
  c.name = get_value<std::string>(run, "run", "name", c.name);
  c.optimizer = parse_optimizer_kind(get_value<std::string>(run, "run", "optimizer", to_string(c.optimizer)));
  c.epochs = get_value<std::uint32_t>(run, "run", "epochs", c.epochs);
  c.batch_size = get_value<std::size_t>(run, "run", "batch_size", c.batch_size);
  c.eval_fraction = get_value<double>(run, "run", "eval_fraction", c.eval_fraction);
  c.seed = get_value<std::uint64_t>(run, "run", "seed", c.seed);
  if (auto out = get_value<std::string>(run, "run", "out", ""); !out.empty()) c.out_dir = base / out;
  c.record_selected = get_value<bool>(run, "run", "record_selected", c.record_selected);

  const auto& data = section("data");
  c.data.kind = get_value<std::string>(data, "data", "kind", c.data.kind);
  c.data.n = get_value<std::size_t>(data, "data", "n", c.data.n);
  c.data.noise = get_value<double>(data, "data", "noise", c.data.noise);
  c.data.dim = get_value<std::size_t>(data, "data", "dim", c.data.dim);
  c.data.condition = get_value<double>(data, "data", "condition", c.data.condition);
  c.data.offset_sd = get_value<double>(data, "data", "offset_sd", c.data.offset_sd);
  c.data.label_column = get_value<std::string>(data, "data", "label_column", c.data.label_column);
  c.data.classes = get_value<std::size_t>(data, "data", "classes", c.data.classes);
  c.data.limit = get_value<std::size_t>(data, "data", "limit", c.data.limit);
  for (auto [key, field] : {std::pair{"path", &c.data.path}, {"images", &c.data.images}, {"labels", &c.data.labels}})
    if (auto p = get_value<std::string>(data, "data", key, ""); !p.empty()) *field = base / p;

  const auto& model = section("model");
  c.model.kind = get_value<std::string>(model, "model", "kind", c.model.kind);
  if (auto w = get_value<std::string>(model, "model", "widths", ""); !w.empty()) c.model.widths = detail::parse_widths(w);
  c.model.bias = get_value<bool>(model, "model", "bias", c.model.bias);

  const auto& opt = section("optimizer");
  c.opt.base_lr = get_value<double>(opt, "optimizer", "lr", c.opt.base_lr);
  c.opt.momentum = get_value<double>(opt, "optimizer", "momentum", c.opt.momentum);
  c.opt.weight_decay = get_value<double>(opt, "optimizer", "weight_decay", c.opt.weight_decay);
  c.opt.rho = get_value<double>(opt, "optimizer", "rho", c.opt.rho);
  c.opt.schedule = parse_schedule(get_value<std::string>(opt, "optimizer", "schedule", to_string(c.opt.schedule)));

  const auto& smp = section("sampler");
  c.sampler.alpha = get_value<double>(smp, "sampler", "alpha", c.sampler.alpha);
  c.sampler.s_min = get_value<double>(smp, "sampler", "s_min", c.sampler.s_min);
  c.sampler.s_max = get_value<double>(smp, "sampler", "s_max", c.sampler.s_max);
  c.sampler.e_start = get_value<std::uint32_t>(smp, "sampler", "e_start", c.sampler.e_start);
  if (smp.get_child_optional("seed")) {
    c.sampler.seed = get_value<std::uint64_t>(smp, "sampler", "seed", 0);
    c.sampler_seed_set = true;
  }
  c.opt.total_epochs = c.epochs;
  c.validate();
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  RunConfig c = parse_config(in, path.parent_path());
  if (c.name == "run") c.name = path.stem().string();
  return c;
}

// Everything a run needs besides the optimizer state.
struct Problem {
  Dataset train;
  Dataset eval;
  Model model;
};

inline Problem build_problem(const RunConfig& c) {
  c.validate();
  const std::uint64_t data_seed = detail::derive_seed(c.seed, detail::kDataSeed);
  Dataset full;
  std::optional<Model> model;
  if (c.data.kind == "two-moons") {
    full = make_two_moons(c.data.n, c.data.noise, data_seed);
  } else if (c.data.kind == "quadratic") {
    auto q = make_quadratic_problem(c.data.dim, c.data.condition, data_seed, c.data.n, c.data.offset_sd);
    full = std::move(q.data);
    model = std::move(q.model);
  } else if (c.data.kind == "csv") {
    full = load_csv(c.data.path, CsvSchema{c.data.label_column, c.data.classes});
  } else {
    full = load_idx(c.data.images, c.data.labels, c.data.limit);
  }
  full.validate();
  auto [eval_set, train] = split_head(full, c.eval_fraction);
  if (train.empty()) throw ValidationError("run.eval_fraction leaves no training samples");
  if (c.batch_size > train.size())
    throw ValidationError("run.batch_size " + std::to_string(c.batch_size) + " exceeds the " +
                          std::to_string(train.size()) + " training samples");

  if (!model) {
    if (full.classes < 2) throw ValidationError("model.kind " + c.model.kind + " needs a classification dataset (data.classes >= 2)");
    if (c.model.kind == "logistic") {
      model = Model(LogisticRegression{full.feature_dim, full.classes, c.model.bias});
    } else {
      const auto& w = c.model.widths;
      if (w.front() != full.feature_dim)
        throw ValidationError("model.widths: first width " + std::to_string(w.front()) + " does not match the " +
                              std::to_string(full.feature_dim) + " data features");
      if (w.back() != full.classes)
        throw ValidationError("model.widths: last width " + std::to_string(w.back()) + " does not match the " +
                              std::to_string(full.classes) + " data classes");
      model = Model(Mlp{w});
    }
  }
  return Problem{std::move(train), std::move(eval_set), std::move(*model)};
}

struct EpochSummary {
  std::uint32_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;  // mean of the step losses
  std::optional<double> eval_loss;
  std::optional<double> eval_accuracy;
  std::uint64_t forward_samples = 0;   // cumulative
  std::uint64_t backward_samples = 0;  // cumulative
  std::uint64_t zero_gradient_steps = 0;
};

struct TrainOptions {
  std::ostream* metrics = nullptr;  // per-step JSON lines
  std::ostream* epochs = nullptr;   // per-epoch JSON lines
  bool keep_checkpoints = false;    // weights + table after every epoch
};

struct TrainResult {
  ParamVector w;
  std::vector<EpochSummary> summaries;
  std::vector<TrainingCheckpoint> checkpoints;
  std::optional<AdlpTable> table;
  std::uint64_t forward_samples = 0;
  std::uint64_t backward_samples = 0;
  std::uint64_t steps = 0;
  std::optional<double> eval_loss;
  std::optional<double> eval_accuracy;
  double wall_seconds = 0.0;
};

inline std::uint64_t batch_seed(const RunConfig& c) { return detail::derive_seed(c.seed, detail::kBatchSeed); }

inline SamplerConfig effective_sampler_config(const RunConfig& c) {
  SamplerConfig s = c.sampler;
  if (!c.sampler_seed_set) s.seed = detail::derive_seed(c.seed, detail::kSamplerSeed);
  return s;
}

inline std::pair<std::optional<double>, std::optional<double>> evaluate_split(const Model& m, const ParamVector& w,
                                                                              const Dataset& d) {
  if (d.empty()) return {std::nullopt, std::nullopt};
  const double loss = per_sample_losses(m, w, d.all()).mean();
  if (m.is_quadratic()) return {loss, std::nullopt};
  std::size_t correct = 0;
  for (const Sample& s : d.samples) correct += m.predict(w, s) == static_cast<std::size_t>(s.label);
  return {loss, static_cast<double>(correct) / static_cast<double>(d.size())};
}

namespace detail {

inline nlohmann::json opt_num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

template <class T>
nlohmann::json opt_num(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace detail

// Fixed key order of a step record; export-series reads these names.
inline const std::vector<std::string>& step_fields() {
  static const std::vector<std::string> f{"step", "epoch", "lr", "train_loss", "perturbed_loss", "grad_norm",
                                          "perturbed_grad_norm", "batch_size", "subset_size", "forward_samples",
                                          "backward_samples", "zero_gradient", "selected"};
  return f;
}

inline TrainResult train(const RunConfig& c, const Problem& p, const TrainOptions& o = {}) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const Model& m = p.model;
  TrainResult res;
  res.w = init_params(m, detail::derive_seed(c.seed, detail::kInitSeed));
  OptimizerConfig opt = c.opt;
  opt.total_epochs = c.epochs;
  std::optional<Sampler> sampler;
  if (c.subsamples()) {
    sampler.emplace(effective_sampler_config(c),
                    c.optimizer == OptimizerKind::sam_random ? SelectionRule::uniform : SelectionRule::adlp);
  }
  if (o.metrics) {
    nlohmann::ordered_json h;
    h["type"] = "header";
    h["name"] = c.name;
    h["optimizer"] = to_string(c.optimizer);
    h["model"] = m.describe();
    h["param_count"] = m.param_count();
    h["data"] = p.train.provenance;
    h["train_size"] = p.train.size();
    h["eval_size"] = p.eval.size();
    h["epochs"] = c.epochs;
    h["batch_size"] = c.batch_size;
    h["seed"] = c.seed;
    h["lr"] = opt.base_lr;
    h["momentum"] = opt.momentum;
    h["weight_decay"] = opt.weight_decay;
    h["rho"] = opt.rho;
    h["schedule"] = to_string(opt.schedule);
    if (sampler) {
      h["alpha"] = sampler->config().alpha;
      h["s_min"] = sampler->config().s_min;
      h["s_max"] = sampler->config().s_max;
      h["e_start"] = sampler->config().e_start;
    }
    *o.metrics << h.dump() << "\n";
  }

  OptimizerState st = OptimizerState::zeros(m.param_count());
  const std::uint64_t bseed = batch_seed(c);
  for (std::uint32_t e = 0; e < c.epochs; ++e) {
    st.epoch = e;
    EpochSummary sum;
    sum.epoch = e;
    sum.lr = lr_at(opt, e);
    double loss_total = 0.0;
    std::size_t steps = 0;
    for (const MiniBatch& b : epoch_batches(p.train, c.batch_size, bseed, e)) {
      StepResult r;
      switch (c.optimizer) {
        case OptimizerKind::sgd: r = sgd_step(m, res.w, b, opt, st); break;
        case OptimizerKind::sam: r = sam_step(m, res.w, b, opt, st); break;
        default: r = ausam_step(m, res.w, b, opt, *sampler, st); break;
      }
      const StepRecord& rec = r.record;
      if (!std::isfinite(rec.loss)) {
        if (o.metrics) {
          nlohmann::ordered_json err;
          err["type"] = "error";
          err["step"] = res.steps;
          err["epoch"] = e;
          err["message"] = "non-finite training loss";
          *o.metrics << err.dump() << "\n";
        }
        throw NumericError("non-finite training loss at step " + std::to_string(res.steps) + " (epoch " +
                           std::to_string(e) + ")");
      }
      res.w = std::move(r.w);
      st = std::move(r.state);
      res.forward_samples += rec.forward_samples;
      res.backward_samples += rec.backward_samples;
      sum.zero_gradient_steps += rec.zero_gradient;
      loss_total += rec.loss;
      ++steps;
      if (o.metrics) {
        nlohmann::ordered_json j;
        j["type"] = "step";
        j["step"] = res.steps;
        j["epoch"] = e;
        j["lr"] = rec.lr;
        j["train_loss"] = rec.loss;
        j["perturbed_loss"] = detail::opt_num(rec.perturbed_loss);
        j["grad_norm"] = rec.grad_norm;
        j["perturbed_grad_norm"] = detail::opt_num(rec.perturbed_grad_norm);
        j["batch_size"] = b.size();
        j["subset_size"] = rec.batch_size;
        j["forward_samples"] = res.forward_samples;
        j["backward_samples"] = res.backward_samples;
        j["zero_gradient"] = rec.zero_gradient;
        if (c.record_selected) j["selected"] = rec.selected;
        *o.metrics << j.dump() << "\n";
      }
      ++res.steps;
    }
    sum.train_loss = loss_total / static_cast<double>(steps);
    sum.forward_samples = res.forward_samples;
    sum.backward_samples = res.backward_samples;
    std::tie(sum.eval_loss, sum.eval_accuracy) = evaluate_split(m, res.w, p.eval);
    if (o.epochs) {
      nlohmann::ordered_json j;
      j["epoch"] = sum.epoch;
      j["lr"] = sum.lr;
      j["train_loss"] = sum.train_loss;
      j["eval_loss"] = detail::opt_num(sum.eval_loss);
      j["eval_accuracy"] = detail::opt_num(sum.eval_accuracy);
      j["forward_samples"] = sum.forward_samples;
      j["backward_samples"] = sum.backward_samples;
      j["zero_gradient_steps"] = sum.zero_gradient_steps;
      *o.epochs << j.dump() << "\n";
    }
    res.summaries.push_back(sum);
    if (o.keep_checkpoints) {
      res.checkpoints.push_back(TrainingCheckpoint{e + 1, res.w, sampler ? sampler->table() : AdlpTable{}});
    }
  }
  std::tie(res.eval_loss, res.eval_accuracy) = evaluate_split(m, res.w, p.eval);
  if (sampler) res.table = sampler->table();
  res.wall_seconds = std::chrono::duration<double>(clock::now() - t0).count();
  return res;
}

// Writes metrics.jsonl, epochs.jsonl, checkpoint.bin, adlp.bin (subset
// optimizers only) and timing.json into `out`. Wall time lives only in
// timing.json so the other files are reproducible byte for byte.
inline TrainResult run_to_directory(const RunConfig& c, const std::filesystem::path& out) {
  const Problem p = build_problem(c);
  std::filesystem::create_directories(out);
  std::ofstream metrics(out / "metrics.jsonl", std::ios::binary);
  std::ofstream epochs(out / "epochs.jsonl", std::ios::binary);
  if (!metrics || !epochs) throw Error("cannot write into " + out.string());
  TrainOptions o;
  o.metrics = &metrics;
  o.epochs = &epochs;
  TrainResult r = train(c, p, o);
  save_checkpoint(out / "checkpoint.bin", r.w);
  if (r.table) r.table->save(out / "adlp.bin");
  nlohmann::ordered_json t;
  t["wall_seconds"] = r.wall_seconds;
  t["steps"] = r.steps;
  std::ofstream(out / "timing.json") << t.dump() << "\n";
  if (!metrics || !epochs) throw Error("failed writing metrics into " + out.string());
  return r;
}

// --- compare ----------------------------------------------------------------------

struct CompareRow {
  std::string name;
  std::string optimizer;
  double alpha = 1.0;
  std::optional<double> eval_accuracy;
  std::optional<double> eval_loss;
  std::uint64_t forward_samples = 0;
  std::uint64_t backward_samples = 0;
  std::uint64_t sam_samples = 0;  // forward + backward SAM would spend on the same batches
  double ratio_vs_sam = 0.0;      // sam_samples / (forward + backward)
  double wall_seconds = 0.0;
};

// Forward + backward evaluations of SAM over the same epochs and batches:
// two passes over every training sample per epoch, each forward and backward.
inline std::uint64_t sam_evaluations(const RunConfig& c, std::size_t train_size) {
  return 4ULL * train_size * c.epochs;
}

inline CompareRow compare_row(const RunConfig& c, const TrainResult& r, std::size_t train_size) {
  CompareRow row;
  row.name = c.name;
  row.optimizer = to_string(c.optimizer);
  row.alpha = c.subsamples() ? c.sampler.alpha : 1.0;
  row.eval_accuracy = r.eval_accuracy;
  row.eval_loss = r.eval_loss;
  row.forward_samples = r.forward_samples;
  row.backward_samples = r.backward_samples;
  row.sam_samples = sam_evaluations(c, train_size);
  const auto spent = r.forward_samples + r.backward_samples;
  row.ratio_vs_sam = spent > 0 ? static_cast<double>(row.sam_samples) / static_cast<double>(spent) : 0.0;
  row.wall_seconds = r.wall_seconds;
  return row;
}

inline void check_comparable(const std::vector<RunConfig>& cs) {
  if (cs.size() < 2) throw ValidationError("compare: need at least two configs");
  for (std::size_t i = 1; i < cs.size(); ++i) {
    if (!(cs[i].data == cs[0].data)) throw ValidationError("compare: " + cs[i].name + " uses a different dataset than " + cs[0].name);
    if (!(cs[i].model == cs[0].model)) throw ValidationError("compare: " + cs[i].name + " uses a different model than " + cs[0].name);
    if (cs[i].seed != cs[0].seed) throw ValidationError("compare: " + cs[i].name + " uses a different seed than " + cs[0].name);
  }
}

inline nlohmann::ordered_json to_json(const CompareRow& r) {
  nlohmann::ordered_json j;
  j["name"] = r.name;
  j["optimizer"] = r.optimizer;
  j["alpha"] = r.alpha;
  j["eval_accuracy"] = detail::opt_num(r.eval_accuracy);
  j["eval_loss"] = detail::opt_num(r.eval_loss);
  j["forward_samples"] = r.forward_samples;
  j["backward_samples"] = r.backward_samples;
  j["sam_samples"] = r.sam_samples;
  j["ratio_vs_sam"] = r.ratio_vs_sam;
  j["wall_seconds"] = r.wall_seconds;
  return j;
}

inline std::string format_compare_table(const std::vector<CompareRow>& rows) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-20s %-11s %6s %9s %14s %14s %9s %9s\n", "name", "optimizer", "alpha", "eval_acc",
                "fwd_samples", "bwd_samples", "vs_SAM", "wall_s");
  os << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-20s %-11s %6.2f %9s %14llu %14llu %9.4f %9.3f\n", r.name.c_str(),
                  r.optimizer.c_str(), r.alpha,
                  r.eval_accuracy ? std::to_string(*r.eval_accuracy).substr(0, 7).c_str() : "-",
                  static_cast<unsigned long long>(r.forward_samples), static_cast<unsigned long long>(r.backward_samples),
                  r.ratio_vs_sam, r.wall_seconds);
    os << line;
  }
  return os.str();
}

// --- verify driver ------------------------------------------------------------------

inline const std::vector<std::string>& verify_suite_names() {
  static const std::vector<std::string> names{"thm1", "lemma1", "thm2", "thm3", "thm4"};
  return names;
}

inline std::size_t default_instances(const std::string& suite) {
  if (suite == "thm1") return 200;
  if (suite == "lemma1") return 100;
  if (suite == "thm3") return 20;
  return 50;
}

inline SuiteResult run_suite(const std::string& suite, std::size_t instances, std::uint64_t seed) {
  if (suite == "thm1") return theorem1_suite(instances, seed);
  if (suite == "lemma1") return lemma1_suite(instances, seed);
  if (suite == "thm2") return theorem2_suite(instances, seed);
  if (suite == "thm3") return theorem3_suite(instances, seed);
  if (suite == "thm4") return theorem4_suite(instances, seed);
  throw ValidationError("verify: unknown suite '" + suite + "' (thm1|lemma1|thm2|thm3|thm4|all)");
}

inline nlohmann::ordered_json suite_summary(const SuiteResult& s) {
  nlohmann::ordered_json j;
  j["suite"] = s.suite;
  j["instances"] = s.reports.size();
  j["failures"] = s.failures();
  j["passed"] = s.passed();
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& r : s.reports) worst = std::min(worst, r.slack);
  j["min_slack"] = s.reports.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(worst);
  return j;
}

// --- export-series ----------------------------------------------------------------------

inline std::string format_cell(const nlohmann::json& v) {
  if (v.is_null()) return "";
  if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
  if (v.is_number_integer()) return v.dump();
  if (v.is_number_float()) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
    return buf;
  }
  if (v.is_array()) {
    std::string out;
    for (const auto& x : v) {
      if (!out.empty()) out += ';';
      out += format_cell(x);
    }
    return out;
  }
  return v.is_string() ? v.get<std::string>() : v.dump();
}

// Selected fields of every step record as CSV with a header row.
inline void export_series(std::istream& metrics, const std::vector<std::string>& fields, std::ostream& out) {
  if (fields.empty()) throw ValidationError("export-series: no fields requested");
  const auto& known = step_fields();
  for (const auto& f : fields) {
    if (std::find(known.begin(), known.end(), f) == known.end()) {
      std::string list;
      for (const auto& k : known) list += (list.empty() ? "" : ",") + k;
      throw ValidationError("export-series: unknown field '" + f + "'; available: " + list);
    }
  }
  for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << fields[i];
  out << "\n";
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(metrics, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw FormatError("metrics line " + std::to_string(line_no) + ": not a JSON object");
    }
    if (j.value("type", "") != "step") continue;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      out << (i ? "," : "");
      if (j.contains(fields[i])) out << format_cell(j[fields[i]]);
    }
    out << "\n";
  }
}

}  // namespace ausam
