// Acceptance run: one PASS/FAIL/SKIP line per criterion, details indented
// below it. Exits non-zero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <unistd.h>

#include "ausam/harness.hpp"

using namespace ausam;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 1;

int failures = 0;

struct Outcome {
  enum { pass, fail, skip } status = fail;
  std::string detail;
};

void report(const std::string& name, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.status = Outcome::fail;
    o.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const char* tag = o.status == Outcome::pass ? "PASS" : o.status == Outcome::skip ? "SKIP" : "FAIL";
  if (o.status == Outcome::fail) ++failures;
  std::printf("%s  %-28s %8.2fs\n", tag, name.c_str(), secs);
  if (!o.detail.empty()) std::printf("%s\n", o.detail.c_str());
  std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome suite_outcome(const SuiteResult& s, double secs, double limit, std::string extra = "") {
  Outcome o;
  double min_slack = std::numeric_limits<double>::infinity();
  for (const auto& r : s.reports) min_slack = std::min(min_slack, r.slack);
  o.detail = fmt("      %zu instances, %zu failures, min slack %.3g, limit %.0fs", s.reports.size(), s.failures(),
                 min_slack, limit);
  if (!extra.empty()) o.detail += "\n" + extra;
  o.status = s.passed() && secs < limit ? Outcome::pass : Outcome::fail;
  return o;
}

RunConfig moons_config(OptimizerKind kind, double alpha, std::uint64_t seed) {
  RunConfig c;
  c.name = to_string(kind) + (kind == OptimizerKind::ausam ? "-" + detail::format_double(alpha) : "");
  c.optimizer = kind;
  c.epochs = 100;
  c.batch_size = 128;
  c.eval_fraction = 0.2;
  c.seed = seed;
  c.data.kind = "two-moons";
  c.data.n = 2000;
  c.data.noise = 0.2;
  c.model.kind = "mlp";
  c.model.widths = {2, 16, 16, 2};
  c.sampler.alpha = alpha;
  c.opt.total_epochs = c.epochs;
  return c;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ausam_acceptance_" + std::to_string(::getpid())) / name;
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

int main() {
  std::printf("acceptance run, seed %llu\n", static_cast<unsigned long long>(kSeed));

  report("thm1-suite", [] {
    const auto t0 = std::chrono::steady_clock::now();
    const auto s = theorem1_suite(200, kSeed);
    const double secs = seconds_since(t0);
    std::size_t valid = 0, mlp_fail = 0, quad_fail = 0;
    for (const auto& r : s.reports) {
      valid += r.lhs <= r.extra.at("valid_rhs") * (1 + 1e-12);
      if (!r.holds) (r.model.rfind("mlp", 0) == 0 ? mlp_fail : quad_fail)++;
    }
    return suite_outcome(s, secs, 60.0,
                         fmt("      failures by model: mlp %zu, quadratic %zu; rho*(M/K)*||g_U - g_S|| bounds %zu/%zu",
                             mlp_fail, quad_fail, valid, s.reports.size()));
  });

  report("lemma1-suite", [] {
    const auto t0 = std::chrono::steady_clock::now();
    const auto s = lemma1_suite(100, kSeed);
    return suite_outcome(s, seconds_since(t0), 60.0);
  });

  report("thm2-suite", [] {
    const auto t0 = std::chrono::steady_clock::now();
    const auto s = theorem2_suite(50, kSeed);
    double tightest = 0.0;
    for (const auto& r : s.reports) tightest = std::max(tightest, r.rhs > 0 ? r.lhs / r.rhs : 0.0);
    return suite_outcome(s, seconds_since(t0), 120.0, fmt("      largest lhs/rhs %.3g", tightest));
  });

  report("thm4-suite", [] {
    const auto t0 = std::chrono::steady_clock::now();
    const auto s = theorem4_suite(50, kSeed);
    Outcome o = suite_outcome(s, seconds_since(t0), 120.0,
                              fmt("      full-selection row: lhs %.17g rhs %.17g", s.reports[0].lhs, s.reports[0].rhs));
    if (s.reports[0].lhs != 0.0 || s.reports[0].rhs != 0.0) o.status = Outcome::fail;
    return o;
  });

  report("thm3-proxy", [] {
    const auto t0 = std::chrono::steady_clock::now();
    const auto s = theorem3_suite(20, kSeed);
    std::string seeds;
    for (const auto& r : s.reports)
      if (!r.holds) seeds += fmt(" %llu(+%.3g)", static_cast<unsigned long long>(r.seed), r.lhs);
    return suite_outcome(s, seconds_since(t0), 120.0,
                         "      eta = 1/tau, rho = 1/(4 tau), 100 steps, burn-in 10" +
                             (seeds.empty() ? std::string() : "; rising seeds (increase):" + seeds));
  });

  report("speedup-accounting", [] {
    Outcome o;
    o.status = Outcome::pass;
    // 1000 training samples in batches of 100: alpha * K is an integer for every alpha
    auto base = moons_config(OptimizerKind::sam, 1.0, kSeed);
    base.data.n = 1250;
    base.batch_size = 100;
    base.epochs = 2;
    base.opt.total_epochs = 2;
    const Problem p = build_problem(base);
    const auto sam = compare_row(base, train(base, p), p.train.size());
    o.detail += fmt("      sam         ratio %.6f  fwd %llu", sam.ratio_vs_sam,
                    static_cast<unsigned long long>(sam.forward_samples));
    if (sam.ratio_vs_sam != 1.0) o.status = Outcome::fail;
    for (double alpha : {0.4, 0.5, 0.6, 0.7}) {
      RunConfig c = base;
      c.optimizer = OptimizerKind::ausam;
      c.sampler.alpha = alpha;
      const auto row = compare_row(c, train(c, p), p.train.size());
      const bool ok = std::abs(row.ratio_vs_sam - 1.0 / alpha) <= 1e-12 &&
                      row.forward_samples == static_cast<std::uint64_t>(std::llround(alpha * sam.forward_samples));
      o.detail += fmt("\n      ausam-%.1f   ratio %.6f (1/alpha %.6f)  fwd %llu", alpha, row.ratio_vs_sam, 1.0 / alpha,
                      static_cast<unsigned long long>(row.forward_samples));
      if (!ok) o.status = Outcome::fail;
    }
    // short batches: 1600 samples in batches of 128, twelve full and one of 64
    auto shortb = moons_config(OptimizerKind::ausam, 0.5, kSeed);
    shortb.epochs = 1;
    shortb.opt.total_epochs = 1;
    const Problem ps = build_problem(shortb);
    const auto row = compare_row(shortb, train(shortb, ps), ps.train.size());
    std::uint64_t expect = 0;
    for (const auto& b : epoch_batches(ps.train, 128, batch_seed(shortb), 0)) expect += 4 * subset_size(0.5, b.size());
    o.detail += fmt("\n      ausam-0.5 on batches of 128 with a short tail: spent %llu, ceiling arithmetic %llu",
                    static_cast<unsigned long long>(row.forward_samples + row.backward_samples),
                    static_cast<unsigned long long>(expect));
    if (row.forward_samples + row.backward_samples != expect) o.status = Outcome::fail;
    return o;
  });

  // Shared by the generalization and bias-audit criteria.
  std::vector<TrainResult> ausam_runs;
  report("two-moons-generalization", [&] {
    const auto t0 = std::chrono::steady_clock::now();
    double acc[3] = {0, 0, 0};  // sgd, sam, ausam-0.5
    std::string rows;
    for (std::uint64_t seed : {1, 2, 3}) {
      const OptimizerKind kinds[] = {OptimizerKind::sgd, OptimizerKind::sam, OptimizerKind::ausam};
      double row[3];
      for (int i = 0; i < 3; ++i) {
        const RunConfig c = moons_config(kinds[i], 0.5, seed);
        const Problem p = build_problem(c);
        TrainOptions opts;
        opts.keep_checkpoints = kinds[i] == OptimizerKind::ausam && seed == 1;
        TrainResult r = train(c, p, opts);
        row[i] = *r.eval_accuracy;
        acc[i] += row[i] / 3.0;
        if (opts.keep_checkpoints) ausam_runs.push_back(std::move(r));
      }
      rows += fmt("\n      seed %llu: sgd %.4f  sam %.4f  ausam-0.5 %.4f", static_cast<unsigned long long>(seed), row[0],
                  row[1], row[2]);
    }
    const double secs = seconds_since(t0);
    Outcome o;
    o.detail = fmt("      mean eval accuracy: sgd %.4f  sam %.4f  ausam-0.5 %.4f  (gap to sam %.2f pts, to sgd %.2f pts)",
                   acc[0], acc[1], acc[2], 100 * (acc[2] - acc[1]), 100 * (acc[2] - acc[0])) +
               rows;
    const bool ok = acc[2] >= acc[1] - 0.015 && acc[2] >= acc[0] - 0.005 && secs < 300.0;
    o.status = ok ? Outcome::pass : Outcome::fail;
    return o;
  });

  report("alpha-one-equivalence", [] {
    const Model m(Mlp{{2, 16, 16, 2}});
    const Dataset d = make_two_moons(400, 0.2, kSeed);
    OptimizerConfig cfg;
    cfg.total_epochs = 10;
    SamplerConfig sc;
    sc.alpha = 1.0;
    sc.seed = kSeed;
    Sampler sampler(sc);
    ParamVector wa = init_params(m, kSeed), ws = wa;
    OptimizerState sa = OptimizerState::zeros(m.param_count()), ss = sa;
    double worst = 0.0;
    int steps = 0;
    for (std::uint32_t e = 0; steps < 50; ++e) {
      sa.epoch = ss.epoch = e;
      for (const MiniBatch& b : epoch_batches(d, 32, kSeed, e)) {
        if (steps == 50) break;
        auto ra = ausam_step(m, wa, b, cfg, sampler, sa);
        auto rs = sam_step(m, ws, b, cfg, ss);
        wa = ra.w;
        sa = ra.state;
        ws = rs.w;
        ss = rs.state;
        worst = std::max(worst, (wa - ws).cwiseAbs().maxCoeff());
        ++steps;
      }
    }
    Outcome o;
    o.detail = fmt("      %d steps, max |w_ausam - w_sam| = %.3g", steps, worst);
    o.status = worst <= 1e-12 ? Outcome::pass : Outcome::fail;
    return o;
  });

  report("bias-audit-vs-sam-random", [&] {
    Outcome o;
    if (ausam_runs.empty()) {
      o.detail = "      no ausam checkpoints (generalization run failed)";
      return o;
    }
    const RunConfig c = moons_config(OptimizerKind::ausam, 0.5, 1);
    const Problem p = build_problem(c);
    const auto rows = bias_vs_random(p.model, ausam_runs[0].checkpoints, p.train, effective_sampler_config(c),
                                     c.batch_size, batch_seed(c), c.opt.rho);
    std::size_t worse = 0;
    for (const auto& r : rows) worse += r.rhs_adlp > r.rhs_uniform * (1 + 1e-12);
    // the baseline itself has to train
    const RunConfig rc = moons_config(OptimizerKind::sam_random, 0.5, 1);
    const auto rr = train(rc, build_problem(rc));
    o.detail = fmt("      %zu checkpoints, ausam bound above uniform at %zu; sam-random eval accuracy %.4f", rows.size(),
                   worse, *rr.eval_accuracy);
    for (std::size_t i = 0; i < rows.size(); i += 20)
      o.detail += fmt("\n      epoch %3u: ausam %.6g  uniform %.6g", rows[i].epoch, rows[i].rhs_adlp, rows[i].rhs_uniform);
    o.detail += fmt("\n      epoch %3u: ausam %.6g  uniform %.6g", rows.back().epoch, rows.back().rhs_adlp,
                    rows.back().rhs_uniform);
    o.status = worse == 0 ? Outcome::pass : Outcome::fail;
    return o;
  });

  report("mnist-subset-smoke", [] {
    Outcome o;
    const char* dir = std::getenv("AUSAM_MNIST_DIR");
    const fs::path images = dir ? fs::path(dir) / "train-images-idx3-ubyte" : fs::path();
    const fs::path labels = dir ? fs::path(dir) / "train-labels-idx1-ubyte" : fs::path();
    if (!dir || !fs::exists(images) || !fs::exists(labels)) {
      o.status = Outcome::skip;
      o.detail = "      AUSAM_MNIST_DIR with train-images-idx3-ubyte / train-labels-idx1-ubyte not found";
      return o;
    }
    double acc[2];
    CompareRow rows[2];
    const OptimizerKind kinds[] = {OptimizerKind::sam, OptimizerKind::ausam};
    for (int i = 0; i < 2; ++i) {
      RunConfig c = moons_config(kinds[i], 0.5, kSeed);
      c.data = DataSpec{};
      c.data.kind = "idx";
      c.data.images = images;
      c.data.labels = labels;
      c.data.limit = 5000;
      c.model.widths = {784, 64, 10};
      c.epochs = 20;
      c.opt.total_epochs = 20;
      const Problem p = build_problem(c);
      const auto r = train(c, p);
      acc[i] = *r.eval_accuracy;
      rows[i] = compare_row(c, r, p.train.size());
    }
    const double ratio = rows[0].ratio_vs_sam > 0 ? rows[1].ratio_vs_sam / rows[0].ratio_vs_sam : 0.0;
    o.detail = fmt("      sam %.4f  ausam-0.5 %.4f  ratio vs sam %.4f", acc[0], acc[1], ratio);
    o.status = acc[1] >= acc[0] - 0.02 && std::abs(ratio - 2.0) < 1e-12 ? Outcome::pass : Outcome::fail;
    return o;
  });

  report("determinism", [] {
    Outcome o;
    o.status = Outcome::pass;
    for (auto kind : {OptimizerKind::sgd, OptimizerKind::sam, OptimizerKind::ausam, OptimizerKind::sam_random}) {
      RunConfig c = moons_config(kind, 0.5, kSeed);
      c.data.n = 400;
      c.epochs = 5;
      c.opt.total_epochs = 5;
      c.batch_size = 32;
      c.record_selected = true;
      const fs::path a = scratch(c.name + "_a"), b = scratch(c.name + "_b");
      run_to_directory(c, a);
      run_to_directory(c, b);
      for (const char* f : {"metrics.jsonl", "epochs.jsonl", "checkpoint.bin"}) {
        if (slurp(a / f) != slurp(b / f) || slurp(a / f).empty()) {
          o.status = Outcome::fail;
          o.detail += fmt("      %s differs for %s\n", f, c.name.c_str());
        }
      }
    }
    for (const auto& s : verify_suite_names()) {
      const auto x = run_suite(s, 10, kSeed), y = run_suite(s, 10, kSeed);
      for (std::size_t i = 0; i < x.reports.size(); ++i)
        if (to_json(x.reports[i]).dump() != to_json(y.reports[i]).dump()) {
          o.status = Outcome::fail;
          o.detail += fmt("      verify suite %s record %zu differs\n", s.c_str(), i);
        }
    }
    if (o.detail.empty()) o.detail = "      train (4 optimizers) and verify (5 suites) reruns byte-identical";
    else o.detail.pop_back();
    return o;
  });

  fs::remove_all(fs::temp_directory_path() / ("ausam_acceptance_" + std::to_string(::getpid())));
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
