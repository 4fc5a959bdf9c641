// Command-line entry point. Exit codes: 0 success, 1 invalid input or
// config, 2 runtime failure, 3 a verification suite reported a failure.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "ausam/harness.hpp"

namespace {

using namespace ausam;

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kRuntime = 2;
constexpr int kVerifyFailed = 3;

std::filesystem::path output_dir(const RunConfig& c, const std::string& cli_out) {
  if (!cli_out.empty()) return cli_out;
  if (!c.out_dir.empty()) return c.out_dir;
  return std::filesystem::path("runs") / c.name;
}

int cmd_train(const std::string& config, const std::string& out, std::optional<std::uint64_t> seed) {
  RunConfig c = load_config(config);
  if (seed) c.seed = *seed;
  const auto dir = output_dir(c, out);
  const TrainResult r = run_to_directory(c, dir);
  std::printf("run %s: %s, %u epochs, %llu steps\n", c.name.c_str(), to_string(c.optimizer).c_str(), c.epochs,
              static_cast<unsigned long long>(r.steps));
  if (r.eval_accuracy) std::printf("final eval accuracy: %.4f\n", *r.eval_accuracy);
  if (r.eval_loss) std::printf("final eval loss: %.6g\n", *r.eval_loss);
  std::printf("sample evaluations: forward %llu, backward %llu\n", static_cast<unsigned long long>(r.forward_samples),
              static_cast<unsigned long long>(r.backward_samples));
  std::printf("outputs in %s\n", dir.string().c_str());
  return kOk;
}

int cmd_compare(const std::vector<std::string>& configs, const std::string& out) {
  std::vector<RunConfig> cs;
  for (const auto& path : configs) cs.push_back(load_config(path));
  check_comparable(cs);
  const std::filesystem::path root = out.empty() ? std::filesystem::path("runs") / "compare" : std::filesystem::path(out);
  std::vector<CompareRow> rows;
  std::set<std::string> names;
  for (auto& c : cs) {
    if (!names.insert(c.name).second) throw ValidationError("compare: two configs are both named '" + c.name + "'");
    const TrainResult r = run_to_directory(c, root / c.name);
    rows.push_back(compare_row(c, r, build_problem(c).train.size()));
  }
  std::ofstream report(root / "report.jsonl");
  for (const auto& row : rows) report << to_json(row).dump() << "\n";
  std::cout << format_compare_table(rows);
  std::cout << "report written to " << (root / "report.jsonl").string() << "\n";
  return kOk;
}

int cmd_verify(const std::string& suite, std::optional<std::size_t> instances, std::uint64_t seed,
               const std::string& out) {
  std::vector<std::string> suites;
  if (suite == "all") suites = verify_suite_names();
  else suites = {suite};
  std::ofstream file;
  if (!out.empty()) {
    file.open(out);
    if (!file) throw Error("cannot write " + out);
  }
  std::ostream& records = out.empty() ? std::cout : file;
  bool ok = true;
  std::vector<nlohmann::ordered_json> summaries;
  for (const auto& s : suites) {
    const SuiteResult r = run_suite(s, instances.value_or(default_instances(s)), seed);
    for (const auto& rep : r.reports) records << to_json(rep).dump() << "\n";
    summaries.push_back(suite_summary(r));
    ok = ok && r.passed();
  }
  for (const auto& sm : summaries) {
    records << nlohmann::ordered_json{{"summary", sm}}.dump() << "\n";
    std::cerr << "suite " << sm["suite"].get<std::string>() << ": " << sm["instances"].get<std::size_t>()
              << " instances, " << sm["failures"].get<std::size_t>() << " failures\n";
  }
  return ok ? kOk : kVerifyFailed;
}

int cmd_export(const std::string& metrics, const std::string& fields) {
  std::ifstream in(metrics);
  if (!in) throw ValidationError("cannot open metrics file " + metrics);
  std::vector<std::string> names;
  for (auto f : ausam::detail::split_commas(fields))
    if (!f.empty()) names.emplace_back(f);
  export_series(in, names, std::cout);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ausam: sharpness-aware training with ADLP subset sampling"};
  app.require_subcommand(1);

  std::string config, out, fields, metrics, suite = "all";
  std::vector<std::string> configs;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> instances;
  std::uint64_t verify_seed = 1;

  auto* train = app.add_subcommand("train", "train one configuration");
  train->add_option("--config", config, "INI run configuration")->required()->check(CLI::ExistingFile);
  train->add_option("--out", out, "output directory");
  train->add_option("--seed", seed, "override run.seed");

  auto* compare = app.add_subcommand("compare", "train several configurations and tabulate them");
  compare->add_option("--config", configs, "INI run configurations")->required()->expected(1, -1)->check(CLI::ExistingFile);
  compare->add_option("--out", out, "output directory");

  auto* verify = app.add_subcommand("verify", "run randomized bound-checking suites");
  verify->add_option("--suite", suite, "thm1|lemma1|thm2|thm3|thm4|all")
      ->check(CLI::IsMember({"thm1", "lemma1", "thm2", "thm3", "thm4", "all"}));
  verify->add_option("--instances", instances, "instances per suite");
  verify->add_option("--seed", verify_seed, "suite seed");
  verify->add_option("--out", out, "write records here instead of stdout");

  auto* exp = app.add_subcommand("export-series", "print selected step fields as CSV");
  exp->add_option("--metrics", metrics, "metrics.jsonl from a run")->required();
  exp->add_option("--fields", fields, "comma-separated field names")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (*train) return cmd_train(config, out, seed);
    if (*compare) return cmd_compare(configs, out);
    if (*verify) return cmd_verify(suite, instances, verify_seed, out);
    if (*exp) return cmd_export(metrics, fields);
  } catch (const ausam::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const ausam::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return kRuntime;
  }
  return kInvalid;
}
