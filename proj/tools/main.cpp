// pconvex: batch verification runs driven by INI experiment files.
//
//   pconvex run <config> [--out DIR] [--seed N] [--verbose]
//   pconvex list-builtins
//
// Exit status: 0 when every asserted check passes, 1 when one fails, 2 for
// unusable configs or arguments.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "config.hpp"
#include "experiment.hpp"

namespace fs = std::filesystem;
using namespace pconvex::app;

namespace {

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

int run(const std::string& config, const std::string& out_dir, std::optional<std::uint64_t> seed, bool verbose) {
  TaskResult res;
  try {
    const IniFile ini = IniFile::load(config);
    res = run_experiment(ini, seed, verbose);
  } catch (const ConfigError& e) {
    std::cerr << config << ": " << e.what() << "\n";
    return 2;
  }

  fs::create_directories(out_dir);
  std::ostringstream report;
  Json header;
  header["timestamp"] = utc_now();
  header["config"] = fs::path(config).filename().string();
  header["task"] = res.task;
  report << header.dump() << "\n";
  for (const auto& r : res.records) report << r.dump() << "\n";
  Json summary;
  summary["check"] = "summary";
  summary["records"] = res.records.size();
  summary["pass"] = res.pass;
  report << summary.dump() << "\n";
  write_file(fs::path(out_dir) / "report.jsonl", report.str());
  if (res.series) write_file(fs::path(out_dir) / "series.csv", series_csv(*res.series));
  if (res.plot) write_file(fs::path(out_dir) / "plot.svg", plot_svg(*res.plot));
  for (const auto& [name, text] : res.files) write_file(fs::path(out_dir) / name, text);

  if (!res.pass) {
    std::cerr << res.task << ": FAILED\n";
    for (const auto& r : res.records)
      if (r.contains("pass") && !r["pass"].get<bool>()) std::cerr << r.dump() << "\n";
    return 1;
  }
  std::cout << res.task << ": " << res.records.size() << " checks passed; report in " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Verification runs for p-convexity, weighted L2 estimates and discrete Hodge theory"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "run an experiment config");
  std::string config, out_dir = "out";
  std::uint64_t seed = 0;
  bool verbose = false;
  run_cmd->add_option("config", config, "INI experiment file")->required();
  run_cmd->add_option("--out", out_dir, "output directory");
  auto* seed_opt = run_cmd->add_option("--seed", seed, "overrides [run] seed");
  run_cmd->add_flag("--verbose", verbose, "echo records to stderr");

  auto* list_cmd = app.add_subcommand("list-builtins", "print built-in weights, domains and tasks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (list_cmd->parsed()) {
    std::cout << builtins_text();
    return 0;
  }
  try {
    return run(config, out_dir, *seed_opt ? std::optional<std::uint64_t>(seed) : std::nullopt, verbose);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
