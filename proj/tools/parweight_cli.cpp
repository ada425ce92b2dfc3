// Command-line front end over the C API.
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "parweight/parweight.h"

namespace {

int fail(pw_status status) {
  std::cerr << "error: " << pw_last_error() << "\n";
  return pw_status_exit_code(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parabolic Muckenhoupt weight toolkit"};
  app.set_version_flag("--version", std::string(pw_version()));
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand

  long long seed = -1;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  std::string out_dir;
  app.add_option("--seed", seed, "Seed overriding the config")->check(CLI::NonNegativeNumber);
  app.add_option("--threads", threads, "Worker threads (PARWEIGHT_THREADS overrides)")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "Directory for report.json, timing.json and CSV dumps");

  std::string config;
  auto* run = app.add_subcommand("run", "Run one operation from a TOML or JSON config");
  run->add_option("config", config, "Config file")->required()->check(CLI::ExistingFile);

  std::string suite;
  auto* suite_cmd = app.add_subcommand("suite", "Run a property suite on the reference grid");
  suite_cmd->add_option("name", suite, "trivial, duality, lag, rhi, factorization, pbmo, maximal or all")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (const char* env = std::getenv("PARWEIGHT_THREADS")) {
    try {
      const long n = std::stol(env);
      if (n < 1) throw std::invalid_argument(env);
      threads = static_cast<unsigned>(n);
    } catch (const std::exception&) {
      std::cerr << "error: PARWEIGHT_THREADS must be a positive integer\n";
      return 2;
    }
  }
  pw_set_threads(threads);

  char* report = nullptr;
  if (*run) {
    const pw_status st = pw_run_config(config.c_str(), out_dir.c_str(), seed, &report);
    if (st != PW_OK) return fail(st);
    std::cout << report << "\n";
    pw_string_free(report);
    return 0;
  }

  int passed = 0;
  const pw_status st = pw_run_suite(suite.c_str(), out_dir.c_str(), seed, &passed, &report);
  if (st != PW_OK) return fail(st);
  std::cout << report << "\n";
  pw_string_free(report);
  if (!passed) std::cerr << "suite " << suite << ": FAILED\n";
  return passed ? 0 : 1;
}
