// erwlab -- command line front end for the excited-walk laboratory.
//
//   erwlab validate-law <law.json>          parse + validate a cookie law
//   erwlab run --config <cfg.json> [...]    run an experiment batch
//   erwlab report --out <dir>               reprint checks from summary.json
//
// Exit codes: 0 all checks pass, 1 some check failed, 2 usage/config error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "erwlab/cookie_law.hpp"
#include "erwlab/error.hpp"
#include "erwlab/experiment.hpp"

namespace fs = std::filesystem;

namespace {

void print_check_line(const std::string& name, double value,
                      const std::string& relation, double threshold,
                      bool pass) {
  std::printf("  [%s] %-28s %.6g %s %.6g\n", pass ? "PASS" : "FAIL",
              name.c_str(), value, relation.c_str(), threshold);
}

int cmd_validate_law(const std::string& path) {
  const erw::CheckedLaw law = erw::validate(erw::load_law_file(path));
  std::cout << "law " << path << "\n"
            << "  cookies per site   " << law.cookies_per_site() << "\n"
            << "  support atoms      " << law.atom_count() << "\n"
            << "  delta              " << law.delta() << "\n"
            << "  E prod omega       " << law.mean_right_product() << "\n"
            << "  E prod (1-omega)   " << law.mean_left_product() << "\n"
            << "ok\n";
  return 0;
}

int cmd_run(const erw::ExperimentConfig& cfg) {
  const erw::ExperimentReport report = erw::run_experiment(cfg);
  std::cout << erw::to_string(cfg.id) << " checks:\n";
  for (const auto& c : report.checks)
    print_check_line(c.name, c.value, c.relation, c.threshold, c.pass);
  std::cout << (report.all_pass ? "PASS" : "FAIL") << "  ("
            << report.summary_path << ")\n";
  return report.all_pass ? 0 : 1;
}

int cmd_report(const std::string& out_arg) {
  fs::path path(out_arg);
  if (fs::is_directory(path)) path /= "summary.json";
  std::ifstream in(path);
  if (!in)
    throw erw::Error(erw::Errc::bad_config,
                     "cannot read summary: " + path.string());
  nlohmann::json summary;
  try {
    in >> summary;
  } catch (const std::exception& e) {
    throw erw::Error(erw::Errc::parse_error,
                     "summary is not valid JSON: " + std::string(e.what()));
  }

  std::cout << summary.value("experiment", std::string("?")) << " checks ("
            << path.string() << "):\n";
  bool all_pass = summary.value("pass", false);
  if (summary.contains("checks") && summary["checks"].is_array()) {
    for (const auto& c : summary["checks"])
      print_check_line(c.value("name", std::string("?")),
                       c.value("value", 0.0),
                       c.value("relation", std::string("?")),
                       c.value("threshold", 0.0), c.value("pass", false));
  }
  std::cout << (all_pass ? "PASS" : "FAIL") << "\n";
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"excited random walk scaling laboratory"};
  app.require_subcommand(1);

  std::string law_path;
  CLI::App* validate =
      app.add_subcommand("validate-law", "parse and validate a cookie law file");
  validate->add_option("law", law_path, "law JSON file")->required();

  std::string config_path;
  std::uint64_t seed = 0;
  int workers = 0;
  std::string out_dir;
  CLI::App* run = app.add_subcommand("run", "run an experiment from a config");
  run->add_option("-c,--config", config_path, "experiment config JSON")
      ->required();
  CLI::Option* seed_opt =
      run->add_option("-s,--seed", seed, "override the master seed");
  CLI::Option* workers_opt =
      run->add_option("-w,--workers", workers, "override the worker count");
  CLI::Option* out_opt =
      run->add_option("-o,--out", out_dir, "override the output directory");

  std::string report_out;
  CLI::App* report =
      app.add_subcommand("report", "reprint the checks of a finished run");
  report->add_option("-o,--out", report_out,
                     "output directory or summary.json path")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help/version exit cleanly, misuse is 2
  }

  try {
    if (validate->parsed()) return cmd_validate_law(law_path);
    if (run->parsed()) {
      erw::ExperimentConfig cfg = erw::load_config(config_path);
      if (seed_opt->count() > 0) cfg.master_seed = seed;
      if (workers_opt->count() > 0) cfg.workers = workers;
      if (out_opt->count() > 0) cfg.out_dir = out_dir;
      return cmd_run(cfg);
    }
    if (report->parsed()) return cmd_report(report_out);
  } catch (const erw::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
