// Experiment runner: stogreen --config file.json [--out dir]
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "stogreen/experiments.hpp"

namespace ex = stogreen::experiments;

namespace {

int config_error(const std::string& message, const std::string& out_dir) {
  const ex::json err{{"error", "config"}, {"message", message}};
  std::cout << err.dump(2) << '\n';
  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    std::ofstream(std::filesystem::path(out_dir) / "error.json") << err.dump(2) << '\n';
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic Green formula experiments"};
  std::string config_path;
  std::string out_dir;
  app.add_option("--config", config_path, "experiment config (JSON)")->required();
  app.add_option("--out", out_dir, "output directory, overrides output_dir");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  ex::json config;
  try {
    std::ifstream in(config_path);
    if (!in) return config_error("cannot open " + config_path, out_dir);
    ex::json raw = ex::json::parse(in);
    if (!out_dir.empty() && raw.is_object()) raw["output_dir"] = out_dir;
    config = ex::resolve_config(raw);
  } catch (const ex::json::parse_error& e) {
    return config_error(std::string("invalid JSON: ") + e.what(), out_dir);
  } catch (const ex::ConfigError& e) {
    return config_error(e.what(), out_dir);
  }

  const std::filesystem::path dir = config.at("output_dir").get<std::string>();
  try {
    const ex::Artifacts artifacts = ex::run_experiment(config);
    ex::write_artifacts(artifacts, dir);
    for (const ex::Check& c : artifacts.checks)
      std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    for (const std::string& w : artifacts.warnings) std::cout << "WARNING " << w << '\n';
    std::cout << "wrote " << (dir / "summary.json").string() << '\n';
    return artifacts.passed() ? 0 : 1;
  } catch (const ex::ConfigError& e) {
    return config_error(e.what(), dir.string());
  } catch (const std::invalid_argument& e) {
    return config_error(e.what(), dir.string());
  }
}
