#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "stogreen/experiments.hpp"

using namespace stogreen::experiments;

namespace {

json square_green() {
  return json::parse(R"({
    "experiment": "green", "master_seed": 1, "plots": false,
    "path": {"kind": "polygon", "vertices": [[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]]},
    "grid": {"nx": 256, "ny": 256, "padding": 2},
    "forms": ["area", "bump"], "K_list": [1, 2, 4]
  })");
}

json small_impurities() {
  return json::parse(R"({
    "experiment": "impurities", "master_seed": 11, "plots": false,
    "path": {"kind": "loop", "n_steps": 256},
    "grid": {"nx": 128, "ny": 128, "padding": 2},
    "pairs": [{"f": "bump", "g": "constant"}],
    "lambda_list": [20], "alpha_list": [1.0], "n_replicas": 300,
    "beta_list": [0.1]
  })");
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("config errors") {
    json c = square_green();
    c.erase("master_seed");
    CHECK_THROWS_AS(resolve_config(c), ConfigError);

    c = square_green();
    c["experiment"] = "nonsense";
    CHECK_THROWS_AS(resolve_config(c), ConfigError);

    c = json::parse(R"({"experiment": "green", "master_seed": 1, "path": {"kind": "loop", "n_steps": 1000}})");
    CHECK_THROWS_AS(resolve_config(c), ConfigError);

    c = square_green();
    c["forms"] = json::array({"no_such_form"});
    CHECK_THROWS_AS(resolve_config(c), ConfigError);

    c = square_green();
    c["grid"]["nx"] = 4;
    CHECK_THROWS_AS(resolve_config(c), ConfigError);

    c = small_impurities();
    c["n_replicas"] = 10;
    CHECK_THROWS_AS(resolve_config(c), ConfigError);

    c = small_impurities();
    c["pairs"][0]["g"] = "trig";
    CHECK_NOTHROW(resolve_config(c));  // sign is only checked at run time
    c["pairs"][0]["g"] = json{{"id", "bump"}, {"params", {{"s", -1.0}}}};
    CHECK_THROWS_AS(resolve_config(c), ConfigError);

    CHECK_THROWS_AS(resolve_config(json::array()), ConfigError);
  }

  TEST_CASE("resolved config echoes defaults") {
    const json r = resolve_config(json{{"experiment", "werner"}, {"master_seed", 3}});
    CHECK(r["path"]["n_steps"] == 1 << 16);
    CHECK(r["path"]["horizon"] == 1.0);
    CHECK(r["grid"]["nx"] == 2048);
    CHECK(r["n_paths"] == 20);
    CHECK(r["N_min"] == 10);
    CHECK(r["output_dir"] == "out");

    const json g = resolve_config(square_green());
    CHECK(g["forms"][0] == json{{"id", "area"}, {"params", json::object()}});
    CHECK(g["path"]["n_steps"] == 4);
    CHECK(g["K_list"] == json::array({1, 2, 4}));
  }

  TEST_CASE("green on a unit square passes with a tiny residual") {
    const json cfg = resolve_config(square_green());
    const Artifacts a = run_experiment(cfg);
    CHECK(a.passed());
    CHECK(a.summary["config"] == cfg);
    REQUIRE_FALSE(a.tables.empty());
    const Table& t = a.tables.front();
    CHECK(t.file == "green.csv");
    const std::vector<std::string> header{"path", "form", "mode", "K", "truncated", "rhs", "residual"};
    CHECK(t.header == header);
    CHECK(t.rows.size() == 2 * 2 * 3);
    for (const auto& row : t.rows)
      if (row[1] == "area") CHECK(std::abs(std::stod(row[6])) < 1e-12);
  }

  TEST_CASE("impurities with zero phase weight give unit characteristic functions") {
    json c = small_impurities();
    c["pairs"][0]["f"] = json{{"id", "constant"}, {"params", {{"value", 0.0}}}};
    const Artifacts a = run_experiment(resolve_config(c));
    CHECK(a.passed());
    bool any = false;
    for (const Table& t : a.tables) {
      if (!t.file.starts_with("impurities_pair")) continue;
      for (std::size_t col = 0; col < t.header.size(); ++col) {
        const std::string& h = t.header[col];
        if (h == "re_ecf" || h == "re_campbell" || h == "re_limit")
          for (const auto& row : t.rows) {
            CHECK(row[col] == "1");
            any = true;
          }
      }
    }
    CHECK(any);
  }

  TEST_CASE("runs are deterministic and artifacts are byte-identical") {
    const json cfg = resolve_config(small_impurities());
    const Artifacts a = run_experiment(cfg);
    const Artifacts b = run_experiment(cfg);
    REQUIRE(a.tables.size() == b.tables.size());
    for (std::size_t i = 0; i < a.tables.size(); ++i) CHECK(a.tables[i].rows == b.tables[i].rows);

    const auto base = std::filesystem::temp_directory_path() / "stogreen_test_artifacts";
    std::filesystem::remove_all(base);
    write_artifacts(a, base / "a");
    write_artifacts(b, base / "b");
    for (const Table& t : a.tables) {
      const std::string sa = slurp(base / "a" / t.file);
      CHECK_FALSE(sa.empty());
      CHECK(sa == slurp(base / "b" / t.file));
    }
    const json summary = json::parse(slurp(base / "a" / "summary.json"));
    CHECK(summary["config"] == cfg);
    CHECK(summary.contains("checks"));
    CHECK(summary.contains("results"));
    std::filesystem::remove_all(base);

    json other = small_impurities();
    other["master_seed"] = 12;
    const Artifacts c = run_experiment(resolve_config(other));
    CHECK(c.tables.front().rows != a.tables.front().rows);
  }

  TEST_CASE("format_number round-trips") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 1e22, 0.0}) CHECK(std::stod(format_number(v)) == v);
    CHECK(format_number(1.0) == "1");
  }
}
