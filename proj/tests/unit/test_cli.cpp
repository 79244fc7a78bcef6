#include "doctest.h"

#include "cli/commands.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

using namespace fracmono;
using namespace fracmono::cli;
using nlohmann::json;

namespace {

json reference_config() {
  return json::parse(R"({
    "scenario": "cli_test",
    "grid": {"dims": 1, "cells": 32, "half_width": 2.0},
    "geometry": {"omega": [{"lo": -1.0, "hi": 1.0}], "window": [{"lo": 1.1, "hi": 1.85}]},
    "s": [0.5],
    "sigma": {"background": 1.0, "inclusions": [{"value": 1.5, "cells": [15, 16]}]},
    "mesh": {"intervals": 64, "height": 8.0},
    "options": {"samples": 2},
    "seed": 3
  })");
}

std::string parse_error(const json& j) {
  try {
    parse_config(j);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

std::filesystem::path temp_dir(const std::string& name) {
  auto d = std::filesystem::temp_directory_path() / ("fracmono_cli_" + name);
  std::filesystem::remove_all(d);
  std::filesystem::create_directories(d);
  return d;
}

int run_binary(const std::string& args) {
  const char* bin = std::getenv("FRACMONO_BIN");
  REQUIRE(bin != nullptr);
  const int status = std::system((std::string(bin) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto cfg = parse_config(reference_config());
  CHECK(cfg.scenario == "cli_test");
  CHECK(cfg.cells == 32);
  CHECK(cfg.orders == std::vector<double>{0.5});
  CHECK(cfg.mesh.intervals == 64);
  CHECK(cfg.option<int>("samples", 5) == 2);
  CHECK(cfg.option<int>("missing", 5) == 5);
  const auto p = build_partition(cfg);
  CHECK(p.omega.size() == 16);
  CHECK(p.window.size() == 6);
  const auto sigma = build_sigma(cfg, p, cfg.sigma);
  CHECK(sigma.values(15) == 1.5);
  CHECK(sigma.values(14) == 1.0);
}

TEST_CASE("config diagnostics name the field") {
  json j = reference_config();
  j["geometry"].erase("window");
  CHECK(parse_error(j).find("geometry.window") != std::string::npos);

  j = reference_config();
  j["s"] = 1.5;
  CHECK(parse_error(j).find("'s'") != std::string::npos);

  j = reference_config();
  j["grid"]["cells"] = "many";
  CHECK(parse_error(j).find("grid.cells") != std::string::npos);

  j = reference_config();
  j["sigma"]["inclusions"][0].erase("value");
  CHECK(parse_error(j).find("sigma.inclusions[0].value") != std::string::npos);

  j = reference_config();
  j["options"]["samples"] = "two";
  const auto cfg = parse_config(j);
  CHECK_THROWS_AS(cfg.option<int>("samples", 1), ValidationError);
}

TEST_CASE("band violation in config is reported") {
  json j = reference_config();
  j["sigma"]["inclusions"][0]["value"] = 3.0;
  const auto cfg = parse_config(j);
  const auto p = build_partition(cfg);
  CHECK_THROWS_AS(build_sigma(cfg, p, cfg.sigma), ValidationError);
}

TEST_CASE("mono-test with equal coefficients has zero gaps") {
  json j = reference_config();
  j["sigma2"] = j["sigma"];
  const auto b = run("mono-test", parse_config(j));
  const Metric* gap = b.find("max_gap");
  REQUIRE(gap != nullptr);
  CHECK(gap->value.get<double>() <= 1e-10);
  CHECK(b.find("sandwich_holds")->value.get<bool>());
}

TEST_CASE("commands are deterministic") {
  const auto cfg = parse_config(reference_config());
  for (const std::string cmd : {"forward", "dnmap", "mono-test"}) {
    const auto a = run(cmd, cfg);
    const auto b = run(cmd, cfg);
    CHECK(bundle_hash(a) == bundle_hash(b));
    CHECK(a.command == cmd);
  }
  CHECK_THROWS_AS(run("bogus", cfg), ValidationError);
}

TEST_CASE("dnmap bundle carries a symmetric matrix") {
  const auto b = run("dnmap", parse_config(reference_config()));
  REQUIRE(!b.matrices.empty());
  const Mat<double>& m = b.matrices.begin()->second;
  CHECK(m.rows() == 6);
  CHECK((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * m.cwiseAbs().maxCoeff());
}

TEST_CASE("csv formatting round-trips") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
  Table t;
  t.header = {"a", "b"};
  t.add({1, "x"});
  CHECK(to_csv(t) == "a,b\n1,x\n");
}

TEST_CASE("binary exit codes and output files") {
  const auto dir = temp_dir("bin");
  const auto good = dir / "good.json";
  std::ofstream(good) << reference_config().dump();
  const auto bad = dir / "bad.json";
  std::ofstream(bad) << "{\"grid\": {\"dims\": 1}";
  const auto invalid = dir / "invalid.json";
  json j = reference_config();
  j["geometry"].erase("omega");
  std::ofstream(invalid) << j.dump();

  CHECK(run_binary("forward --config " + bad.string() + " --out " + (dir / "o1").string()) == 1);
  CHECK(run_binary("forward --config " + invalid.string() + " --out " + (dir / "o2").string()) == 1);
  CHECK(run_binary("nonsense --config " + good.string()) == 1);
  CHECK(run_binary("forward") == 1);

  CHECK(run_binary("dnmap --config " + good.string() + " --out " + (dir / "a").string() + " --threads 1") == 0);
  CHECK(run_binary("dnmap --config " + good.string() + " --out " + (dir / "b").string() + " --threads 2") == 0);
  for (const char* f : {"metrics.json", "provenance.json", "matrices.json"}) CHECK(std::filesystem::exists(dir / "a" / f));
  auto hash_of = [](const std::filesystem::path& p) {
    std::ifstream in(p / "provenance.json");
    return json::parse(in).at("result_hash").get<std::uint64_t>();
  };
  CHECK(hash_of(dir / "a") == hash_of(dir / "b"));
  std::ifstream in(dir / "a" / "provenance.json");
  const json prov = json::parse(in);
  CHECK(prov.at("seed") == 3);
  CHECK(prov.contains("config_hash"));
}

TEST_CASE("extension-check reports error and trend") {
  json j = reference_config();
  j["options"]["levels"] = 3;
  const auto b = run("extension-check", parse_config(j));
  REQUIRE(b.find("trace_relative_error_s0.5") != nullptr);
  REQUIRE(b.find("trace_error_decreasing_s0.5") != nullptr);
  CHECK(b.tables.count("refinement_s0.5") == 1);
  CHECK(b.tables.at("refinement_s0.5").rows.size() == 3);
}
