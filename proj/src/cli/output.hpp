#ifndef FRACMONO_CLI_OUTPUT_HPP
#define FRACMONO_CLI_OUTPUT_HPP

#include "fracmono/common.hpp"

#include <json.hpp>

#include <map>
#include <string>
#include <vector>

namespace fracmono::cli {

struct Metric {
  std::string name;
  nlohmann::json value;
  std::string op;  // library operation that produced the value
};

/// Tabular CSV payload: header plus rows of numbers or strings.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<nlohmann::json>> rows;

  void add(std::vector<nlohmann::json> row) { rows.push_back(std::move(row)); }
};

struct ResultBundle {
  std::string command;
  std::vector<Metric> metrics;
  std::map<std::string, Table> tables;       // file stem -> table
  std::map<std::string, Mat<double>> matrices;  // file stem -> dense matrix
  nlohmann::json sidecar = nlohmann::json::object();  // metadata for the matrices

  void metric(std::string name, nlohmann::json value, std::string op) {
    metrics.push_back(Metric{std::move(name), std::move(value), std::move(op)});
  }
  const Metric* find(const std::string& name) const;
};

/// Shortest round-trip decimal representation.
std::string format_number(double v);

std::string to_csv(const Table& t);
std::string to_csv(const Mat<double>& m);
nlohmann::json metrics_json(const ResultBundle& b);

/// Writes metrics.json, one CSV per table and matrix, matrices.json and
/// provenance.json. Returns the digest over all numeric outputs.
std::uint64_t write_bundle(const std::string& dir, const ResultBundle& b, const nlohmann::json& provenance);

/// Digest over everything write_bundle would emit except provenance.
std::uint64_t bundle_hash(const ResultBundle& b);

}  // namespace fracmono::cli

#endif  // FRACMONO_CLI_OUTPUT_HPP
