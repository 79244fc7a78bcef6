#include "cli/output.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace fracmono::cli {

using nlohmann::json;

const Metric* ResultBundle::find(const std::string& name) const {
  for (const auto& m : metrics)
    if (m.name == name) return &m;
  return nullptr;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

namespace {

std::string cell(const json& v) {
  if (v.is_number_float()) return format_number(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace

std::string to_csv(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.header.size(); ++i) out += (i ? "," : "") + t.header[i];
  out += "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + cell(row[i]);
    out += "\n";
  }
  return out;
}

std::string to_csv(const Mat<double>& m) {
  std::string out;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out += (j ? "," : "") + format_number(m(i, j));
    out += "\n";
  }
  return out;
}

json metrics_json(const ResultBundle& b) {
  json list = json::array();
  for (const auto& m : b.metrics) list.push_back({{"name", m.name}, {"value", m.value}, {"op", m.op}});
  return json{{"command", b.command}, {"metrics", list}};
}

std::uint64_t bundle_hash(const ResultBundle& b) {
  Fnv1a h;
  h.text(metrics_json(b).dump());
  for (const auto& [name, t] : b.tables) h.text(name).text(to_csv(t));
  for (const auto& [name, m] : b.matrices) h.text(name).text(to_csv(m));
  h.text(b.sidecar.dump());
  return h.digest();
}

std::uint64_t write_bundle(const std::string& dir, const ResultBundle& b, const json& provenance) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    if (!out) throw ValidationError("cannot write output file " + (fs::path(dir) / name).string());
    out << text;
  };
  write("metrics.json", metrics_json(b).dump(2) + "\n");
  for (const auto& [name, t] : b.tables) write(name + ".csv", to_csv(t));
  for (const auto& [name, m] : b.matrices) write(name + ".csv", to_csv(m));
  if (!b.matrices.empty()) write("matrices.json", b.sidecar.dump(2) + "\n");
  json prov = provenance;
  const std::uint64_t digest = bundle_hash(b);
  prov["result_hash"] = digest;
  write("provenance.json", prov.dump(2) + "\n");
  return digest;
}

}  // namespace fracmono::cli
