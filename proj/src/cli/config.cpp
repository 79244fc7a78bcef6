#include "cli/config.hpp"

#include <fstream>
#include <sstream>

namespace fracmono::cli {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ValidationError("config: field '" + path + "' " + what);
}

const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) fail(path.empty() ? key : path + "." + key, "is missing");
  return j.at(key);
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "must be a number");
  return j.get<double>();
}

Index as_index(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "must be an integer");
  return j.get<Index>();
}

std::array<double, 2> as_point(const json& j, const std::string& path, int dims) {
  std::array<double, 2> p{0.0, 0.0};
  if (j.is_number()) {
    if (dims != 1) fail(path, "needs " + std::to_string(dims) + " coordinates");
    p[0] = j.get<double>();
    return p;
  }
  if (!j.is_array() || static_cast<int>(j.size()) != dims) fail(path, "needs " + std::to_string(dims) + " coordinates");
  for (int k = 0; k < dims; ++k) p[static_cast<std::size_t>(k)] = as_number(j[static_cast<std::size_t>(k)], path);
  return p;
}

Shape as_shape(const json& j, const std::string& path, int dims) {
  if (!j.is_array()) fail(path, "must be a list of boxes {lo, hi}");
  Shape s;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string at = path + "[" + std::to_string(i) + "]";
    Box b;
    b.lo = as_point(require(j[i], "lo", at), at + ".lo", dims);
    b.hi = as_point(require(j[i], "hi", at), at + ".hi", dims);
    for (int k = 0; k < dims; ++k)
      if (b.lo[static_cast<std::size_t>(k)] > b.hi[static_cast<std::size_t>(k)]) fail(at, "has lo > hi");
    s.push_back(b);
  }
  return s;
}

SigmaSpec as_sigma(const json& j, const std::string& path, int dims) {
  if (!j.is_object()) fail(path, "must be an object");
  SigmaSpec s;
  if (j.contains("background")) s.background = as_number(j.at("background"), path + ".background");
  if (j.contains("inclusions")) {
    const json& inc = j.at("inclusions");
    if (!inc.is_array()) fail(path + ".inclusions", "must be a list");
    for (std::size_t i = 0; i < inc.size(); ++i) {
      const std::string at = path + ".inclusions[" + std::to_string(i) + "]";
      InclusionSpec is;
      is.value = as_number(require(inc[i], "value", at), at + ".value");
      if (inc[i].contains("shape")) is.shape = as_shape(inc[i].at("shape"), at + ".shape", dims);
      if (inc[i].contains("cells")) {
        const json& c = inc[i].at("cells");
        if (!c.is_array()) fail(at + ".cells", "must be a list of cell indices");
        for (std::size_t k = 0; k < c.size(); ++k) is.cells.push_back(as_index(c[k], at + ".cells"));
      }
      if (is.shape.empty() && is.cells.empty()) fail(at, "needs 'shape' or 'cells'");
      s.inclusions.push_back(std::move(is));
    }
  }
  return s;
}

}  // namespace

RunConfig parse_config(const json& j) {
  if (!j.is_object()) throw ValidationError("config: top level must be an object");
  RunConfig c;
  if (j.contains("scenario")) {
    if (!j.at("scenario").is_string()) fail("scenario", "must be a string");
    c.scenario = j.at("scenario").get<std::string>();
  }
  const json& g = require(j, "grid", "");
  c.dims = static_cast<int>(as_index(require(g, "dims", "grid"), "grid.dims"));
  c.cells = as_index(require(g, "cells", "grid"), "grid.cells");
  c.half_width = as_number(require(g, "half_width", "grid"), "grid.half_width");
  if (c.dims != 1 && c.dims != 2) fail("grid.dims", "must be 1 or 2");
  if (c.cells < 8) fail("grid.cells", "must be at least 8");
  if (!(c.half_width > 0.0)) fail("grid.half_width", "must be positive");

  const json& geo = require(j, "geometry", "");
  c.geometry.omega = as_shape(require(geo, "omega", "geometry"), "geometry.omega", c.dims);
  c.geometry.window = as_shape(require(geo, "window", "geometry"), "geometry.window", c.dims);
  if (geo.contains("b")) c.geometry.b = as_shape(geo.at("b"), "geometry.b", c.dims);
  if (geo.contains("d")) c.geometry.d = as_shape(geo.at("d"), "geometry.d", c.dims);
  if (geo.contains("o")) c.geometry.o = as_shape(geo.at("o"), "geometry.o", c.dims);

  if (j.contains("s")) {
    const json& s = j.at("s");
    c.orders.clear();
    if (s.is_array()) {
      for (std::size_t i = 0; i < s.size(); ++i) c.orders.push_back(as_number(s[i], "s[" + std::to_string(i) + "]"));
    } else {
      c.orders.push_back(as_number(s, "s"));
    }
    if (c.orders.empty()) fail("s", "must not be empty");
    for (double v : c.orders)
      if (!(v > 0.0 && v < 1.0)) fail("s", "values must lie in (0, 1)");
  }
  if (j.contains("lambda")) c.lambda = as_number(j.at("lambda"), "lambda");
  if (j.contains("sigma")) c.sigma = as_sigma(j.at("sigma"), "sigma", c.dims);
  if (j.contains("sigma2")) c.sigma2 = as_sigma(j.at("sigma2"), "sigma2", c.dims);
  if (j.contains("sigma0")) c.sigma0 = as_sigma(j.at("sigma0"), "sigma0", c.dims);
  if (j.contains("mesh")) {
    const json& m = j.at("mesh");
    if (m.contains("intervals")) c.mesh.intervals = as_index(m.at("intervals"), "mesh.intervals");
    if (m.contains("height")) c.mesh.height = as_number(m.at("height"), "mesh.height");
    if (m.contains("grading")) c.mesh.grading = as_number(m.at("grading"), "mesh.grading");
    if (c.mesh.intervals < 16) fail("mesh.intervals", "must be at least 16");
  }
  if (j.contains("options")) {
    if (!j.at("options").is_object()) fail("options", "must be an object");
    c.options = j.at("options");
  }
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer()) fail("seed", "must be an integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  c.raw = j.dump();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config: parse error: ") + e.what());
  }
  return parse_config(j);
}

DomainPartition build_partition(const RunConfig& cfg) {
  const GridSpec grid = cfg.grid();
  auto check_nonempty = [&](const Shape& s, const char* name) {
    if (!s.empty() && rasterize(grid, s).empty()) {
      throw ValidationError(std::string("config: field 'geometry.") + name + "' covers no cell centre");
    }
  };
  check_nonempty(cfg.geometry.omega, "omega");
  check_nonempty(cfg.geometry.window, "window");
  if (cfg.geometry.window.empty()) throw ValidationError("config: field 'geometry.window' is empty");
  return fracmono::build_partition(grid, cfg.geometry);
}

Conductivity<double> build_sigma(const RunConfig& cfg, const DomainPartition& p, const SigmaSpec& spec) {
  std::vector<Inclusion> inc;
  for (const auto& is : spec.inclusions) {
    IndexSet cells = set_union(rasterize(p.grid, is.shape), [&] {
      IndexSet c = is.cells;
      std::sort(c.begin(), c.end());
      return c;
    }());
    inc.push_back(Inclusion{std::move(cells), is.value});
  }
  return make_conductivity<double>(p, spec.background, inc, cfg.lambda);
}

}  // namespace fracmono::cli
