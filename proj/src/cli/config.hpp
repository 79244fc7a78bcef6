#ifndef FRACMONO_CLI_CONFIG_HPP
#define FRACMONO_CLI_CONFIG_HPP

#include "fracmono/domain.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace fracmono::cli {

struct InclusionSpec {
  Shape shape;
  IndexSet cells;  // explicit cells, merged with the rasterized shape
  double value = 1.0;
};

struct SigmaSpec {
  double background = 1.0;
  std::vector<InclusionSpec> inclusions;
};

struct MeshSpec {
  Index intervals = 256;
  std::optional<double> height;  // default 4R
  std::optional<double> grading;  // default 3/(2s)
};

struct RunConfig {
  std::string scenario = "unnamed";
  int dims = 1;
  Index cells = 32;
  double half_width = 2.0;
  Geometry geometry;
  std::vector<double> orders{0.5};
  double lambda = 0.4;
  SigmaSpec sigma;
  std::optional<SigmaSpec> sigma2;
  std::optional<SigmaSpec> sigma0;
  MeshSpec mesh;
  nlohmann::json options = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::string raw;  // canonical serialization, hashed for provenance

  GridSpec grid() const { return GridSpec(dims, cells, half_width); }

  template <typename T>
  T option(const std::string& key, T fallback) const {
    if (!options.contains(key)) return fallback;
    try {
      return options.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ValidationError("config: field 'options." + key + "' has the wrong type");
    }
  }
};

/// Parses and validates; every problem is reported with its field path.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

DomainPartition build_partition(const RunConfig& cfg);
Conductivity<double> build_sigma(const RunConfig& cfg, const DomainPartition& p, const SigmaSpec& spec);

}  // namespace fracmono::cli

#endif  // FRACMONO_CLI_CONFIG_HPP
