/// @file config.hpp
/// @brief Experiment configuration: JSON document, dotted overrides, hash,
/// and builders for the solver objects it describes.
#pragma once

#include "anomalykit/cgo.hpp"
#include "anomalykit/inversion.hpp"
#include "anomalykit/linearization.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace anomalykit {

using Json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

/// The shipped default experiment (identical to configs/default.json).
Json default_config();
Json load_config(const std::filesystem::path& path);

/// Applies "a.b.c=value". The value is parsed as JSON when possible and
/// kept as a string otherwise. Intermediate objects are created.
void apply_override(Json& cfg, const std::string& assignment);

/// FNV-1a 64-bit hash of the canonical (key-sorted, compact) dump, as 16 hex digits.
std::string config_hash(const Json& cfg);

/// Value at a dotted path; throws ConfigError naming the path if missing.
const Json& require(const Json& cfg, const std::string& path);

Grid make_grid(const Json& cfg);
ModelParams make_params(const Json& cfg);
Inclusion make_inclusion(const Json& spec);
PiecewiseReaction make_reaction(const Json& cfg, const Inclusion& inc);
BoundaryKind make_boundary(const Json& cfg);
bool is_stationary(const Json& cfg);
/// Data family with fields sampled from the configured expressions.
DataFamily make_data(const Json& cfg, const Grid& g);
NewtonOptions make_newton(const Json& cfg);
CascadeSetup make_cascade_setup(const Json& cfg);

struct NamedCorner {
  std::string name;
  TruncatedCorner corner;
};
std::vector<NamedCorner> make_corners(const Json& cfg);
std::vector<double> make_tau_ladder(const Json& cfg);

}  // namespace anomalykit
