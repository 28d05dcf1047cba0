#pragma once

#include "mmflow/diagnostics.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace mmflow {

struct CompareSpec {
  int phase = 1;
  Mask seed;
};

struct DiagnosticsSpec {
  std::vector<double> radii;        // density radii; empty selects 2h, 4h, 8h
  double p = 0;                     // L^p exponent of H, 0 selects 2 * dim
  double gmm_threshold = 0.01;      // consecutive-lambda Cauchy distance
  double holder_min = 0.45;
  double inclusion_max = 0.005;     // violating cells per band cell
  double monotone_tol = 1e-9;
  std::vector<double> ells;         // volume-distance scales; empty selects h and lambda^(-1/2)
};

/// A parsed, validated run configuration (JSON; see FORMATS.md).
struct RunConfig {
  std::string name = "run";
  std::uint64_t hash = 0;  // FNV-1a of the config text
  Grid grid;
  FlowModel model;
  LabelField initial;
  std::vector<double> lambdas{1};
  double horizon = 0;
  std::vector<double> checkpoints;
  bool every_step = false;
  SolverSettings solver;
  bool oracle = false;
  int oracle_max_cells = 20;
  std::optional<CompareSpec> compare;
  DiagnosticsSpec diagnostics;
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 0;
  int threads = 1;

  FlowParams flow_params(double lambda) const;
  /// Radius R of the forcing support (0 when unforced).
  double forcing_radius() const { return model.forcing.support_radius; }
};

/// Thrown for any configuration that violates a module precondition.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Parses JSON text; relative file references resolve against `base_dir`.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".");
RunConfig load_config(const std::filesystem::path& path);

/// Cell-centre rasterization of a named shape into a mask.
Mask rasterize_disk(const Grid& g, const Vec& center, double radius);
Mask rasterize_box(const Grid& g, const Vec& center, const Vec& half);
Mask rasterize_polygon(const Grid& g, const std::vector<Eigen::Vector2d>& polygon);
/// Sector k (0, 1, 2) of a disk cut into three 120-degree sectors, the first
/// centred on the direction `angle`.
Mask rasterize_sector(const Grid& g, const Vec& center, double radius, int k, double angle = 0);

}  // namespace mmflow
