#pragma once

#include "podrom/manufactured.hpp"
#include "podrom/metrics.hpp"
#include "podrom/rom.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace podrom
{

/// Either the channel with a rectangular obstacle or a manufactured flow on
/// the unit square.
struct GeometryConfig
{
  std::string kind = "channel"; ///< "channel" or "manufactured"
  std::string solution = "taylor_green";
  double      width = 2.2;
  double      height = 0.41;
  int         nx = 44;
  int         ny = 9;
  std::optional<std::array<int, 4>> hole_cells = std::array<int, 4>{3, 4, 5, 6}; ///< i0, j0, i1, j1
  int         refinements = 0;
  double      inflow_max = 1.5; ///< peak of the parabolic inflow
  double      ramp_time = 0.5;  ///< inflow ramps up linearly over this time

  bool      is_channel() const { return kind == "channel"; }
  Rectangle hole() const;
};

struct PODConfig
{
  std::optional<int>    r;
  std::optional<double> energy_threshold;
  bool                  center = true;
  int                   pressure_r = 0; ///< 0 means as many as velocity modes
};

struct ROMBlock
{
  Scheme              scheme = Scheme::graddiv;
  TimeIntegrator      time_integrator = TimeIntegrator::bdf2_semi_implicit;
  int                 r = 0;  ///< 0 means the POD working truncation
  int                 rp = 0; ///< pressure modes, 0 means r
  double              mu = 0.0;
  AdaptiveMuConfig    adaptive;
  double              t_start = 0.0;
  double              t_end = 0.0;
  bool                pressure_recovery = true; ///< grad-div: supremizer recovery
  std::vector<double> mu_bar_candidates;        ///< nonempty: pick the constant mu by grid search
  std::vector<int>    r_values;                 ///< r sweep for errors.csv; empty means just r
  std::optional<double> alpha;                  ///< pressure-indicator constant; default: principal-angle cosine
};

struct ReportConfig
{
  std::string              out_dir = "out";
  std::vector<std::string> csv{"qoi", "errors", "mu", "rom", "spectrum"};
  bool                     plots = true;

  bool wants(const std::string &name) const;
};

struct ExperimentConfig
{
  std::string    name = "experiment";
  std::uint64_t  seed = 1;
  GeometryConfig geometry;
  FOMConfig      fom;
  PODConfig      pod;
  ROMBlock       rom;
  ReportConfig   report;
  bool           allow_scheme_mismatch = false;

  /// Cross-field checks; throws ValidationError naming the offending keys.
  void validate() const;

  /// ROM step size: snapshot spacing.
  double rom_dt() const { return fom.dt * fom.window.stride; }
  ROMConfig rom_config() const;
  DragLiftConfig drag_config() const;
};

/// Parses JSON text, applies "dotted.key=value" overrides, validates.
/// Unknown keys are rejected.
ExperimentConfig parse_config(const std::string &json_text, const std::vector<std::string> &overrides = {});
ExperimentConfig load_config(const std::filesystem::path &path, const std::vector<std::string> &overrides = {});

/// Canonical JSON of a configuration (sorted keys, full precision).
std::string to_json_text(const ExperimentConfig &cfg);

Mesh        build_mesh(const GeometryConfig &g);
/// Boundary data and forcing of the configured flow.
FlowProblem build_problem(const ExperimentConfig &cfg);
std::optional<ManufacturedSolution> manufactured_of(const ExperimentConfig &cfg);

} // namespace podrom
