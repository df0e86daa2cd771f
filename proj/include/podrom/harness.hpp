#pragma once

#include "podrom/config.hpp"
#include "podrom/errors.hpp"
#include "podrom/supremizer.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace podrom
{

/// Runs `f`, prefixing any error message with "[stage] " while keeping the
/// ValidationError / SolverError distinction.
template <typename F> auto run_stage(const std::string &stage, F &&f) -> decltype(f());

/// Mesh, model and derived data shared by all stages of one configuration.
struct Discretization
{
  std::shared_ptr<const Mesh>         mesh;
  std::unique_ptr<FullOrderModel>     model;
  std::optional<ManufacturedSolution> exact;
  std::optional<DragLiftFields>       drag_fields;
};

Discretization make_discretization(const ExperimentConfig &cfg);

struct FOMSample
{
  double t = 0.0;
  double E_kin = 0.0;
  double c_D = 0.0;
  double c_L = 0.0;
  double weak_divergence = 0.0;
};

struct FOMStageResult
{
  RecordedRun            run;
  std::vector<FOMSample> samples; ///< one per stored snapshot
};

/// Runs the FOM and writes config.json, mesh.txt, velocity_snapshots.bin,
/// pressure_snapshots.bin and fom.csv.
FOMStageResult run_fom_stage(const ExperimentConfig &cfg, const std::filesystem::path &out, Discretization &disc);

struct PODStageResult
{
  PODBasis            velocity;
  PODBasis            pressure;
  IdentityReport      identities;
  SpectralDiagnostics diagnostics;
};

/// Reads the snapshots and writes velocity_basis.bin, pressure_basis.bin,
/// spectrum.csv and identities.csv.
PODStageResult run_pod_stage(const ExperimentConfig &cfg, const std::filesystem::path &out, const Discretization &disc);

struct ErrorSample
{
  double t = 0.0;
  double velocity = 0.0;           ///< ||u_r - u_h||_0
  double velocity_projected = 0.0; ///< ||u_r - P_r u_h||_0
  double pressure = 0.0;
  double pressure_projected = 0.0;
};

/// One reduced model at a given r, run and compared with the snapshots.
struct ROMEvaluation
{
  int    r = 0;
  int    rp = 0;
  double mu = 0.0;
  /// Discrete l2(L2) errors sqrt(sum_j dt ||.||_0^2) over the shared time levels.
  double velocity_error = 0.0;
  double velocity_error_relative = 0.0;  ///< divided by the same norm of the FOM trajectory
  double velocity_error_projected = 0.0; ///< vs P_r u_h, relative to the projected trajectory
  double pressure_error = 0.0;           ///< NaN without a reduced pressure
  double pressure_error_relative = 0.0;
  double pressure_error_projected = 0.0;
  ErrorIndicator indicator;
  double         alpha = 0.0;
  double         beta_r = 0.0; ///< reduced inf-sup constant of the recovery (grad-div)
  double         max_weak_divergence_rom = 0.0;
  ROMRunResult   run;
  std::vector<ErrorSample> errors;
};

struct PipelineSummary
{
  int    r = 0;
  int    rp = 0;
  double mu = 0.0;
  double velocity_error = 0.0;           ///< relative l2(L2) vs FOM
  double velocity_error_projected = 0.0; ///< relative l2(L2) vs the projected FOM
  double pressure_error = 0.0;
  double pressure_error_projected = 0.0;
  double velocity_indicator = 0.0;
  double pressure_indicator = 0.0;
  double alpha = 0.0;
  double max_weak_divergence_fom = 0.0;
  double max_weak_divergence_rom = 0.0;
  double max_abs_energy_difference = 0.0;
  int    adaptation_events = 0;
  bool   blew_up = false;
  double beta_r = 0.0;
};

struct ROMStageResult
{
  ROMEvaluation              main;  ///< at the configured r
  std::vector<ROMEvaluation> sweep; ///< errors.csv rows, trajectories dropped
  PipelineSummary            summary;
  std::optional<MuSelection> mu_selection;
};

/// Reads snapshots and bases, runs the ROM at r and over rom.r_values, and
/// writes rom.csv, mu.csv, qoi.csv, errors.csv, errors_time.csv,
/// rom_operators.bin and summary.csv.
ROMStageResult run_rom_stage(const ExperimentConfig &cfg, const std::filesystem::path &out, const Discretization &disc);

/// Writes plot scripts for the CSVs in `out` and returns a text summary.
std::string run_report_stage(const std::filesystem::path &out);

struct PipelineResult
{
  FOMStageResult fom;
  PODStageResult pod;
  ROMStageResult rom;
};

/// FOM -> POD -> ROM -> report into `out` (default: cfg.report.out_dir).
PipelineResult run_pipeline(const ExperimentConfig &cfg, std::optional<std::filesystem::path> out = std::nullopt);

/// Snapshot energies 1/2 ||u_h||^2 in storage order.
std::vector<double> snapshot_energies(const SnapshotSet &velocity, const SparseMatrix &mass);

struct ConvergenceStudyConfig
{
  Scheme scheme = Scheme::graddiv;
  double nu = 1e-2;
  int    base_cells = 4; ///< cells per side on the coarsest level
  int    levels = 3;
  double dt_factor = 0.5; ///< dt = dt_factor h^2 with h = 1/cells
  double t_final = 0.1;
  double mu = 0.1;
  bool   interpolation_only = false; ///< measure the nodal interpolant at t_final
};

struct ConvergenceRow
{
  int    cells = 0;
  double h = 0.0;
  double dt = 0.0;
  int    steps = 0;
  double error = 0.0;
  double order = 0.0; ///< log2(e_{k-1} / e_k), 0 on the first level
};

struct ConvergenceResult
{
  std::vector<ConvergenceRow> rows;
  bool                        monotone = true;
  double                      min_order = 0.0; ///< smallest successive order
};

/// Taylor-Green velocity L2 error at t_final on successively halved meshes;
/// levels run concurrently.
ConvergenceResult convergence_study(const ConvergenceStudyConfig &cfg);
void              write_convergence_csv(const ConvergenceResult &r, const std::filesystem::path &path);

struct LongHorizonVariant
{
  bool   adaptive = false;
  double max_abs_energy_difference = 0.0;
  int    adaptation_events = 0;
  bool   blew_up = false;
  double blowup_time = 0.0;
  double final_mu = 0.0;
  std::vector<ROMRecord> records;
};

struct LongHorizonResult
{
  double             t_start = 0.0;
  double             t_end = 0.0;
  double             mu_bar = 0.0;
  LongHorizonVariant constant;
  LongHorizonVariant adaptive;
};

/// Runs the constant-mu and adaptive-mu ROMs over `multiple` snapshot
/// window lengths. Expects the pipeline's FOM and POD outputs in `out`.
LongHorizonResult long_horizon_study(const ExperimentConfig &cfg, double multiple, const std::filesystem::path &out,
                                     const Discretization &disc);
void              write_long_horizon_csv(const LongHorizonResult &r, const std::filesystem::path &dir);

// ---------------------------------------------------------------------------

template <typename F> auto run_stage(const std::string &stage, F &&f) -> decltype(f())
{
  try
    {
      return f();
    }
  catch (const ValidationError &e)
    {
      throw ValidationError("[" + stage + "] " + e.what());
    }
  catch (const std::exception &e)
    {
      throw SolverError("[" + stage + "] " + e.what());
    }
}

} // namespace podrom
