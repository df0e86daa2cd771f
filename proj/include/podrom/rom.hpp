#pragma once

#include "podrom/metrics.hpp"
#include "podrom/pod.hpp"

#include <functional>
#include <iosfwd>
#include <optional>

namespace podrom
{

/// Galerkin projection of the momentum operators onto the columns y_i of a
/// test basis Y, for trial fields u = lift + Phi a. Matrices are ny x r.
struct MomentumProjection
{
  Eigen::MatrixXd test;
  Eigen::MatrixXd mass;
  Eigen::MatrixXd stiffness;
  Eigen::MatrixXd grad_div;
  Eigen::MatrixXd lps;
  Eigen::VectorXd stiffness_lift;
  Eigen::VectorXd grad_div_lift;
  Eigen::VectorXd lps_lift;
  std::vector<Eigen::MatrixXd> convection; ///< [k](i, j) = b_h(phi_k, phi_j, y_i)
  Eigen::MatrixXd              conv_lift_trial; ///< (i, j) = b_h(lift, phi_j, y_i)
  Eigen::MatrixXd              conv_trial_lift; ///< (i, k) = b_h(phi_k, lift, y_i)
  Eigen::VectorXd              conv_lift;       ///< b_h(lift, lift, y_i)

  int n_test() const { return static_cast<int>(mass.rows()); }
  int n_trial() const { return static_cast<int>(mass.cols()); }

  /// b_h(lift + Phi w, lift + Phi a, y_i).
  Eigen::VectorXd convection_term(const Eigen::VectorXd &w, const Eigen::VectorXd &a) const;
  /// Matrix of a -> b_h(lift + Phi w, Phi a, y_i).
  Eigen::MatrixXd convection_matrix(const Eigen::VectorXd &w) const;
};

/// Projects onto several test bases sharing one set of convection assemblies.
std::vector<MomentumProjection> project_momentum(const FESpace                      &velocity,
                                                 const FlowOperators                &ops,
                                                 const Eigen::MatrixXd              &Phi,
                                                 const Eigen::VectorXd              &lift,
                                                 const std::vector<Eigen::MatrixXd> &tests,
                                                 bool                                with_lps);

using LoadFunction = std::function<Eigen::VectorXd(double)>;

struct ROMOperators
{
  Scheme             scheme = Scheme::graddiv;
  int                r = 0;
  int                rp = 0; ///< pressure modes (LPS only)
  Eigen::MatrixXd    Phi;
  Eigen::MatrixXd    Psi;
  MomentumProjection momentum; ///< tested with Phi itself
  Eigen::MatrixXd    D;        ///< rp x r, (psi_k, div phi_j)
  Eigen::VectorXd    d0;       ///< (psi_k, div lift)
  Eigen::MatrixXd    Sp;       ///< rp x rp
  Eigen::VectorXd    lift;
  double             lift_sq = 0.0;
  Eigen::VectorXd    lift_overlap; ///< (lift, phi_j)
  LoadFunction       load;         ///< full-order load vector, empty means zero

  std::optional<MomentumProjection> qoi;          ///< tested with v_D, v_L
  Eigen::MatrixXd                   qoi_pressure; ///< 2 x rp, (psi_k, div v)
  DragLiftConfig                    drag;

  /// T[i][j][k] = b_h(phi_i, phi_j, phi_k).
  double tensor(int i, int j, int k) const { return momentum.convection[i](k, j); }

  /// 1/2 ||lift + Phi a||^2.
  double kinetic_energy(const Eigen::VectorXd &a) const;
  /// lift + Phi a.
  Eigen::VectorXd velocity(const Eigen::VectorXd &a) const;
};

struct ROMBuildInput
{
  const FlowSpaces      *spaces = nullptr;
  const FlowOperators   *ops = nullptr;
  Scheme                 scheme = Scheme::graddiv;
  const PODBasis        *velocity = nullptr;
  int                    r = 0;
  const PODBasis        *pressure = nullptr; ///< LPS only
  int                    rp = 0;
  LoadFunction           load;
  const DragLiftFields  *drag_fields = nullptr;
  DragLiftConfig         drag;
};

/// Every reduced matrix is mode^T (operator) mode; the lift is the velocity
/// basis mean when the basis is centered, zero otherwise.
ROMOperators build_rom_operators(const ROMBuildInput &in);

struct AdaptiveMuConfig
{
  bool   enabled = false;
  double mu_init = 2.4;
  double mu_min = 0.1;
  int    F = 5;
  double delta = 0.1;
  double tol = 1e-3;

  void validate() const;
};

struct MuUpdate
{
  double mu = 0.0;
  bool   restep = false;
};

/// Controller step at ROM step n: acts only when n % F == 0 and |E_diff| > tol;
/// requests a re-step only when mu actually changed.
MuUpdate adapt_mu(double mu, double e_diff, const AdaptiveMuConfig &cfg, int n);

/// E_diff = E_kin(u_r^n) - table(s), s = n mod M with s = 0 mapped to M;
/// table(s) (1-based) is the snapshot energy s steps after the ROM start.
double energy_difference(double e_kin, const std::vector<double> &table, int n);

/// Builds that table from the energies of the M snapshots of one period
/// stored from the ROM start on: entry s is snapshot s mod M.
std::vector<double> periodic_energy_table(const std::vector<double> &snapshot_energies);

struct ROMConfig
{
  Scheme           scheme = Scheme::graddiv;
  TimeIntegrator   time_integrator = TimeIntegrator::bdf2_semi_implicit;
  NonlinearConfig  nonlinear;
  double           nu = 1e-3;
  double           dt = 2e-3;
  double           mu = 0.0; ///< constant grad-div parameter when adaptation is off
  AdaptiveMuConfig adaptive;
  double           t_start = 0.0;
  double           t_end = 0.0;
  double           blowup_factor = 1e3;

  void validate() const;
  int  n_steps() const;
};

struct ROMState
{
  Eigen::VectorXd a;
  Eigen::VectorXd a_prev;
  Eigen::VectorXd a_prev2;
  Eigen::VectorXd b;
  double          mu = 0.0;
  double          t = 0.0;
  int             step = 0;
};

ROMState initial_rom_state(const ROMOperators &ops, const Eigen::VectorXd &a0, double t0, double mu);

/// Coupled velocity-pressure reduced step.
void step_lps_rom(ROMState &state, const ROMOperators &ops, const ROMConfig &cfg);
/// Velocity-only reduced step.
void step_graddiv_rom(ROMState &state, const ROMOperators &ops, const ROMConfig &cfg);
void step_rom(ROMState &state, const ROMOperators &ops, const ROMConfig &cfg);

struct SupremizerSpace;

/// Solves the pressure recovery system for the last grad-div step.
struct PressureRecovery
{
  MomentumProjection momentum; ///< tested with the supremizers
  Eigen::MatrixXd    coupling; ///< (k, j) = (psi_j, div zeta_k)
  Eigen::MatrixXd    Psi;

  Eigen::VectorXd recover(const ROMState &state, const ROMConfig &cfg, const LoadFunction &load) const;
};

PressureRecovery build_pressure_recovery(const SupremizerSpace &sup,
                                         const PODBasis        &pressure,
                                         int                    rp,
                                         const ROMOperators    &ops,
                                         const FlowSpaces      &spaces,
                                         const FlowOperators   &fom_ops);

struct ROMRecord
{
  double t = 0.0;
  double mu = 0.0;
  double E_kin = 0.0;
  double E_diff = 0.0;
  double c_D = 0.0;
  double c_L = 0.0;
  double a_norm = 0.0;
};

struct ROMRunOptions
{
  const std::vector<double> *energy_table = nullptr;
  const PressureRecovery    *recovery = nullptr;
  bool                       keep_trajectory = true;
};

struct ROMRunResult
{
  std::vector<ROMRecord>       records; ///< one per time level, including the initial one
  std::vector<Eigen::VectorXd> a;
  std::vector<Eigen::VectorXd> b;
  std::vector<int>             adaptation_steps; ///< steps at which mu changed
  bool                         blew_up = false;
  double                       blowup_time = 0.0;

  double max_abs_energy_difference() const;
};

ROMRunResult run_rom(const ROMOperators &ops, const ROMConfig &cfg, const Eigen::VectorXd &a0, const ROMRunOptions &opt = {});

struct MuSelection
{
  double              mu_bar = 0.0;
  std::vector<double> candidates;
  std::vector<double> scores; ///< max |E_diff| over one period
};

/// Grid search for the constant mu minimizing the L^inf-in-time energy
/// mismatch over one snapshot period.
MuSelection select_mu_bar(const ROMOperators        &ops,
                          ROMConfig                  cfg,
                          const Eigen::VectorXd     &a0,
                          const std::vector<double> &energy_table,
                          const std::vector<double> &candidates);

/// Binary dump of the reduced operators (without the load closure and the
/// drag/lift projections), keyed by the velocity basis signature.
void         write_rom_operators(const ROMOperators &ops, std::uint64_t basis_signature, std::ostream &out);
ROMOperators read_rom_operators(std::istream &in, std::uint64_t basis_signature);

} // namespace podrom
