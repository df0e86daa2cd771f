#pragma once

#include "podrom/fom.hpp"

#include <functional>
#include <iosfwd>

namespace podrom
{

/// M time-indexed fields over one space. When `centered` is set, `data`
/// holds the fluctuations and `mean` the subtracted temporal mean.
struct SnapshotSet
{
  Scheme                         scheme = Scheme::graddiv;
  std::shared_ptr<const FESpace> space;
  std::vector<double>            times;
  Eigen::MatrixXd                data; ///< n_dofs x M
  double                         t_start = 0.0;
  double                         dt = 0.0;
  int                            stride = 1;
  bool                           centered = false;
  Eigen::VectorXd                mean;

  int size() const { return static_cast<int>(data.cols()); }
  int n_dofs() const { return static_cast<int>(data.rows()); }

  /// Snapshot j as a full field (mean added back when centered).
  Eigen::VectorXd field(int j) const;
};

/// Copy of `s` with the temporal mean removed and recorded.
SnapshotSet center(const SnapshotSet &s);

void        write_snapshots(const SnapshotSet &s, std::ostream &out);
SnapshotSet read_snapshots(std::shared_ptr<const FESpace> space, std::istream &in);

struct RecordedRun
{
  SnapshotSet velocity;
  SnapshotSet pressure;
  FOMState    final_state;
};

/// Called after every step (and once for the initial state, with step 0).
using FOMObserver = std::function<void(const FOMState &)>;

/// Runs the model to t_final and stores the states whose step index falls
/// in the configured window. Velocity snapshots are centered on request;
/// pressure snapshots never are.
RecordedRun record_snapshots(FullOrderModel &model, bool center_velocity = false, const FOMObserver &observer = {});

} // namespace podrom
