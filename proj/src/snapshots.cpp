#include "podrom/snapshots.hpp"

#include "podrom/errors.hpp"
#include "podrom/io.hpp"

namespace podrom
{

Eigen::VectorXd SnapshotSet::field(int j) const
{
  if (j < 0 || j >= size())
    throw ValidationError("SnapshotSet::field: index " + std::to_string(j) + " out of range");
  return centered ? Eigen::VectorXd(data.col(j) + mean) : Eigen::VectorXd(data.col(j));
}

SnapshotSet center(const SnapshotSet &s)
{
  if (s.centered)
    return s;
  if (s.size() == 0)
    throw ValidationError("center: empty snapshot set");
  SnapshotSet c = s;
  c.mean = s.data.rowwise().mean();
  c.data.colwise() -= c.mean;
  c.centered = true;
  return c;
}

void write_snapshots(const SnapshotSet &s, std::ostream &out)
{
  BinaryWriter w(out);
  w.magic("PRSNAP01");
  w.i64(static_cast<std::int64_t>(s.scheme));
  w.u64(s.space->signature());
  w.i64(s.size());
  w.i64(s.n_dofs());
  w.f64(s.t_start);
  w.f64(s.dt);
  w.i64(s.stride);
  w.i64(s.centered ? 1 : 0);
  if (s.centered)
    w.vector(s.mean);
  for (double t : s.times)
    w.f64(t);
  for (int j = 0; j < s.size(); ++j)
    w.vector(s.data.col(j));
}

SnapshotSet read_snapshots(std::shared_ptr<const FESpace> space, std::istream &in)
{
  BinaryReader r(in);
  r.magic("PRSNAP01");
  SnapshotSet s;
  const auto  scheme = r.i64();
  if (scheme != 0 && scheme != 1)
    throw ValidationError("read_snapshots: bad scheme id");
  s.scheme = static_cast<Scheme>(scheme);
  if (r.u64() != space->signature())
    throw ValidationError("read_snapshots: space signature mismatch");
  const auto m = r.i64();
  const auto n = r.i64();
  if (m < 0 || n != space->n_dofs())
    throw ValidationError("read_snapshots: DOF count does not match the space");
  s.space = std::move(space);
  s.t_start = r.f64();
  s.dt = r.f64();
  s.stride = static_cast<int>(r.i64());
  s.centered = r.i64() != 0;
  if (s.centered)
    s.mean = r.vector();
  s.times.resize(m);
  for (auto &t : s.times)
    t = r.f64();
  s.data.resize(n, m);
  for (int j = 0; j < m; ++j)
    {
      const Eigen::VectorXd col = r.vector();
      if (col.size() != n)
        throw ValidationError("read_snapshots: snapshot length mismatch");
      s.data.col(j) = col;
    }
  return s;
}

RecordedRun record_snapshots(FullOrderModel &model, bool center_velocity, const FOMObserver &observer)
{
  const auto  &cfg = model.config();
  const double dt = cfg.dt;
  const int    m = cfg.window.count(dt);
  if (m == 0)
    throw ValidationError("record_snapshots: empty snapshot window");

  RecordedRun run;
  for (SnapshotSet *s : {&run.velocity, &run.pressure})
    {
      s->scheme = cfg.scheme;
      s->t_start = cfg.window.first_step(dt) * dt;
      s->dt = dt;
      s->stride = cfg.window.stride;
    }
  run.velocity.space = model.spaces().velocity;
  run.pressure.space = model.spaces().pressure;
  run.velocity.data.resize(model.velocity_space().n_dofs(), m);
  run.pressure.data.resize(model.pressure_space().n_dofs(), m);

  int  recorded = 0;
  auto store = [&](const FOMState &s) {
    if (!cfg.window.records(s.step, dt))
      return;
    run.velocity.data.col(recorded) = s.u;
    run.pressure.data.col(recorded) = s.p;
    run.velocity.times.push_back(s.t);
    run.pressure.times.push_back(s.t);
    ++recorded;
  };

  FOMState  state = model.initial_state();
  const int n_steps = cfg.n_steps();
  store(state);
  if (observer)
    observer(state);
  for (int n = 0; n < n_steps; ++n)
    {
      model.step(state);
      store(state);
      if (observer)
        observer(state);
    }
  if (recorded != m)
    throw SolverError("record_snapshots: recorded " + std::to_string(recorded) + " of " + std::to_string(m) + " snapshots");
  if (center_velocity)
    run.velocity = center(run.velocity);
  run.final_state = std::move(state);
  return run;
}

} // namespace podrom
