#include "podrom/config.hpp"

#include "podrom/errors.hpp"
#include "podrom/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <set>
#include <sstream>

namespace podrom
{

using nlohmann::json;

namespace
{

// Reads the keys of one object, rejecting anything not consumed.
class Reader
{
public:
  Reader(const json &j, std::string path)
    : j_(j), path_(std::move(path))
  {
    if (!j_.is_object())
      throw ValidationError("config: '" + where() + "' must be an object");
  }
  ~Reader() noexcept(false)
  {
    if (std::uncaught_exceptions() > 0)
      return;
    for (const auto &[key, value] : j_.items())
      if (!used_.count(key))
        throw ValidationError("config: unknown key '" + qualified(key) + "'");
  }

  template <typename T> void get(const std::string &key, T &out)
  {
    used_.insert(key);
    if (!j_.contains(key))
      return;
    try
      {
        out = j_.at(key).get<T>();
      }
    catch (const json::exception &)
      {
        throw ValidationError("config: '" + qualified(key) + "' has the wrong type");
      }
  }

  template <typename T> void get(const std::string &key, std::optional<T> &out)
  {
    used_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null())
      return;
    T v{};
    get(key, v);
    out = v;
  }

  bool has(const std::string &key) const { return j_.contains(key); }

  Reader child(const std::string &key)
  {
    used_.insert(key);
    static const json empty = json::object();
    return Reader(j_.contains(key) ? j_.at(key) : empty, qualified(key));
  }

  std::string qualified(const std::string &key) const { return path_.empty() ? key : path_ + "." + key; }

private:
  std::string where() const { return path_.empty() ? "<root>" : path_; }

  const json           &j_;
  std::string           path_;
  std::set<std::string> used_;
};

json parse_value(const std::string &text)
{
  try
    {
      return json::parse(text);
    }
  catch (const json::exception &)
    {
      return json(text);
    }
}

void apply_override(json &root, const std::string &spec)
{
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ValidationError("override '" + spec + "' is not of the form key=value");
  const std::string key = spec.substr(0, eq);
  json             *node = &root;
  std::size_t       start = 0;
  while (true)
    {
      const auto        dot = key.find('.', start);
      const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (part.empty())
        throw ValidationError("override '" + spec + "' has an empty key component");
      if (!node->is_object())
        throw ValidationError("override '" + spec + "': '" + part + "' is not inside an object");
      if (dot == std::string::npos)
        {
          (*node)[part] = parse_value(spec.substr(eq + 1));
          return;
        }
      node = &(*node)[part];
      if (node->is_null())
        *node = json::object();
      start = dot + 1;
    }
}

VectorFunction zero_vector()
{
  return [](const Point &) { return Vec2{0.0, 0.0}; };
}

} // namespace

Rectangle GeometryConfig::hole() const
{
  if (!hole_cells)
    return {};
  const double dx = width / nx, dy = height / ny;
  const auto  &c = *hole_cells;
  return {c[0] * dx, c[1] * dy, c[2] * dx, c[3] * dy};
}

bool ReportConfig::wants(const std::string &n) const
{
  return std::find(csv.begin(), csv.end(), n) != csv.end();
}

void ExperimentConfig::validate() const
{
  const auto &g = geometry;
  if (g.kind != "channel" && g.kind != "manufactured")
    throw ValidationError("config: geometry.kind must be 'channel' or 'manufactured'");
  if (g.nx < 1 || g.ny < 1 || g.refinements < 0)
    throw ValidationError("config: geometry.nx, geometry.ny must be >= 1 and geometry.refinements >= 0");
  if (g.is_channel())
    {
      if (!(g.width > 0.0 && g.height > 0.0))
        throw ValidationError("config: geometry.width and geometry.height must be positive");
      if (!(g.inflow_max > 0.0) || g.ramp_time < 0.0)
        throw ValidationError("config: geometry.inflow_max must be positive and geometry.ramp_time >= 0");
      if (g.hole_cells)
        {
          const auto &c = *g.hole_cells;
          if (!(0 < c[0] && c[0] < c[2] && c[2] < g.nx && 0 < c[1] && c[1] < c[3] && c[3] < g.ny))
            throw ValidationError("config: geometry.hole must be a strictly interior cell range");
        }
    }
  else if (g.solution != "taylor_green" && g.solution != "stokes_poly")
    throw ValidationError("config: geometry.solution must be 'taylor_green' or 'stokes_poly'");

  fom.validate();
  if (fom.window.count(fom.dt) < 2)
    throw ValidationError("config: fom.window must contain at least two snapshots");

  if (pod.r && *pod.r < 1)
    throw ValidationError("config: pod.r must be >= 1");
  if (pod.energy_threshold && !(*pod.energy_threshold > 0.0 && *pod.energy_threshold <= 1.0))
    throw ValidationError("config: pod.energy_threshold must lie in (0, 1]");
  if (pod.pressure_r < 0)
    throw ValidationError("config: pod.pressure_r must be >= 0");

  if (rom.r < 0 || rom.rp < 0)
    throw ValidationError("config: rom.r and rom.rp must be >= 0");
  if (rom.scheme != fom.scheme)
    {
      if (!allow_scheme_mismatch)
        throw ValidationError("config: rom.scheme (" + to_string(rom.scheme) + ") must match fom.scheme (" + to_string(fom.scheme) +
                              "); set allow_scheme_mismatch to override");
      if (rom.scheme == Scheme::lps)
        throw ValidationError("config: an LPS ROM needs equal-order pressure snapshots from an LPS FOM");
    }
  // The ROM starts from the first snapshot and must cover the whole window.
  const double tol = 1e-9 * fom.dt;
  if (std::abs(rom.t_start - fom.window.t_start) > tol)
    throw ValidationError("config: rom.t_start must equal fom.window.t_start");
  if (rom.t_end < fom.window.t_end - tol)
    throw ValidationError("config: rom window [rom.t_start, rom.t_end] must contain the snapshot window end fom.window.t_end");
  if (rom.scheme == Scheme::graddiv && !rom.adaptive.enabled && !(rom.mu >= 0.0))
    throw ValidationError("config: rom.mu must be >= 0");
  if (rom.adaptive.enabled && rom.adaptive.F < 1)
    throw ValidationError("config: rom.adaptive.F must be >= 1");
  rom_config().validate();
  for (int r : rom.r_values)
    if (r < 1)
      throw ValidationError("config: rom.r_values entries must be >= 1");
  if (rom.alpha && !(*rom.alpha >= 0.0 && *rom.alpha <= 1.0))
    throw ValidationError("config: rom.alpha must lie in [0, 1]");
  for (double m : rom.mu_bar_candidates)
    if (!(m >= 0.0))
      throw ValidationError("config: rom.mu_bar_candidates must be nonnegative");
  if (report.out_dir.empty())
    throw ValidationError("config: report.out_dir must not be empty");
  static const std::set<std::string> known{"qoi", "errors", "mu", "rom", "spectrum"};
  for (const auto &c : report.csv)
    if (!known.count(c))
      throw ValidationError("config: report.csv entry '" + c + "' is unknown");
}

ROMConfig ExperimentConfig::rom_config() const
{
  ROMConfig r;
  r.scheme = rom.scheme;
  r.time_integrator = rom.time_integrator;
  r.nonlinear = fom.nonlinear;
  r.nu = fom.nu;
  r.dt = rom_dt();
  r.mu = rom.mu;
  r.adaptive = rom.adaptive;
  r.t_start = rom.t_start;
  r.t_end = rom.t_end;
  return r;
}

DragLiftConfig ExperimentConfig::drag_config() const
{
  const Rectangle h = geometry.hole();
  return {h.y1 - h.y0, 2.0 / 3.0 * geometry.inflow_max, fom.nu};
}

ExperimentConfig parse_config(const std::string &text, const std::vector<std::string> &overrides)
{
  json root;
  try
    {
      root = json::parse(text);
    }
  catch (const json::exception &e)
    {
      throw ValidationError(std::string("config: malformed JSON: ") + e.what());
    }
  for (const auto &o : overrides)
    apply_override(root, o);

  ExperimentConfig cfg;
  {
    Reader r(root, "");
    r.get("name", cfg.name);
    r.get("seed", cfg.seed);
    r.get("allow_scheme_mismatch", cfg.allow_scheme_mismatch);
    {
      Reader      g = r.child("geometry");
      auto       &G = cfg.geometry;
      g.get("kind", G.kind);
      g.get("solution", G.solution);
      g.get("width", G.width);
      g.get("height", G.height);
      g.get("nx", G.nx);
      g.get("ny", G.ny);
      if (g.has("hole"))
        {
          std::optional<std::array<int, 4>> h;
          g.get("hole", h);
          G.hole_cells = h;
        }
      else
        g.get("hole", G.hole_cells);
      g.get("refinements", G.refinements);
      g.get("inflow_max", G.inflow_max);
      g.get("ramp_time", G.ramp_time);
      if (G.kind == "manufactured")
        G.hole_cells.reset();
    }
    {
      Reader      f = r.child("fom");
      auto       &F = cfg.fom;
      std::string scheme = to_string(F.scheme), integ = to_string(F.time_integrator);
      f.get("scheme", scheme);
      f.get("integrator", integ);
      F.scheme = scheme_from_string(scheme);
      F.time_integrator = integrator_from_string(integ);
      f.get("nu", F.nu);
      f.get("dt", F.dt);
      f.get("t_final", F.t_final);
      f.get("C_v", F.stabilization.C_v);
      f.get("C_p", F.stabilization.C_p);
      f.get("mu", F.stabilization.mu);
      f.get("picard_tolerance", F.nonlinear.tolerance);
      f.get("picard_max_iterations", F.nonlinear.max_iterations);
      Reader w = f.child("window");
      F.window.t_end = F.t_final;
      w.get("t_start", F.window.t_start);
      w.get("t_end", F.window.t_end);
      w.get("stride", F.window.stride);
    }
    {
      Reader p = r.child("pod");
      p.get("r", cfg.pod.r);
      p.get("energy_threshold", cfg.pod.energy_threshold);
      p.get("center", cfg.pod.center);
      p.get("pressure_r", cfg.pod.pressure_r);
    }
    {
      Reader      m = r.child("rom");
      auto       &R = cfg.rom;
      std::string scheme = to_string(cfg.fom.scheme), integ = to_string(cfg.fom.time_integrator);
      m.get("scheme", scheme);
      m.get("integrator", integ);
      R.scheme = scheme_from_string(scheme);
      R.time_integrator = integrator_from_string(integ);
      m.get("r", R.r);
      m.get("rp", R.rp);
      R.mu = cfg.fom.scheme == Scheme::graddiv ? cfg.fom.stabilization.mu : 0.0;
      m.get("mu", R.mu);
      R.t_start = cfg.fom.window.t_start;
      R.t_end = cfg.fom.window.t_end;
      m.get("t_start", R.t_start);
      m.get("t_end", R.t_end);
      m.get("pressure_recovery", R.pressure_recovery);
      m.get("mu_bar_candidates", R.mu_bar_candidates);
      m.get("r_values", R.r_values);
      m.get("alpha", R.alpha);
      Reader a = m.child("adaptive");
      a.get("enabled", R.adaptive.enabled);
      a.get("mu_init", R.adaptive.mu_init);
      a.get("mu_min", R.adaptive.mu_min);
      a.get("F", R.adaptive.F);
      a.get("delta", R.adaptive.delta);
      a.get("tol", R.adaptive.tol);
    }
    {
      Reader o = r.child("report");
      o.get("out_dir", cfg.report.out_dir);
      o.get("csv", cfg.report.csv);
      o.get("plots", cfg.report.plots);
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path &path, const std::vector<std::string> &overrides)
{
  std::ifstream      in = open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides);
}

std::string to_json_text(const ExperimentConfig &c)
{
  json j;
  j["name"] = c.name;
  j["seed"] = c.seed;
  j["allow_scheme_mismatch"] = c.allow_scheme_mismatch;
  const auto &G = c.geometry;
  j["geometry"] = {{"kind", G.kind},           {"solution", G.solution},       {"width", G.width},  {"height", G.height},
                   {"nx", G.nx},               {"ny", G.ny},                   {"hole", nullptr},   {"refinements", G.refinements},
                   {"inflow_max", G.inflow_max}, {"ramp_time", G.ramp_time}};
  if (G.hole_cells)
    j["geometry"]["hole"] = *G.hole_cells;
  const auto &F = c.fom;
  j["fom"] = {{"scheme", to_string(F.scheme)},
              {"integrator", to_string(F.time_integrator)},
              {"nu", F.nu},
              {"dt", F.dt},
              {"t_final", F.t_final},
              {"C_v", F.stabilization.C_v},
              {"C_p", F.stabilization.C_p},
              {"mu", F.stabilization.mu},
              {"picard_tolerance", F.nonlinear.tolerance},
              {"picard_max_iterations", F.nonlinear.max_iterations},
              {"window", {{"t_start", F.window.t_start}, {"t_end", F.window.t_end}, {"stride", F.window.stride}}}};
  j["pod"] = {{"center", c.pod.center}, {"pressure_r", c.pod.pressure_r}, {"r", nullptr}, {"energy_threshold", nullptr}};
  if (c.pod.r)
    j["pod"]["r"] = *c.pod.r;
  if (c.pod.energy_threshold)
    j["pod"]["energy_threshold"] = *c.pod.energy_threshold;
  const auto &R = c.rom;
  j["rom"] = {{"scheme", to_string(R.scheme)},
              {"integrator", to_string(R.time_integrator)},
              {"r", R.r},
              {"rp", R.rp},
              {"mu", R.mu},
              {"t_start", R.t_start},
              {"t_end", R.t_end},
              {"pressure_recovery", R.pressure_recovery},
              {"mu_bar_candidates", R.mu_bar_candidates},
              {"r_values", R.r_values},
              {"alpha", nullptr},
              {"adaptive",
               {{"enabled", R.adaptive.enabled},
                {"mu_init", R.adaptive.mu_init},
                {"mu_min", R.adaptive.mu_min},
                {"F", R.adaptive.F},
                {"delta", R.adaptive.delta},
                {"tol", R.adaptive.tol}}}};
  if (R.alpha)
    j["rom"]["alpha"] = *R.alpha;
  j["report"] = {{"out_dir", c.report.out_dir}, {"csv", c.report.csv}, {"plots", c.report.plots}};
  return j.dump(2) + "\n";
}

Mesh build_mesh(const GeometryConfig &g)
{
  Mesh m = g.is_channel() ? build_rect_mesh(g.width, g.height, g.nx, g.ny, g.hole_cells ? std::optional<Rectangle>(g.hole()) : std::nullopt)
                          : build_rect_mesh(1.0, 1.0, g.nx, g.ny);
  for (int k = 0; k < g.refinements; ++k)
    m = refine_uniform(m);
  return m;
}

std::optional<ManufacturedSolution> manufactured_of(const ExperimentConfig &cfg)
{
  if (cfg.geometry.is_channel())
    return std::nullopt;
  return manufactured_by_name(cfg.geometry.solution, cfg.fom.nu);
}

FlowProblem build_problem(const ExperimentConfig &cfg)
{
  if (auto ms = manufactured_of(cfg))
    return ms->problem();
  const auto  &g = cfg.geometry;
  FlowProblem  p;
  p.dirichlet_tags = {BoundaryTag::inlet, BoundaryTag::wall};
  if (g.hole_cells)
    p.dirichlet_tags.push_back(BoundaryTag::obstacle);
  const double H = g.height, Um = g.inflow_max, ramp = g.ramp_time;
  p.boundary_velocity = [H, Um, ramp](const Point &x, double t) {
    if (x.x > 1e-12)
      return Vec2{0.0, 0.0};
    const double s = ramp > 0.0 ? std::min(1.0, t / ramp) : 1.0;
    return Vec2{s * 4.0 * Um * x.y * (H - x.y) / (H * H), 0.0};
  };
  p.initial_velocity = zero_vector();
  return p;
}

} // namespace podrom
