#include "config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "scflow/errors.hpp"
#include "scflow/snapshot.hpp"

namespace scflow::cli {

using nlohmann::json;

namespace {

/// Reads one JSON object, remembering which keys were consumed so that
/// leftovers can be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const json& object, std::string where) : object_(object), where_(std::move(where)) {
    if (!object_.is_object()) throw ConfigError(where_ + " must be a table");
  }

  bool has(const std::string& key) const { return object_.contains(key); }

  const json& child(const std::string& key) {
    if (!object_.contains(key)) throw ConfigError(where_ + "." + key + " is required");
    seen_.insert(key);
    return object_.at(key);
  }

  double number(const std::string& key) {
    const json& v = child(key);
    if (!v.is_number()) throw ConfigError(path(key) + " must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(path(key) + " must be finite");
    return x;
  }
  double number(const std::string& key, double fallback) {
    return has(key) ? number(key) : fallback;
  }

  long long integer(const std::string& key) {
    const json& v = child(key);
    if (!v.is_number_integer()) throw ConfigError(path(key) + " must be an integer");
    return v.get<long long>();
  }
  long long integer(const std::string& key, long long fallback) {
    return has(key) ? integer(key) : fallback;
  }

  std::string text(const std::string& key) {
    const json& v = child(key);
    if (!v.is_string()) throw ConfigError(path(key) + " must be a string");
    return v.get<std::string>();
  }
  std::string text(const std::string& key, const std::string& fallback) {
    return has(key) ? text(key) : fallback;
  }

  bool flag(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = child(key);
    if (!v.is_boolean()) throw ConfigError(path(key) + " must be true or false");
    return v.get<bool>();
  }

  /// Array of numbers, or a single number broadcast to `size` entries.
  std::vector<double> numbers(const std::string& key, std::size_t size) {
    const json& v = child(key);
    std::vector<double> out;
    if (v.is_number()) {
      out.assign(size, v.get<double>());
    } else if (v.is_array()) {
      for (const json& e : v) {
        if (!e.is_number()) throw ConfigError(path(key) + " must hold numbers");
        out.push_back(e.get<double>());
      }
    } else {
      throw ConfigError(path(key) + " must be a number or an array of numbers");
    }
    if (size != 0 && out.size() != size) {
      throw ConfigError(path(key) + " must have " + std::to_string(size) + " entries");
    }
    for (double x : out) {
      if (!std::isfinite(x)) throw ConfigError(path(key) + " must be finite");
    }
    return out;
  }

  std::map<std::string, double> number_table(const std::string& key) {
    std::map<std::string, double> out;
    if (!has(key)) return out;
    ObjectReader inner(child(key), path(key));
    for (const auto& [name, value] : object_.at(key).items()) out[name] = inner.number(name);
    return out;
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : object_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown key " + path(key));
    }
  }

 private:
  const json& object_;
  std::string where_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

int checked_int(long long value, long long lo, long long hi, const std::string& what) {
  require(value >= lo && value <= hi, what + " must lie in [" + std::to_string(lo) + ", " +
                                          std::to_string(hi) + "]");
  return static_cast<int>(value);
}

BarrierSpec parse_barrier(const json& doc, const std::string& where, int dim) {
  ObjectReader r(doc, where);
  BarrierSpec b;
  b.kind = r.text("kind");
  if (b.kind == "constant") {
    b.level = r.number("level");
  } else if (b.kind == "sine") {
    b.level = r.number("level");
    b.amplitude = r.number("amplitude");
    b.axis = checked_int(r.integer("axis", 1), 1, dim, r.path("axis"));
    b.wavenumber = r.number("wavenumber", 1.0);
  } else if (b.kind == "file") {
    b.path = r.text("path");
    require(!b.path.empty(), r.path("path") + " must not be empty");
  } else {
    throw ConfigError(r.path("kind") + " must be constant, sine or file, got '" + b.kind + "'");
  }
  r.finish();
  return b;
}

json barrier_json(const BarrierSpec& b) {
  if (b.kind == "constant") return {{"kind", b.kind}, {"level", b.level}};
  if (b.kind == "sine") {
    return {{"kind", b.kind},
            {"level", b.level},
            {"amplitude", b.amplitude},
            {"axis", b.axis},
            {"wavenumber", b.wavenumber}};
  }
  return {{"kind", b.kind}, {"path", b.path}};
}

FlowSettings parse_flow(const json& doc) {
  ObjectReader r(doc, "flow");
  FlowSettings f;
  f.scheme = r.text("scheme", f.scheme);
  parse_time_scheme(f.scheme);
  f.stages = checked_int(r.integer("stages", f.stages), 2, 1000, "flow.stages");
  f.dt_safety = r.number("dt_safety", f.dt_safety);
  require(f.dt_safety > 0.0 && f.dt_safety <= 1.0, "flow.dt_safety must lie in (0, 1]");
  f.t_max = r.number("t_max", f.t_max);
  require(f.t_max >= 0.0, "flow.t_max must be nonnegative");
  f.tol_converge = r.number("tol_converge", f.tol_converge);
  require(f.tol_converge > 0.0, "flow.tol_converge must be positive");
  f.tol_sign = r.number("tol_sign", f.tol_sign);
  require(f.tol_sign >= 0.0, "flow.tol_sign must be nonnegative");
  f.monitor_every = checked_int(r.integer("monitor_every", f.monitor_every), 1,
                                std::numeric_limits<int>::max(), "flow.monitor_every");
  f.max_halvings = checked_int(r.integer("max_halvings", f.max_halvings), 0, 60,
                               "flow.max_halvings");
  f.ceiling_factor = r.number("ceiling_factor", f.ceiling_factor);
  require(f.ceiling_factor >= 1.0, "flow.ceiling_factor must be >= 1");
  f.admissibility_margin = r.number("admissibility_margin", f.admissibility_margin);
  require(f.admissibility_margin >= 0.0, "flow.admissibility_margin must be nonnegative");
  f.spacelike_margin = r.number("spacelike_margin", f.spacelike_margin);
  require(f.spacelike_margin >= 0.0 && f.spacelike_margin < 1.0,
          "flow.spacelike_margin must lie in [0, 1)");
  r.finish();
  return f;
}

AuditSettings parse_audit(const json& doc) {
  ObjectReader r(doc, "audit");
  AuditSettings a;
  if (r.has("time_lo")) a.time_lo = r.number("time_lo");
  if (r.has("time_hi")) a.time_hi = r.number("time_hi");
  require(!a.time_lo || !a.time_hi || *a.time_lo <= *a.time_hi,
          "audit.time_lo must not exceed audit.time_hi");
  const int big = 1 << 20;
  a.time_samples = checked_int(r.integer("time_samples", a.time_samples), 1, big,
                               "audit.time_samples");
  a.spatial_samples = checked_int(r.integer("spatial_samples", a.spatial_samples), 1, big,
                                  "audit.spatial_samples");
  a.directions = checked_int(r.integer("directions", a.directions), 1, big, "audit.directions");
  if (r.has("tilts")) a.tilts = r.numbers("tilts", 0);
  require(!a.tilts.empty(), "audit.tilts must not be empty");
  for (double t : a.tilts) require(t >= 1.0, "audit.tilts entries must be >= 1");
  a.fd_step = r.number("fd_step", a.fd_step);
  require(a.fd_step > 0.0, "audit.fd_step must be positive");
  r.finish();
  return a;
}

}  // namespace

RunConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  try {
    RunConfig c;
    c.base_dir = base_dir;
    ObjectReader root(doc, "config");

    {
      ObjectReader r(root.child("grid"), "grid");
      c.dim = checked_int(r.integer("n"), 2, kMaxDim, "grid.n");
      const auto n = static_cast<std::size_t>(c.dim);
      const json& shape = r.child("shape");
      if (shape.is_number_integer()) {
        c.shape.assign(n, checked_int(shape.get<long long>(), GridChart::kMinPointsPerAxis,
                                      1 << 16, "grid.shape"));
      } else if (shape.is_array() && shape.size() == n) {
        for (const json& e : shape) {
          require(e.is_number_integer(), "grid.shape must hold integers");
          c.shape.push_back(
              checked_int(e.get<long long>(), GridChart::kMinPointsPerAxis, 1 << 16, "grid.shape"));
        }
      } else {
        throw ConfigError("grid.shape must be an integer or an array of " + std::to_string(n) +
                          " integers");
      }
      require(r.has("spacing") != r.has("period"), "grid needs exactly one of spacing, period");
      if (r.has("spacing")) {
        c.spacing = r.numbers("spacing", n);
      } else {
        const std::vector<double> period = r.numbers("period", n);
        for (std::size_t a = 0; a < n; ++a) c.spacing.push_back(period[a] / c.shape[a]);
      }
      for (double h : c.spacing) require(h > 0.0, "grid spacing must be positive");
      r.finish();
    }

    {
      ObjectReader r(root.child("metric"), "metric");
      c.metric.name = r.text("preset");
      c.metric.family = r.text("family", "");
      require(c.metric.name == "custom" || c.metric.family.empty(),
              "metric.family applies only to the custom preset");
      c.metric.params = r.number_table("params");
      r.finish();
    }

    {
      ObjectReader r(root.child("rhs"), "rhs");
      c.rhs.family = r.text("family");
      std::map<std::string, double> params = rhs_defaults(c.rhs.family);
      for (const auto& [key, value] : r.number_table("params")) {
        require(params.count(key) > 0,
                "rhs family '" + c.rhs.family + "' has no parameter '" + key + "'");
        params[key] = value;
      }
      c.rhs.params = params;
      c.sqrt_mode = r.flag("sqrt_mode", false);
      r.finish();
    }

    if (root.has("cutoff")) {
      ObjectReader r(root.child("cutoff"), "cutoff");
      c.cutoff.k = r.number("k", c.cutoff.k);
      r.finish();
    }
    require(c.cutoff.k > 1.0, "cutoff.k must exceed 1");

    {
      ObjectReader r(root.child("barriers"), "barriers");
      c.lower = parse_barrier(r.child("lower"), "barriers.lower", c.dim);
      c.upper = parse_barrier(r.child("upper"), "barriers.upper", c.dim);
      r.finish();
    }

    if (root.has("flow")) c.flow = parse_flow(root.child("flow"));
    if (root.has("audit")) c.audit = parse_audit(root.child("audit"));

    if (root.has("seed")) {
      const json& s = root.child("seed");
      require(s.is_number_unsigned() || (s.is_number_integer() && s.get<long long>() >= 0),
              "seed must be a nonnegative integer");
      c.seed = s.get<std::uint64_t>();
    }

    if (root.has("output")) {
      ObjectReader r(root.child("output"), "output");
      c.output_dir = r.text("dir", c.output_dir);
      r.finish();
    }
    require(!c.output_dir.empty(), "output.dir must not be empty");
    root.finish();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

json to_json(const RunConfig& c) {
  json doc;
  doc["grid"] = {{"n", c.dim}, {"shape", c.shape}, {"spacing", c.spacing}};
  json metric = {{"preset", c.metric.name}, {"params", json::object()}};
  if (!c.metric.family.empty()) metric["family"] = c.metric.family;
  for (const auto& [k, v] : c.metric.params) metric["params"][k] = v;
  doc["metric"] = metric;
  json rhs = {{"family", c.rhs.family}, {"params", json::object()}, {"sqrt_mode", c.sqrt_mode}};
  for (const auto& [k, v] : c.rhs.params) rhs["params"][k] = v;
  doc["rhs"] = rhs;
  doc["cutoff"] = {{"k", c.cutoff.k}};
  doc["barriers"] = {{"lower", barrier_json(c.lower)}, {"upper", barrier_json(c.upper)}};
  const FlowSettings& f = c.flow;
  doc["flow"] = {{"scheme", f.scheme},
                 {"stages", f.stages},
                 {"dt_safety", f.dt_safety},
                 {"t_max", f.t_max},
                 {"tol_converge", f.tol_converge},
                 {"tol_sign", f.tol_sign},
                 {"monitor_every", f.monitor_every},
                 {"max_halvings", f.max_halvings},
                 {"ceiling_factor", f.ceiling_factor},
                 {"admissibility_margin", f.admissibility_margin},
                 {"spacelike_margin", f.spacelike_margin}};
  const AuditSettings& a = c.audit;
  json audit = {{"time_samples", a.time_samples},
                {"spatial_samples", a.spatial_samples},
                {"tilts", a.tilts},
                {"directions", a.directions},
                {"fd_step", a.fd_step}};
  if (a.time_lo) audit["time_lo"] = *a.time_lo;
  if (a.time_hi) audit["time_hi"] = *a.time_hi;
  doc["audit"] = audit;
  doc["seed"] = c.seed;
  doc["output"] = {{"dir", c.output_dir}};
  return doc;
}

std::string canonical_form(const RunConfig& config) { return to_json(config).dump(2) + "\n"; }

GraphFunction build_barrier(const BarrierSpec& spec, std::shared_ptr<const GridChart> chart,
                            const std::filesystem::path& base_dir) {
  if (spec.kind == "constant") return GraphFunction::constant(chart, spec.level);
  if (spec.kind == "sine") {
    const int axis = spec.axis - 1;
    return GraphFunction::sample(chart, [&](const SpatialVector& x) {
      return spec.level + spec.amplitude * std::sin(spec.wavenumber * x[axis]);
    });
  }
  std::filesystem::path path = spec.path;
  if (path.is_relative()) path = base_dir / path;
  GraphFunction u;
  try {
    u = read_snapshot_binary(path);
  } catch (const Error& e) {
    throw ConfigError("cannot load barrier '" + path.string() + "': " + e.what());
  }
  if (!(*u.chart == *chart)) {
    throw ConfigError("barrier '" + path.string() + "' lives on a different grid");
  }
  u.chart = chart;
  return u;
}

RunSetup build_setup(const RunConfig& c) {
  RunSetup s;
  s.metric = make_metric(c.metric, c.dim);
  s.chart = std::make_shared<GridChart>(c.shape, c.spacing);
  s.raw_rhs = make_rhs(c.rhs, s.metric);
  s.rhs = effective_rhs(s.raw_rhs, c.cutoff, s.metric,
                        c.sqrt_mode ? TargetMode::SquareRoot : TargetMode::AsGiven);

  FlowConfig& f = s.flow;
  f.scheme = parse_time_scheme(c.flow.scheme);
  f.stages = c.flow.stages;
  f.dt_safety = c.flow.dt_safety;
  f.t_max = c.flow.t_max;
  f.tol_converge = c.flow.tol_converge;
  f.tol_sign = c.flow.tol_sign;
  f.monitor_every = c.flow.monitor_every;
  f.max_halvings = c.flow.max_halvings;
  f.ceiling_factor = c.flow.ceiling_factor;
  f.admissibility_margin = c.flow.admissibility_margin;
  f.geometry.spacelike_margin = c.flow.spacelike_margin;
  f.lower = build_barrier(c.lower, s.chart, c.base_dir);
  f.upper = build_barrier(c.upper, s.chart, c.base_dir);

  AuditSampleSpec& a = s.audit;
  a.time_lo = c.audit.time_lo.value_or(f.lower.min());
  a.time_hi = c.audit.time_hi.value_or(f.upper.max());
  if (a.time_lo > a.time_hi) std::swap(a.time_lo, a.time_hi);
  a.time_samples = c.audit.time_samples;
  a.spatial_samples = c.audit.spatial_samples;
  a.tilts = c.audit.tilts;
  a.directions = c.audit.directions;
  a.fd_step = c.audit.fd_step;
  a.seed = c.seed;
  a.periods.clear();
  for (int axis = 0; axis < c.dim; ++axis) a.periods.push_back(s.chart->period(axis));
  return s;
}

}  // namespace scflow::cli
