#include "softarm/scenario.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace softarm {

using nlohmann::json;

std::string to_string(ControllerType t) {
  switch (t) {
    case ControllerType::RobustMpc: return "robust_mpc";
    case ControllerType::PenalizedMpc: return "penalized_mpc";
    case ControllerType::SoftMpc: return "soft_mpc";
    case ControllerType::QuasiStatic: return "quasi_static";
  }
  return "?";
}

ControllerType controller_type_from_string(const std::string& s) {
  if (s == "robust_mpc") return ControllerType::RobustMpc;
  if (s == "penalized_mpc") return ControllerType::PenalizedMpc;
  if (s == "soft_mpc") return ControllerType::SoftMpc;
  if (s == "quasi_static") return ControllerType::QuasiStatic;
  throw ConfigError("unknown controller type '" + s + "'");
}

TrajectoryRef make_trajectory(const TrajectorySpec& spec) {
  switch (spec.kind) {
    case TrajectorySpec::Kind::Circle:
      return make_circle(spec.radius, spec.center, spec.period, spec.turns);
    case TrajectorySpec::Kind::Square:
      return make_square(spec.side, spec.center.head<2>(), spec.height, spec.period, spec.turns);
    case TrajectorySpec::Kind::Setpoint:
      return make_setpoint(spec.point);
  }
  throw ConfigError("unknown trajectory kind");
}

void Scenario::validate() const {
  geometry.validate();
  dynamics.validate(geometry);
  mpc.validate(geometry);
  plant.validate();
  if (!(duration >= 0.0)) throw ConfigError("run.duration must be >= 0");
  if (!(rate_hz > 0.0)) throw ConfigError("run.rate_hz must be > 0");
  if (!(transient_exclusion >= 0.0)) throw ConfigError("run.transient_exclusion must be >= 0");
  for (const auto& ob : obstacles)
    if (!(ob.radius > 0.0)) throw ConfigError("obstacles: radius must be > 0");
}

namespace {

// typed, path-reporting accessors over a parsed document
class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {}

  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(path_ + ": " + msg); }

  bool has(const char* key) const { return node_.contains(key); }

  Reader child(const char* key) const {
    if (!node_.contains(key)) fail(std::string("missing required object '") + key + "'");
    if (!node_[key].is_object()) fail(std::string("'") + key + "' must be an object");
    return Reader(node_[key], path_ + "." + key);
  }

  std::optional<Reader> optional_child(const char* key) const {
    if (!node_.contains(key)) return std::nullopt;
    if (!node_[key].is_object()) fail(std::string("'") + key + "' must be an object");
    return Reader(node_[key], path_ + "." + key);
  }

  double number(const char* key, double def) const {
    if (!node_.contains(key)) return def;
    return number_req(key);
  }

  double number_req(const char* key) const {
    if (!node_.contains(key)) fail(std::string("missing required number '") + key + "'");
    if (!node_[key].is_number()) fail(std::string("'") + key + "' must be a number");
    return node_[key].get<double>();
  }

  int integer(const char* key, int def) const {
    if (!node_.contains(key)) return def;
    if (!node_[key].is_number_integer()) fail(std::string("'") + key + "' must be an integer");
    return node_[key].get<int>();
  }

  std::uint64_t seed(const char* key, std::uint64_t def) const {
    if (!node_.contains(key)) return def;
    if (!node_[key].is_number_unsigned() && !node_[key].is_number_integer())
      fail(std::string("'") + key + "' must be a non-negative integer");
    return node_[key].get<std::uint64_t>();
  }

  bool boolean(const char* key, bool def) const {
    if (!node_.contains(key)) return def;
    if (!node_[key].is_boolean()) fail(std::string("'") + key + "' must be a boolean");
    return node_[key].get<bool>();
  }

  std::string text(const char* key, const std::string& def) const {
    if (!node_.contains(key)) return def;
    if (!node_[key].is_string()) fail(std::string("'") + key + "' must be a string");
    return node_[key].get<std::string>();
  }

  std::vector<double> numbers(const char* key, int expected = -1) const {
    if (!node_.contains(key)) fail(std::string("missing required array '") + key + "'");
    const json& arr = node_[key];
    if (!arr.is_array()) fail(std::string("'") + key + "' must be an array");
    std::vector<double> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      if (!arr[i].is_number())
        throw ConfigError(path_ + "." + key + "[" + std::to_string(i) + "]: expected number");
      out.push_back(arr[i].get<double>());
    }
    if (expected >= 0 && static_cast<int>(out.size()) != expected)
      fail(std::string("'") + key + "' must have " + std::to_string(expected) + " entries");
    return out;
  }

  Eigen::Vector3d vec3(const char* key) const {
    const auto v = numbers(key, 3);
    return Eigen::Vector3d(v[0], v[1], v[2]);
  }

  Eigen::Vector3d vec3(const char* key, const Eigen::Vector3d& def) const {
    if (!node_.contains(key)) return def;
    return vec3(key);
  }

  void allow_only(std::initializer_list<const char*> keys) const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      bool ok = false;
      for (const char* k : keys) ok |= (it.key() == k);
      if (!ok) fail("unknown key '" + it.key() + "'");
    }
  }

  const json& raw() const { return node_; }
  const std::string& path() const { return path_; }

 private:
  const json& node_;
  std::string path_;
};

json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // translate the byte offset into line:column
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(path + ":" + std::to_string(line) + ":" + std::to_string(col) +
                      ": parse error: " + e.what());
  }
}

ArmGeometry geometry_from(const Reader& r) {
  ArmGeometry g;
  r.allow_only({"n_segments", "pcc_per_segment", "segment_rest_length", "connector_offset",
                "chamber_angles_deg", "segment_mass", "connector_mass", "gravity", "theta_max",
                "fk_scale", "fd_step", "base_translation"});
  g.n_segments = r.integer("n_segments", 2);
  g.pcc_per_segment = r.integer("pcc_per_segment", 1);
  const int nseg = g.n_segments;
  if (nseg != 2) {
    // built-in defaults describe the two-segment arm
    for (const char* k : {"segment_rest_length", "connector_offset", "segment_mass",
                          "connector_mass"})
      if (!r.has(k)) r.fail(std::string("'") + k + "' is required when n_segments != 2");
    g.chamber_angles.assign(nseg, {0.0, 2.0 * M_PI / 3.0, 4.0 * M_PI / 3.0});
  }
  if (r.has("segment_rest_length")) g.segment_rest_length = r.numbers("segment_rest_length", nseg);
  if (r.has("segment_mass")) g.segment_mass = r.numbers("segment_mass", nseg);
  if (r.has("connector_mass")) g.connector_mass = r.numbers("connector_mass", nseg);
  if (r.has("connector_offset")) {
    const json& arr = r.raw()["connector_offset"];
    if (!arr.is_array() || static_cast<int>(arr.size()) != nseg)
      r.fail("'connector_offset' must be an array with one 3-vector per segment");
    g.connector_offset.clear();
    for (int i = 0; i < nseg; ++i) {
      const json& v = arr[i];
      if (!v.is_array() || v.size() != 3 || !v[0].is_number())
        throw ConfigError(r.path() + ".connector_offset[" + std::to_string(i) +
                          "]: expected a 3-vector");
      g.connector_offset.push_back(
          Eigen::Vector3d(v[0].get<double>(), v[1].get<double>(), v[2].get<double>()));
    }
  }
  if (r.has("chamber_angles_deg")) {
    const json& arr = r.raw()["chamber_angles_deg"];
    if (!arr.is_array() || static_cast<int>(arr.size()) != nseg)
      r.fail("'chamber_angles_deg' must be an array with 3 angles per segment");
    g.chamber_angles.clear();
    for (int i = 0; i < nseg; ++i) {
      const json& v = arr[i];
      if (!v.is_array() || v.size() != 3)
        throw ConfigError(r.path() + ".chamber_angles_deg[" + std::to_string(i) +
                          "]: expected 3 angles");
      g.chamber_angles.push_back({v[0].get<double>() * M_PI / 180.0,
                                  v[1].get<double>() * M_PI / 180.0,
                                  v[2].get<double>() * M_PI / 180.0});
    }
  }
  g.gravity = r.vec3("gravity", Eigen::Vector3d(0, 0, -9.81));
  g.theta_max = r.number("theta_max", M_PI);
  g.fk_scale = r.number("fk_scale", 1.0);
  g.fd_step = r.number("fd_step", 1e-5);
  if (r.has("base_translation")) g.base_frame.translation = r.vec3("base_translation");
  g.validate();
  return g;
}

DynamicsParams dynamics_from(const Reader& r, const ArmGeometry& geom) {
  DynamicsParams p;
  r.allow_only({"stiffness", "damping", "alloc_gain", "cond_limit"});
  p.stiffness = r.number("stiffness", 0.5);
  p.damping = r.number("damping", 0.05);
  if (r.has("alloc_gain")) p.alloc_gain = r.numbers("alloc_gain", geom.n_segments);
  else p.alloc_gain.assign(geom.n_segments, 0.015);
  p.cond_limit = r.number("cond_limit", 1e8);
  p.validate(geom);
  return p;
}

std::vector<Obstacle> obstacles_from(const Reader& parent, const char* key) {
  std::vector<Obstacle> out;
  if (!parent.has(key)) return out;
  const json& arr = parent.raw()[key];
  if (!arr.is_array()) parent.fail(std::string("'") + key + "' must be an array");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    Reader r(arr[i], parent.path() + "." + key + "[" + std::to_string(i) + "]");
    r.allow_only({"center", "radius"});
    out.push_back({r.vec3("center"), r.number_req("radius")});
  }
  return out;
}

TrajectorySpec trajectory_from(const Reader& r) {
  TrajectorySpec spec;
  const std::string kind = r.text("type", "setpoint");
  if (kind == "circle") {
    r.allow_only({"type", "radius", "center", "period", "turns"});
    spec.kind = TrajectorySpec::Kind::Circle;
    spec.radius = r.number_req("radius");
    spec.center = r.vec3("center");
    spec.period = r.number_req("period");
    spec.turns = r.number("turns", 1.0);
  } else if (kind == "square") {
    r.allow_only({"type", "side", "center", "height", "period", "turns"});
    spec.kind = TrajectorySpec::Kind::Square;
    spec.side = r.number_req("side");
    const auto c = r.numbers("center", 2);
    spec.center = Eigen::Vector3d(c[0], c[1], 0.0);
    spec.height = r.number_req("height");
    spec.period = r.number_req("period");
    spec.turns = r.number("turns", 1e6);
  } else if (kind == "setpoint") {
    r.allow_only({"type", "point"});
    spec.kind = TrajectorySpec::Kind::Setpoint;
    spec.point = r.vec3("point");
  } else {
    r.fail("trajectory type must be circle, square or setpoint");
  }
  return spec;
}

MpcConfig mpc_from(const Reader& r, const ArmGeometry& geom, ControllerType type,
                   const std::vector<Obstacle>& scenario_obstacles) {
  MpcConfig cfg = MpcConfig::defaults(geom);
  r.allow_only({"type", "horizon", "weights", "pressure", "dare", "x0_box", "penalty", "soft",
                "options", "qp", "sqp", "quasi_static"});
  cfg.horizon = r.integer("horizon", 7);
  if (auto w = r.optional_child("weights")) {
    w->allow_only({"q", "qn", "s", "r", "rd"});
    cfg.q_weight = w->number("q", 1e4) * Eigen::Matrix3d::Identity();
    cfg.qn_weight = w->number("qn", w->number("q", 1e4)) * Eigen::Matrix3d::Identity();
    cfg.s_weight = w->number("s", 1e-2) * Mat::Identity(geom.q_size(), geom.q_size());
    cfg.r_weight = w->number("r", 1e-4) * Mat::Identity(geom.n_inputs(), geom.n_inputs());
    cfg.rd_weight = w->number("rd", 1e-3) * Mat::Identity(geom.n_inputs(), geom.n_inputs());
  }
  if (auto pz = r.optional_child("pressure")) {
    pz->allow_only({"min", "max", "du_max", "tube_clamp"});
    cfg.p_min = Vec::Constant(geom.n_inputs(), pz->number("min", -40.0));
    cfg.p_max = Vec::Constant(geom.n_inputs(), pz->number("max", 40.0));
    cfg.du_max = Vec::Constant(geom.n_inputs(), pz->number("du_max", 15.0));
    cfg.tube_clamp = Vec::Constant(geom.n_inputs(), pz->number("tube_clamp", 2.0));
  }
  if (auto d = r.optional_child("dare")) {
    d->allow_only({"q", "r"});
    cfg.dare_q = d->number("q", 1.0);
    cfg.dare_r = d->number("r", 10.0);
  }
  if (auto x0 = r.optional_child("x0_box")) {
    x0->allow_only({"q", "qd"});
    cfg.x0_box_q = Vec::Constant(geom.q_size(), x0->number("q", 0.05));
    cfg.x0_box_qd = Vec::Constant(geom.q_size(), x0->number("qd", 0.5));
  }
  if (type == ControllerType::PenalizedMpc) {
    const Reader pen = r.child("penalty");
    pen.allow_only({"gain", "width"});
    cfg.penalty_gain = pen.number_req("gain");
    cfg.penalty_width = pen.number_req("width");
    cfg.obstacles = scenario_obstacles;
    if (cfg.obstacles.empty()) r.fail("penalized_mpc requires scenario obstacles");
  }
  if (type == ControllerType::SoftMpc) {
    const Reader soft = r.child("soft");
    soft.allow_only({"q_l", "q_u", "slack_weight"});
    ConstraintBox box;
    const auto ql = soft.numbers("q_l", geom.q_size());
    const auto qu = soft.numbers("q_u", geom.q_size());
    box.q_l = Eigen::Map<const Vec>(ql.data(), ql.size());
    box.q_u = Eigen::Map<const Vec>(qu.data(), qu.size());
    const auto [a_rows, b_rhs] = box_to_polytope(box);
    const double w = soft.number("slack_weight", 1e3);
    cfg.soft = SoftBox{a_rows, b_rhs, w * Mat::Identity(a_rows.rows(), a_rows.rows())};
  }
  if (auto op = r.optional_child("options")) {
    op->allow_only({"cold_start", "floor_horizon_window", "exact_drift", "cache_dare",
                    "cache_dare_tol"});
    cfg.cold_start = op->boolean("cold_start", false);
    cfg.floor_horizon_window = op->boolean("floor_horizon_window", false);
    cfg.exact_drift = op->boolean("exact_drift", false);
    cfg.cache_dare = op->boolean("cache_dare", false);
    cfg.cache_dare_tol = op->number("cache_dare_tol", 1e-3);
  }
  if (auto qp = r.optional_child("qp")) {
    qp->allow_only({"tol_feas", "tol_stat", "max_iter"});
    cfg.qp.tol_feas = qp->number("tol_feas", 1e-6);
    cfg.qp.tol_stat = qp->number("tol_stat", 1e-6);
    cfg.qp.max_iter = qp->integer("max_iter", 20000);
  }
  if (auto sqp = r.optional_child("sqp")) {
    sqp->allow_only({"tol", "max_outer", "max_backtrack"});
    cfg.sqp.tol = sqp->number("tol", 1e-6);
    cfg.sqp.max_outer = sqp->integer("max_outer", 6);
    cfg.sqp.max_backtrack = sqp->integer("max_backtrack", 5);
  }
  return cfg;
}

Scenario scenario_from_json(const json& doc) {
  Reader root(doc, "$");
  root.allow_only({"name", "geometry", "dynamics", "controller", "obstacles", "trajectory",
                   "plant", "run"});
  Scenario s;
  s.name = root.text("name", "scenario");
  s.geometry = root.has("geometry") ? geometry_from(root.child("geometry")) : ArmGeometry{};
  s.dynamics = root.has("dynamics") ? dynamics_from(root.child("dynamics"), s.geometry)
                                    : DynamicsParams{};
  s.obstacles = obstacles_from(root, "obstacles");

  const Reader ctrl = root.child("controller");
  s.controller = controller_type_from_string(ctrl.text("type", "robust_mpc"));
  s.mpc = mpc_from(ctrl, s.geometry, s.controller, s.obstacles);
  if (auto qs = ctrl.optional_child("quasi_static")) {
    qs->allow_only({"gain", "lambda"});
    s.quasi_static.gain = qs->number("gain", 0.5);
    s.quasi_static.damping_lambda = qs->number("lambda", 1e-3);
  }
  s.quasi_static.p_min = s.mpc.p_min;
  s.quasi_static.p_max = s.mpc.p_max;

  if (root.has("trajectory")) s.trajectory = trajectory_from(root.child("trajectory"));

  if (auto pl = root.optional_child("plant")) {
    pl->allow_only({"substeps", "actuation_tau", "noise_q_std", "noise_qd_std",
                    "param_perturbation", "chamber_max"});
    s.plant.substeps = pl->integer("substeps", 20);
    s.plant.actuation_tau = pl->number("actuation_tau", 0.0);
    s.plant.noise_q_std = pl->number("noise_q_std", 0.0);
    s.plant.noise_qd_std = pl->number("noise_qd_std", 0.0);
    s.plant.param_perturbation = pl->number("param_perturbation", 0.0);
    s.plant.chamber_max = pl->number("chamber_max", 120.0);
  }
  if (auto run = root.optional_child("run")) {
    run->allow_only({"duration", "rate_hz", "seed", "transient_exclusion", "log_timing"});
    s.duration = run->number("duration", 25.0);
    s.rate_hz = run->number("rate_hz", 15.0);
    s.seed = run->seed("seed", 1);
    s.transient_exclusion = run->number("transient_exclusion", 1.0);
    s.log_timing = run->boolean("log_timing", true);
  }
  s.mpc.ts = s.ts();  // the controller runs at the loop rate
  s.validate();
  return s;
}

FinderFile finder_from_json(const json& doc) {
  Reader root(doc, "$");
  root.allow_only({"name", "geometry", "finder"});
  FinderFile f;
  f.geometry = root.has("geometry") ? geometry_from(root.child("geometry")) : ArmGeometry{};
  const Reader fr = root.child("finder");
  fr.allow_only({"n_trials", "n_samples", "targets", "target_radius", "reach_fraction",
                 "obstacles", "seed"});
  f.finder.n_trials = fr.integer("n_trials", 200);
  f.finder.n_samples = fr.integer("n_samples", 400);
  f.finder.target_radius = fr.number("target_radius", 0.02);
  f.finder.reach_fraction = fr.number("reach_fraction", 0.9);
  f.finder.seed = fr.seed("seed", 0);
  f.finder.obstacles = obstacles_from(fr, "obstacles");
  if (fr.has("targets")) {
    const json& arr = fr.raw()["targets"];
    if (!arr.is_array()) fr.fail("'targets' must be an array of 3-vectors");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const json& v = arr[i];
      if (!v.is_array() || v.size() != 3)
        throw ConfigError(fr.path() + ".targets[" + std::to_string(i) + "]: expected a 3-vector");
      f.finder.targets.push_back(
          Eigen::Vector3d(v[0].get<double>(), v[1].get<double>(), v[2].get<double>()));
    }
  }
  f.finder.validate();
  return f;
}

}  // namespace

Scenario load_scenario(const std::string& path) { return scenario_from_json(parse_file(path)); }

FinderFile load_finder_file(const std::string& path) { return finder_from_json(parse_file(path)); }

std::string validate_config_file(const std::string& path) {
  const json doc = parse_file(path);
  if (doc.contains("finder")) {
    finder_from_json(doc);
    return "finder";
  }
  scenario_from_json(doc);
  return "scenario";
}

Scenario load_scenario_with_overrides(const std::string& path,
                                      const std::vector<std::string>& overrides) {
  json doc = parse_file(path);
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos)
      throw ConfigError("override '" + ov + "' must look like path.to.key=value");
    std::string ptr = "/" + ov.substr(0, eq);
    for (auto& c : ptr)
      if (c == '.') c = '/';
    json value;
    try {
      value = json::parse(ov.substr(eq + 1));
    } catch (const json::parse_error&) {
      value = ov.substr(eq + 1);  // treat unparsable values as strings
    }
    doc[json::json_pointer(ptr)] = value;
  }
  return scenario_from_json(doc);
}

void write_box_file(const ConstraintBox& box, bool standard, const std::string& path) {
  json j;
  j["soft"]["q_l"] = std::vector<double>(box.q_l.data(), box.q_l.data() + box.q_l.size());
  j["soft"]["q_u"] = std::vector<double>(box.q_u.data(), box.q_u.data() + box.q_u.size());
  j["standard_limits"] = standard;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

}  // namespace softarm
