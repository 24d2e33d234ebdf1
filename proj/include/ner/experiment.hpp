#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ner/dynamics.hpp"
#include "ner/efg.hpp"
#include "ner/gates.hpp"
#include "ner/hamiltonian.hpp"
#include "ner/performance.hpp"

namespace ner {

using json = nlohmann::ordered_json;

/// Configuration file problems (unknown keys, bad values, missing fields).
class config_error : public std::runtime_error {
public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// Experiment description parsed from the key-value config format. Keys are
/// dotted paths with units encoded in the names; see the README for the
/// full schema.
struct ExperimentConfig {
  NucleusParams nucleus;

  // field section
  double b0 = 0.0;
  double e_amp = 0.0;
  bool omega_auto = true;
  double omega = 0.0;
  double phi = 0.0;
  double e0_static = 0.0;

  // efg section
  enum class EfgMode { kGiven, kHydrogenic } efg_mode = EfgMode::kGiven;
  EfgCoefficients given_coeffs;
  AtomModel atom;
  int nprime_max = 12;

  // pulse section
  bool has_angle = false;
  double angle = 0.0;
  bool has_duration = false;
  double duration = 0.0;
  double axis_phi = 0.0;

  // two_qubit section (optional)
  bool has_two_qubit = false;
  std::string gate_name = "cz";
  NucleusParams nucleus2;
  double c2 = 0.0, bprime2 = 0.0;
  double e1 = 0.0, e2 = 0.0;
  double j_hz = 0.0;
  double a2 = 0.0, drive2_e_amp = 0.0;

  IntegratorConfig integrator;

  // output section
  std::string out_dir = "out";
  std::string formats = "both";
  int samples = 201;

  // ordered swept keys with raw value strings
  std::vector<std::pair<std::string, std::vector<std::string>>> sweep;
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw config_error("config: bad number for '" + key + "': '" + value + "'");
  }
}

inline int parse_int(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const int v = std::stoi(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw config_error("config: bad integer for '" + key + "': '" + value + "'");
  }
}

inline int parse_spin(const std::string& key, const std::string& value) {
  const size_t slash = value.find('/');
  if (slash == std::string::npos) {
    return 2 * parse_int(key, value);
  }
  if (value.substr(slash + 1) != "2") {
    throw config_error("config: spin must be 'k/2' or an integer, got '" + value + "'");
  }
  return parse_int(key, value.substr(0, slash));
}

inline Complex parse_complex(const std::string& key, const std::string& value) {
  const size_t comma = value.find(',');
  if (comma == std::string::npos) return {parse_double(key, value), 0.0};
  return {parse_double(key, trim(value.substr(0, comma))),
          parse_double(key, trim(value.substr(comma + 1)))};
}

inline std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

/// Applies one key = value pair. Returns false for unrecognized keys.
inline bool apply_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "nucleus.spin") {
    cfg.nucleus.s = SpinQuantum{parse_spin(key, value)};
    return true;
  }
  if (key == "nucleus.q_moment_m2") {
    cfg.nucleus.q_moment_m2 = parse_double(key, value);
    return true;
  }
  if (key == "nucleus.gamma_rad_s_T") {
    cfg.nucleus.gamma_n = parse_double(key, value);
    return true;
  }
  if (key == "field.b0_T") {
    cfg.b0 = parse_double(key, value);
    return true;
  }
  if (key == "field.e_amp_V_m") {
    cfg.e_amp = parse_double(key, value);
    return true;
  }
  if (key == "field.omega_rad_s") {
    if (value == "auto") {
      cfg.omega_auto = true;
    } else {
      cfg.omega_auto = false;
      cfg.omega = parse_double(key, value);
    }
    return true;
  }
  if (key == "field.phi_rad") {
    cfg.phi = parse_double(key, value);
    return true;
  }
  if (key == "field.e0_V_m") {
    cfg.e0_static = parse_double(key, value);
    return true;
  }
  if (key == "efg.mode") {
    if (value == "given") {
      cfg.efg_mode = ExperimentConfig::EfgMode::kGiven;
    } else if (value == "hydrogenic") {
      cfg.efg_mode = ExperimentConfig::EfgMode::kHydrogenic;
    } else {
      throw config_error("config: efg.mode must be 'given' or 'hydrogenic'");
    }
    return true;
  }
  if (key == "efg.a_per_m") {
    cfg.given_coeffs.a = parse_double(key, value);
    return true;
  }
  if (key == "efg.b_per_m") {
    cfg.given_coeffs.b = parse_double(key, value);
    return true;
  }
  if (key == "efg.c_V_m2") {
    cfg.given_coeffs.c = parse_double(key, value);
    return true;
  }
  if (key == "efg.bprime_per_m") {
    cfg.given_coeffs.b_prime = parse_double(key, value);
    return true;
  }
  if (key == "efg.atom.z") {
    cfg.atom.z_atomic = parse_int(key, value);
    return true;
  }
  if (key == "efg.atom.gamma_e_rad_s_T") {
    cfg.atom.gamma_e = parse_double(key, value);
    return true;
  }
  if (key == "efg.atom.nprime_max") {
    cfg.nprime_max = parse_int(key, value);
    return true;
  }
  if (key.rfind("efg.atom.electron.", 0) == 0) {
    const std::string rest = key.substr(std::string("efg.atom.electron.").size());
    const size_t dot = rest.find('.');
    if (dot == std::string::npos) return false;
    const int idx = parse_int(key, rest.substr(0, dot));
    if (idx < 1 || idx > 64) throw config_error("config: electron index out of range in " + key);
    if (static_cast<int>(cfg.atom.electrons.size()) < idx) cfg.atom.electrons.resize(idx);
    Orbital& orb = cfg.atom.electrons[idx - 1];
    const std::string field = rest.substr(dot + 1);
    if (field == "n") {
      orb.n = parse_int(key, value);
      return true;
    }
    if (field == "m") {
      orb.m = parse_int(key, value);
      return true;
    }
    if (field.size() > 1 && field[0] == 'c') {
      const int l = parse_int(key, field.substr(1));
      orb.coeffs[l] = parse_complex(key, value);
      return true;
    }
    return false;
  }
  if (key == "pulse.angle_rad") {
    cfg.has_angle = true;
    cfg.angle = parse_double(key, value);
    return true;
  }
  if (key == "pulse.duration_s") {
    cfg.has_duration = true;
    cfg.duration = parse_double(key, value);
    return true;
  }
  if (key == "pulse.axis_phi_rad") {
    cfg.axis_phi = parse_double(key, value);
    return true;
  }
  if (key == "two_qubit.gate") {
    cfg.has_two_qubit = true;
    if (value != "cz" && value != "cnot") {
      throw config_error("config: two_qubit.gate must be 'cz' or 'cnot'");
    }
    cfg.gate_name = value;
    return true;
  }
  if (key == "two_qubit.nucleus2.spin") {
    cfg.has_two_qubit = true;
    cfg.nucleus2.s = SpinQuantum{parse_spin(key, value)};
    return true;
  }
  if (key == "two_qubit.nucleus2.q_moment_m2") {
    cfg.has_two_qubit = true;
    cfg.nucleus2.q_moment_m2 = parse_double(key, value);
    return true;
  }
  if (key == "two_qubit.nucleus2.gamma_rad_s_T") {
    cfg.has_two_qubit = true;
    cfg.nucleus2.gamma_n = parse_double(key, value);
    return true;
  }
  if (key == "two_qubit.c2_V_m2") {
    cfg.c2 = parse_double(key, value);
    return true;
  }
  if (key == "two_qubit.bprime2_per_m") {
    cfg.bprime2 = parse_double(key, value);
    return true;
  }
  if (key == "two_qubit.e1_V_m") {
    cfg.e1 = parse_double(key, value);
    return true;
  }
  if (key == "two_qubit.e2_V_m") {
    cfg.e2 = parse_double(key, value);
    return true;
  }
  if (key == "two_qubit.j_Hz") {
    cfg.j_hz = parse_double(key, value);
    return true;
  }
  if (key == "two_qubit.a2_per_m") {
    cfg.a2 = parse_double(key, value);
    return true;
  }
  if (key == "two_qubit.drive2_e_amp_V_m") {
    cfg.drive2_e_amp = parse_double(key, value);
    return true;
  }
  if (key == "integrator.dt_max_s") {
    cfg.integrator.dt_max = parse_double(key, value);
    return true;
  }
  if (key == "integrator.tol") {
    cfg.integrator.tol = parse_double(key, value);
    return true;
  }
  if (key == "output.dir") {
    cfg.out_dir = value;
    return true;
  }
  if (key == "output.formats") {
    cfg.formats = value;
    return true;
  }
  if (key == "output.samples") {
    cfg.samples = parse_int(key, value);
    return true;
  }
  return false;
}

}  // namespace detail

inline ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::vector<std::string> seen;
  std::stringstream stream(text);
  std::string line;
  int lineno = 0;
  while (std::getline(stream, line)) {
    ++lineno;
    const std::string stripped = detail::trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw config_error("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = detail::trim(stripped.substr(0, eq));
    const std::string value = detail::trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw config_error("config line " + std::to_string(lineno) + ": empty key");
    }
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
      throw config_error("config: duplicate key '" + key + "'");
    }
    seen.push_back(key);
    if (key.rfind("sweep.", 0) == 0) {
      const std::string target = key.substr(6);
      cfg.sweep.emplace_back(target, detail::split_list(value));
      continue;
    }
    if (!detail::apply_key(cfg, key, value)) {
      throw config_error("config: unknown key '" + key + "'");
    }
  }
  // swept keys must name known scalar settings; probe them on a scratch copy
  for (const auto& [key, values] : cfg.sweep) {
    if (key == "nucleus.spin" || key.rfind("output", 0) == 0 || key == "efg.mode") {
      throw config_error("config: key '" + key + "' cannot be swept");
    }
    if (values.empty()) throw config_error("config: empty sweep list for '" + key + "'");
    ExperimentConfig scratch = cfg;
    if (!detail::apply_key(scratch, key, values.front())) {
      throw config_error("config: unknown sweep key '" + key + "'");
    }
  }
  if (cfg.samples < 2 || cfg.samples > 1000000) {
    throw config_error("config: output.samples must be in [2, 1000000]");
  }
  if (cfg.formats != "csv" && cfg.formats != "json" && cfg.formats != "both") {
    throw config_error("config: output.formats must be csv, json or both");
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("config: cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

// ---------------------------------------------------------------------------
// resolution helpers
// ---------------------------------------------------------------------------

struct ResolvedEfg {
  EfgCoefficients coeffs;
  bool from_atom = false;
  double omega_used = 0.0;       // frequency entering the drive coefficients
  BPrimeResult bprime_detail;    // meaningful when from_atom
};

/// Coefficients either taken verbatim from the config or computed from the
/// atom model. In auto-frequency mode the static coefficients fix the
/// resonance first, which then feeds the drive coefficients.
inline ResolvedEfg resolve_efg(const ExperimentConfig& cfg,
                               const PhysicalConstants& pc = codata()) {
  ResolvedEfg r;
  if (cfg.efg_mode == ExperimentConfig::EfgMode::kGiven) {
    r.coeffs = cfg.given_coeffs;
    r.coeffs.validate();
    return r;
  }
  r.from_atom = true;
  AtomModel atom = cfg.atom;
  atom.b0 = cfg.b0;
  atom.validate();
  r.coeffs.c = coefficient_c(atom, pc);
  r.bprime_detail = coefficient_b_prime(atom, cfg.nprime_max, pc);
  r.coeffs.b_prime = r.bprime_detail.value;
  r.omega_used = cfg.omega_auto
                     ? resonance_omega_single(cfg.nucleus, r.coeffs, cfg.e0_static, cfg.b0, pc)
                     : cfg.omega;
  // a strong natural gradient can invert the top gap; the drive coefficients
  // depend on the drive's angular frequency magnitude
  if (r.omega_used != 0.0) {
    r.coeffs.a = coefficient_a(atom, std::fabs(r.omega_used), pc);
    r.coeffs.b = coefficient_b(atom, std::fabs(r.omega_used), pc);
  }
  return r;
}

inline DriveParams resolve_drive(const ExperimentConfig& cfg, const EfgCoefficients& coeffs,
                                 const PhysicalConstants& pc = codata()) {
  DriveParams d;
  d.e_amp = cfg.e_amp;
  d.phi = cfg.phi;
  d.e0_static = cfg.e0_static;
  d.b0 = cfg.b0;
  d.omega = cfg.omega_auto
                ? resonance_omega_single(cfg.nucleus, coeffs, cfg.e0_static, cfg.b0, pc)
                : cfg.omega;
  d.validate();
  return d;
}

inline double resolve_duration(const ExperimentConfig& cfg, const EfgCoefficients& coeffs,
                               const PhysicalConstants& pc = codata()) {
  if (cfg.has_angle == cfg.has_duration) {
    throw config_error("config: exactly one of pulse.angle_rad and pulse.duration_s required");
  }
  if (cfg.has_duration) {
    if (cfg.duration < 0.0) throw config_error("config: pulse.duration_s must be >= 0");
    return cfg.duration;
  }
  const double rate = rabi_rate(cfg.nucleus, coeffs, cfg.e_amp, pc);
  if (rate == 0.0) {
    throw std::invalid_argument(
        "pulse angle request needs a nonzero flip rate (spin >= 1, A, Q, E all nonzero); "
        "give pulse.duration_s instead");
  }
  double theta = std::fmod(cfg.angle, 2.0 * M_PI);
  if (theta < 0.0) theta += 2.0 * M_PI;
  return (rate > 0.0) ? theta / rate : (theta - 2.0 * M_PI) / rate;
}

// ---------------------------------------------------------------------------
// output helpers
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
}

inline std::string population_header(SpinQuantum s) {
  std::string h;
  for (int i = 0; i < s.dim(); ++i) {
    const int num = s.two_s - 2 * i;
    h += ",p_m";
    if (s.two_s % 2 == 0) {
      h += std::to_string(num / 2);
    } else {
      h += std::to_string(num) + "/2";
    }
  }
  return h;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

struct TrajectoryRow {
  double t = 0.0;
  std::vector<double> populations;
  double fidelity = 0.0;
  double leakage = 0.0;
};

struct SimulationResult {
  std::vector<TrajectoryRow> rows;
  double duration = 0.0;
  double omega = 0.0;
  double resonance_omega = 0.0;
  double f_rabi = 0.0;
  bool drive_vanishes = false;
  bool reference_valid = true;  // closed-form comparison available
};

/// Evolves the combined-drive model from |m = S> and samples populations plus
/// closed-form comparison columns on a uniform grid.
inline SimulationResult run_simulation(const ExperimentConfig& cfg,
                                       const PhysicalConstants& pc = codata()) {
  cfg.nucleus.validate();
  const ResolvedEfg efg = resolve_efg(cfg, pc);
  const DriveParams drive = resolve_drive(cfg, efg.coeffs, pc);
  const SpinOperators ops = make_spin_operators(cfg.nucleus.s);
  const int d = cfg.nucleus.s.dim();

  SimulationResult result;
  result.duration = resolve_duration(cfg, efg.coeffs, pc);
  result.omega = drive.omega;
  result.resonance_omega =
      resonance_omega_single(cfg.nucleus, efg.coeffs, cfg.e0_static, cfg.b0, pc);
  const double rate = rabi_rate(cfg.nucleus, efg.coeffs, drive.e_amp, pc);
  result.f_rabi = std::fabs(rate) / (2.0 * M_PI);

  const HamiltonianModel model = h_single(cfg.nucleus, ops, efg.coeffs, drive, pc);
  result.drive_vanishes = model.drive_vanishes;

  const bool on_resonance =
      std::fabs(drive.omega - result.resonance_omega) <=
      1e-6 * std::fabs(result.resonance_omega) + 1e-30;
  const bool driven = drive.e_amp > 0.0 && !model.drive_vanishes;
  result.reference_valid = !driven || on_resonance;

  const Matrix h_levels = h_lqse(cfg.nucleus, ops, efg.coeffs, cfg.e0_static, cfg.b0, pc);
  const double sv = cfg.nucleus.s.value();

  Vector psi = Vector::Zero(d);
  psi(0) = 1.0;
  double t_prev = 0.0;
  for (int k = 0; k < cfg.samples; ++k) {
    const double t = result.duration * k / (cfg.samples - 1);
    if (t > t_prev) psi = evolve_matrix(model, psi, t_prev, t, cfg.integrator);
    t_prev = t;

    TrajectoryRow row;
    row.t = t;
    row.populations.resize(d);
    for (int i = 0; i < d; ++i) row.populations[i] = std::norm(psi(i));
    double top2 = row.populations[0];
    if (d > 1) top2 += row.populations[1];
    row.leakage = 1.0 - top2;

    if (!result.reference_valid) {
      row.fidelity = std::numeric_limits<double>::quiet_NaN();
    } else if (driven) {
      Matrix u2 = analytic_single_propagator(cfg.nucleus, efg.coeffs, drive, t, pc);
      Vector ana = Vector::Zero(d);
      ana(0) = u2(0, 0) * std::exp(-kImag * sv * drive.omega * t);
      ana(1) = u2(1, 0) * std::exp(-kImag * (sv - 1.0) * drive.omega * t);
      row.fidelity = std::abs(ana.dot(psi));
    } else {
      // static model: exact diagonal phases
      Vector ana = Vector::Zero(d);
      ana(0) = std::exp(-kImag * h_levels(0, 0).real() * t);
      row.fidelity = std::abs(ana.dot(psi));
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

inline std::string trajectory_csv(const SimulationResult& sim, SpinQuantum s) {
  std::string out = "t_s" + detail::population_header(s) + ",fidelity,leakage\n";
  for (const auto& row : sim.rows) {
    out += detail::fmt17(row.t);
    for (double p : row.populations) out += "," + detail::fmt17(p);
    out += "," + detail::fmt17(row.fidelity) + "," + detail::fmt17(row.leakage) + "\n";
  }
  return out;
}

inline json trajectory_json(const SimulationResult& sim, SpinQuantum s) {
  json rows = json::array();
  for (const auto& row : sim.rows) {
    json r;
    r["t_s"] = row.t;
    r["populations"] = row.populations;
    if (std::isnan(row.fidelity)) {
      r["fidelity"] = nullptr;
    } else {
      r["fidelity"] = row.fidelity;
    }
    r["leakage"] = row.leakage;
    rows.push_back(std::move(r));
  }
  json out;
  out["spin"] = s.label();
  out["rows"] = std::move(rows);
  return out;
}

inline json summary_json(const ExperimentConfig& cfg, const SimulationResult& sim) {
  json out;
  out["subcommand"] = "simulate";
  out["spin"] = cfg.nucleus.s.label();
  out["duration_s"] = sim.duration;
  out["omega_rad_s"] = sim.omega;
  out["resonance_omega_rad_s"] = sim.resonance_omega;
  out["f_rabi_Hz"] = sim.f_rabi;
  out["drive_vanishes"] = sim.drive_vanishes;
  out["reference_valid"] = sim.reference_valid;
  const auto& last = sim.rows.back();
  out["final"]["t_s"] = last.t;
  out["final"]["populations"] = last.populations;
  if (std::isnan(last.fidelity)) {
    out["final"]["fidelity"] = nullptr;
  } else {
    out["final"]["fidelity"] = last.fidelity;
  }
  out["final"]["leakage"] = last.leakage;
  return out;
}

inline json pulse_json(const PulseSpec& p) {
  json out;
  out["e_amp_V_m"] = p.e_amp;
  out["phi_rad"] = p.phi;
  out["omega_rad_s"] = p.omega;
  out["duration_s"] = p.duration;
  return out;
}

inline json schedule_json(const GateSchedule& sched) {
  json segments = json::array();
  for (const auto& seg : sched.segments) {
    json s;
    switch (seg.kind) {
      case GateSchedule::Kind::kDrive1: s["kind"] = "drive1"; break;
      case GateSchedule::Kind::kDrive2: s["kind"] = "drive2"; break;
      case GateSchedule::Kind::kZShift1: s["kind"] = "z_shift1"; break;
      case GateSchedule::Kind::kZShift2: s["kind"] = "z_shift2"; break;
      case GateSchedule::Kind::kJWindow: s["kind"] = "j_window"; break;
    }
    s["duration_s"] = seg.duration;
    if (seg.kind == GateSchedule::Kind::kJWindow) s["j_Hz"] = seg.j_hz;
    if (seg.kind == GateSchedule::Kind::kZShift1) s["e1_V_m"] = seg.e1;
    if (seg.kind == GateSchedule::Kind::kZShift2) s["e2_V_m"] = seg.e2;
    if (seg.kind == GateSchedule::Kind::kDrive1 || seg.kind == GateSchedule::Kind::kDrive2) {
      s["pulse"] = pulse_json(seg.pulse);
      s["a_per_m"] = seg.a_per_m;
    }
    segments.push_back(std::move(s));
  }
  json out;
  out["segments"] = std::move(segments);
  out["total_duration_s"] = sched.total_duration();
  return out;
}

struct GateRunResult {
  json schedule;
  json fidelity;
};

inline TwoQubitParams two_qubit_params(const ExperimentConfig& cfg,
                                       const EfgCoefficients& coeffs1) {
  TwoQubitParams p;
  p.nucleus1 = cfg.nucleus;
  p.nucleus2 = cfg.nucleus2;
  p.c1 = coeffs1.c;
  p.b_prime1 = coeffs1.b_prime;
  p.c2 = cfg.c2;
  p.b_prime2 = cfg.bprime2;
  p.e1 = cfg.e1;
  p.e2 = cfg.e2;
  p.b0 = cfg.b0;
  return p;
}

inline GateRunResult run_gate(const ExperimentConfig& cfg, const PhysicalConstants& pc = codata()) {
  cfg.nucleus.validate();
  const ResolvedEfg efg = resolve_efg(cfg, pc);
  GateRunResult result;

  if (cfg.has_two_qubit) {
    const TwoQubitParams params = two_qubit_params(cfg, efg.coeffs);
    GateSchedule sched;
    Matrix target;
    if (cfg.gate_name == "cz") {
      sched = synthesize_cz(params, cfg.j_hz, pc);
      target = ideal_cz();
    } else {
      sched = synthesize_cnot(params, cfg.j_hz, cfg.a2, cfg.drive2_e_amp, pc);
      target = ideal_cnot();
    }
    const GateFidelityReport rep =
        score_schedule(params, sched, target, cfg.gate_name, cfg.integrator, pc);
    result.schedule = schedule_json(sched);
    result.fidelity["target"] = rep.target_name;
    result.fidelity["fidelity"] = rep.fidelity;
    result.fidelity["leakage"] = rep.leakage;
    return result;
  }

  if (!cfg.has_angle) {
    throw config_error("config: single-qubit gate needs pulse.angle_rad");
  }
  const PulseSpec pulse = pulse_for_rotation(cfg.nucleus, efg.coeffs, cfg.e_amp, cfg.axis_phi,
                                             cfg.angle, cfg.b0, cfg.e0_static, pc);
  DriveParams drive;
  drive.e_amp = pulse.e_amp;
  drive.omega = pulse.omega;
  drive.phi = pulse.phi;
  drive.e0_static = cfg.e0_static;
  drive.b0 = cfg.b0;
  const SpinOperators ops = make_spin_operators(cfg.nucleus.s);
  Vector psi0 = Vector::Zero(cfg.nucleus.s.dim());
  psi0(0) = 1.0;
  const LeakageReport rep = leakage_report(cfg.nucleus, ops, efg.coeffs, drive, psi0,
                                           pulse.duration, cfg.integrator, pc);
  json sched;
  sched["segments"] = json::array({json{{"kind", "drive1"}, {"pulse", pulse_json(pulse)}}});
  sched["total_duration_s"] = pulse.duration;
  result.schedule = std::move(sched);
  result.fidelity["target"] = "rotation";
  result.fidelity["angle_rad"] = cfg.angle;
  result.fidelity["axis_phi_rad"] = cfg.axis_phi;
  result.fidelity["fidelity"] = rep.fidelity_vs_analytic;
  result.fidelity["leakage"] = rep.leakage;
  return result;
}

inline json run_efg(const ExperimentConfig& cfg, const PhysicalConstants& pc = codata()) {
  const ResolvedEfg efg = resolve_efg(cfg, pc);
  json out;
  out["subcommand"] = "efg";
  out["mode"] = efg.from_atom ? "hydrogenic" : "given";
  out["a_per_m"] = efg.coeffs.a;
  out["b_per_m"] = efg.coeffs.b;
  out["c_V_m2"] = efg.coeffs.c;
  out["bprime_per_m"] = efg.coeffs.b_prime;
  if (efg.from_atom) {
    out["omega_rad_s_used"] = efg.omega_used;
    out["bprime_convergence"]["n_prime_max"] = cfg.nprime_max;
    out["bprime_convergence"]["last_increment_per_m"] = efg.bprime_detail.last_increment;
    out["bprime_convergence"]["converged"] = efg.bprime_detail.converged;
    out["a_rough_estimate_per_m"] =
        (efg.omega_used > 0.0) ? estimate_a_rough(pc, efg.omega_used) : 0.0;
  }
  return out;
}

inline json perf_json() {
  json rows = json::array();
  for (const auto& r : reference_rows()) {
    json row;
    row["method"] = r.method_label;
    row["t2_star_s"] = r.t2_star;
    row["f_rabi_Hz"] = r.f_rabi;
    row["n_flips"] = r.n_flips;
    row["n_flips_2dp"] = round_2dp(r.n_flips);
    rows.push_back(std::move(row));
  }
  json out;
  out["subcommand"] = "perf";
  out["rows"] = std::move(rows);
  return out;
}

struct SweepRow {
  int index = 0;
  std::vector<double> values;
  double f_rabi = std::numeric_limits<double>::quiet_NaN();
  double duration = std::numeric_limits<double>::quiet_NaN();
  double fidelity = std::numeric_limits<double>::quiet_NaN();
  double leakage = std::numeric_limits<double>::quiet_NaN();
  std::string error_code = "ok";
  std::string error_message;
};

/// Cartesian sweep over the configured keys; grid points run on a worker
/// pool and rows are assembled in grid order. Failed points become
/// error-coded rows instead of aborting the sweep.
inline std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg,
                                       const PhysicalConstants& pc = codata()) {
  if (cfg.sweep.empty()) throw config_error("config: sweep needs at least one sweep.* key");
  std::vector<size_t> sizes;
  size_t total = 1;
  for (const auto& [key, values] : cfg.sweep) {
    sizes.push_back(values.size());
    total *= values.size();
  }
  if (total > 100000) throw config_error("config: sweep grid too large");

  std::vector<SweepRow> rows(total);
  std::atomic<size_t> next{0};
  const unsigned n_workers =
      std::max(1u, std::min(std::thread::hardware_concurrency(), 16u));

  auto worker = [&]() {
    for (size_t i = next.fetch_add(1); i < total; i = next.fetch_add(1)) {
      SweepRow row;
      row.index = static_cast<int>(i);
      ExperimentConfig point = cfg;
      point.sweep.clear();
      // decode the grid index, first key outermost
      size_t rem = i;
      std::vector<size_t> digit(sizes.size());
      for (size_t k = sizes.size(); k-- > 0;) {
        digit[k] = rem % sizes[k];
        rem /= sizes[k];
      }
      try {
        for (size_t k = 0; k < cfg.sweep.size(); ++k) {
          const std::string& value = cfg.sweep[k].second[digit[k]];
          detail::apply_key(point, cfg.sweep[k].first, value);
          row.values.push_back(detail::parse_double(cfg.sweep[k].first, value));
        }
        ExperimentConfig quiet = point;
        quiet.samples = 2;  // endpoints only; the sweep reports final values
        const SimulationResult sim = run_simulation(quiet, pc);
        row.f_rabi = sim.f_rabi;
        row.duration = sim.duration;
        row.fidelity = sim.rows.back().fidelity;
        row.leakage = sim.rows.back().leakage;
      } catch (const config_error& e) {
        row.error_code = "config_parse";
        row.error_message = e.what();
      } catch (const numerical_error& e) {
        row.error_code = "numerical";
        row.error_message = e.what();
      } catch (const std::invalid_argument& e) {
        row.error_code = "domain";
        row.error_message = e.what();
      }
      while (row.values.size() < cfg.sweep.size()) {
        row.values.push_back(std::numeric_limits<double>::quiet_NaN());
      }
      rows[i] = std::move(row);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return rows;
}

inline std::string sweep_csv(const ExperimentConfig& cfg, const std::vector<SweepRow>& rows) {
  std::string out = "grid_index";
  for (const auto& [key, values] : cfg.sweep) out += "," + key;
  out += ",f_rabi_Hz,duration_s,fidelity,leakage,error_code\n";
  for (const auto& row : rows) {
    out += std::to_string(row.index);
    for (double v : row.values) out += "," + detail::fmt17(v);
    out += "," + detail::fmt17(row.f_rabi) + "," + detail::fmt17(row.duration) + "," +
           detail::fmt17(row.fidelity) + "," + detail::fmt17(row.leakage) + "," + row.error_code +
           "\n";
  }
  return out;
}

inline json sweep_json(const ExperimentConfig& cfg, const std::vector<SweepRow>& rows) {
  json out;
  json keys = json::array();
  for (const auto& [key, values] : cfg.sweep) keys.push_back(key);
  out["subcommand"] = "sweep";
  out["keys"] = std::move(keys);
  json jrows = json::array();
  for (const auto& row : rows) {
    json r;
    r["grid_index"] = row.index;
    r["values"] = row.values;
    r["f_rabi_Hz"] = row.f_rabi;
    r["duration_s"] = row.duration;
    if (std::isnan(row.fidelity)) {
      r["fidelity"] = nullptr;
    } else {
      r["fidelity"] = row.fidelity;
    }
    if (std::isnan(row.leakage)) {
      r["leakage"] = nullptr;
    } else {
      r["leakage"] = row.leakage;
    }
    r["error_code"] = row.error_code;
    if (!row.error_message.empty()) r["error_message"] = row.error_message;
    jrows.push_back(std::move(r));
  }
  out["rows"] = std::move(jrows);
  return out;
}

// ---------------------------------------------------------------------------
// top-level runner
// ---------------------------------------------------------------------------

/// Runs one subcommand against a parsed config, writing output files into
/// out_dir. `format` is csv, json or both (trajectory-style outputs only).
inline void run_experiment(const std::string& subcommand, const ExperimentConfig& cfg_in,
                           const std::string& out_dir_override, const std::string& format_override,
                           const PhysicalConstants& pc = codata()) {
  ExperimentConfig cfg = cfg_in;
  if (!out_dir_override.empty()) cfg.out_dir = out_dir_override;
  if (!format_override.empty()) cfg.formats = format_override;
  if (cfg.formats != "csv" && cfg.formats != "json" && cfg.formats != "both") {
    throw config_error("format must be csv, json or both");
  }
  const std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  const bool want_csv = cfg.formats != "json";
  const bool want_json = cfg.formats != "csv";

  if (subcommand == "simulate") {
    const SimulationResult sim = run_simulation(cfg, pc);
    if (want_csv) detail::write_text(dir / "trajectory.csv", trajectory_csv(sim, cfg.nucleus.s));
    if (want_json) {
      detail::write_text(dir / "trajectory.json",
                         trajectory_json(sim, cfg.nucleus.s).dump(2) + "\n");
    }
    detail::write_text(dir / "summary.json", summary_json(cfg, sim).dump(2) + "\n");
  } else if (subcommand == "gate") {
    const GateRunResult gate = run_gate(cfg, pc);
    detail::write_text(dir / "schedule.json", gate.schedule.dump(2) + "\n");
    detail::write_text(dir / "fidelity.json", gate.fidelity.dump(2) + "\n");
  } else if (subcommand == "efg") {
    detail::write_text(dir / "efg.json", run_efg(cfg, pc).dump(2) + "\n");
  } else if (subcommand == "perf") {
    detail::write_text(dir / "perf.txt", render_table(reference_rows()));
    detail::write_text(dir / "perf.json", perf_json().dump(2) + "\n");
  } else if (subcommand == "sweep") {
    const std::vector<SweepRow> rows = run_sweep(cfg, pc);
    if (want_csv) detail::write_text(dir / "sweep.csv", sweep_csv(cfg, rows));
    if (want_json) detail::write_text(dir / "sweep.json", sweep_json(cfg, rows).dump(2) + "\n");
  } else {
    throw config_error("unknown subcommand '" + subcommand + "'");
  }
}

}  // namespace ner
