#include "run_config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <regex>
#include <set>
#include <sstream>

namespace fluxcz::cli {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"q0", {"e_c", "e_l", "e_j", "flux_ext"}},
      {"q1", {"e_c", "e_l", "e_j", "flux_ext"}},
      {"coupler", {"e_c", "e_j_max"}},
      {"couplings", {"j_c0", "j_c1", "j_01"}},
      {"truncation", {"flux_levels", "coupler_levels", "fluxonium_basis", "charge_cutoff"}},
      {"spectrum", {"coupler_fluxes"}},
      {"reference", {}},  // keys checked by pattern
      {"drive",
       {"flux_static", "drive_amp", "drive_freq", "drive_phase", "ramp_time", "initial", "observe"}},
      {"scan", {"freqs", "times", "amps", "fixed_time", "shift_fluxes"}},
      {"floquet", {"flux_static", "amps", "pair", "window", "resolution"}},
      {"gate",
       {"mode", "flux_idle", "flux_interaction", "bias_ramp", "drive_ramp", "gate_time",
        "freq_bounds", "amp_bounds", "optimize_bias", "bias_bounds", "restarts", "evaluations",
        "stagnation", "seed_freq", "seed_amp", "t1_22", "tphi_22", "record_step"}},
      {"sweep", {"gate_times", "drive_ramps"}},
      {"run", {"out", "workers", "dt_ps"}},
  };
  return s;
}

const std::regex& reference_key() {
  static const std::regex r(R"((q[01])_([fn])([0-9])([0-9])|coupler_(flux|w01|w12))");
  return r;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> tokens(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

double to_double(const std::string& path, const std::string& text) {
  const std::string t = trim(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw ConfigError(path, "expected a number, got '" + t + "'");
  }
  if (used != t.size()) throw ConfigError(path, "expected a number, got '" + t + "'");
  if (!std::isfinite(v)) throw ConfigError(path, "must be finite");
  return v;
}

int to_int(const std::string& path, const std::string& text) {
  const double v = to_double(path, text);
  if (v != std::floor(v) || std::abs(v) > 1e9)
    throw ConfigError(path, "expected an integer, got '" + trim(text) + "'");
  return static_cast<int>(v);
}

bool to_bool(const std::string& path, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError(path, "expected true or false, got '" + t + "'");
}

std::pair<double, double> to_range(const std::string& path, const std::string& text) {
  const auto t = tokens(text);
  if (t.size() != 2) throw ConfigError(path, "expected two numbers 'lo hi'");
  const std::pair<double, double> r{to_double(path, t[0]), to_double(path, t[1])};
  if (!(r.first < r.second)) throw ConfigError(path, "lower bound must be below the upper bound");
  return r;
}

BareLabel to_label(const std::string& path, const std::string& text) {
  try {
    return BareLabel::parse(trim(text));
  } catch (const std::exception& e) {
    throw ConfigError(path, e.what());
  }
}

std::vector<BareLabel> to_labels(const std::string& path, const std::string& text) {
  std::vector<BareLabel> out;
  for (const auto& t : tokens(text)) out.push_back(to_label(path, t));
  return out;
}

std::vector<double> to_list(const std::string& path, const std::string& text) {
  std::vector<double> out;
  for (const auto& t : tokens(text)) out.push_back(to_double(path, t));
  return out;
}

// Typed access to one section with field-path errors.
class Section {
 public:
  Section(const pt::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  bool present() const { return tree_ != nullptr; }
  std::string path(const std::string& key) const { return name_ + "." + key; }

  std::optional<std::string> raw(const std::string& key) const {
    if (!tree_) return std::nullopt;
    const auto v = tree_->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return trim(*v);
  }

  double number(const std::string& key, double fallback) const {
    const auto v = raw(key);
    return v ? to_double(path(key), *v) : fallback;
  }
  int integer(const std::string& key, int fallback) const {
    const auto v = raw(key);
    return v ? to_int(path(key), *v) : fallback;
  }
  bool flag(const std::string& key, bool fallback) const {
    const auto v = raw(key);
    return v ? to_bool(path(key), *v) : fallback;
  }
  std::pair<double, double> range(const std::string& key, std::pair<double, double> fallback) const {
    const auto v = raw(key);
    return v ? to_range(path(key), *v) : fallback;
  }
  std::vector<double> grid(const std::string& key) const {
    const auto v = raw(key);
    return v ? parse_grid(path(key), *v) : std::vector<double>{};
  }
  std::vector<double> list(const std::string& key, std::vector<double> fallback) const {
    const auto v = raw(key);
    return v ? to_list(path(key), *v) : fallback;
  }

 private:
  const pt::ptree* tree_;
  std::string name_;
};

void positive(const std::string& path, double v) {
  if (!(v > 0.0)) throw ConfigError(path, "must be positive");
}

void non_negative(const std::string& path, double v) {
  if (!(v >= 0.0)) throw ConfigError(path, "must be non-negative");
}

FluxoniumParams read_fluxonium(const Section& s, const std::string& name) {
  if (!s.present()) throw ConfigError(name, "section is required");
  FluxoniumParams p;
  p.e_c = s.number("e_c", 0.0);
  p.e_l = s.number("e_l", 0.0);
  p.e_j = s.number("e_j", 0.0);
  p.phi_ext = 2.0 * std::numbers::pi * s.number("flux_ext", 0.5);
  positive(s.path("e_c"), p.e_c);
  positive(s.path("e_l"), p.e_l);
  non_negative(s.path("e_j"), p.e_j);
  return p;
}

template <class F>
void tagged(const std::string& path, F&& check) {
  try {
    check();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(path, e.what());
  }
}

void check_grid_domain(const std::string& path, const std::vector<double>& g, double lo, double hi) {
  for (double v : g)
    if (!(v >= lo && v <= hi))
      throw ConfigError(path, "value " + std::to_string(v) + " outside [" + std::to_string(lo) +
                                  ", " + std::to_string(hi) + "]");
}

}  // namespace

std::vector<double> parse_grid(const std::string& path, const std::string& text) {
  const std::string t = trim(text);
  if (t.find(':') == std::string::npos) {
    auto v = to_list(path, t);
    if (v.empty()) throw ConfigError(path, "empty grid");
    return v;
  }
  std::vector<std::string> parts;
  std::stringstream in(t);
  for (std::string p; std::getline(in, p, ':');) parts.push_back(p);
  if (parts.size() != 3) throw ConfigError(path, "grid must be 'start:stop:count'");
  const double a = to_double(path, parts[0]);
  const double b = to_double(path, parts[1]);
  const int n = to_int(path, parts[2]);
  if (n < 1) throw ConfigError(path, "empty grid");
  if (n == 1) {
    if (a != b) throw ConfigError(path, "a single-point grid needs start == stop");
    return {a};
  }
  std::vector<double> g(n);
  for (int k = 0; k < n; ++k) g[k] = a + (b - a) * k / (n - 1);
  return g;
}

RunConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("line " + std::to_string(e.line()), e.message());
  }

  for (const auto& [name, sec] : tree) {
    const auto it = schema().find(name);
    if (sec.empty()) throw ConfigError(name, "key outside any section");
    if (it == schema().end()) throw ConfigError(name, "unknown section");
    for (const auto& [key, value] : sec) {
      if (!value.empty()) throw ConfigError(name + "." + key, "nested keys are not supported");
      const bool known = name == "reference" ? std::regex_match(key, reference_key())
                                             : it->second.count(key) > 0;
      if (!known) throw ConfigError(name + "." + key, "unknown key");
    }
  }
  auto section = [&](const std::string& name) {
    const auto c = tree.get_child_optional(name);
    return Section(c ? &*c : nullptr, name);
  };

  RunConfig cfg;
  CompositeParams& p = cfg.circuit;
  p.q0 = read_fluxonium(section("q0"), "q0");
  p.q1 = read_fluxonium(section("q1"), "q1");

  const Section coupler = section("coupler");
  if (!coupler.present()) throw ConfigError("coupler", "section is required");
  p.coupler.e_c = coupler.number("e_c", 0.0);
  p.coupler.e_j_max = coupler.number("e_j_max", 0.0);
  positive("coupler.e_c", p.coupler.e_c);
  positive("coupler.e_j_max", p.coupler.e_j_max);

  const Section couplings = section("couplings");
  if (!couplings.present()) throw ConfigError("couplings", "section is required");
  p.j_c0 = couplings.number("j_c0", 0.0);
  p.j_c1 = couplings.number("j_c1", 0.0);
  p.j_01 = couplings.number("j_01", 0.0);

  const Section trunc = section("truncation");
  p.n_flux_levels = trunc.integer("flux_levels", p.n_flux_levels);
  p.n_coupler_levels = trunc.integer("coupler_levels", p.n_coupler_levels);
  p.fluxonium_basis = trunc.integer("fluxonium_basis", p.fluxonium_basis);
  cfg.charge_cutoff = trunc.integer("charge_cutoff", cfg.charge_cutoff);
  if (p.n_flux_levels < 3) throw ConfigError("truncation.flux_levels", "must be at least 3");
  if (p.n_coupler_levels < 2) throw ConfigError("truncation.coupler_levels", "must be at least 2");
  if (p.fluxonium_basis < p.n_flux_levels)
    throw ConfigError("truncation.fluxonium_basis", "must be at least flux_levels");
  if (cfg.charge_cutoff < 5) throw ConfigError("truncation.charge_cutoff", "must be at least 5");
  tagged("circuit", [&] { p.validate(); });

  cfg.coupler_fluxes = section("spectrum").list("coupler_fluxes", cfg.coupler_fluxes);
  check_grid_domain("spectrum.coupler_fluxes", cfg.coupler_fluxes, -0.49, 0.49);

  if (const auto ref = tree.get_child_optional("reference")) {
    std::map<std::string, std::vector<double>> coupler_ref;
    for (const auto& [key, value] : *ref) {
      const std::string path = "reference." + key;
      std::smatch m;
      std::regex_match(key, m, reference_key());
      if (m[5].matched) {
        coupler_ref[m[5]] = to_list(path, value.data());
        continue;
      }
      ReferenceValue r;
      r.circuit = m[1];
      r.kind = m[2].str()[0];
      r.i = m[3].str()[0] - '0';
      r.j = m[4].str()[0] - '0';
      if (r.i == r.j) throw ConfigError(path, "needs two distinct levels");
      r.value = to_double(path, value.data());
      cfg.reference.push_back(r);
    }
    if (!coupler_ref.empty()) {
      const auto& f = coupler_ref["flux"];
      const auto& a = coupler_ref["w01"];
      const auto& b = coupler_ref["w12"];
      if (f.size() != a.size() || f.size() != b.size())
        throw ConfigError("reference.coupler_flux",
                          "coupler_flux, coupler_w01 and coupler_w12 need equal lengths");
      check_grid_domain("reference.coupler_flux", f, -0.49, 0.49);
      for (std::size_t k = 0; k < f.size(); ++k) cfg.coupler_reference.push_back({f[k], a[k], b[k]});
    }
  }

  if (const Section s = section("drive"); s.present()) {
    DriveSection d;
    d.flux_static = s.number("flux_static", d.flux_static);
    d.drive_amp = s.number("drive_amp", d.drive_amp);
    d.drive_freq = s.number("drive_freq", d.drive_freq);
    d.drive_phase = s.number("drive_phase", d.drive_phase);
    d.ramp_time = s.number("ramp_time", d.ramp_time);
    if (const auto v = s.raw("initial")) d.initial = *v;
    // "computational" selects the summed computational-subspace population.
    if (const auto v = s.raw("observe"))
      d.observe = *v == "computational" ? std::vector<BareLabel>{} : to_labels("drive.observe", *v);
    non_negative("drive.drive_amp", d.drive_amp);
    positive("drive.drive_freq", d.drive_freq);
    non_negative("drive.ramp_time", d.ramp_time);
    if (!(std::abs(d.flux_static) < 0.5)) throw ConfigError("drive.flux_static", "must lie in (-0.5, 0.5)");
    tagged("drive.initial", [&] { initial_state(d); });
    cfg.drive = d;
  }

  if (const Section s = section("scan"); s.present()) {
    ScanSection sc;
    sc.freqs = s.grid("freqs");
    sc.times = s.grid("times");
    sc.amps = s.grid("amps");
    sc.shift_fluxes = s.grid("shift_fluxes");
    sc.fixed_time = s.number("fixed_time", 0.0);
    check_grid_domain("scan.freqs", sc.freqs, 1e-9, 1e6);
    check_grid_domain("scan.times", sc.times, 0.0, 1e7);
    check_grid_domain("scan.amps", sc.amps, 0.0, 0.49);
    check_grid_domain("scan.shift_fluxes", sc.shift_fluxes, -0.49, 0.49);
    non_negative("scan.fixed_time", sc.fixed_time);
    cfg.scan = sc;
  }

  if (const Section s = section("floquet"); s.present()) {
    FloquetSection f;
    f.flux_static = s.number("flux_static", f.flux_static);
    f.amps = s.grid("amps");
    f.window = s.range("window", f.window);
    f.resolution = s.number("resolution", f.resolution);
    if (const auto v = s.raw("pair")) {
      const auto labels = to_labels("floquet.pair", *v);
      if (labels.size() != 2) throw ConfigError("floquet.pair", "expected two labels");
      f.pair = {labels[0], labels[1]};
    }
    if (f.pair.first == f.pair.second) throw ConfigError("floquet.pair", "labels must differ");
    positive("floquet.resolution", f.resolution);
    positive("floquet.window", f.window.first);
    check_grid_domain("floquet.amps", f.amps, 0.0, 0.49);
    if (!(std::abs(f.flux_static) < 0.5)) throw ConfigError("floquet.flux_static", "must lie in (-0.5, 0.5)");
    cfg.floquet = f;
  }

  if (const Section s = section("gate"); s.present()) {
    GateSection g;
    GateConfig& c = g.config;
    if (const auto v = s.raw("mode")) tagged("gate.mode", [&] { c.mode = parse_bias_mode(*v); });
    c.flux_idle = s.number("flux_idle", c.flux_idle);
    c.flux_interaction = s.number("flux_interaction", c.flux_interaction);
    c.bias_ramp = s.number("bias_ramp", c.bias_ramp);
    c.drive_ramp = s.number("drive_ramp", c.drive_ramp);
    c.gate_time = s.number("gate_time", c.gate_time);
    c.freq_bounds = s.range("freq_bounds", c.freq_bounds);
    c.amp_bounds = s.range("amp_bounds", c.amp_bounds);
    c.optimize_bias = s.flag("optimize_bias", c.optimize_bias);
    c.bias_bounds = s.range("bias_bounds", c.bias_bounds);
    tagged("gate", [&] { c.validate(); });

    g.optimizer.restarts = s.integer("restarts", g.optimizer.restarts);
    g.optimizer.evaluations_per_restart = s.integer("evaluations", g.optimizer.evaluations_per_restart);
    g.optimizer.stagnation = s.number("stagnation", g.optimizer.stagnation);
    if (g.optimizer.restarts < 3) throw ConfigError("gate.restarts", "must be at least 3");
    if (g.optimizer.evaluations_per_restart < 10)
      throw ConfigError("gate.evaluations", "must be at least 10");
    positive("gate.stagnation", g.optimizer.stagnation);

    const auto sf = s.raw("seed_freq");
    const auto sa = s.raw("seed_amp");
    if (sf.has_value() != sa.has_value())
      throw ConfigError(sf ? "gate.seed_amp" : "gate.seed_freq", "seed_freq and seed_amp go together");
    if (sf) g.seed = CzSeed{to_double("gate.seed_freq", *sf), to_double("gate.seed_amp", *sa)};

    const auto t1 = s.raw("t1_22");
    const auto tp = s.raw("tphi_22");
    if (t1.has_value() != tp.has_value())
      throw ConfigError(t1 ? "gate.tphi_22" : "gate.t1_22", "t1_22 and tphi_22 go together");
    if (t1) {
      g.coherence = CoherenceTimes{to_double("gate.t1_22", *t1), to_double("gate.tphi_22", *tp)};
      positive("gate.t1_22", g.coherence->t1_22);
      positive("gate.tphi_22", g.coherence->tphi_22);
    }
    g.record_step = s.number("record_step", g.record_step);
    positive("gate.record_step", g.record_step);

    const Section sw = section("sweep");
    g.sweep_gate_times = sw.grid("gate_times");
    g.sweep_drive_ramps = sw.present() && sw.raw("drive_ramps") ? sw.grid("drive_ramps")
                                                                : std::vector<double>{c.drive_ramp};
    for (double ramp : g.sweep_drive_ramps) {
      GateConfig probe = c;
      probe.drive_ramp = ramp;
      for (double tg : g.sweep_gate_times) {
        probe.gate_time = tg;
        if (tg < 2.0 * ramp + 10.0)
          throw ConfigError("sweep.gate_times", "gate time " + std::to_string(tg) +
                                                    " ns below 2 drive_ramp + 10 ns");
        tagged("sweep.gate_times", [&] { probe.validate(); });
      }
    }
    cfg.gate = g;
  } else if (section("sweep").present()) {
    throw ConfigError("sweep", "needs a [gate] section");
  }

  const Section run = section("run");
  if (const auto v = run.raw("out")) cfg.out = *v;
  cfg.workers = run.integer("workers", cfg.workers);
  cfg.dt_ps = run.number("dt_ps", cfg.dt_ps);
  if (cfg.workers < 1) throw ConfigError("run.workers", "must be at least 1");
  positive("run.dt_ps", cfg.dt_ps);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void require_for_command(const RunConfig& cfg, const std::string& command) {
  auto need = [](bool ok, const std::string& path) {
    if (!ok) throw ConfigError(path, "required by this command");
  };
  auto need_grid = [](const std::vector<double>& g, const std::string& path) {
    if (g.empty()) throw ConfigError(path, "empty grid");
  };
  if (command == "spectrum") return;
  if (command == "shift-scan") {
    need(cfg.scan.has_value(), "scan");
    need_grid(cfg.scan->shift_fluxes, "scan.shift_fluxes");
  } else if (command == "chevron" || command == "amplitude") {
    need(cfg.drive.has_value(), "drive");
    need(cfg.scan.has_value(), "scan");
    need_grid(cfg.scan->freqs, "scan.freqs");
    const bool chevron = command == "chevron";
    if (chevron) {
      need_grid(cfg.scan->times, "scan.times");
      for (std::size_t k = 1; k < cfg.scan->times.size(); ++k)
        if (!(cfg.scan->times[k] > cfg.scan->times[k - 1]))
          throw ConfigError("scan.times", "must be strictly increasing");
    } else {
      need_grid(cfg.scan->amps, "scan.amps");
      positive("scan.fixed_time", cfg.scan->fixed_time);
    }
    const DriveSection& d = *cfg.drive;
    const double tg = chevron ? cfg.scan->times.back() : cfg.scan->fixed_time;
    tagged("drive", [&] {
      ParametricPulse{d.flux_static, d.drive_amp, cfg.scan->freqs.front(), d.drive_phase,
                      d.ramp_time, std::max(tg, 2.0 * d.ramp_time)}
          .validate();
    });
  } else if (command == "floquet") {
    need(cfg.floquet.has_value(), "floquet");
    need_grid(cfg.floquet->amps, "floquet.amps");
  } else if (command == "gate-opt") {
    need(cfg.gate.has_value(), "gate");
  } else if (command == "gate-sweep") {
    need(cfg.gate.has_value(), "gate");
    need_grid(cfg.gate->sweep_gate_times, "sweep.gate_times");
  } else {
    throw ConfigError("command", "unknown command '" + command + "'");
  }
}

InitialState initial_state(const DriveSection& d) {
  if (d.initial == "superposition") return InitialState::computational_superposition();
  return InitialState::basis(BareLabel::parse(d.initial));
}

}  // namespace fluxcz::cli
