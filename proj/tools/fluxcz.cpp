// Command-line driver: spectra, shift scans, time-domain maps, Floquet
// extraction and CZ optimization. Exit codes: 0 success, 1 point failures or
// reference mismatch, 2 invalid configuration or arguments, 3 fatal error.

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fluxcz/circuit_spectra.hpp"
#include "fluxcz/composite_system.hpp"
#include "fluxcz/dynamics.hpp"
#include "fluxcz/effective_model.hpp"
#include "fluxcz/floquet.hpp"
#include "fluxcz/gate_lab.hpp"
#include "run_config.hpp"
#include "run_store.hpp"

using namespace fluxcz;
using namespace fluxcz::cli;

namespace {

constexpr int kFluxoniumLevels = 5;
constexpr int kCouplerLevels = 4;

struct Options {
  std::string command;
  std::string config_path;
  std::string out;
  int workers = 0;
  double dt_ps = 0.0;
  bool resume = false;
};

struct Outcome {
  json summary = json::object();
  json failures = json::array();
  bool mismatch = false;
};

json fluxonium_json(const FluxoniumParams& p) {
  return {{"e_c", p.e_c}, {"e_l", p.e_l}, {"e_j", p.e_j}, {"phi_ext", p.phi_ext}};
}

json model_json(const RunConfig& cfg) {
  const CompositeParams& p = cfg.circuit;
  return {{"q0", fluxonium_json(p.q0)},
          {"q1", fluxonium_json(p.q1)},
          {"coupler", {{"e_c", p.coupler.e_c}, {"e_j_max", p.coupler.e_j_max}}},
          {"couplings", {{"j_c0", p.j_c0}, {"j_c1", p.j_c1}, {"j_01", p.j_01}}},
          {"truncation",
           {{"flux_levels", p.n_flux_levels},
            {"coupler_levels", p.n_coupler_levels},
            {"fluxonium_basis", p.fluxonium_basis},
            {"charge_cutoff", cfg.charge_cutoff}}}};
}

std::string point_key(const json& parameters, const json& point) {
  return hex64(fnv1a(parameters.dump() + "|" + point.dump()));
}

json labels_json(const std::vector<BareLabel>& ls) {
  json j = json::array();
  for (const auto& l : ls) j.push_back(l.str());
  return j;
}

std::string label_cell(const BareLabel& l) {
  return std::to_string(l.q0) + std::to_string(l.c) + std::to_string(l.q1);
}

void record_failure(Outcome& o, const json& point, const std::string& message) {
  o.failures.push_back({{"point", point}, {"message", message}});
}

PropagatorOptions propagator_options(const RunConfig& cfg) {
  PropagatorOptions o;
  o.dt = cfg.dt_ps * 1e-3;
  return o;
}

// Rejects a time step that cannot resolve the fastest frequency before any
// output is written.
void check_dt(const CompositeModel& model, const RunConfig& cfg, const FluxSchedule& s) {
  try {
    check_time_step(model, s, cfg.dt_ps * 1e-3);
  } catch (const std::exception& e) {
    throw ConfigError("run.dt_ps", e.what());
  }
}

// ---------------------------------------------------------------- spectrum

Outcome cmd_spectrum(const RunConfig& cfg, RunStore& store, json& params) {
  Outcome out;
  Csv csv({"circuit", "flux", "i", "j", "frequency", "charge_element"});
  std::map<std::string, SpectralData> fl;
  const CompositeParams& p = cfg.circuit;
  fl["q0"] = diagonalize_fluxonium(p.q0, p.fluxonium_basis, kFluxoniumLevels);
  fl["q1"] = diagonalize_fluxonium(p.q1, p.fluxonium_basis, kFluxoniumLevels);
  for (const auto& [name, s] : fl) {
    const double flux = (name == "q0" ? p.q0 : p.q1).phi_ext / (2.0 * std::numbers::pi);
    for (int i = 0; i < s.n_levels; ++i)
      for (int j = i + 1; j < s.n_levels; ++j)
        csv.row({name, num(flux), std::to_string(i), std::to_string(j), num(s.transition(i, j)),
                 num(s.charge_element(i, j))});
  }
  std::map<double, SpectralData> cp;
  for (double f : cfg.coupler_fluxes) {
    const SpectralData s =
        diagonalize_transmon_charge({p.coupler.e_c, p.coupler.e_j_max, f}, cfg.charge_cutoff, kCouplerLevels);
    cp[f] = s;
    for (int i = 0; i < s.n_levels; ++i)
      for (int j = i + 1; j < s.n_levels; ++j)
        csv.row({"coupler", num(f), std::to_string(i), std::to_string(j), num(s.transition(i, j)),
                 num(s.charge_element(i, j))});
  }
  store.write_csv("spectrum.csv", csv);
  params["coupler_fluxes"] = cfg.coupler_fluxes;

  if (cfg.reference.empty() && cfg.coupler_reference.empty()) return out;
  json cmp = json::array();
  std::printf("%-8s %-10s %12s %12s %10s\n", "circuit", "quantity", "computed", "reference", "status");
  auto report = [&](const std::string& circuit, const std::string& what, double computed,
                    double reference, double tol) {
    const bool ok = std::abs(computed - reference) <= tol;
    out.mismatch |= !ok;
    std::printf("%-8s %-10s %12.4f %12.4f %10s\n", circuit.c_str(), what.c_str(), computed,
                reference, ok ? "ok" : "MISMATCH");
    cmp.push_back({{"circuit", circuit}, {"quantity", what}, {"computed", computed},
                   {"reference", reference}, {"tolerance", tol}, {"ok", ok}});
  };
  for (const auto& r : cfg.reference) {
    const SpectralData& s = fl.at(r.circuit);
    if (std::max(r.i, r.j) >= s.n_levels) {
      record_failure(out, {{"circuit", r.circuit}, {"i", r.i}, {"j", r.j}}, "level outside the computed set");
      continue;
    }
    const std::string ij = std::to_string(r.i) + std::to_string(r.j);
    if (r.kind == 'f')
      report(r.circuit, "f" + ij, s.transition(r.i, r.j), r.value, 2e-3);
    else
      report(r.circuit, "|n" + ij + "|", s.charge_element(r.i, r.j), r.value, 3e-3);
  }
  for (const auto& r : cfg.coupler_reference) {
    auto it = cp.find(r.flux);
    const SpectralData s = it != cp.end() ? it->second
                                          : diagonalize_transmon_charge({p.coupler.e_c, p.coupler.e_j_max, r.flux},
                                                                        cfg.charge_cutoff, kCouplerLevels);
    char what[32];
    std::snprintf(what, sizeof what, "w01@%.3g", r.flux);
    report("coupler", what, s.transition(0, 1), r.w01, 5e-3);
    std::snprintf(what, sizeof what, "w12@%.3g", r.flux);
    report("coupler", what, s.transition(1, 2), r.w12, 5e-3);
  }
  out.summary["comparison"] = cmp;
  return out;
}

// -------------------------------------------------------------- shift-scan

Outcome cmd_shift_scan(const CompositeModel& model, const RunConfig& cfg, RunStore& store,
                       json& params, int workers) {
  Outcome out;
  const std::vector<double>& fluxes = cfg.scan->shift_fluxes;
  params["shift_fluxes"] = fluxes;
  const int n = static_cast<int>(fluxes.size());
  struct Row {
    double s0 = NAN, s1 = NAN, zz = NAN, p0 = NAN, p1 = NAN, ratio = NAN;
    bool ambiguous = false;
    std::string failure;
  };
  std::vector<Row> rows(n);
#pragma omp parallel for schedule(dynamic) num_threads(workers)
  for (int k = 0; k < n; ++k) {
    Row& r = rows[k];
    try {
      const CompositeOperator op = model.hamiltonian(fluxes[k]);
      LabeledSpectrum levels = label_eigenstates(op);
      try {
        const PlasmonShifts s = state_dependent_shifts(levels);
        r.s0 = s.q0;
        r.s1 = s.q1;
        r.zz = zz_coupling(levels);
      } catch (const LabelingError&) {
        // Keep the numbers from the best-overlap labels and flag the point.
        r.ambiguous = true;
        std::fill(levels.ambiguous.begin(), levels.ambiguous.end(), false);
        const PlasmonShifts s = state_dependent_shifts(levels);
        r.s0 = s.q0;
        r.s1 = s.q1;
        r.zz = zz_coupling(levels);
      }
      const PlasmonShifts ps = perturbative_shifts(op, &r.ratio);
      r.p0 = ps.q0;
      r.p1 = ps.q1;
    } catch (const std::exception& e) {
      r.failure = e.what();
    }
  }
  Csv csv({"flux", "shift_q0", "shift_q1", "zz", "perturbative_shift_q0", "perturbative_shift_q1",
           "perturbative_min_ratio", "ambiguous"});
  int ambiguous = 0;
  for (int k = 0; k < n; ++k) {
    const Row& r = rows[k];
    if (!r.failure.empty()) record_failure(out, {{"flux", fluxes[k]}}, r.failure);
    ambiguous += r.ambiguous;
    csv.row({num(fluxes[k]), num(r.s0), num(r.s1), num(r.zz), num(r.p0), num(r.p1),
             num(r.ratio), r.ambiguous ? "1" : "0"});
  }
  store.write_csv("shift_scan.csv", csv);
  out.summary["ambiguous_points"] = ambiguous;
  return out;
}

// --------------------------------------------------- chevron and amplitude

Outcome cmd_population_map(const CompositeModel& model, const RunConfig& cfg, RunStore& store,
                           json& params, int workers, bool chevron) {
  Outcome out;
  const DriveSection& d = *cfg.drive;
  const ScanSection& sc = *cfg.scan;
  const PropagatorOptions opts = propagator_options(cfg);
  const double span = chevron ? sc.times.back() : sc.fixed_time;
  const ParametricPulse templ{d.flux_static, d.drive_amp, d.drive_freq, d.drive_phase, d.ramp_time,
                              std::max(span, 2.0 * d.ramp_time)};
  const InitialState psi0 = initial_state(d);
  params["drive"] = {{"flux_static", d.flux_static}, {"drive_amp", d.drive_amp},
                     {"drive_phase", d.drive_phase}, {"ramp_time", d.ramp_time},
                     {"initial", d.initial}, {"observe", labels_json(d.observe)}};
  params["freqs"] = sc.freqs;
  if (chevron)
    params["times"] = sc.times;
  else {
    params["amps"] = sc.amps;
    params["fixed_time"] = sc.fixed_time;
  }

  const int n = static_cast<int>(sc.freqs.size());
  std::vector<std::vector<double>> rows(n);
  std::vector<std::string> failures(n);
#pragma omp parallel for schedule(dynamic) num_threads(workers)
  for (int k = 0; k < n; ++k) {
    const json point{{"freq", sc.freqs[k]}};
    const std::string key = point_key(params, point);
    if (const auto hit = store.cached(key)) {
      rows[k] = (*hit)["values"].get<std::vector<double>>();
      continue;
    }
    const PopulationMap m =
        chevron ? chevron_scan(model, templ, {sc.freqs[k]}, sc.times, psi0, d.observe, opts, 1)
                : amplitude_scan(model, templ, {sc.freqs[k]}, sc.amps, sc.fixed_time, psi0,
                                 d.observe, opts, 1);
    failures[k] = m.failures[0];
    rows[k].assign(m.values.cols(), NAN);
    for (int j = 0; j < m.values.cols(); ++j) rows[k][j] = m.values(0, j);
    if (failures[k].empty()) store.complete(key, {{"values", rows[k]}});
  }

  const std::vector<double>& axis = chevron ? sc.times : sc.amps;
  Csv csv({"freq", chevron ? "time" : "drive_amp", "population"});
  double best = INFINITY, best_freq = NAN;
  for (int k = 0; k < n; ++k) {
    if (!failures[k].empty()) record_failure(out, {{"freq", sc.freqs[k]}}, failures[k]);
    for (std::size_t j = 0; j < axis.size(); ++j) {
      csv.row({num(sc.freqs[k]), num(axis[j]), num(rows[k][j])});
      if (rows[k][j] < best) {
        best = rows[k][j];
        best_freq = sc.freqs[k];
      }
    }
  }
  const std::string name = chevron ? "chevron" : "amplitude";
  store.write_csv(name + ".csv", csv);
  out.summary["min_population"] = best;
  out.summary["min_population_freq"] = best_freq;
  return out;
}

// ----------------------------------------------------------------- floquet

Outcome cmd_floquet(const CompositeModel& model, const RunConfig& cfg, RunStore& store,
                    json& params, int workers) {
  Outcome out;
  const FloquetSection& f = *cfg.floquet;
  const PropagatorOptions opts = propagator_options(cfg);
  params["floquet"] = {{"flux_static", f.flux_static}, {"pair", labels_json({f.pair.first, f.pair.second})},
                       {"window", {f.window.first, f.window.second}}, {"resolution", f.resolution}};
  params["amps"] = f.amps;

  Csv summary({"drive_amp", "found", "resonance_freq", "strength", "message"});
  Csv gaps({"drive_amp", "drive_freq", "gap"});
  std::vector<double> xs, ys;
  // Points run in order; the frequency scan inside each point is parallel.
  for (double amp : f.amps) {
    const json point{{"drive_amp", amp}};
    const std::string key = point_key(params, point);
    TransitionScan t;
    if (const auto hit = store.cached(key)) {
      t.found = (*hit)["found"];
      t.freq = (*hit)["freq"];
      t.strength = (*hit)["strength"];
      t.freqs = (*hit)["freqs"].get<std::vector<double>>();
      t.gaps = (*hit)["gaps"].get<std::vector<double>>();
      t.message = (*hit)["message"];
    } else {
      try {
        t = extract_transition(model, f.flux_static, amp, f.pair, f.window, f.resolution, opts, workers);
        store.complete(key, {{"found", t.found}, {"freq", t.freq}, {"strength", t.strength},
                             {"freqs", t.freqs}, {"gaps", t.gaps}, {"message", t.message}});
      } catch (const std::exception& e) {
        record_failure(out, point, e.what());
        summary.row({num(amp), "0", num(NAN), num(NAN), e.what()});
        continue;
      }
    }
    summary.row({num(amp), t.found ? "1" : "0", num(t.found ? t.freq : NAN),
                 num(t.found ? t.strength : NAN), t.message});
    for (std::size_t k = 0; k < t.freqs.size(); ++k) gaps.row({num(amp), num(t.freqs[k]), num(t.gaps[k])});
    if (t.found) {
      xs.push_back(amp);
      ys.push_back(t.strength);
    } else {
      record_failure(out, point, t.message.empty() ? "transition not found" : t.message);
    }
  }
  store.write_csv("floquet.csv", summary);
  store.write_csv("floquet_gaps.csv", gaps);
  if (xs.size() >= 2) {
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      sx += xs[k];
      sy += ys[k];
      sxx += xs[k] * xs[k];
      sxy += xs[k] * ys[k];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    out.summary["strength_slope"] = slope;
    out.summary["strength_intercept"] = (sy - slope * sx) / n;
  }
  if (!ys.empty()) out.summary["strength_at_max_amp"] = ys.back();
  return out;
}

// ---------------------------------------------------------------- gates

json optimum_json(const CzOptimum& o, const GateConfig& c, const std::optional<CoherenceTimes>& coh) {
  const GateMetrics& m = o.metrics;
  json channels = json::array();
  for (const auto& ch : leakage_channels(m, 10))
    channels.push_back({{"from", ch.from.str()}, {"to", ch.to.str()}, {"population", ch.population}});
  json trace = json::array();
  for (const auto& t : o.trace) trace.push_back({{"x", t.x}, {"objective", t.objective}});
  json j{{"success", o.success},
         {"message", o.message},
         {"freq", o.freq},
         {"amp", o.amp},
         {"bias", o.bias},
         {"objective", o.objective},
         {"fidelity", m.fidelity},
         {"error", m.error},
         {"leakage", m.leakage},
         {"conditional_phase", m.conditional_phase},
         {"phase_q0", m.single_qubit_phases[0]},
         {"phase_q1", m.single_qubit_phases[1]},
         {"phase_unreliable", m.phase_unreliable},
         {"channels", channels},
         {"trace", trace}};
  j["incoherent_error"] = coh ? incoherent_error(c.gate_time, *coh) : NAN;
  return j;
}

std::vector<std::string> gate_row(const json& j, const GateConfig& c) {
  const double inc = j["incoherent_error"].is_number() ? j["incoherent_error"].get<double>() : NAN;
  return {num(c.gate_time), num(c.drive_ramp), j["success"].get<bool>() ? "1" : "0",
          num(j["freq"]), num(j["amp"]), num(j["bias"]), num(j["objective"]), num(j["fidelity"]),
          num(j["error"]), num(j["leakage"]), num(j["conditional_phase"]), num(j["phase_q0"]),
          num(j["phase_q1"]), num(inc), num(j["error"].get<double>() + inc),
          j["message"].get<std::string>()};
}

const std::vector<std::string> kGateHeader{
    "gate_time", "drive_ramp", "success", "freq", "amp", "bias", "objective", "fidelity", "error",
    "leakage", "conditional_phase", "phase_q0", "phase_q1", "incoherent_error", "total_error", "message"};

json gate_params(const GateSection& g) {
  const GateConfig& c = g.config;
  json j{{"mode", to_string(c.mode)},
         {"flux_idle", c.flux_idle},
         {"flux_interaction", c.flux_interaction},
         {"bias_ramp", c.bias_ramp},
         {"drive_ramp", c.drive_ramp},
         {"gate_time", c.gate_time},
         {"freq_bounds", {c.freq_bounds.first, c.freq_bounds.second}},
         {"amp_bounds", {c.amp_bounds.first, c.amp_bounds.second}},
         {"optimize_bias", c.optimize_bias},
         {"bias_bounds", {c.bias_bounds.first, c.bias_bounds.second}},
         {"restarts", g.optimizer.restarts},
         {"evaluations", g.optimizer.evaluations_per_restart},
         {"stagnation", g.optimizer.stagnation}};
  if (g.seed) j["seed"] = {g.seed->freq, g.seed->amp};
  if (g.coherence) j["coherence_us"] = {g.coherence->t1_22, g.coherence->tphi_22};
  return j;
}

Outcome cmd_gate_opt(const CompositeModel& model, const RunConfig& cfg, RunStore& store,
                     json& params) {
  Outcome out;
  const GateSection& g = *cfg.gate;
  const GateConfig& c = g.config;
  params["gate"] = gate_params(g);
  params["record_step"] = g.record_step;
  const GateLab lab(model, propagator_options(cfg));

  const json point{{"gate_time", c.gate_time}, {"drive_ramp", c.drive_ramp}};
  const std::string key = point_key(params, point);
  json res;
  if (const auto hit = store.cached(key)) {
    res = *hit;
  } else {
    try {
      res = optimum_json(optimize_cz(lab, c, g.seed, g.optimizer), c, g.coherence);
      store.complete(key, res);
    } catch (const std::exception& e) {
      record_failure(out, point, e.what());
      return out;
    }
  }
  if (!res["success"].get<bool>()) record_failure(out, point, res["message"]);

  store.write_csv("gate_opt.csv", Csv(kGateHeader).row(gate_row(res, c)));
  Csv trace({"evaluation", "freq", "amp", "bias", "objective"});
  int k = 0;
  for (const auto& t : res["trace"]) {
    const auto x = t["x"].get<std::vector<double>>();
    trace.row({std::to_string(k++), num(x[0]), num(x[1]), num(x.size() > 2 ? x[2] : res["bias"].get<double>()),
               num(t["objective"])});
  }
  store.write_csv("gate_opt_trace.csv", trace);
  Csv channels({"from", "to", "population"});
  for (const auto& ch : res["channels"]) channels.row({ch["from"], ch["to"], num(ch["population"])});
  store.write_csv("gate_opt_channels.csv", channels);

  // Time traces at the optimum from each computational state.
  const auto bias = c.optimize_bias ? std::optional<double>(res["bias"].get<double>()) : std::nullopt;
  const auto [pulse, ramp] = lab.schedule(c, res["freq"], res["amp"], bias);
  const FluxSchedule sched(pulse, ramp);
  std::vector<double> times;
  const int steps = static_cast<int>(std::ceil(sched.duration() / g.record_step - 1e-9));
  for (int i = 0; i <= steps; ++i) times.push_back(std::min(i * g.record_step, sched.duration()));
  std::vector<BareLabel> all;
  for (int i = 0; i < model.dimension(); ++i) all.push_back(model.label_of(i));
  std::vector<EvolutionResult> runs;
  std::set<int> shown;
  for (const BareLabel& init : computational_labels()) {
    runs.push_back(propagate_state(model, pulse, ramp, InitialState::basis(init), times, all, lab.options()));
    for (std::size_t l = 0; l < all.size(); ++l)
      if (*std::max_element(runs.back().populations[l].begin(), runs.back().populations[l].end()) > 1e-3)
        shown.insert(static_cast<int>(l));
  }
  std::vector<std::string> header{"initial", "time", "flux"};
  for (int l : shown) header.push_back("p_" + label_cell(all[l]));
  Csv dyn(header);
  for (std::size_t r = 0; r < runs.size(); ++r)
    for (std::size_t t = 0; t < times.size(); ++t) {
      std::vector<std::string> row{label_cell(computational_labels()[r]), num(times[t]),
                                   num(sched.flux(times[t]))};
      for (int l : shown) row.push_back(num(runs[r].populations[l][t]));
      dyn.row(row);
    }
  store.write_csv("gate_opt_dynamics.csv", dyn);

  out.summary = {{"error", res["error"]}, {"leakage", res["leakage"]},
                 {"fidelity", res["fidelity"]}, {"conditional_phase", res["conditional_phase"]},
                 {"freq", res["freq"]}, {"amp", res["amp"]}, {"bias", res["bias"]},
                 {"evaluations", res["trace"].size()}, {"incoherent_error", res["incoherent_error"]}};
  std::printf("gate_time %.3f ns: error %.3e leakage %.3e phase %.6f freq %.6f amp %.6f\n", c.gate_time,
              res["error"].get<double>(), res["leakage"].get<double>(),
              res["conditional_phase"].get<double>(), res["freq"].get<double>(), res["amp"].get<double>());
  return out;
}

Outcome cmd_gate_sweep(const CompositeModel& model, const RunConfig& cfg, RunStore& store,
                       json& params, int workers) {
  Outcome out;
  const GateSection& g = *cfg.gate;
  params["gate"] = gate_params(g);
  params["gate_times"] = g.sweep_gate_times;
  params["drive_ramps"] = g.sweep_drive_ramps;
  const GateLab lab(model, propagator_options(cfg));

  std::vector<GateConfig> points;
  for (double ramp : g.sweep_drive_ramps)
    for (double tg : g.sweep_gate_times) {
      GateConfig c = g.config;
      c.drive_ramp = ramp;
      c.gate_time = tg;
      points.push_back(c);
    }
  const int n = static_cast<int>(points.size());
  std::vector<json> results(n);
  std::vector<std::string> failures(n);
#pragma omp parallel for schedule(dynamic) num_threads(workers)
  for (int k = 0; k < n; ++k) {
    const GateConfig& c = points[k];
    const json point{{"gate_time", c.gate_time}, {"drive_ramp", c.drive_ramp}};
    const std::string key = point_key(params, point);
    if (const auto hit = store.cached(key)) {
      results[k] = *hit;
      continue;
    }
    try {
      // The configured seed belongs to the configured gate time only.
      const bool own_seed = c.gate_time == g.config.gate_time && c.drive_ramp == g.config.drive_ramp;
      results[k] = optimum_json(optimize_cz(lab, c, own_seed ? g.seed : std::nullopt, g.optimizer), c,
                                g.coherence);
      store.complete(key, results[k]);
    } catch (const std::exception& e) {
      failures[k] = e.what();
    }
  }
  Csv csv(kGateHeader);
  double best = INFINITY;
  for (int k = 0; k < n; ++k) {
    const json point{{"gate_time", points[k].gate_time}, {"drive_ramp", points[k].drive_ramp}};
    if (!failures[k].empty()) {
      record_failure(out, point, failures[k]);
      continue;
    }
    if (!results[k]["success"].get<bool>()) record_failure(out, point, results[k]["message"]);
    csv.row(gate_row(results[k], points[k]));
    best = std::min(best, results[k]["error"].get<double>());
  }
  store.write_csv("gate_sweep.csv", csv);
  out.summary["best_error"] = best;
  return out;
}

// Time-step checks need the model; they run before the output sink exists.
void preflight(const CompositeModel& model, const RunConfig& cfg, const std::string& command) {
  if (command == "chevron" || command == "amplitude") {
    const DriveSection& d = *cfg.drive;
    const ScanSection& sc = *cfg.scan;
    const double span = command == "chevron" ? sc.times.back() : sc.fixed_time;
    check_dt(model, cfg,
             FluxSchedule({d.flux_static, d.drive_amp, *std::max_element(sc.freqs.begin(), sc.freqs.end()),
                           d.drive_phase, d.ramp_time, std::max(span, 2.0 * d.ramp_time)}));
  } else if (command == "floquet") {
    const FloquetSection& f = *cfg.floquet;
    check_dt(model, cfg,
             FluxSchedule({f.flux_static, *std::max_element(f.amps.begin(), f.amps.end()),
                           f.window.second, 0.0, 0.0, 1.0 / f.window.second}));
  } else if (command == "gate-opt" || command == "gate-sweep") {
    const GateSection& g = *cfg.gate;
    std::vector<GateConfig> cs{g.config};
    if (command == "gate-sweep") {
      cs.clear();
      for (double ramp : g.sweep_drive_ramps)
        for (double tg : g.sweep_gate_times) {
          GateConfig c = g.config;
          c.drive_ramp = ramp;
          c.gate_time = tg;
          cs.push_back(c);
        }
    }
    for (const GateConfig& c : cs)
      check_dt(model, cfg,
               FluxSchedule({c.drive_flux(), c.amp_bounds.second, c.freq_bounds.second, 0.0,
                             c.drive_ramp, c.gate_time}));
  }
}

std::filesystem::path output_root(const Options& o, const RunConfig& cfg) {
  if (!o.out.empty()) return o.out;
  if (!cfg.out.empty()) return cfg.out;
  if (const char* env = std::getenv("FLUXCZ_OUT"); env && *env) return env;
  return "fluxcz_out";
}

int run(const Options& o) {
  RunConfig cfg;
  try {
    cfg = load_config(o.config_path);
    if (o.dt_ps > 0.0) cfg.dt_ps = o.dt_ps;
    if (o.workers > 0) cfg.workers = o.workers;
    require_for_command(cfg, o.command);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  const int workers = cfg.workers;
  // Worker count is excluded: results do not depend on it.
  json params{{"model", model_json(cfg)}, {"dt_ps", cfg.dt_ps}};

  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  int reused = 0;
  try {
    const std::string& c = o.command;
    std::optional<CompositeModel> model;
    if (c != "spectrum") {
      model.emplace(cfg.circuit);
      preflight(*model, cfg, c);
    }
    RunStore store(output_root(o, cfg), c, o.resume);
    if (c == "spectrum")
      out = cmd_spectrum(cfg, store, params);
    else if (c == "shift-scan")
      out = cmd_shift_scan(*model, cfg, store, params, workers);
    else if (c == "chevron" || c == "amplitude")
      out = cmd_population_map(*model, cfg, store, params, workers, c == "chevron");
    else if (c == "floquet")
      out = cmd_floquet(*model, cfg, store, params, workers);
    else if (c == "gate-opt")
      out = cmd_gate_opt(*model, cfg, store, params);
    else
      out = cmd_gate_sweep(*model, cfg, store, params, workers);
    store.write_sidecar(params, out.summary, out.failures);
    reused = store.reused();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (const auto& f : out.failures) std::cerr << "point failed: " << f.dump() << "\n";
  std::cerr << o.command << ": " << out.failures.size() << " failed point(s), " << reused
            << " reused, " << secs << " s\n";
  return out.failures.empty() && !out.mismatch ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fluxcz: coupled-fluxonium CZ gate simulations"};
  app.require_subcommand(1, 1);
  Options o;
  const std::pair<const char*, const char*> commands[] = {
      {"spectrum", "single-circuit levels and charge matrix elements vs reference values"},
      {"shift-scan", "plasmon shifts and ZZ versus coupler flux"},
      {"chevron", "population map over drive frequency and time"},
      {"amplitude", "population map over drive frequency and amplitude"},
      {"floquet", "bSWAP resonance and strength from the Floquet spectrum"},
      {"gate-opt", "optimize the CZ drive frequency and amplitude"},
      {"gate-sweep", "optimized CZ error versus gate time and drive ramp"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config_path, "INI configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory (default: [run] out, $FLUXCZ_OUT, ./fluxcz_out)");
    sub->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--dt", o.dt_ps, "time step in ps")->check(CLI::PositiveNumber);
    sub->add_flag("--resume", o.resume, "reuse completed points from a previous run");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  o.command = app.get_subcommands().front()->get_name();
  return run(o);
}
