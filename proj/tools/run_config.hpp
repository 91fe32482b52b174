#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fluxcz/composite_system.hpp"
#include "fluxcz/dynamics.hpp"
#include "fluxcz/gate_lab.hpp"

namespace fluxcz::cli {

// Validation failure tagged with the offending field, e.g. "q0.e_c".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// Reference values printed next to computed single-circuit spectra.
struct ReferenceValue {
  std::string circuit;  // "q0" or "q1"
  char kind = 'f';      // 'f' transition frequency, 'n' |<i|n|j>|
  int i = 0;
  int j = 0;
  double value = 0.0;
};

struct CouplerReference {
  double flux = 0.0;
  double w01 = 0.0;
  double w12 = 0.0;
};

struct DriveSection {
  double flux_static = 0.35;
  double drive_amp = 0.045;
  double drive_freq = 10.89;
  double drive_phase = 0.0;
  double ramp_time = 0.0;
  std::string initial = "101";  // bare label or "superposition"
  std::vector<BareLabel> observe{{1, 0, 1}};
};

struct ScanSection {
  std::vector<double> freqs;
  std::vector<double> times;
  std::vector<double> amps;
  double fixed_time = 0.0;
  std::vector<double> shift_fluxes;
};

struct FloquetSection {
  double flux_static = 0.35;
  std::vector<double> amps;
  std::pair<BareLabel, BareLabel> pair{{1, 0, 1}, {2, 0, 2}};
  std::pair<double, double> window{10.70, 10.95};
  double resolution = 0.005;
};

struct GateSection {
  GateConfig config;
  OptimizerSettings optimizer;
  std::optional<CzSeed> seed;
  std::optional<CoherenceTimes> coherence;
  std::vector<double> sweep_gate_times;
  std::vector<double> sweep_drive_ramps;
  double record_step = 0.5;  // ns, gate-opt dynamics trace
};

struct RunConfig {
  CompositeParams circuit;
  int charge_cutoff = 30;
  std::vector<double> coupler_fluxes{0.0, 0.30, 0.35};
  std::vector<ReferenceValue> reference;
  std::vector<CouplerReference> coupler_reference;

  std::optional<DriveSection> drive;
  std::optional<ScanSection> scan;
  std::optional<FloquetSection> floquet;
  std::optional<GateSection> gate;

  std::string out;
  int workers = 1;
  double dt_ps = 1.5;
};

// Parses and validates an INI file. Throws ConfigError on unknown keys,
// malformed values and violated invariants.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text);

// Grid syntax: explicit "a b c" or "start:stop:count" (inclusive linspace).
std::vector<double> parse_grid(const std::string& path, const std::string& text);

// Section checks required by one command, with the same error style.
void require_for_command(const RunConfig& cfg, const std::string& command);

InitialState initial_state(const DriveSection& d);

}  // namespace fluxcz::cli
