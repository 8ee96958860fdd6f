#pragma once

// Experiment pipeline driven by a JSON configuration. Every command reads and
// writes files in the output directory so commands can run as separate
// processes; see README for the file layout and the config schema.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "exprec/lifting.hpp"
#include "exprec/mapping.hpp"
#include "exprec/simulate.hpp"
#include "exprec/solver.hpp"

namespace exprec {

struct NoiseSpec {
  double sigma = 0.0;
  bool relative = true;  // sigma is a fraction of the mean sampled magnitude
};

struct KtlrSpec {
  double mu = 0.05;
  bool relative = true;  // mu is a fraction of the top Casorati singular value of A^* b
  int iters = 100;
};

struct ExperimentConfig {
  Grid grid;
  double te0_ms = 10.0;
  PhantomSpec phantom;
  int coils = 1;
  MaskSpec mask;
  NoiseSpec noise;
  int N1 = 1, N2 = 1, Nt = 2;
  SolverConfig solver;
  KtlrSpec ktlr;
  std::string output_dir = "out";
  std::uint64_t seed = 0;

  FilterSpec filter() const { return FilterSpec{N1, N2, Nt, grid}; }
  /// Canonical JSON (sorted keys, defaults filled in, output_dir excluded).
  std::string canonical() const;
  /// Hex SHA-256 of canonical().
  std::string hash() const;
};

/// Parses and validates; errors are Errc::config with a JSON-pointer path.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

std::string sha256_hex(const std::string& data);

inline const std::vector<std::string>& recon_methods() {
  static const std::vector<std::string> m{"proposed", "ktlr", "zerofill"};
  return m;
}

struct ReconOutcome {
  bool converged = true;
  int iterations = 0;
  double seconds = 0.0;
};

class Experiment {
public:
  Experiment(ExperimentConfig cfg, std::filesystem::path out_dir);

  const ExperimentConfig& config() const { return cfg_; }
  const std::filesystem::path& out_dir() const { return dir_; }
  const std::string& hash() const { return hash_; }

  /// phantom.ktar (c128 [P,Q,T]) and maps.ktar (f64 [L,4,P,Q]: T2, Re amp, Im amp, support).
  void phantom();
  /// mask.ktar (f32 [P,Q,T]).
  void mask();
  /// phantom + mask, plus coils.ktar (c128 [C,P,Q]) and meas.ktar (c128 [C,P,Q,T]).
  void simulate();
  /// recon_<method>.ktar (k-t volume), report_<method>.csv, timing_<method>.txt.
  ReconOutcome recon(const std::string& method);
  /// t2_<label>.ktar (f64 [2,P,Q]: T2, amplitude) for truth and each reconstruction present.
  void fit();
  /// metrics.csv, one row per reconstruction present.
  std::vector<MetricsRow> eval();
  /// PGM images under render/.
  void render();

  Measurements load_measurements() const;

private:
  void ensure_dir() const;
  std::filesystem::path path(const std::string& name) const { return dir_ / name; }
  std::vector<std::string> available_methods() const;

  ExperimentConfig cfg_;
  std::filesystem::path dir_;
  std::string hash_;
};

}  // namespace exprec
