#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hqm/basis.hpp"
#include "hqm/scattering.hpp"
#include "hqm/spectral.hpp"

namespace hqm {

// CRC-32 (IEEE 802.3, reflected polynomial 0xEDB88320) of a byte range.
std::uint32_t crc32(const void* data, std::size_t size);

// Eigensystem container format, little-endian throughout:
//   bytes 0..3   magic "HQEV"
//   bytes 4..7   format version, u32, currently 1
//   bytes 8..11  dimension N, u32
//   N   f64      eigenvalues, ascending
//   N*N (f64,f64) eigenvector columns, column-major, (re, im) interleaved
//   u32          CRC-32 of all preceding bytes
// save/load round-trips bit-exactly.  load throws PersistenceError with
// kind io / bad_magic / bad_version / corrupt (CRC or size mismatch).
void save_eigensystem(const EigenSystem& eig, const std::string& path);
EigenSystem load_eigensystem(const std::string& path);

enum class RunMode { spectrum, evolve, scatter, converge };

// Parsed run description.  See parse_config for the key set.
struct RunConfig {
  RunMode mode = RunMode::spectrum;
  BasisSpec basis;
  std::optional<PotentialSpec> potential;
  int quadrature_order = 0;  // 0: pick max(2 * dimension, 64)

  std::optional<PacketSpec> packet;
  std::optional<std::string> state_file;  // CSV coefficients, one "re,im" row per index

  std::vector<double> evolve_times;

  std::optional<ScatteringConfig> scattering;  // grid prefilled from steps

  std::vector<int> converge_dimensions;
  std::vector<double> converge_epsilons;

  std::string output_dir = ".";

  // Canonical "key = value" lines for the manifest echo.
  std::vector<std::pair<std::string, std::string>> echo;
};

// Line-oriented "key = value" format; '#' starts a comment, blank lines
// are skipped.  Unknown keys, duplicate keys, malformed values, missing
// requirements for the selected mode, and out-of-range values all throw
// ConfigError naming the key.
//
// Keys:
//   mode                   spectrum | evolve | scatter | converge
//   basis.dimension        int >= 1
//   basis.scale            double > 0            (default 1.0)
//   quadrature.order       int >= 1              (default max(2*dimension, 64))
//   potential.kind         none | polynomial | gaussian | tabulated
//   potential.coeffs       comma list, constant term first
//   potential.amplitude    double
//   potential.width        double > 0
//   potential.center       double                (default 0)
//   potential.table.x      comma list, strictly increasing
//   potential.table.v      comma list, same length
//   packet.center          double
//   packet.width           double > 0
//   packet.momentum        double
//   state.file             path to coefficient CSV (alternative to packet.*)
//   evolve.times           comma list, strictly increasing
//   scattering.epsilon     double > 0
//   scattering.t_max       double > 0            (default 40)
//   scattering.steps       int >= 8              (default 80)
//   scattering.tolerance   double > 0            (default 1e-6)
//   converge.dimensions    comma list of ints, strictly increasing
//   converge.epsilons      comma list of doubles, each > 0
//   output.dir             directory for emitted files (default ".")
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

struct RunResult {
  std::vector<std::string> outputs;   // paths written, manifest last
  std::vector<std::string> warnings;  // also recorded in the manifest
};

// Executes one run.  Every CSV cell is printed with %.17g and checked
// finite before writing; reruns with identical inputs produce
// byte-identical files.  A manifest.json with input echo, tool version,
// warnings and per-file CRC-32 values is written last.
RunResult run(const RunConfig& config);

}  // namespace hqm
