#include <Eigen/Core>
#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "hqm/io.hpp"
#include "json.hpp"

namespace {

// Single-line machine-parsable error record on stderr.
void emit_error(const std::string& kind, const std::string& key,
                const std::string& message) {
  nlohmann::json rec;
  rec["error"]["kind"] = kind;
  if (!key.empty()) rec["error"]["key"] = key;
  rec["error"]["message"] = message;
  std::cerr << rec.dump() << std::endl;
}

const char* persist_kind_name(hqm::PersistErrorKind k) {
  switch (k) {
    case hqm::PersistErrorKind::io: return "io";
    case hqm::PersistErrorKind::bad_magic: return "bad_magic";
    case hqm::PersistErrorKind::bad_version: return "bad_version";
    case hqm::PersistErrorKind::corrupt: return "corrupt";
  }
  return "io";
}

}  // namespace

int main(int argc, char** argv) {
  // The only environment knob: cap Eigen's internal parallelism.
  if (const char* th = std::getenv("HQM_THREADS")) {
    int n = std::atoi(th);
    if (n > 0) Eigen::setNbThreads(n);
  }

  CLI::App app{"Hermite-basis spectral toolkit"};
  app.require_subcommand(1);

  struct ModeDef {
    const char* name;
    hqm::RunMode mode;
    const char* desc;
  };
  const ModeDef defs[] = {
      {"spectrum", hqm::RunMode::spectrum,
       "diagonalize the Hamiltonian, emit eigenvalues and eigensystem"},
      {"evolve", hqm::RunMode::evolve,
       "propagate an initial state, emit observables over time"},
      {"scatter", hqm::RunMode::scatter,
       "wave operators, T- and S-matrix for kinetic + potential"},
      {"converge", hqm::RunMode::converge,
       "track observables across a ladder of basis dimensions"},
  };

  std::string config_path, out_dir;
  CLI::App* chosen[4] = {};
  for (int i = 0; i < 4; ++i) {
    CLI::App* sub = app.add_subcommand(defs[i].name, defs[i].desc);
    sub->add_option("--config", config_path, "run configuration file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
    chosen[i] = sub;
  }

  CLI11_PARSE(app, argc, argv);

  hqm::RunMode expected = hqm::RunMode::spectrum;
  for (int i = 0; i < 4; ++i)
    if (chosen[i]->parsed()) expected = defs[i].mode;

  try {
    hqm::RunConfig cfg = hqm::load_config(config_path);
    if (cfg.mode != expected)
      throw hqm::ConfigError("mode",
                             "config mode does not match the subcommand");
    if (!out_dir.empty()) cfg.output_dir = out_dir;

    hqm::RunResult res = hqm::run(cfg);
    for (const auto& w : res.warnings) std::cout << "warning: " << w << "\n";
    for (const auto& p : res.outputs) std::cout << "wrote " << p << "\n";
    return 0;
  } catch (const hqm::ConfigError& e) {
    emit_error("config", e.key(), e.what());
    return 2;
  } catch (const hqm::PersistenceError& e) {
    emit_error(persist_kind_name(e.kind()), "", e.what());
    return 3;
  } catch (const std::exception& e) {
    emit_error("runtime", "", e.what());
    return 1;
  }
}
