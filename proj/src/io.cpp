#include "hqm/io.hpp"

#include <array>
#include <bit>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "hqm/truncation.hpp"
#include "json.hpp"

namespace hqm {

namespace {

constexpr char kToolName[] = "hqm";
constexpr char kToolVersion[] = "1.0.0";
constexpr char kMagic[4] = {'H', 'Q', 'E', 'V'};
constexpr std::uint32_t kFormatVersion = 1;

static_assert(std::numeric_limits<double>::is_iec559,
              "binary format assumes IEEE-754 doubles");

std::uint32_t crc_table_entry(std::uint32_t i) {
  std::uint32_t c = i;
  for (int k = 0; k < 8; ++k)
    c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : (c >> 1);
  return c;
}

}  // namespace

std::uint32_t crc32(const void* data, std::size_t size) {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) t[i] = crc_table_entry(i);
    return t;
  }();
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint32_t c = 0xFFFFFFFFu;
  for (std::size_t i = 0; i < size; ++i)
    c = table[(c ^ p[i]) & 0xFFu] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

namespace {

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& buf, double d) {
  auto v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const std::string& buf, std::size_t off) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[off + i])) << (8 * i);
  return v;
}

double get_f64(const std::string& buf, std::size_t off) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[off + i])) << (8 * i);
  return std::bit_cast<double>(v);
}

}  // namespace

void save_eigensystem(const EigenSystem& eig, const std::string& path) {
  const Eigen::Index n = eig.dimension();
  if (n < 1 || eig.eigenvectors.rows() != n || eig.eigenvectors.cols() != n)
    throw std::invalid_argument("save_eigensystem: malformed eigensystem");

  std::string buf;
  buf.reserve(16 + 8 * static_cast<std::size_t>(n) * (1 + 2 * n));
  buf.append(kMagic, 4);
  put_u32(buf, kFormatVersion);
  put_u32(buf, static_cast<std::uint32_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) put_f64(buf, eig.eigenvalues(i));
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) {
      put_f64(buf, eig.eigenvectors(i, j).real());
      put_f64(buf, eig.eigenvectors(i, j).imag());
    }
  put_u32(buf, crc32(buf.data(), buf.size()));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw PersistenceError(PersistErrorKind::io, "cannot open " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  out.flush();
  if (!out) throw PersistenceError(PersistErrorKind::io, "write failed: " + path);
}

EigenSystem load_eigensystem(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PersistenceError(PersistErrorKind::io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw PersistenceError(PersistErrorKind::io, "read failed: " + path);
  std::string buf = ss.str();

  if (buf.size() < 4 || buf.compare(0, 4, kMagic, 4) != 0)
    throw PersistenceError(PersistErrorKind::bad_magic,
                           "not an eigensystem file: " + path);
  if (buf.size() < 12)
    throw PersistenceError(PersistErrorKind::corrupt, "truncated file: " + path);
  std::uint32_t version = get_u32(buf, 4);
  if (version != kFormatVersion) {
    std::ostringstream os;
    os << "unsupported format version " << version << ": " << path;
    throw PersistenceError(PersistErrorKind::bad_version, os.str());
  }
  std::uint64_t n = get_u32(buf, 8);
  std::uint64_t expected = 12 + 8 * n + 16 * n * n + 4;
  if (n < 1 || buf.size() != expected)
    throw PersistenceError(PersistErrorKind::corrupt,
                           "size does not match header: " + path);
  std::uint32_t stored = get_u32(buf, buf.size() - 4);
  if (stored != crc32(buf.data(), buf.size() - 4))
    throw PersistenceError(PersistErrorKind::corrupt, "checksum mismatch: " + path);

  EigenSystem eig;
  eig.eigenvalues.resize(static_cast<Eigen::Index>(n));
  eig.eigenvectors.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::size_t off = 12;
  for (std::uint64_t i = 0; i < n; ++i, off += 8)
    eig.eigenvalues(static_cast<Eigen::Index>(i)) = get_f64(buf, off);
  for (std::uint64_t j = 0; j < n; ++j)
    for (std::uint64_t i = 0; i < n; ++i, off += 16)
      eig.eigenvectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          Complex(get_f64(buf, off), get_f64(buf, off + 8));
  return eig;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string fmt17(double v) {
  if (!std::isfinite(v)) throw std::domain_error("non-finite value in output");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_int(long long v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%lld", v);
  return buf;
}

double to_double(const std::string& key, const std::string& s) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size() || !std::isfinite(v))
      throw std::invalid_argument("bad");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key, "value '" + s + "' for key '" + key +
                               "' is not a finite number");
  }
}

int to_int(const std::string& key, const std::string& s) {
  try {
    std::size_t pos = 0;
    long v = std::stol(s, &pos);
    if (pos != s.size() || v < std::numeric_limits<int>::min() ||
        v > std::numeric_limits<int>::max())
      throw std::invalid_argument("bad");
    return static_cast<int>(v);
  } catch (const std::exception&) {
    throw ConfigError(key, "value '" + s + "' for key '" + key +
                               "' is not an integer");
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, ',')) out.push_back(trim(cur));
  return out;
}

std::vector<double> to_double_list(const std::string& key, const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) out.push_back(to_double(key, item));
  if (out.empty()) throw ConfigError(key, "empty list for key '" + key + "'");
  return out;
}

std::vector<int> to_int_list(const std::string& key, const std::string& s) {
  std::vector<int> out;
  for (const auto& item : split_list(s)) out.push_back(to_int(key, item));
  if (out.empty()) throw ConfigError(key, "empty list for key '" + key + "'");
  return out;
}

// Key-value view with consumption tracking; anything left unconsumed at
// the end is reported as unknown for the selected mode.
class KeySet {
 public:
  explicit KeySet(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
      auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError(line, "line '" + line + "' has no '='");
      std::string key = trim(line.substr(0, eq));
      std::string value = trim(line.substr(eq + 1));
      if (key.empty()) throw ConfigError(line, "empty key in line '" + line + "'");
      if (kv_.count(key))
        throw ConfigError(key, "duplicate key '" + key + "'");
      kv_[key] = value;
    }
  }

  std::optional<std::string> take(const std::string& key) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return std::nullopt;
    consumed_.insert(key);
    return it->second;
  }

  std::string require(const std::string& key) {
    auto v = take(key);
    if (!v) throw ConfigError(key, "missing required key '" + key + "'");
    return *v;
  }

  bool present(const std::string& key) const { return kv_.count(key) > 0; }

  void finish(const std::string& mode_name) const {
    for (const auto& entry : kv_) {
      if (!consumed_.count(entry.first))
        throw ConfigError(entry.first, "key '" + entry.first +
                                           "' is not recognized for mode " +
                                           mode_name);
    }
  }

 private:
  std::map<std::string, std::string> kv_;
  std::set<std::string> consumed_;
};

const char* mode_name(RunMode m) {
  switch (m) {
    case RunMode::spectrum: return "spectrum";
    case RunMode::evolve: return "evolve";
    case RunMode::scatter: return "scatter";
    case RunMode::converge: return "converge";
  }
  return "?";
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  KeySet keys(text);
  RunConfig cfg;
  auto echo = [&cfg](const std::string& k, const std::string& v) {
    cfg.echo.emplace_back(k, v);
  };

  std::string mode_str = keys.require("mode");
  if (mode_str == "spectrum") cfg.mode = RunMode::spectrum;
  else if (mode_str == "evolve") cfg.mode = RunMode::evolve;
  else if (mode_str == "scatter") cfg.mode = RunMode::scatter;
  else if (mode_str == "converge") cfg.mode = RunMode::converge;
  else throw ConfigError("mode", "unknown mode '" + mode_str + "'");
  echo("mode", mode_str);

  cfg.basis.dimension = to_int("basis.dimension", keys.require("basis.dimension"));
  if (auto s = keys.take("basis.scale"))
    cfg.basis.scale = to_double("basis.scale", *s);
  try {
    cfg.basis.validate();
  } catch (const std::exception& e) {
    throw ConfigError("basis.dimension", e.what());
  }
  echo("basis.dimension", fmt_int(cfg.basis.dimension));
  echo("basis.scale", fmt17(cfg.basis.scale));

  if (auto s = keys.take("quadrature.order")) {
    cfg.quadrature_order = to_int("quadrature.order", *s);
    if (cfg.quadrature_order < 1 || cfg.quadrature_order > kMaxHermiteOrder)
      throw ConfigError("quadrature.order", "quadrature.order outside [1, 4096]");
    echo("quadrature.order", fmt_int(cfg.quadrature_order));
  }

  std::string pot_kind = "none";
  if (auto s = keys.take("potential.kind")) pot_kind = *s;
  try {
    if (pot_kind == "none") {
      cfg.potential.reset();
    } else if (pot_kind == "polynomial") {
      auto coeffs = to_double_list("potential.coeffs", keys.require("potential.coeffs"));
      cfg.potential = PotentialSpec::polynomial(coeffs);
    } else if (pot_kind == "gaussian") {
      double amp = to_double("potential.amplitude", keys.require("potential.amplitude"));
      double width = to_double("potential.width", keys.require("potential.width"));
      double center = 0.0;
      if (auto s = keys.take("potential.center"))
        center = to_double("potential.center", *s);
      cfg.potential = PotentialSpec::gaussian(amp, width, center);
    } else if (pot_kind == "tabulated") {
      auto tx = to_double_list("potential.table.x", keys.require("potential.table.x"));
      auto tv = to_double_list("potential.table.v", keys.require("potential.table.v"));
      cfg.potential = PotentialSpec::tabulated(tx, tv);
    } else {
      throw ConfigError("potential.kind", "unknown potential.kind '" + pot_kind + "'");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("potential.kind", e.what());
  }
  echo("potential.kind", pot_kind);
  if (cfg.potential) echo("potential", cfg.potential->describe());

  bool packet_given = keys.present("packet.center") ||
                      keys.present("packet.width") ||
                      keys.present("packet.momentum");
  if (packet_given) {
    PacketSpec p;
    if (auto s = keys.take("packet.center")) p.center = to_double("packet.center", *s);
    if (auto s = keys.take("packet.width")) p.width = to_double("packet.width", *s);
    if (auto s = keys.take("packet.momentum"))
      p.momentum = to_double("packet.momentum", *s);
    try {
      p.validate();
    } catch (const std::exception& e) {
      throw ConfigError("packet.width", e.what());
    }
    cfg.packet = p;
    echo("packet.center", fmt17(p.center));
    echo("packet.width", fmt17(p.width));
    echo("packet.momentum", fmt17(p.momentum));
  }
  if (auto s = keys.take("state.file")) {
    if (packet_given)
      throw ConfigError("state.file", "give either packet.* or state.file, not both");
    if (!std::filesystem::exists(*s))
      throw ConfigError("state.file", "state file '" + *s + "' does not exist");
    cfg.state_file = *s;
    echo("state.file", *s);
  }

  const bool needs_state =
      cfg.mode == RunMode::evolve || cfg.mode == RunMode::scatter;
  if (needs_state && !cfg.packet && !cfg.state_file)
    throw ConfigError("packet.width",
                      std::string("mode ") + mode_name(cfg.mode) +
                          " needs packet.* or state.file");

  if (cfg.mode == RunMode::evolve) {
    cfg.evolve_times = to_double_list("evolve.times", keys.require("evolve.times"));
    for (std::size_t i = 0; i + 1 < cfg.evolve_times.size(); ++i)
      if (cfg.evolve_times[i + 1] <= cfg.evolve_times[i])
        throw ConfigError("evolve.times", "evolve.times must be strictly increasing");
    std::string joined;
    for (double t : cfg.evolve_times)
      joined += (joined.empty() ? "" : ",") + fmt17(t);
    echo("evolve.times", joined);
  }

  double shared_epsilon = 0.0;
  if (cfg.mode == RunMode::scatter || cfg.mode == RunMode::converge) {
    if (auto s = keys.take("scattering.epsilon")) {
      shared_epsilon = to_double("scattering.epsilon", *s);
      if (shared_epsilon <= 0.0)
        throw ConfigError("scattering.epsilon",
                          "scattering.epsilon must be positive");
      echo("scattering.epsilon", fmt17(shared_epsilon));
    }
  }
  if (cfg.mode == RunMode::scatter) {
    if (shared_epsilon == 0.0)
      throw ConfigError("scattering.epsilon",
                        "missing required key 'scattering.epsilon'");
    ScatteringConfig sc;
    sc.epsilon = shared_epsilon;
    sc.t_max = 40.0;
    int steps = 80;
    sc.tolerance = 1e-6;
    if (auto s = keys.take("scattering.t_max")) {
      sc.t_max = to_double("scattering.t_max", *s);
      if (sc.t_max <= 0.0)
        throw ConfigError("scattering.t_max", "scattering.t_max must be positive");
    }
    if (auto s = keys.take("scattering.steps")) {
      steps = to_int("scattering.steps", *s);
      if (steps < 8)
        throw ConfigError("scattering.steps", "scattering.steps must be at least 8");
    }
    if (auto s = keys.take("scattering.tolerance")) {
      sc.tolerance = to_double("scattering.tolerance", *s);
      if (sc.tolerance <= 0.0)
        throw ConfigError("scattering.tolerance",
                          "scattering.tolerance must be positive");
    }
    sc.fill_uniform_grid(steps);
    cfg.scattering = sc;
    echo("scattering.t_max", fmt17(sc.t_max));
    echo("scattering.steps", fmt_int(steps));
    echo("scattering.tolerance", fmt17(sc.tolerance));
  }

  if (cfg.mode == RunMode::converge) {
    cfg.converge_dimensions =
        to_int_list("converge.dimensions", keys.require("converge.dimensions"));
    for (std::size_t i = 0; i < cfg.converge_dimensions.size(); ++i) {
      int d = cfg.converge_dimensions[i];
      if (d < 1 || d > kMaxHermiteOrder)
        throw ConfigError("converge.dimensions", "dimension outside [1, 4096]");
      if (i > 0 && d <= cfg.converge_dimensions[i - 1])
        throw ConfigError("converge.dimensions",
                          "converge.dimensions must be strictly increasing");
    }
    std::string joined;
    for (int d : cfg.converge_dimensions)
      joined += (joined.empty() ? "" : ",") + fmt_int(d);
    echo("converge.dimensions", joined);
    if (auto s = keys.take("converge.epsilons")) {
      cfg.converge_epsilons = to_double_list("converge.epsilons", *s);
      for (double e : cfg.converge_epsilons)
        if (e <= 0.0)
          throw ConfigError("converge.epsilons", "epsilons must be positive");
      std::string je;
      for (double e : cfg.converge_epsilons)
        je += (je.empty() ? "" : ",") + fmt17(e);
      echo("converge.epsilons", je);
    } else if (shared_epsilon > 0.0) {
      cfg.converge_epsilons = {shared_epsilon};
    }
  }

  if (auto s = keys.take("output.dir")) cfg.output_dir = *s;
  echo("output.dir", cfg.output_dir);

  keys.finish(mode_name(cfg.mode));
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

namespace {

struct OutputSink {
  std::filesystem::path dir;
  std::vector<std::pair<std::string, std::uint32_t>> files;  // path, crc

  std::string write(const std::string& name, const std::string& content) {
    std::filesystem::path p = dir / name;
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out)
      throw PersistenceError(PersistErrorKind::io, "cannot open " + p.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out)
      throw PersistenceError(PersistErrorKind::io, "write failed: " + p.string());
    files.emplace_back(p.string(), crc32(content.data(), content.size()));
    return p.string();
  }

  std::string note_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string buf = ss.str();
    files.emplace_back(path, crc32(buf.data(), buf.size()));
    return path;
  }
};

// Initial coefficient vector: Gaussian packet expansion or CSV rows
// "re[,im]".  Returned normalized; pre-normalization norm reported.
Vector initial_state(const RunConfig& cfg, int quad_order, double* captured) {
  Vector c;
  if (cfg.packet) {
    c = packet_coefficients(cfg.basis, *cfg.packet, quad_order);
  } else {
    std::ifstream in(*cfg.state_file);
    if (!in)
      throw ConfigError("state.file",
                        "cannot open state file '" + *cfg.state_file + "'");
    std::vector<Complex> vals;
    std::string line;
    while (std::getline(in, line)) {
      line = trim(line);
      if (line.empty() || line[0] == '#') continue;
      auto items = split_list(line);
      if (items.size() > 2)
        throw ConfigError("state.file", "state rows must be 're' or 're,im'");
      double re = to_double("state.file", items[0]);
      double im = items.size() == 2 ? to_double("state.file", items[1]) : 0.0;
      vals.emplace_back(re, im);
    }
    if (vals.size() > static_cast<std::size_t>(cfg.basis.dimension))
      throw ConfigError("state.file", "state file has more rows than basis dimension");
    c = Vector::Zero(cfg.basis.dimension);
    for (std::size_t i = 0; i < vals.size(); ++i)
      c(static_cast<Eigen::Index>(i)) = vals[i];
  }
  *captured = c.norm();
  if (*captured == 0.0)
    throw ConfigError(cfg.packet ? "packet.width" : "state.file",
                      "initial state is zero");
  return c / *captured;
}

std::string csv_matrix(const Matrix& m) {
  std::ostringstream os;
  os << "j,k,re,im\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      os << i << ',' << j << ',' << fmt17(m(i, j).real()) << ','
         << fmt17(m(i, j).imag()) << '\n';
  return os.str();
}

void write_manifest(OutputSink& sink, const RunConfig& cfg,
                    const std::vector<std::string>& warnings,
                    RunResult& result) {
  nlohmann::json man;
  man["tool"]["name"] = kToolName;
  man["tool"]["version"] = kToolVersion;
  for (const auto& [k, v] : cfg.echo) man["config"][k] = v;
  man["warnings"] = warnings;
  man["outputs"] = nlohmann::json::array();
  for (const auto& [path, crc] : sink.files) {
    char hex[16];
    std::snprintf(hex, sizeof hex, "%08" PRIx32, crc);
    man["outputs"].push_back({{"path", path}, {"crc32", hex}});
  }
  sink.write("manifest.json", man.dump(2) + "\n");
  for (const auto& entry : sink.files) result.outputs.push_back(entry.first);
  result.warnings = warnings;
}

HermitianOperator build_hamiltonian(const BasisSpec& basis,
                                    const std::optional<PotentialSpec>& pot,
                                    int quad_order) {
  HermitianOperator b = kinetic_matrix(basis);
  if (pot) {
    QuadratureRule rule = gauss_hermite_rule(quad_order);
    HermitianOperator v = potential_matrix(basis, *pot, rule);
    b = HermitianOperator::symmetrized(b.matrix() + v.matrix());
  }
  return b;
}

int resolve_quad_order(const RunConfig& cfg, int dimension) {
  if (cfg.quadrature_order > 0) return cfg.quadrature_order;
  return std::min(kMaxHermiteOrder, std::max(2 * dimension, 64));
}

void run_spectrum(const RunConfig& cfg, OutputSink& sink,
                  std::vector<std::string>& warnings) {
  int order = resolve_quad_order(cfg, cfg.basis.dimension);
  HermitianOperator b = build_hamiltonian(cfg.basis, cfg.potential, order);
  EigenSystem eig = diagonalize(b);

  std::ostringstream os;
  os << "index,eigenvalue\n";
  for (Eigen::Index i = 0; i < eig.dimension(); ++i)
    os << i << ',' << fmt17(eig.eigenvalues(i)) << '\n';
  sink.write("eigenvalues.csv", os.str());

  std::filesystem::path p = sink.dir / "eigensystem.hqev";
  save_eigensystem(eig, p.string());
  sink.note_binary(p.string());
  (void)warnings;
}

void run_evolve(const RunConfig& cfg, OutputSink& sink,
                std::vector<std::string>& warnings) {
  int order = resolve_quad_order(cfg, cfg.basis.dimension);
  HermitianOperator b = build_hamiltonian(cfg.basis, cfg.potential, order);
  EigenSystem eig = diagonalize(b);

  double captured = 0.0;
  Vector c0 = initial_state(cfg, order, &captured);
  if (cfg.packet && captured < 0.99) {
    std::ostringstream os;
    os << "packet poorly captured by basis: |coefficients| = " << fmt17(captured);
    warnings.push_back(os.str());
  }

  Matrix q = position_matrix(cfg.basis).matrix();
  std::ostringstream os;
  os << "time,norm,overlap_re,overlap_im,position_mean,energy_mean\n";
  for (double t : cfg.evolve_times) {
    Vector ct = evolve(eig, t, c0);
    Complex overlap = c0.dot(ct);
    double n2 = ct.squaredNorm();
    double qmean = ct.dot(q * ct).real() / n2;
    double emean = ct.dot(b.matrix() * ct).real() / n2;
    os << fmt17(t) << ',' << fmt17(ct.norm()) << ',' << fmt17(overlap.real())
       << ',' << fmt17(overlap.imag()) << ',' << fmt17(qmean) << ','
       << fmt17(emean) << '\n';
  }
  sink.write("evolve.csv", os.str());
}

void run_scatter(const RunConfig& cfg, OutputSink& sink,
                 std::vector<std::string>& warnings) {
  int order = resolve_quad_order(cfg, cfg.basis.dimension);
  HermitianOperator free_op = kinetic_matrix(cfg.basis);
  HermitianOperator v =
      cfg.potential
          ? potential_matrix(cfg.basis, *cfg.potential, gauss_hermite_rule(order))
          : HermitianOperator::symmetrized(
                Matrix::Zero(cfg.basis.dimension, cfg.basis.dimension));
  ScatteringPair pair = ScatteringPair::make(free_op, v);

  const ScatteringConfig& sc = *cfg.scattering;

  double captured = 0.0;
  Vector c0 = initial_state(cfg, order, &captured);
  if (cfg.packet && captured < 0.99) {
    std::ostringstream os;
    os << "packet poorly captured by basis: |coefficients| = " << fmt17(captured);
    warnings.push_back(os.str());
  }

  EpsilonWindow win = epsilon_validity_window(pair, c0);
  if (!win.contains(sc.epsilon)) {
    std::ostringstream os;
    os << "epsilon " << fmt17(sc.epsilon) << " outside validity window ("
       << fmt17(win.local_spacing) << ", " << fmt17(win.packet_energy)
       << "); results dominated by discretization";
    warnings.push_back(os.str());
  }

  WaveLimitResult lim_plus = detect_wave_limit(pair, c0, sc, Direction::plus);
  WaveLimitResult lim_minus = detect_wave_limit(pair, c0, sc, Direction::minus);

  WaveOperatorResult abel_p = moller_abel_average(pair, sc, Direction::plus);
  WaveOperatorResult res_p = moller_resolvent(pair, sc, Direction::plus);
  WaveOperatorResult abel_m = moller_abel_average(pair, sc, Direction::minus);
  WaveOperatorResult res_m = moller_resolvent(pair, sc, Direction::minus);
  double gap_p = (abel_p.matrix - res_p.matrix).cwiseAbs().maxCoeff();
  double gap_m = (abel_m.matrix - res_m.matrix).cwiseAbs().maxCoeff();

  TMatrixResult tmat = t_matrix(pair, sc);
  SMatrixResult smat = s_matrix(pair, sc);
  const Eigen::Index n = cfg.basis.dimension;
  double unit_direct =
      (smat.direct.adjoint() * smat.direct - Matrix::Identity(n, n))
          .cwiseAbs()
          .maxCoeff();
  double unit_born =
      (smat.born_like.adjoint() * smat.born_like - Matrix::Identity(n, n))
          .cwiseAbs()
          .maxCoeff();

  {
    std::ostringstream os;
    os << "direction,index,time,residual\n";
    auto dump = [&os](const WaveLimitResult& lim, const char* name) {
      for (std::size_t k = 0; k < lim.residuals.size(); ++k)
        os << name << ',' << k << ',' << fmt17(lim.times[k + 1]) << ','
           << fmt17(lim.residuals[k]) << '\n';
    };
    dump(lim_plus, "plus");
    dump(lim_minus, "minus");
    sink.write("wave_residuals.csv", os.str());
  }
  {
    std::ostringstream os;
    os << "quantity,value\n";
    auto row = [&os](const char* k, double v) {
      os << k << ',' << fmt17(v) << '\n';
    };
    row("epsilon", sc.epsilon);
    row("epsilon_window_lo", win.local_spacing);
    row("epsilon_window_hi", win.packet_energy);
    row("packet_energy", win.packet_energy);
    row("state_norm_captured", captured);
    row("wave_limit_convergent_plus",
        lim_plus.verdict == WaveLimitVerdict::convergent ? 1.0 : 0.0);
    row("wave_limit_convergent_minus",
        lim_minus.verdict == WaveLimitVerdict::convergent ? 1.0 : 0.0);
    row("wave_residual_last_plus",
        lim_plus.residuals.empty() ? 0.0 : lim_plus.residuals.back());
    row("wave_residual_last_minus",
        lim_minus.residuals.empty() ? 0.0 : lim_minus.residuals.back());
    row("abel_resolvent_gap_plus", gap_p);
    row("abel_resolvent_gap_minus", gap_m);
    row("intertwining_defect_t1_plus", res_p.intertwining_defects[0]);
    row("intertwining_defect_t2_plus", res_p.intertwining_defects[1]);
    row("intertwining_defect_t5_plus", res_p.intertwining_defects[2]);
    row("t_matrix_dual_gap", tmat.dual_gap);
    row("s_matrix_discrepancy", smat.discrepancy);
    row("s_unitarity_defect_direct", unit_direct);
    row("s_unitarity_defect_born", unit_born);
    sink.write("scatter_summary.csv", os.str());
  }
  sink.write("tmatrix.csv", csv_matrix(tmat.matrix));
  sink.write("smatrix_born.csv", csv_matrix(smat.born_like));
  sink.write("smatrix_direct.csv", csv_matrix(smat.direct));
}

void run_converge(const RunConfig& cfg, OutputSink& sink,
                  std::vector<std::string>& warnings) {
  std::ostringstream os;
  os << "dimension,epsilon,time,quantity,value\n";
  auto row = [&os](int dim, double eps, double t, const char* q, double v) {
    os << dim << ',' << fmt17(eps) << ',' << fmt17(t) << ',' << q << ','
       << fmt17(v) << '\n';
  };

  double prev_e0 = 0.0;
  bool have_prev = false;
  for (int dim : cfg.converge_dimensions) {
    BasisSpec basis{dim, cfg.basis.scale};
    int order = resolve_quad_order(cfg, dim);
    HermitianOperator b = build_hamiltonian(basis, cfg.potential, order);
    EigenSystem eig = diagonalize(b);
    double e0 = eig.eigenvalues(0);
    row(dim, 0.0, 0.0, "ground_energy", e0);
    if (have_prev)
      row(dim, 0.0, 0.0, "ground_energy_delta", std::abs(e0 - prev_e0));
    prev_e0 = e0;
    have_prev = true;

    if (!cfg.converge_epsilons.empty()) {
      HermitianOperator free_op = kinetic_matrix(basis);
      HermitianOperator v =
          cfg.potential ? potential_matrix(basis, *cfg.potential,
                                           gauss_hermite_rule(order))
                        : HermitianOperator::symmetrized(
                              Matrix::Zero(dim, dim));
      ScatteringPair pair = ScatteringPair::make(free_op, v);
      for (double eps : cfg.converge_epsilons) {
        ScatteringConfig sc;
        sc.epsilon = eps;
        WaveOperatorResult wp = moller_resolvent(pair, sc, Direction::plus);
        TMatrixResult tmat = t_matrix(pair, sc);
        SMatrixResult smat = s_matrix(pair, sc);
        double unit =
            (smat.direct.adjoint() * smat.direct - Matrix::Identity(dim, dim))
                .cwiseAbs()
                .maxCoeff();
        row(dim, eps, 0.0, "t_matrix_dual_gap", tmat.dual_gap);
        row(dim, eps, 0.0, "s_matrix_discrepancy", smat.discrepancy);
        row(dim, eps, 0.0, "s_unitarity_defect_direct", unit);
        const double defect_times[] = {1.0, 2.0, 5.0};
        for (std::size_t k = 0; k < 3; ++k)
          row(dim, eps, defect_times[k], "intertwining_defect",
              wp.intertwining_defects[k]);
      }
    }
  }
  sink.write("converge.csv", os.str());
  (void)warnings;
}

}  // namespace

RunResult run(const RunConfig& config) {
  OutputSink sink;
  sink.dir = config.output_dir;
  std::error_code ec;
  std::filesystem::create_directories(sink.dir, ec);
  if (ec && !std::filesystem::is_directory(sink.dir))
    throw PersistenceError(PersistErrorKind::io,
                           "cannot create output directory " + sink.dir.string());

  std::vector<std::string> warnings;
  switch (config.mode) {
    case RunMode::spectrum: run_spectrum(config, sink, warnings); break;
    case RunMode::evolve: run_evolve(config, sink, warnings); break;
    case RunMode::scatter: run_scatter(config, sink, warnings); break;
    case RunMode::converge: run_converge(config, sink, warnings); break;
  }

  RunResult result;
  write_manifest(sink, config, warnings, result);
  return result;
}

}  // namespace hqm
