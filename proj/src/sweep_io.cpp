#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "lmgheom/errors.hpp"
#include "lmgheom/experiments.hpp"

namespace lmgheom {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& text, const std::string& key) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': '" + text + "' is not a number");
  }
  if (used != text.size()) throw ConfigError("key '" + key + "': '" + text + "' is not a number");
  return v;
}

// Accepts plain numbers and the forms pi, pi/k, x*pi, x*pi/k.
double parse_angle(std::string text, const std::string& key) {
  text = trim(text);
  const auto pos = text.find("pi");
  if (pos == std::string::npos) return parse_number(text, key);
  double factor = 1.0;
  if (pos > 0) {
    std::string pre = trim(text.substr(0, pos));
    if (pre.empty() || pre.back() != '*') throw ConfigError("key '" + key + "': bad angle '" + text + "'");
    pre.pop_back();
    factor = parse_number(trim(pre), key);
  }
  std::string post = trim(text.substr(pos + 2));
  double divisor = 1.0;
  if (!post.empty()) {
    if (post.front() != '/') throw ConfigError("key '" + key + "': bad angle '" + text + "'");
    divisor = parse_number(trim(post.substr(1)), key);
  }
  return factor * kPi / divisor;
}

std::vector<std::string> scalars(const YAML::Node& node, const std::string& key) {
  std::vector<std::string> out;
  if (node.IsScalar()) {
    out.push_back(node.as<std::string>());
  } else if (node.IsSequence()) {
    for (const auto& item : node) {
      if (!item.IsScalar()) throw ConfigError("key '" + key + "' must hold a list of scalars");
      out.push_back(item.as<std::string>());
    }
  } else {
    throw ConfigError("key '" + key + "' must be a scalar or a list");
  }
  return out;
}

std::string single(const YAML::Node& node, const std::string& key) {
  if (!node.IsScalar()) throw ConfigError("key '" + key + "' must be a scalar");
  return node.as<std::string>();
}

std::vector<double> numbers(const YAML::Node& node, const std::string& key) {
  std::vector<double> out;
  for (const auto& s : scalars(node, key)) out.push_back(parse_number(trim(s), key));
  return out;
}

int integer(const std::string& text, const std::string& key) {
  const double v = parse_number(trim(text), key);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError("key '" + key + "' must be an integer");
  return static_cast<int>(v);
}

bool boolean(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  if (t == "true" || t == "yes" || t == "1") return true;
  if (t == "false" || t == "no" || t == "0") return false;
  throw ConfigError("key '" + key + "' must be true or false");
}

template <class F>
auto wrap(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("key '" + key + "': " + e.what());
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

constexpr const char* kSweepHeader =
    "path,protocol,solver,N,T,tF,q,theta,r,M,L,fidelity,trace_drift,wall_seconds";

}  // namespace

std::string to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::heom: return "heom";
    case SolverKind::lindblad: return "lindblad";
    case SolverKind::unitary: return "unitary";
  }
  return "heom";
}

SolverKind parse_solver_kind(const std::string& text) {
  if (text == "heom") return SolverKind::heom;
  if (text == "lindblad") return SolverKind::lindblad;
  if (text == "unitary") return SolverKind::unitary;
  throw InvalidArgument("unknown solver '" + text + "'");
}

SweepConfig parse_sweep_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
  SweepConfig c;
  if (!root.IsNull()) {
    if (!root.IsMap()) throw ConfigError("config must be a flat key-value mapping");
    for (const auto& kv : root) {
      const std::string key = kv.first.as<std::string>();
      const YAML::Node& v = kv.second;
      if (key == "path") {
        c.path = wrap(key, [&] { return parse_path_kind(single(v, key)); });
        if (c.path == PathKind::custom) throw ConfigError("sweeps support first_order and second_order paths");
      } else if (key == "protocol") {
        c.protocol = wrap(key, [&] { return parse_protocol(single(v, key)); });
      } else if (key == "solver") {
        c.solver = wrap(key, [&] { return parse_solver_kind(single(v, key)); });
      } else if (key == "N") {
        c.n_qubits.clear();
        for (const auto& s : scalars(v, key)) c.n_qubits.push_back(integer(s, key));
      } else if (key == "T_grid") {
        c.temperatures = numbers(v, key);
      } else if (key == "log10_T_grid") {
        c.temperatures.clear();
        for (double x : numbers(v, key)) c.temperatures.push_back(std::pow(10.0, x));
      } else if (key == "tF_grid") {
        c.drive_times = numbers(v, key);
      } else if (key == "log10_tF_grid") {
        c.drive_times.clear();
        for (double x : numbers(v, key)) c.drive_times.push_back(std::pow(10.0, x));
      } else if (key == "q") {
        c.couplings = numbers(v, key);
      } else if (key == "theta") {
        c.thetas.clear();
        for (const auto& s : scalars(v, key)) c.thetas.push_back(parse_angle(s, key));
      } else if (key == "r") {
        c.renorms.clear();
        for (const auto& s : scalars(v, key)) c.renorms.push_back(integer(s, key));
      } else if (key == "gamma") {
        c.gamma = parse_number(trim(single(v, key)), key);
      } else if (key == "M") {
        c.matsubara.fixed = integer(single(v, key), key);
      } else if (key == "M_low_T") {
        c.matsubara.low_t = integer(single(v, key), key);
      } else if (key == "M_high_T") {
        c.matsubara.high_t = integer(single(v, key), key);
      } else if (key == "M_switch_T") {
        c.matsubara.switch_t = parse_number(trim(single(v, key)), key);
      } else if (key == "L") {
        c.depth = integer(single(v, key), key);
      } else if (key == "output_dir") {
        c.output_dir = single(v, key);
      } else if (key == "force_heom") {
        c.force_heom = boolean(single(v, key), key);
      } else if (key == "integrator") {
        c.integrator = wrap(key, [&] { return parse_integrator(single(v, key)); });
      } else if (key == "rel_tol") {
        c.rel_tol = parse_number(trim(single(v, key)), key);
      } else if (key == "abs_tol") {
        c.abs_tol = parse_number(trim(single(v, key)), key);
      } else if (key == "max_step") {
        c.max_step = parse_number(trim(single(v, key)), key);
      } else if (key == "lindblad_max_step") {
        c.lindblad_max_step = parse_number(trim(single(v, key)), key);
      } else if (key == "unitary_step") {
        c.unitary_step = parse_number(trim(single(v, key)), key);
      } else if (key == "schedule_grid") {
        c.schedule_grid = integer(single(v, key), key);
      } else if (key == "workers") {
        c.workers = integer(single(v, key), key);
      } else {
        throw ConfigError("unknown config key '" + key + "'");
      }
    }
  }
  c.apply_defaults();
  c.validate();
  return c;
}

SweepConfig load_sweep_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_sweep_config(ss.str());
}

std::string SweepPoint::key() const {
  std::ostringstream os;
  os << "path=" << to_string(path) << ";protocol=" << to_string(protocol)
     << ";solver=" << to_string(solver) << ";N=" << n_qubits << ";T=" << format_double(temperature)
     << ";tF=" << format_double(t_final) << ";q=" << format_double(q)
     << ";theta=" << format_double(theta) << ";r=" << renorm << ";M=" << m_cut << ";L=" << depth;
  return os.str();
}

std::uint64_t SweepPoint::hash() const {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : key()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRecord>& records) {
  out << kSweepHeader << '\n';
  for (const auto& r : records) {
    const SweepPoint& p = r.point;
    out << to_string(p.path) << ',' << to_string(p.protocol) << ',' << to_string(p.solver) << ','
        << p.n_qubits << ',' << format_double(p.temperature) << ',' << format_double(p.t_final)
        << ',' << format_double(p.q) << ',' << format_double(p.theta) << ',' << p.renorm << ','
        << p.m_cut << ',' << p.depth << ',' << format_double(r.fidelity) << ','
        << format_double(r.trace_drift) << ',' << format_double(r.wall_seconds) << '\n';
  }
}

std::vector<SweepRecord> read_sweep_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) return {};
  if (trim(line) != kSweepHeader) throw ConfigError("sweep CSV has an unexpected header");
  std::vector<SweepRecord> out;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 14) throw ConfigError("sweep CSV row " + std::to_string(row) + " is malformed");
    try {
      SweepRecord r;
      r.point.path = parse_path_kind(cells[0]);
      r.point.protocol = parse_protocol(cells[1]);
      r.point.solver = parse_solver_kind(cells[2]);
      r.point.n_qubits = std::stoi(cells[3]);
      r.point.temperature = std::strtod(cells[4].c_str(), nullptr);
      r.point.t_final = std::strtod(cells[5].c_str(), nullptr);
      r.point.q = std::strtod(cells[6].c_str(), nullptr);
      r.point.theta = std::strtod(cells[7].c_str(), nullptr);
      r.point.renorm = std::stoi(cells[8]);
      r.point.m_cut = std::stoi(cells[9]);
      r.point.depth = std::stoi(cells[10]);
      r.fidelity = std::strtod(cells[11].c_str(), nullptr);
      r.trace_drift = std::strtod(cells[12].c_str(), nullptr);
      r.wall_seconds = std::strtod(cells[13].c_str(), nullptr);
      out.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw ConfigError("sweep CSV row " + std::to_string(row) + " is malformed");
    }
  }
  return out;
}

void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRow>& rows) {
  out << "T,F_heom,F_lindblad,discrepancy,low_T\n";
  for (const auto& r : rows)
    out << format_double(r.temperature) << ',' << format_double(r.f_heom) << ','
        << format_double(r.f_lindblad) << ',' << format_double(r.discrepancy) << ','
        << (r.low_temperature ? 1 : 0) << '\n';
}

}  // namespace lmgheom
