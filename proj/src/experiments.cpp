#include "lmgheom/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <map>
#include <mutex>
#include <thread>

#include <Eigen/QR>
#include <gsl/gsl_version.h>
#include <json.hpp>

#include "lmgheom/errors.hpp"
#include "lmgheom/lindblad.hpp"
#include "lmgheom/observables.hpp"
#include "lmgheom/unitary.hpp"

namespace lmgheom {

namespace {

using json = nlohmann::json;

constexpr const char* kVersion = "1.0.0";

bool is_theta_zero(double theta) { return std::abs(std::sin(theta)) < 1e-12; }

bool valid_combination(double q, double theta, int r) {
  if (r == 0) return true;
  return q > 0.0 && !is_theta_zero(theta);
}

// Propagators U(t_F) shared across temperatures of closed-system points.
class PropagatorCache {
 public:
  CMatrix get(const SweepPoint& p, const SweepConfig& config) {
    std::ostringstream os;
    os << to_string(p.path) << '|' << to_string(p.protocol) << '|' << p.n_qubits << '|'
       << std::hexfloat << p.t_final << '|' << config.unitary_step << '|' << config.schedule_grid;
    const std::string key = os.str();
    std::shared_future<CMatrix> fut;
    std::promise<CMatrix> promise;
    bool owner = false;
    {
      std::lock_guard lock(mutex_);
      auto it = cache_.find(key);
      if (it == cache_.end()) {
        fut = promise.get_future().share();
        cache_.emplace(key, fut);
        owner = true;
      } else {
        fut = it->second;
      }
    }
    if (owner) {
      try {
        const SpinSystem sys(p.n_qubits);
        const DriveSchedule schedule = build_schedule(sys, DrivePath::of_kind(p.path), p.protocol,
                                                      p.t_final, config.schedule_grid);
        const auto h = drive_hamiltonian(sys, schedule, CMatrix::Zero(sys.dim(), sys.dim()));
        promise.set_value(propagate_unitary(h, {p.t_final}, config.unitary_step).back());
      } catch (...) {
        promise.set_exception(std::current_exception());
        std::lock_guard lock(mutex_);
        cache_.erase(key);
      }
    }
    return fut.get();
  }

 private:
  std::mutex mutex_;
  std::map<std::string, std::shared_future<CMatrix>> cache_;
};

PropagatorCache& propagator_cache() {
  static PropagatorCache cache;
  return cache;
}

json config_to_json(const SweepConfig& c) {
  json j;
  j["path"] = to_string(c.path);
  j["protocol"] = to_string(c.protocol);
  j["solver"] = to_string(c.solver);
  j["N"] = c.n_qubits;
  j["T_grid"] = c.temperatures;
  j["tF_grid"] = c.drive_times;
  j["q"] = c.couplings;
  j["theta"] = c.thetas;
  j["r"] = c.renorms;
  j["gamma"] = c.gamma;
  j["M_low_T"] = c.matsubara.low_t;
  j["M_high_T"] = c.matsubara.high_t;
  j["M_switch_T"] = c.matsubara.switch_t;
  if (c.matsubara.fixed) j["M"] = *c.matsubara.fixed;
  j["L"] = c.depth;
  j["output_dir"] = c.output_dir;
  j["force_heom"] = c.force_heom;
  j["integrator"] = to_string(c.integrator);
  j["rel_tol"] = c.rel_tol;
  j["abs_tol"] = c.abs_tol;
  j["max_step"] = c.max_step;
  j["lindblad_max_step"] = c.lindblad_max_step;
  j["unitary_step"] = c.unitary_step;
  j["schedule_grid"] = c.schedule_grid;
  j["workers"] = c.workers;
  return j;
}

void atomic_write(const std::filesystem::path& file, const std::string& content) {
  const std::filesystem::path tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw ResourceError("cannot write " + tmp.string());
    out << content;
    if (!out) throw ResourceError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, file);
}

double spectral_width(const SpinSystem& sys, ControlPoint p) {
  const Spectrum s = eigendecompose(build_hamiltonian(sys, p));
  return s.energies(s.size() - 1) - s.energies(0);
}

}  // namespace

int MatsubaraRule::for_temperature(double temperature) const {
  if (fixed) return *fixed;
  return temperature < switch_t ? low_t : high_t;
}

std::vector<double> default_temperature_grid() {
  std::vector<double> g;
  for (int k = 0; k < 12; ++k) g.push_back(std::pow(10.0, -0.8 + 0.2 * k));
  return g;
}

std::vector<double> default_drive_times(PathKind path) {
  std::vector<double> g;
  if (path == PathKind::second_order) {
    for (int k = 0; k <= 4; ++k) g.push_back(std::pow(10.0, 0.4 * k));
  } else {
    for (int k = 1; k <= 9; ++k) g.push_back(std::pow(10.0, 0.4 * k));
  }
  return g;
}

void SweepConfig::apply_defaults() {
  if (temperatures.empty()) temperatures = default_temperature_grid();
  if (drive_times.empty()) drive_times = default_drive_times(path);
}

void SweepConfig::validate() const {
  if (path == PathKind::custom) throw ConfigError("sweeps support first_order and second_order paths");
  if (n_qubits.empty() || temperatures.empty() || drive_times.empty() || couplings.empty() ||
      thetas.empty() || renorms.empty())
    throw ConfigError("every sweep grid must be nonempty");
  for (int n : n_qubits)
    if (n < 2) throw ConfigError("N must be >= 2");
  for (double t : temperatures)
    if (!(t > 0.0) || !std::isfinite(t)) throw ConfigError("temperatures must be positive");
  for (double t : drive_times)
    if (!(t > 0.0) || !std::isfinite(t)) throw ConfigError("drive times must be positive");
  for (double q : couplings)
    if (!(q >= 0.0) || !std::isfinite(q)) throw ConfigError("couplings q must be >= 0");
  for (double th : thetas)
    if (!std::isfinite(th)) throw ConfigError("theta must be finite");
  for (int r : renorms)
    if (r != 0 && r != 1) throw ConfigError("r must be 0 or 1");
  if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
  if (depth < 1) throw ConfigError("L must be >= 1");
  if (matsubara.low_t < 0 || matsubara.high_t < 0 || (matsubara.fixed && *matsubara.fixed < 0))
    throw ConfigError("Matsubara cutoffs must be >= 0");
  if (!(matsubara.switch_t > 0.0)) throw ConfigError("M_switch_T must be positive");
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0) || !(max_step > 0.0) || !(lindblad_max_step > 0.0) ||
      !(unitary_step > 0.0))
    throw ConfigError("tolerances and step sizes must be positive");
  if (schedule_grid < 256) throw ConfigError("schedule_grid must be >= 256");
  if (workers < 0) throw ConfigError("workers must be >= 0");
  bool any = false;
  for (double q : couplings)
    for (double th : thetas)
      for (int r : renorms) any = any || valid_combination(q, th, r);
  if (!any) throw ConfigError("no valid (q, theta, r) combination: r=1 needs q>0 and theta != 0");
}

bool coordinate_less(const SweepPoint& a, const SweepPoint& b) {
  auto tie = [](const SweepPoint& p) {
    return std::make_tuple(static_cast<int>(p.path), static_cast<int>(p.protocol),
                           static_cast<int>(p.solver), p.n_qubits, p.t_final, p.q, p.theta,
                           p.renorm, p.temperature, p.m_cut, p.depth);
  };
  return tie(a) < tie(b);
}

std::vector<SweepPoint> enumerate_points(const SweepConfig& config, int* rejected) {
  std::vector<SweepPoint> points;
  int dropped = 0;
  for (int n : config.n_qubits)
    for (double tf : config.drive_times)
      for (double q : config.couplings)
        for (double th : config.thetas)
          for (int r : config.renorms) {
            if (!valid_combination(q, th, r)) {
              ++dropped;
              continue;
            }
            for (double temp : config.temperatures) {
              SweepPoint p;
              p.path = config.path;
              p.protocol = config.protocol;
              p.solver = config.solver;
              if (q == 0.0 && !config.force_heom) p.solver = SolverKind::unitary;
              p.n_qubits = n;
              p.temperature = temp;
              p.t_final = tf;
              p.q = q;
              p.theta = th;
              p.renorm = r;
              p.m_cut = p.solver == SolverKind::unitary ? 0 : config.matsubara.for_temperature(temp);
              p.depth = p.solver == SolverKind::heom ? config.depth : 0;
              points.push_back(p);
            }
          }
  std::sort(points.begin(), points.end(), coordinate_less);
  if (rejected) *rejected = dropped;
  return points;
}

SweepRecord evaluate_point(const SweepPoint& p, const SweepConfig& config) {
  SweepRecord rec;
  rec.point = p;
  const auto start = std::chrono::steady_clock::now();
  try {
    const SpinSystem sys(p.n_qubits);
    const DrivePath path = DrivePath::of_kind(p.path);
    const CMatrix rho0 = thermal_state(eigendecompose(build_hamiltonian(sys, path.start)),
                                       beta_from_temperature(p.temperature));
    CMatrix rho_final;
    switch (p.solver) {
      case SolverKind::unitary: {
        if (p.q != 0.0) throw InvalidArgument("the unitary route needs q = 0");
        const CMatrix u = propagator_cache().get(p, config);
        rho_final = u * rho0 * u.adjoint();
        rec.trace_drift = std::abs(rho_final.trace().real() - 1.0);
        break;
      }
      case SolverKind::heom: {
        const DriveSchedule schedule =
            build_schedule(sys, path, p.protocol, p.t_final, config.schedule_grid);
        const BathModel bath{p.q, config.gamma, p.temperature, p.m_cut};
        SolverConfig sc;
        sc.depth = p.depth;
        sc.integrator = config.integrator;
        sc.rel_tol = config.rel_tol;
        sc.abs_tol = config.abs_tol;
        sc.max_step = config.max_step;
        sc.output_grid = {p.t_final};
        const Trajectory traj = evolve(rho0, sys, schedule, bath, sc, p.theta, p.renorm == 1);
        rho_final = traj.final_state();
        rec.trace_drift = traj.max_trace_drift;
        break;
      }
      case SolverKind::lindblad: {
        const DriveSchedule schedule =
            build_schedule(sys, path, p.protocol, p.t_final, config.schedule_grid);
        const BathModel bath{p.q, config.gamma, p.temperature, p.m_cut};
        LindbladConfig lc;
        lc.rel_tol = config.rel_tol;
        lc.abs_tol = config.abs_tol;
        lc.max_step = config.lindblad_max_step;
        lc.output_grid = {p.t_final};
        const Trajectory traj =
            lindblad_evolve(rho0, sys, schedule, bath, p.theta, p.renorm == 1, lc);
        rho_final = traj.final_state();
        rec.trace_drift = traj.max_trace_drift;
        break;
      }
    }
    rec.fidelity = path_fidelity(rho_final, sys, path).value;
  } catch (const std::exception& e) {
    rec.fidelity = std::numeric_limits<double>::quiet_NaN();
    rec.error = e.what();
  }
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

SweepResult run_sweep(const SweepConfig& input, const SweepProgress& progress) {
  SweepConfig config = input;
  config.apply_defaults();
  config.validate();

  SweepResult result;
  const std::vector<SweepPoint> points = enumerate_points(config, &result.rejected_combinations);

  std::map<std::uint64_t, SweepRecord> store;
  json failures = json::object();
  std::filesystem::path csv_file, meta_file;
  const bool persist = !config.output_dir.empty();
  if (persist) {
    std::filesystem::create_directories(config.output_dir);
    csv_file = std::filesystem::path(config.output_dir) / "sweep.csv";
    meta_file = std::filesystem::path(config.output_dir) / "sweep.json";
    if (std::filesystem::exists(csv_file)) {
      std::ifstream in(csv_file);
      for (auto& r : read_sweep_csv(in)) {
        const std::uint64_t h = r.point.hash();
        auto [it, inserted] = store.emplace(h, r);
        if (!inserted && it->second.point.key() != r.point.key())
          throw Error("coordinate hash collision in " + csv_file.string());
      }
    }
    if (std::filesystem::exists(meta_file)) {
      try {
        std::ifstream in(meta_file);
        const json meta = json::parse(in);
        if (meta.contains("failures")) failures = meta["failures"];
      } catch (const json::exception&) {
        failures = json::object();
      }
    }
  }

  std::vector<SweepPoint> todo;
  for (const auto& p : points) {
    auto it = store.find(p.hash());
    if (it == store.end()) {
      todo.push_back(p);
    } else if (it->second.point.key() != p.key()) {
      throw Error("coordinate hash collision for " + p.key());
    }
  }

  std::mutex mutex;
  double tail_bound = 0.0;
  auto persist_all = [&] {
    if (!persist) return;
    std::vector<SweepRecord> all;
    for (const auto& [h, r] : store) all.push_back(r);
    std::sort(all.begin(), all.end(),
              [](const SweepRecord& a, const SweepRecord& b) { return coordinate_less(a.point, b.point); });
    std::ostringstream csv;
    write_sweep_csv(csv, all);
    atomic_write(csv_file, csv.str());
    json meta;
    meta["tool"] = "lmgheom";
    meta["version"] = kVersion;
    meta["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." +
                            std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION);
    meta["gsl_version"] = GSL_VERSION;
    meta["config"] = config_to_json(config);
    meta["records"] = all.size();
    meta["rejected_combinations"] = result.rejected_combinations;
    meta["failures"] = failures;
    meta["lamb_shift_tail_bound"] = tail_bound;
    atomic_write(meta_file, meta.dump(2) + "\n");
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= todo.size()) return;
      SweepRecord rec = evaluate_point(todo[i], config);
      double bound = 0.0;
      if (rec.point.solver == SolverKind::lindblad && rec.error.empty()) {
        try {
          const SpinSystem sys(rec.point.n_qubits);
          const DrivePath path = DrivePath::of_kind(rec.point.path);
          const double width = std::max(spectral_width(sys, path.start), spectral_width(sys, path.end));
          bound = lamb_shift_tail_bound(
              BathModel{rec.point.q, config.gamma, rec.point.temperature, rec.point.m_cut}, width);
        } catch (const Error&) {
        }
      }
      std::lock_guard lock(mutex);
      tail_bound = std::max(tail_bound, bound);
      if (!rec.error.empty()) failures[rec.point.key()] = rec.error;
      store[rec.point.hash()] = rec;
      ++result.computed;
      persist_all();
      if (progress) progress(rec);
    }
  };

  const int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const int n_workers =
      std::max(1, std::min<int>(config.workers == 0 ? hw : config.workers, static_cast<int>(todo.size())));
  if (!todo.empty()) {
    if (n_workers == 1) {
      worker();
    } else {
      std::vector<std::jthread> pool;
      for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    }
  }

  for (const auto& p : points) result.records.push_back(store.at(p.hash()));
  return result;
}

OptimalTemperature find_optimal_temperature(std::vector<double> temperatures,
                                            std::vector<double> fidelities, TemperatureAxis axis) {
  if (temperatures.size() != fidelities.size())
    throw InvalidArgument("temperature and fidelity lists differ in length");
  if (temperatures.size() < 5) throw InvalidArgument("optimal temperature needs at least 5 points");
  std::vector<std::size_t> order(temperatures.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return temperatures[a] < temperatures[b]; });
  std::vector<double> x, f;
  for (std::size_t i : order) {
    if (!(temperatures[i] > 0.0) && axis == TemperatureAxis::log10)
      throw InvalidArgument("log axis needs positive temperatures");
    if (!std::isfinite(fidelities[i])) throw InvalidArgument("fidelity values must be finite");
    x.push_back(axis == TemperatureAxis::log10 ? std::log10(temperatures[i]) : temperatures[i]);
    f.push_back(fidelities[i]);
  }
  const std::size_t n = f.size();
  const std::size_t i = static_cast<std::size_t>(std::max_element(f.begin(), f.end()) - f.begin());
  OptimalTemperature out;
  out.argmax = i;
  auto to_t = [&](double v) { return axis == TemperatureAxis::log10 ? std::pow(10.0, v) : v; };
  out.t_opt = to_t(x[i]);
  out.max_fidelity = f[i];
  if (i == 0 || i == n - 1) return out;
  out.interior = true;

  const double x0 = x[i - 1], x1 = x[i], x2 = x[i + 1];
  const double f0 = f[i - 1], f1 = f[i], f2 = f[i + 1];
  const double num = (x1 - x0) * (x1 - x0) * (f1 - f2) - (x1 - x2) * (x1 - x2) * (f1 - f0);
  const double den = (x1 - x0) * (f1 - f2) - (x1 - x2) * (f1 - f0);
  if (den == 0.0) return out;
  const double xv = x1 - 0.5 * num / den;
  const double l0 = (xv - x1) * (xv - x2) / ((x0 - x1) * (x0 - x2));
  const double l1 = (xv - x0) * (xv - x2) / ((x1 - x0) * (x1 - x2));
  const double l2 = (xv - x0) * (xv - x1) / ((x2 - x0) * (x2 - x1));
  out.t_opt = to_t(xv);
  out.max_fidelity = f0 * l0 + f1 * l1 + f2 * l2;
  return out;
}

std::string to_string(FitModel model) {
  switch (model) {
    case FitModel::linear: return "linear";
    case FitModel::power: return "power";
    case FitModel::quadratic_inverse: return "quadratic_inverse";
  }
  return "linear";
}

FitModel parse_fit_model(const std::string& text) {
  if (text == "linear") return FitModel::linear;
  if (text == "power") return FitModel::power;
  if (text == "quadratic_inverse") return FitModel::quadratic_inverse;
  throw InvalidArgument("unknown fit model '" + text + "'");
}

FitResult fit_scaling(const std::vector<double>& sizes, const std::vector<double>& values,
                      FitModel model) {
  if (sizes.size() != values.size()) throw InvalidArgument("fit inputs differ in length");
  if (sizes.size() < 3) throw InvalidArgument("scaling fits need at least 3 sizes");
  const Eigen::Index n = static_cast<Eigen::Index>(sizes.size());
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(sizes[i] > 0.0) || !std::isfinite(values[i]))
      throw InvalidArgument("fit inputs must be finite with positive sizes");

  const int cols = model == FitModel::linear ? 1 : 2;
  Eigen::MatrixXd a(n, cols);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = sizes[i];
    switch (model) {
      case FitModel::linear:
        a(i, 0) = x;
        y(i) = values[i];
        break;
      case FitModel::power:
        if (!(values[i] > 0.0)) throw InvalidArgument("power fits need positive values");
        a(i, 0) = 1.0;
        a(i, 1) = -std::log(x);
        y(i) = std::log(values[i]);
        break;
      case FitModel::quadratic_inverse:
        a(i, 0) = 1.0 / x;
        a(i, 1) = -1.0 / (x * x);
        y(i) = values[i];
        break;
    }
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-12);
  if (qr.rank() < cols) throw FitError("design matrix is rank deficient");
  const Eigen::VectorXd beta = qr.solve(y);
  const Eigen::VectorXd fitted = a * beta;

  FitResult out;
  out.model = model;
  const double ss_res = (y - fitted).squaredNorm();
  const double ss_tot = (y.array() - y.mean()).square().sum();
  out.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
  if (model == FitModel::power) {
    out.coefficients = {std::exp(beta(0)), beta(1)};
    for (Eigen::Index i = 0; i < n; ++i)
      out.residuals.push_back(values[i] - std::exp(fitted(i)));
  } else {
    out.coefficients.assign(beta.data(), beta.data() + beta.size());
    for (Eigen::Index i = 0; i < n; ++i) out.residuals.push_back(y(i) - fitted(i));
  }
  return out;
}

std::vector<ComparisonRow> compare_solvers(const SweepConfig& input,
                                           const SweepProgress& progress) {
  SweepConfig config = input;
  config.apply_defaults();
  config.validate();
  if (config.n_qubits.size() != 1 || config.drive_times.size() != 1 ||
      config.couplings.size() != 1 || config.thetas.size() != 1 || config.renorms.size() != 1)
    throw ConfigError("compare needs a single N, tF, q, theta and r");

  SweepConfig heom = config, lind = config;
  heom.solver = SolverKind::heom;
  lind.solver = SolverKind::lindblad;
  if (!config.output_dir.empty()) {
    heom.output_dir = (std::filesystem::path(config.output_dir) / "heom").string();
    lind.output_dir = (std::filesystem::path(config.output_dir) / "lindblad").string();
  }
  const SweepResult rh = run_sweep(heom, progress);
  const SweepResult rl = run_sweep(lind, progress);

  std::vector<ComparisonRow> rows;
  for (std::size_t i = 0; i < rh.records.size(); ++i) {
    ComparisonRow row;
    row.temperature = rh.records[i].point.temperature;
    row.f_heom = rh.records[i].fidelity;
    row.f_lindblad = rl.records[i].fidelity;
    row.discrepancy = std::abs(row.f_heom - row.f_lindblad);
    row.low_temperature = row.temperature < config.gamma / (2.0 * kPi);
    rows.push_back(row);
  }
  std::sort(rows.begin(), rows.end(),
            [](const ComparisonRow& a, const ComparisonRow& b) { return a.temperature < b.temperature; });
  return rows;
}

}  // namespace lmgheom
