#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "lmgheom/errors.hpp"
#include "lmgheom/experiments.hpp"
#include "lmgheom/lindblad.hpp"
#include "lmgheom/observables.hpp"
#include "lmgheom/unitary.hpp"

using namespace lmgheom;

namespace {

// Writes to `path`, or stdout when it is empty or "-".
template <class F>
void emit(const std::string& path, F&& writer) {
  if (path.empty() || path == "-") {
    writer(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  writer(out);
}

ControlPoint parse_point(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw InvalidArgument("expected lambda,chi but got '" + text + "'");
  try {
    return {std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1))};
  } catch (const std::logic_error&) {
    throw InvalidArgument("expected lambda,chi but got '" + text + "'");
  }
}

struct SpectrumArgs {
  int n = 10;
  std::string path = "second_order";
  std::string from, to;
  int grid = 201;
  std::string out;
};

void run_spectrum(const SpectrumArgs& a) {
  const SpinSystem sys(a.n);
  ControlPoint from, to;
  if (!a.from.empty() || !a.to.empty()) {
    if (a.from.empty() || a.to.empty()) throw InvalidArgument("--from and --to go together");
    from = parse_point(a.from);
    to = parse_point(a.to);
  } else {
    const DrivePath path = DrivePath::of_kind(parse_path_kind(a.path));
    from = path.start;
    to = path.end;
  }
  if (a.grid < 2) throw InvalidArgument("--grid must be >= 2");
  const auto rows = spectrum_scan(sys, from, to, a.grid);
  emit(a.out, [&](std::ostream& os) { write_scan_csv(os, rows); });
}

struct DriveArgs {
  int n = 10;
  std::string path = "first_order";
  std::string protocol = "A";
  std::string solver = "heom";
  double t_final = 100.0;
  double temperature = 1.0;
  double q = 0.0;
  double theta = kPi / 2;
  int renorm = 0;
  double gamma = 10.0;
  std::optional<int> m_cut;
  int depth = 3;
  std::string integrator = "adaptive";
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  std::optional<double> max_step;
  int samples = 101;
  int schedule_grid = 2048;
  std::string out;
  std::string schedule_out;
};

void run_drive(const DriveArgs& a) {
  const SpinSystem sys(a.n);
  const DrivePath path = DrivePath::of_kind(parse_path_kind(a.path));
  const Protocol protocol = parse_protocol(a.protocol);
  const SolverKind solver = parse_solver_kind(a.solver);
  if (a.renorm != 0 && a.renorm != 1) throw InvalidArgument("--r must be 0 or 1");
  if (a.samples < 2) throw InvalidArgument("--samples must be >= 2");
  const DriveSchedule schedule = build_schedule(sys, path, protocol, a.t_final, a.schedule_grid);
  const CMatrix rho0 = thermal_state(eigendecompose(build_hamiltonian(sys, path.start)),
                                     beta_from_temperature(a.temperature));
  const std::vector<double> grid = uniform_grid(a.t_final, a.samples);
  const int m_cut = a.m_cut.value_or(MatsubaraRule{}.for_temperature(a.temperature));
  const BathModel bath{a.q, a.gamma, a.temperature, m_cut};

  Trajectory traj;
  switch (solver) {
    case SolverKind::unitary: {
      if (a.q != 0.0) throw InvalidArgument("the unitary solver needs q = 0");
      const auto h = drive_hamiltonian(sys, schedule, CMatrix::Zero(sys.dim(), sys.dim()));
      traj = evolve_unitary(rho0, h, grid, a.max_step.value_or(0.01));
      break;
    }
    case SolverKind::heom: {
      SolverConfig sc;
      sc.depth = a.depth;
      sc.integrator = parse_integrator(a.integrator);
      sc.rel_tol = a.rel_tol;
      sc.abs_tol = a.abs_tol;
      sc.max_step = a.max_step.value_or(0.05);
      sc.output_grid = grid;
      traj = evolve(rho0, sys, schedule, bath, sc, a.theta, a.renorm == 1);
      break;
    }
    case SolverKind::lindblad: {
      LindbladConfig lc;
      lc.integrator = parse_integrator(a.integrator);
      lc.rel_tol = a.rel_tol;
      lc.abs_tol = a.abs_tol;
      lc.max_step = a.max_step.value_or(1.0);
      lc.output_grid = grid;
      traj = lindblad_evolve(rho0, sys, schedule, bath, a.theta, a.renorm == 1, lc);
      break;
    }
  }
  emit(a.out, [&](std::ostream& os) { write_trajectory_csv(os, sys, schedule, traj); });
  if (!a.schedule_out.empty())
    emit(a.schedule_out, [&](std::ostream& os) { write_schedule_csv(os, sys, schedule, a.samples); });

  const FidelityResult f = path_fidelity(traj.final_state(), sys, path);
  std::fprintf(stderr, "fidelity %.10f  trace_drift %.3e  steps %zu\n", f.value,
               traj.max_trace_drift, traj.steps);
}

void print_progress(const SweepRecord& r) {
  std::fprintf(stderr, "[%s] N=%d T=%.4g tF=%.4g q=%g M=%d L=%d  F=%.6f  %.1fs%s%s\n",
               to_string(r.point.solver).c_str(), r.point.n_qubits, r.point.temperature,
               r.point.t_final, r.point.q, r.point.m_cut, r.point.depth, r.fidelity,
               r.wall_seconds, r.error.empty() ? "" : "  error: ", r.error.c_str());
}

struct SweepArgs {
  std::string config;
  std::string output_dir;
  std::optional<int> workers;
  bool quiet = false;
};

SweepConfig load_with_overrides(const SweepArgs& a) {
  SweepConfig c = load_sweep_config(a.config);
  if (!a.output_dir.empty()) c.output_dir = a.output_dir;
  if (a.workers) c.workers = *a.workers;
  c.validate();
  return c;
}

int run_sweep_cmd(const SweepArgs& a) {
  const SweepConfig c = load_with_overrides(a);
  const SweepResult r = run_sweep(c, a.quiet ? SweepProgress{} : SweepProgress{print_progress});
  std::size_t failed = 0;
  for (const auto& rec : r.records)
    if (std::isnan(rec.fidelity)) ++failed;
  if (c.output_dir.empty()) write_sweep_csv(std::cout, r.records);
  std::fprintf(stderr, "%zu points, %zu computed, %zu failed, %d combinations skipped\n",
               r.records.size(), r.computed, failed, r.rejected_combinations);
  return failed > 0 ? 3 : 0;
}

struct FitArgs {
  std::string input;
  std::string model;
  std::string axis = "log10";
  std::string out;
};

// One scaling fit per curve family; a family is every coordinate except N and T.
void run_fit(const FitArgs& a) {
  std::ifstream in(a.input);
  if (!in) throw ConfigError("cannot open " + a.input);
  const auto records = read_sweep_csv(in);
  if (records.empty()) throw ConfigError("no records in " + a.input);
  const TemperatureAxis axis =
      a.axis == "linear" ? TemperatureAxis::linear
                         : (a.axis == "log10" ? TemperatureAxis::log10
                                              : throw InvalidArgument("--axis is log10 or linear"));

  struct Curve {
    std::vector<double> t, f;
  };
  std::map<std::string, std::map<int, Curve>> families;
  std::map<std::string, PathKind> family_path;
  for (const auto& r : records) {
    SweepPoint p = r.point;
    p.n_qubits = 0;
    p.temperature = 0.0;
    p.m_cut = 0;
    const std::string key = p.key();
    family_path[key] = p.path;
    auto& c = families[key][r.point.n_qubits];
    c.t.push_back(r.point.temperature);
    c.f.push_back(r.fidelity);
  }

  std::ostringstream os;
  os << "family,N,T_opt,max_F,interior\n";
  std::ostringstream fits;
  for (const auto& [key, by_n] : families) {
    std::vector<double> ns, topt, fmax, ns_interior;
    for (const auto& [n, c] : by_n) {
      const OptimalTemperature o = find_optimal_temperature(c.t, c.f, axis);
      os << '"' << key << "\"," << n << ',' << o.t_opt << ',' << o.max_fidelity << ','
         << (o.interior ? 1 : 0) << '\n';
      ns.push_back(n);
      fmax.push_back(o.max_fidelity);
      if (o.interior) {
        ns_interior.push_back(n);
        topt.push_back(o.t_opt);
      }
    }
    if (ns.size() < 3) continue;
    const FitModel fmodel = !a.model.empty() ? parse_fit_model(a.model)
                            : family_path[key] == PathKind::second_order
                                ? FitModel::quadratic_inverse
                                : FitModel::power;
    const FitResult ff = fit_scaling(ns, fmax, fmodel);
    fits << "# " << key << "\n# max_F " << to_string(fmodel) << " coefficients";
    for (double c : ff.coefficients) fits << ' ' << c;
    fits << " r2 " << ff.r_squared << '\n';
    if (ns_interior.size() >= 3) {
      const FitResult ft = fit_scaling(ns_interior, topt, FitModel::linear);
      fits << "# T_opt linear a " << ft.coefficients[0] << " r2 " << ft.r_squared << '\n';
    } else {
      fits << "# T_opt linear: fewer than 3 interior maxima\n";
    }
  }
  emit(a.out, [&](std::ostream& o) { o << os.str() << fits.str(); });
}

int run_compare(const SweepArgs& a, const std::string& out) {
  const SweepConfig c = load_with_overrides(a);
  const auto rows = compare_solvers(c, a.quiet ? SweepProgress{} : SweepProgress{print_progress});
  emit(out, [&](std::ostream& os) { write_comparison_csv(os, rows); });
  for (const auto& r : rows)
    if (std::isnan(r.discrepancy)) return 3;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LMG quantum annealing in a Drude-Lorentz bath: HEOM, Lindblad and unitary drives"};
  app.require_subcommand(1);

  SpectrumArgs sa;
  auto* spectrum = app.add_subcommand("spectrum", "energy levels and gap along a straight line in (lambda, chi)");
  spectrum->add_option("-N,--qubits", sa.n, "number of qubits");
  spectrum->add_option("--path", sa.path, "first_order or second_order endpoints");
  spectrum->add_option("--from", sa.from, "start point lambda,chi");
  spectrum->add_option("--to", sa.to, "end point lambda,chi");
  spectrum->add_option("--grid", sa.grid, "number of scan points");
  spectrum->add_option("-o,--out", sa.out, "CSV output (default stdout)");

  DriveArgs da;
  auto* drive = app.add_subcommand("drive", "one driven trajectory to a trajectory CSV");
  drive->add_option("-N,--qubits", da.n);
  drive->add_option("--path", da.path, "first_order or second_order");
  drive->add_option("--protocol", da.protocol, "A or B");
  drive->add_option("--solver", da.solver, "heom, lindblad or unitary");
  drive->add_option("--tF", da.t_final, "drive time");
  drive->add_option("-T,--temperature", da.temperature);
  drive->add_option("-q,--coupling", da.q);
  drive->add_option("--theta", da.theta, "coupling angle in radians");
  drive->add_option("-r,--renorm", da.renorm, "counterterm switch 0 or 1");
  drive->add_option("--gamma", da.gamma);
  drive->add_option("-M,--matsubara", da.m_cut, "Matsubara terms (default by temperature)");
  drive->add_option("-L,--depth", da.depth, "hierarchy depth");
  drive->add_option("--integrator", da.integrator, "adaptive, rk4 or exponential");
  drive->add_option("--rel-tol", da.rel_tol);
  drive->add_option("--abs-tol", da.abs_tol);
  drive->add_option("--max-step", da.max_step);
  drive->add_option("--samples", da.samples, "output times including both ends");
  drive->add_option("--schedule-grid", da.schedule_grid);
  drive->add_option("-o,--out", da.out, "trajectory CSV (default stdout)");
  drive->add_option("--schedule-out", da.schedule_out, "schedule CSV");

  SweepArgs wa;
  auto* sweep = app.add_subcommand("sweep", "evaluate a sweep config into output_dir/sweep.csv");
  sweep->add_option("config", wa.config, "YAML sweep config")->required();
  sweep->add_option("--output-dir", wa.output_dir, "override output_dir");
  sweep->add_option("-j,--workers", wa.workers, "worker threads (0 = hardware)");
  sweep->add_flag("--quiet", wa.quiet);

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "optimal temperatures and scaling fits from a sweep CSV");
  fit->add_option("input", fa.input, "sweep.csv")->required();
  fit->add_option("--model", fa.model, "max_F model: linear, power or quadratic_inverse");
  fit->add_option("--axis", fa.axis, "interpolation axis: log10 or linear");
  fit->add_option("-o,--out", fa.out);

  SweepArgs ca;
  std::string compare_out;
  auto* compare = app.add_subcommand("compare", "HEOM against Lindblad along one temperature curve");
  compare->add_option("config", ca.config, "YAML sweep config")->required();
  compare->add_option("--output-dir", ca.output_dir, "override output_dir");
  compare->add_option("-j,--workers", ca.workers);
  compare->add_option("-o,--out", compare_out, "comparison CSV (default stdout)");
  compare->add_flag("--quiet", ca.quiet);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*spectrum) run_spectrum(sa);
    if (*drive) run_drive(da);
    if (*sweep) return run_sweep_cmd(wa);
    if (*fit) run_fit(fa);
    if (*compare) return run_compare(ca, compare_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return 3;
  } catch (const ResourceError& e) {
    std::cerr << "resource limit: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
