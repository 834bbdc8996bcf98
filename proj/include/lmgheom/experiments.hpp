#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lmgheom/driving.hpp"
#include "lmgheom/heom.hpp"

namespace lmgheom {

enum class SolverKind { heom, lindblad, unitary };

std::string to_string(SolverKind kind);
SolverKind parse_solver_kind(const std::string& text);

/// Matsubara cutoff as a function of temperature.
struct MatsubaraRule {
  int low_t = 18;
  int high_t = 5;
  double switch_t = 1.0;
  std::optional<int> fixed;

  int for_temperature(double temperature) const;
};

struct SweepConfig {
  PathKind path = PathKind::first_order;
  Protocol protocol = Protocol::A;
  SolverKind solver = SolverKind::heom;
  std::vector<int> n_qubits{10};
  std::vector<double> temperatures;
  std::vector<double> drive_times;
  std::vector<double> couplings{0.0};
  std::vector<double> thetas{kPi / 2};
  std::vector<int> renorms{0};
  double gamma = 10.0;
  MatsubaraRule matsubara;
  int depth = 3;
  std::string output_dir;

  // Numerics.
  bool force_heom = false;
  Integrator integrator = Integrator::adaptive;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double max_step = 0.05;
  double lindblad_max_step = 1.0;
  double unitary_step = 0.01;
  int schedule_grid = 2048;
  int workers = 1;

  /// Fills empty temperature and drive-time grids with the defaults for the path.
  void apply_defaults();
  void validate() const;
};

/// 12 log-spaced temperatures over log10 T in [-0.8, 1.4].
std::vector<double> default_temperature_grid();
std::vector<double> default_drive_times(PathKind path);

/// Parses the flat key-value YAML document; unknown keys are errors.
SweepConfig parse_sweep_config(const std::string& yaml_text);
SweepConfig load_sweep_config(const std::filesystem::path& file);

struct SweepPoint {
  PathKind path = PathKind::first_order;
  Protocol protocol = Protocol::A;
  SolverKind solver = SolverKind::heom;
  int n_qubits = 10;
  double temperature = 1.0;
  double t_final = 1.0;
  double q = 0.0;
  double theta = 0.0;
  int renorm = 0;
  int m_cut = 0;
  int depth = 0;

  std::string key() const;
  std::uint64_t hash() const;
};

bool coordinate_less(const SweepPoint& a, const SweepPoint& b);

struct SweepRecord {
  SweepPoint point;
  double fidelity = 0.0;
  double trace_drift = 0.0;
  double wall_seconds = 0.0;
  std::string error;  // empty on success; kept in metadata, not in the CSV
};

/// Grid points after routing, with invalid (q, theta, r) combinations dropped.
std::vector<SweepPoint> enumerate_points(const SweepConfig& config, int* rejected = nullptr);

/// Runs one grid point. Solver failures come back as a record with NaN fidelity.
SweepRecord evaluate_point(const SweepPoint& point, const SweepConfig& config);

struct SweepResult {
  std::vector<SweepRecord> records;  // coordinate order
  std::size_t computed = 0;          // points evaluated in this call
  int rejected_combinations = 0;
};

using SweepProgress = std::function<void(const SweepRecord&)>;

/// Evaluates every grid point, skipping those already in output_dir/sweep.csv.
SweepResult run_sweep(const SweepConfig& config, const SweepProgress& progress = {});

void write_sweep_csv(std::ostream& out, const std::vector<SweepRecord>& records);
std::vector<SweepRecord> read_sweep_csv(std::istream& in);

struct OptimalTemperature {
  bool interior = false;  // false when the grid maximum is an endpoint
  double t_opt = 0.0;
  double max_fidelity = 0.0;
  std::size_t argmax = 0;
};

enum class TemperatureAxis { log10, linear };

/// Maximum of F(T) refined by a parabola through the grid maximum and its neighbours.
OptimalTemperature find_optimal_temperature(std::vector<double> temperatures,
                                            std::vector<double> fidelities,
                                            TemperatureAxis axis = TemperatureAxis::log10);

enum class FitModel { linear, power, quadratic_inverse };

std::string to_string(FitModel model);
FitModel parse_fit_model(const std::string& text);

struct FitResult {
  FitModel model = FitModel::linear;
  /// linear: {a} for y = a x; power: {b, kappa} for y = b x^-kappa;
  /// quadratic_inverse: {b, c} for y = b/x - c/x^2.
  std::vector<double> coefficients;
  std::vector<double> residuals;  // y - fit, in the original units
  double r_squared = 0.0;         // of the fitted (for power: log-log) regression
};

FitResult fit_scaling(const std::vector<double>& sizes, const std::vector<double>& values,
                      FitModel model);

struct ComparisonRow {
  double temperature = 0.0;
  double f_heom = 0.0;
  double f_lindblad = 0.0;
  double discrepancy = 0.0;
  bool low_temperature = false;  // T below gamma / (2 pi)
};

/// HEOM and Lindblad fidelities along one temperature curve of the config.
std::vector<ComparisonRow> compare_solvers(const SweepConfig& config,
                                           const SweepProgress& progress = {});

void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRow>& rows);

}  // namespace lmgheom
