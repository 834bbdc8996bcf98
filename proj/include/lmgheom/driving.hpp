#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "lmgheom/spin_model.hpp"

namespace lmgheom {

enum class PathKind { first_order, second_order, custom };
enum class Protocol { A, B };

std::string to_string(PathKind kind);
std::string to_string(Protocol protocol);
PathKind parse_path_kind(const std::string& text);
Protocol parse_protocol(const std::string& text);

struct DrivePath {
  ControlPoint start;
  ControlPoint end;
  PathKind kind = PathKind::custom;

  static DrivePath first_order();
  static DrivePath second_order();
  static DrivePath of_kind(PathKind kind);

  ControlPoint at(double s) const { return start + s * (end - start); }
  ControlPoint direction() const { return end - start; }
  double planar_length() const { return direction().norm(); }
};

struct MetricTensor {
  double ll = 0.0;
  double lc = 0.0;
  double cc = 0.0;

  /// g_{mu nu} d^mu d^nu
  double contract(ControlPoint d) const {
    return ll * d.lambda * d.lambda + 2.0 * lc * d.lambda * d.chi + cc * d.chi * d.chi;
  }
};

/// Ground-state metric from the spectral sum over excited levels.
MetricTensor metric_tensor(const SpinSystem& sys, ControlPoint point);

/// Same quantity from a Spectrum already computed at `point`.
MetricTensor metric_tensor(const SpinSystem& sys, ControlPoint point, const Spectrum& spec);

/// Line element w(s) = sqrt(g(dLambda/ds, dLambda/ds)) sampled on a uniform s grid.
std::vector<double> line_element_samples(const SpinSystem& sys, const DrivePath& path,
                                         int grid_size);

double geometric_length(const SpinSystem& sys, const DrivePath& path, int grid_size = 2048);

class DriveSchedule {
 public:
  /// Table of (t, s) pairs, strictly increasing in both, from (0,0) to (t_F,1).
  DriveSchedule(DrivePath path, Protocol protocol, double t_final, std::vector<double> times,
                std::vector<double> s_values, double length);

  const DrivePath& path() const { return path_; }
  Protocol protocol() const { return protocol_; }
  double t_final() const { return t_final_; }
  /// Geometric length of the path; zero when it was not computed (protocol A).
  double geometric_length() const { return length_; }

  double s_at(double t) const;
  double ds_dt(double t) const;
  ControlPoint lambda_at(double t) const { return path_.at(s_at(t)); }

  /// Times at which the interpolation rule changes slope. Empty for protocol A.
  std::vector<double> breakpoints() const;

  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& s_values() const { return s_; }

 private:
  std::size_t segment(double t) const;
  void check_range(double t) const;

  DrivePath path_;
  Protocol protocol_;
  double t_final_;
  std::vector<double> times_;
  std::vector<double> s_;
  double length_;
};

DriveSchedule build_schedule(const SpinSystem& sys, const DrivePath& path, Protocol protocol,
                             double t_final, int grid_size = 2048);

double planar_speed(const DriveSchedule& schedule, double t);

/// Geometric speed sqrt(g(dLambda/dt, dLambda/dt)) at time t.
double geometric_speed(const SpinSystem& sys, const DriveSchedule& schedule, double t);

/// Columns t, s, lambda, chi, u, v on `samples` uniform times.
void write_schedule_csv(std::ostream& out, const SpinSystem& sys, const DriveSchedule& schedule,
                        int samples);

}  // namespace lmgheom
