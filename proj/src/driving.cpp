#include "lmgheom/driving.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>

#include "lmgheom/errors.hpp"

namespace lmgheom {

namespace {

constexpr double kMetricGapGuard = 1e-10;

}  // namespace

std::string to_string(PathKind kind) {
  switch (kind) {
    case PathKind::first_order: return "first_order";
    case PathKind::second_order: return "second_order";
    case PathKind::custom: return "custom";
  }
  return "custom";
}

std::string to_string(Protocol protocol) { return protocol == Protocol::A ? "A" : "B"; }

PathKind parse_path_kind(const std::string& text) {
  if (text == "first_order" || text == "first") return PathKind::first_order;
  if (text == "second_order" || text == "second") return PathKind::second_order;
  if (text == "custom") return PathKind::custom;
  throw InvalidArgument("unknown path '" + text + "'");
}

Protocol parse_protocol(const std::string& text) {
  if (text == "A" || text == "a") return Protocol::A;
  if (text == "B" || text == "b") return Protocol::B;
  throw InvalidArgument("unknown protocol '" + text + "'");
}

DrivePath DrivePath::first_order() { return {{0.0, 0.0}, {0.25, 1.2}, PathKind::first_order}; }
DrivePath DrivePath::second_order() { return {{0.0, 0.0}, {2.0, 0.0}, PathKind::second_order}; }

DrivePath DrivePath::of_kind(PathKind kind) {
  if (kind == PathKind::first_order) return first_order();
  if (kind == PathKind::second_order) return second_order();
  throw InvalidArgument("custom paths need explicit endpoints");
}

MetricTensor metric_tensor(const SpinSystem& sys, ControlPoint point, const Spectrum& spec) {
  const double gap = spec.gap();
  if (gap < kMetricGapGuard)
    throw DegeneracyError("metric_tensor: ground state is degenerate", gap);
  const CMatrix d_lambda = sys.h_lambda();
  const CMatrix d_chi = sys.h_chi() + (2.0 * point.chi) * sys.h_chi2();
  const auto ground = spec.states.col(0);
  const CVector a = spec.states.adjoint() * (d_lambda * ground);
  const CVector b = spec.states.adjoint() * (d_chi * ground);
  MetricTensor g;
  for (int n = 1; n < spec.size(); ++n) {
    const double de = spec.energies(n) - spec.energies(0);
    const double w = 1.0 / (de * de);
    g.ll += std::norm(a(n)) * w;
    g.cc += std::norm(b(n)) * w;
    g.lc += (std::conj(a(n)) * b(n)).real() * w;
  }
  return g;
}

MetricTensor metric_tensor(const SpinSystem& sys, ControlPoint point) {
  return metric_tensor(sys, point, eigendecompose(build_hamiltonian(sys, point)));
}

std::vector<double> line_element_samples(const SpinSystem& sys, const DrivePath& path,
                                         int grid_size) {
  if (grid_size < 2) throw InvalidArgument("line element grid needs at least 2 points");
  const ControlPoint dir = path.direction();
  std::vector<double> w(grid_size);
  for (int i = 0; i < grid_size; ++i) {
    const double s = static_cast<double>(i) / (grid_size - 1);
    try {
      const double g = metric_tensor(sys, path.at(s)).contract(dir);
      w[i] = std::sqrt(std::max(g, 0.0));
    } catch (const DegeneracyError& e) {
      throw DegeneracyError("metric degenerate along path at s = " + std::to_string(s), e.gap(),
                            s);
    }
  }
  return w;
}

namespace {

std::vector<double> cumulative_length(const std::vector<double>& w) {
  const double h = 1.0 / static_cast<double>(w.size() - 1);
  std::vector<double> ell(w.size(), 0.0);
  for (std::size_t i = 1; i < w.size(); ++i) ell[i] = ell[i - 1] + 0.5 * h * (w[i - 1] + w[i]);
  return ell;
}

}  // namespace

double geometric_length(const SpinSystem& sys, const DrivePath& path, int grid_size) {
  if (path.planar_length() == 0.0) return 0.0;
  return cumulative_length(line_element_samples(sys, path, grid_size)).back();
}

DriveSchedule::DriveSchedule(DrivePath path, Protocol protocol, double t_final,
                             std::vector<double> times, std::vector<double> s_values,
                             double length)
    : path_(path),
      protocol_(protocol),
      t_final_(t_final),
      times_(std::move(times)),
      s_(std::move(s_values)),
      length_(length) {
  if (!(t_final > 0.0) || !std::isfinite(t_final))
    throw InvalidArgument("drive time must be positive and finite");
  if (times_.size() < 2 || times_.size() != s_.size())
    throw InvalidArgument("schedule table needs matching t and s columns");
  for (std::size_t i = 1; i < times_.size(); ++i)
    if (!(times_[i] > times_[i - 1]) || !(s_[i] > s_[i - 1]))
      throw InvalidArgument("schedule table must be strictly increasing");
}

void DriveSchedule::check_range(double t) const {
  const double slack = 1e-12 * t_final_;
  if (!(t >= -slack && t <= t_final_ + slack))
    throw RangeError("time " + std::to_string(t) + " outside the schedule [0, " +
                     std::to_string(t_final_) + "]");
}

std::size_t DriveSchedule::segment(double t) const {
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  std::size_t i = it == times_.begin() ? 0 : static_cast<std::size_t>(it - times_.begin()) - 1;
  return std::min(i, times_.size() - 2);
}

double DriveSchedule::s_at(double t) const {
  check_range(t);
  t = std::clamp(t, 0.0, t_final_);
  if (protocol_ == Protocol::A) return t / t_final_;
  const std::size_t i = segment(t);
  const double f = (t - times_[i]) / (times_[i + 1] - times_[i]);
  return std::clamp(s_[i] + f * (s_[i + 1] - s_[i]), 0.0, 1.0);
}

double DriveSchedule::ds_dt(double t) const {
  check_range(t);
  if (protocol_ == Protocol::A) return 1.0 / t_final_;
  const std::size_t i = segment(std::clamp(t, 0.0, t_final_));
  return (s_[i + 1] - s_[i]) / (times_[i + 1] - times_[i]);
}

std::vector<double> DriveSchedule::breakpoints() const {
  if (protocol_ == Protocol::A) return {};
  return {times_.begin() + 1, times_.end() - 1};
}

DriveSchedule build_schedule(const SpinSystem& sys, const DrivePath& path, Protocol protocol,
                             double t_final, int grid_size) {
  if (!(t_final > 0.0)) throw InvalidArgument("drive time must be positive");
  if (grid_size < 256) throw InvalidArgument("schedule grid needs at least 256 points");
  if (protocol == Protocol::A || path.planar_length() == 0.0)
    return DriveSchedule(path, protocol, t_final, {0.0, t_final}, {0.0, 1.0}, 0.0);

  const std::vector<double> ell = cumulative_length(line_element_samples(sys, path, grid_size));
  const double total = ell.back();
  std::vector<double> times(grid_size), s(grid_size);
  for (int i = 0; i < grid_size; ++i) {
    s[i] = static_cast<double>(i) / (grid_size - 1);
    times[i] = t_final * ell[i] / total;
  }
  times.back() = t_final;
  return DriveSchedule(path, protocol, t_final, std::move(times), std::move(s), total);
}

double planar_speed(const DriveSchedule& schedule, double t) {
  return schedule.path().planar_length() * schedule.ds_dt(t);
}

double geometric_speed(const SpinSystem& sys, const DriveSchedule& schedule, double t) {
  const double rate = schedule.ds_dt(t);
  const double g = metric_tensor(sys, schedule.lambda_at(t)).contract(schedule.path().direction());
  return std::sqrt(std::max(g, 0.0)) * rate;
}

void write_schedule_csv(std::ostream& out, const SpinSystem& sys, const DriveSchedule& schedule,
                        int samples) {
  if (samples < 2) throw InvalidArgument("schedule export needs at least 2 samples");
  out << "t,s,lambda,chi,u,v\n" << std::setprecision(15);
  for (int i = 0; i < samples; ++i) {
    const double t = schedule.t_final() * i / (samples - 1);
    const ControlPoint p = schedule.lambda_at(t);
    out << t << ',' << schedule.s_at(t) << ',' << p.lambda << ',' << p.chi << ','
        << planar_speed(schedule, t) << ',' << geometric_speed(sys, schedule, t) << '\n';
  }
}

}  // namespace lmgheom
