#pragma once

#include <complex>
#include <limits>

#include <Eigen/Dense>

namespace lmgheom {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
inline constexpr double kPi = 3.14159265358979323846;

/// Largest entry of |A - A^dagger|.
double hermitian_defect(const CMatrix& a);

/// Half the trace norm of (a - b); both arguments are taken as Hermitian.
double trace_distance(const CMatrix& a, const CMatrix& b);

double purity(const CMatrix& rho);

double min_eigenvalue(const CMatrix& rho);

CMatrix commutator(const CMatrix& a, const CMatrix& b);

}  // namespace lmgheom
