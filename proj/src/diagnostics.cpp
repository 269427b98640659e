#include <cmath>

#include "sfcnet/errors.hpp"
#include "sfcnet/solvers.hpp"

namespace sfcnet {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::Nnls: return "nnls";
    case Method::LeastNorm: return "lsq";
    case Method::Bayes: return "bayes";
    case Method::Dcgm: return "dcgm";
  }
  return "?";
}

Method method_from_string(std::string_view name) {
  for (auto m : {Method::Nnls, Method::LeastNorm, Method::Bayes, Method::Dcgm})
    if (to_string(m) == name) return m;
  throw ConfigError("unknown solver '" + std::string(name) + "' (expected nnls|bayes|lsq|dcgm)");
}

SolverDiagnostics diagnostics(const SparseMatrix& A, const Eigen::VectorXd& b, const Eigen::VectorXd& xi,
                              double zero_eps) {
  if (xi.size() != A.cols() || b.size() != A.rows())
    throw SolverError("diagnostics: dimension mismatch");
  if (zero_eps < 0.0) throw SolverError("diagnostics: zero_eps must be nonnegative");

  SolverDiagnostics d;
  const double xi_l1 = xi.lpNorm<1>();
  if (xi_l1 > 0.0) d.relative_error_pct = 100.0 * (A * xi - b).lpNorm<1>() / xi_l1;

  const double cutoff = xi.size() > 0 ? zero_eps * xi.cwiseAbs().maxCoeff() : 0.0;
  std::size_t negative = 0;
  for (Eigen::Index k = 0; k < xi.size(); ++k) {
    if (!(std::abs(xi(k)) > cutoff)) continue;
    ++d.nonzero_count;
    if (xi(k) < 0.0) ++negative;
  }
  if (d.nonzero_count > 0)
    d.negative_pct = 100.0 * static_cast<double>(negative) / static_cast<double>(d.nonzero_count);
  return d;
}

SolverDiagnostics diagnostics(const LinearSystem& system, const FlowSolution& solution, double zero_eps) {
  return diagnostics(system.A, system.b, solution.xi, zero_eps);
}

}  // namespace sfcnet
