#include <chrono>
#include <cmath>

#include "sfcnet/errors.hpp"
#include "sfcnet/solvers.hpp"

namespace sfcnet {

LeastNormResult solve_least_norm(const SparseMatrix& A, const Eigen::VectorXd& b, double tol,
                                 std::size_t max_iter) {
  const auto start = std::chrono::steady_clock::now();
  if (b.size() != A.rows()) throw SolverError("least-norm: dimension mismatch between A and b");
  if (!(tol > 0.0)) throw SolverError("least-norm: tolerance must be positive");
  const auto m = A.rows();
  if (max_iter == 0) max_iter = 10 * static_cast<std::size_t>(std::max<Eigen::Index>(m, 1));

  LeastNormResult out;
  FlowSolution& sol = out.solution;
  sol.method = Method::LeastNorm;
  out.y = Eigen::VectorXd::Zero(m);

  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    sol.xi = Eigen::VectorXd::Zero(A.cols());
    sol.converged = true;
    return out;
  }

  // Jacobi preconditioner: diag(A A^T) holds the squared row norms.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(m);
  for (int k = 0; k < A.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) diag(it.row()) += it.value() * it.value();
  for (Eigen::Index i = 0; i < m; ++i)
    if (diag(i) == 0.0) diag(i) = 1.0;
  const Eigen::VectorXd inv_diag = diag.cwiseInverse();

  Eigen::VectorXd& y = out.y;
  Eigen::VectorXd r = b;
  Eigen::VectorXd z = inv_diag.cwiseProduct(r);
  Eigen::VectorXd p = z;
  Eigen::VectorXd atp(A.cols());
  Eigen::VectorXd q(m);
  double rz = r.dot(z);

  std::size_t it = 0;
  for (; it < max_iter; ++it) {
    if (r.norm() <= tol * bnorm) break;
    atp.noalias() = A.transpose() * p;
    q.noalias() = A * atp;
    const double pq = p.dot(q);
    if (!(pq > 0.0)) break;  // search direction in the null space of A^T
    const double alpha = rz / pq;
    y += alpha * p;
    r -= alpha * q;
    z = inv_diag.cwiseProduct(r);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }

  sol.xi = A.transpose() * y;
  sol.iterations = it;
  sol.residual_l2 = (A * sol.xi - b).norm();
  sol.converged = sol.residual_l2 <= tol * bnorm;
  if (!sol.converged) sol.note = "least-norm: residual tolerance not reached (system may be inconsistent)";
  sol.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

FlowSolution solve_least_norm(const LinearSystem& system, double tol, std::size_t max_iter) {
  return solve_least_norm(system.A, system.b, tol, max_iter).solution;
}

}  // namespace sfcnet
