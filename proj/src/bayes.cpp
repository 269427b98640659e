#include <algorithm>
#include <chrono>
#include <sstream>

#include <Eigen/SparseCholesky>

#include "sfcnet/errors.hpp"
#include "sfcnet/solvers.hpp"

namespace sfcnet {

FlowSolution solve_bayes(const SparseMatrix& A, const Eigen::VectorXd& b, const Eigen::VectorXd& mu,
                         double sigma, std::span<const std::size_t> drop_rows) {
  const auto start = std::chrono::steady_clock::now();
  if (b.size() != A.rows() || mu.size() != A.cols())
    throw SolverError("bayes: dimension mismatch between A, b and mu");
  if (!(sigma > 0.0)) throw SolverError("bayes: sigma must be positive");

  const Eigen::VectorXd innovation = b - A * mu;

  std::vector<int> new_row(static_cast<std::size_t>(A.rows()), -1);
  {
    std::vector<char> dropped(static_cast<std::size_t>(A.rows()), 0);
    for (auto r : drop_rows)
      if (r < dropped.size()) dropped[r] = 1;
    int next = 0;
    for (std::size_t r = 0; r < dropped.size(); ++r)
      if (!dropped[r]) new_row[r] = next++;
  }
  const int kept = static_cast<int>(std::count_if(new_row.begin(), new_row.end(), [](int v) { return v >= 0; }));

  std::vector<Eigen::Triplet<double, int>> triplets;
  triplets.reserve(static_cast<std::size_t>(A.nonZeros()));
  for (int k = 0; k < A.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) {
      const int r = new_row[static_cast<std::size_t>(it.row())];
      if (r >= 0) triplets.emplace_back(r, it.col(), it.value());
    }
  SparseMatrix Ak(kept, A.cols());
  Ak.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::VectorXd rk(kept);
  for (std::size_t r = 0; r < new_row.size(); ++r)
    if (new_row[r] >= 0) rk(new_row[r]) = innovation(static_cast<Eigen::Index>(r));

  FlowSolution sol;
  sol.method = Method::Bayes;
  if (kept == 0) {
    sol.xi = mu;
  } else {
    SparseMatrix gram = Ak * Ak.transpose();
    gram *= sigma;
    Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
    ldlt.compute(gram);
    if (ldlt.info() != Eigen::Success) throw SolverError("bayes: singular A A^T (factorization failed)");
    const Eigen::VectorXd d = ldlt.vectorD();
    const double dmax = d.cwiseAbs().maxCoeff();
    const double dmin = d.minCoeff();
    if (!(dmin > 1e-11 * dmax)) {
      std::ostringstream os;
      os << "bayes: singular A A^T (rank-deficient A; pivot ratio " << dmin / dmax << ")";
      throw SolverError(os.str());
    }
    const Eigen::VectorXd v = ldlt.solve(rk);
    sol.xi = mu + sigma * (Ak.transpose() * v);
  }
  sol.residual_l2 = (A * sol.xi - b).norm();
  sol.converged = true;
  sol.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return sol;
}

FlowSolution solve_bayes(const LinearSystem& system, const Eigen::VectorXd& mu, double sigma) {
  const auto drop = redundant_rows(system);
  return solve_bayes(system.A, system.b, mu, sigma, drop);
}

FlowSolution solve_bayes(const LinearSystem& system, double sigma) {
  return solve_bayes(system, Eigen::VectorXd::Zero(system.A.cols()), sigma);
}

}  // namespace sfcnet
