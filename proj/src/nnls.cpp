#include <algorithm>
#include <chrono>
#include <cmath>

#include "sfcnet/errors.hpp"
#include "sfcnet/solvers.hpp"

namespace sfcnet {

namespace {

using RowMajorMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

// Upper-triangular factor of A_P^T A_P for the passive columns, in insertion
// order, together with y = R^{-T} A_P^T b. Storage is column-major with a
// fixed leading dimension so appending a column never moves data.
class PassiveFactor {
 public:
  explicit PassiveFactor(std::size_t capacity)
      : ld_(capacity), r_(capacity * capacity, 0.0), y_(capacity, 0.0) {}

  std::size_t size() const { return p_; }
  std::size_t capacity() const { return ld_; }

  double& at(std::size_t i, std::size_t c) { return r_[i + c * ld_]; }
  double at(std::size_t i, std::size_t c) const { return r_[i + c * ld_]; }

  // Solves R^T u = v in place (v has size p).
  void forward(std::vector<double>& v) const {
    for (std::size_t k = 0; k < p_; ++k) {
      const double* col = &r_[k * ld_];
      double s = v[k];
      for (std::size_t i = 0; i < k; ++i) s -= col[i] * v[i];
      v[k] = s / col[k];
    }
  }

  // Solves R z = v in place.
  void backward(std::vector<double>& v) const {
    for (std::size_t k = p_; k-- > 0;) {
      const double* col = &r_[k * ld_];
      v[k] /= col[k];
      const double zk = v[k];
      for (std::size_t i = 0; i < k; ++i) v[i] -= zk * col[i];
    }
  }

  // Appends a column given u = R^{-T} A_P^T a_j, rho = sqrt(|a_j|^2 - |u|^2)
  // and a_j^T b.
  void append(const std::vector<double>& u, double rho, double ajb) {
    double* col = &r_[p_ * ld_];
    double uy = 0.0;
    for (std::size_t i = 0; i < p_; ++i) {
      col[i] = u[i];
      uy += u[i] * y_[i];
    }
    col[p_] = rho;
    y_[p_] = (ajb - uy) / rho;
    ++p_;
  }

  void pop_back() { --p_; }

  // Deletes passive position q and restores triangularity with Givens
  // rotations, applying the same rotations to y.
  void erase(std::size_t q) {
    for (std::size_t c = q; c + 1 < p_; ++c) {
      double* dst = &r_[c * ld_];
      const double* src = &r_[(c + 1) * ld_];
      std::copy(src, src + c + 2, dst);
    }
    const std::size_t cols = p_ - 1;
    for (std::size_t k = q; k < cols; ++k) {
      const double a = at(k, k);
      const double b = at(k + 1, k);
      const double r = std::hypot(a, b);
      const double cs = a / r;
      const double sn = b / r;
      at(k, k) = r;
      at(k + 1, k) = 0.0;
      for (std::size_t c = k + 1; c < cols; ++c) {
        const double t1 = at(k, c);
        const double t2 = at(k + 1, c);
        at(k, c) = cs * t1 + sn * t2;
        at(k + 1, c) = -sn * t1 + cs * t2;
      }
      const double t1 = y_[k];
      const double t2 = y_[k + 1];
      y_[k] = cs * t1 + sn * t2;
      y_[k + 1] = -sn * t1 + cs * t2;
    }
    --p_;
  }

  // Least-squares coefficients of the passive columns.
  void solve(std::vector<double>& z) const {
    z.assign(y_.begin(), y_.begin() + static_cast<std::ptrdiff_t>(p_));
    backward(z);
  }

 private:
  std::size_t ld_;
  std::size_t p_ = 0;
  std::vector<double> r_;
  std::vector<double> y_;
};

struct Workspace {
  const SparseMatrix& A;
  RowMajorMatrix rows;
  const Eigen::VectorXd& b;
  std::vector<std::ptrdiff_t> pos;  // passive position of each column, -1 if zero
  std::vector<int> passive;         // column id at each passive position

  double column_dot(int j, const Eigen::VectorXd& v) const {
    double s = 0.0;
    for (SparseMatrix::InnerIterator it(A, j); it; ++it) s += it.value() * v(it.row());
    return s;
  }

  // v = A_P^T a_j, through the row-major copy.
  void passive_products(int j, std::vector<double>& v) const {
    v.assign(passive.size(), 0.0);
    for (SparseMatrix::InnerIterator it(A, j); it; ++it) {
      const double aij = it.value();
      for (RowMajorMatrix::InnerIterator rt(rows, it.row()); rt; ++rt) {
        const auto p = pos[static_cast<std::size_t>(rt.col())];
        if (p >= 0) v[static_cast<std::size_t>(p)] += rt.value() * aij;
      }
    }
  }

  // residual b - A_P z
  Eigen::VectorXd residual(const std::vector<double>& z) const {
    Eigen::VectorXd r = b;
    for (std::size_t k = 0; k < passive.size(); ++k)
      for (SparseMatrix::InnerIterator it(A, passive[k]); it; ++it) r(it.row()) -= it.value() * z[k];
    return r;
  }
};

// One step of iterative refinement on the seminormal equations.
void refine(const Workspace& ws, const PassiveFactor& factor, std::vector<double>& z) {
  Eigen::VectorXd r = ws.residual(z);
  std::vector<double> s(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) s[k] = ws.column_dot(ws.passive[k], r);
  factor.forward(s);
  factor.backward(s);
  for (std::size_t k = 0; k < z.size(); ++k) z[k] += s[k];
}

}  // namespace

NnlsResult solve_nnls(const SparseMatrix& A, const Eigen::VectorXd& b, const NnlsOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t m = static_cast<std::size_t>(A.rows());
  const std::size_t n = static_cast<std::size_t>(A.cols());
  if (b.size() != A.rows()) throw SolverError("nnls: dimension mismatch between A and b");

  NnlsResult result;
  FlowSolution& sol = result.solution;
  sol.method = Method::Nnls;
  sol.xi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));

  Eigen::VectorXd w = A.transpose() * b;
  result.tol = options.tol > 0.0 ? options.tol : 1e-8 * std::max(w.cwiseAbs().maxCoeff(), 0.0);
  if (n == 0 || !(result.tol > 0.0)) {
    // b is orthogonal to every column: xi = 0 is optimal.
    sol.converged = true;
    sol.residual_l2 = b.norm();
    return result;
  }
  const std::size_t max_iter = options.max_iter > 0 ? options.max_iter : 10 * n;

  Workspace ws{A, RowMajorMatrix(A), b, std::vector<std::ptrdiff_t>(n, -1), {}};
  PassiveFactor factor(std::min(m, n));
  std::vector<double> col_norm2(n);
  for (std::size_t j = 0; j < n; ++j) col_norm2[j] = A.col(static_cast<Eigen::Index>(j)).squaredNorm();

  Eigen::VectorXd& x = sol.xi;
  std::vector<char> rejected(n, 0);
  std::vector<double> u, z;
  Eigen::VectorXd r = b;

  std::size_t iter = 0;
  while (true) {
    // Entering column: largest positive dual, lowest index on ties.
    std::ptrdiff_t enter = -1;
    double best = result.tol;
    for (std::size_t j = 0; j < n; ++j) {
      if (ws.pos[j] >= 0 || rejected[j]) continue;
      if (w(static_cast<Eigen::Index>(j)) > best) {
        best = w(static_cast<Eigen::Index>(j));
        enter = static_cast<std::ptrdiff_t>(j);
      }
    }
    if (enter < 0) {
      sol.converged = true;
      break;
    }
    if (iter >= max_iter) break;

    const int j = static_cast<int>(enter);
    if (factor.size() == factor.capacity()) {
      rejected[static_cast<std::size_t>(j)] = 1;
      continue;
    }
    ws.passive_products(j, u);
    factor.forward(u);
    double unorm2 = 0.0;
    for (double v : u) unorm2 += v * v;
    const double rho2 = col_norm2[static_cast<std::size_t>(j)] - unorm2;
    if (!(rho2 > 1e-12 * col_norm2[static_cast<std::size_t>(j)])) {
      // Numerically in the span of the passive columns.
      rejected[static_cast<std::size_t>(j)] = 1;
      continue;
    }
    factor.append(u, std::sqrt(rho2), ws.column_dot(j, b));
    ws.pos[static_cast<std::size_t>(j)] = static_cast<std::ptrdiff_t>(ws.passive.size());
    ws.passive.push_back(j);

    factor.solve(z);
    if (!(z.back() > 0.0)) {
      factor.pop_back();
      ws.passive.pop_back();
      ws.pos[static_cast<std::size_t>(j)] = -1;
      rejected[static_cast<std::size_t>(j)] = 1;
      continue;
    }
    std::fill(rejected.begin(), rejected.end(), 0);
    ++iter;

    // Inner loop: step back toward feasibility until every passive
    // coefficient is positive.
    while (true) {
      bool feasible = true;
      for (double v : z)
        if (!(v > 0.0)) {
          feasible = false;
          break;
        }
      if (feasible) {
        for (std::size_t k = 0; k < z.size(); ++k) x(ws.passive[k]) = z[k];
        break;
      }
      double alpha = 1.0;
      std::size_t limiting = 0;
      for (std::size_t k = 0; k < z.size(); ++k) {
        if (z[k] > 0.0) continue;
        const double xk = x(ws.passive[k]);
        const double t = xk / (xk - z[k]);
        if (t < alpha) {
          alpha = t;
          limiting = k;
        }
      }
      for (std::size_t k = 0; k < z.size(); ++k) {
        double& xk = x(ws.passive[k]);
        xk += alpha * (z[k] - xk);
      }
      x(ws.passive[limiting]) = 0.0;
      for (std::size_t k = ws.passive.size(); k-- > 0;) {
        const int col = ws.passive[k];
        if (x(col) > 0.0) continue;
        x(col) = 0.0;
        factor.erase(k);
        ws.passive.erase(ws.passive.begin() + static_cast<std::ptrdiff_t>(k));
        ws.pos[static_cast<std::size_t>(col)] = -1;
        for (std::size_t q = k; q < ws.passive.size(); ++q)
          ws.pos[static_cast<std::size_t>(ws.passive[q])] = static_cast<std::ptrdiff_t>(q);
      }
      factor.solve(z);
    }

    r = b - A * x;
    w.noalias() = A.transpose() * r;
    if (options.record_objective) result.objective_trace.push_back(r.squaredNorm());
  }

  // Polish the final passive solution; keep it only if it stays positive.
  if (!ws.passive.empty()) {
    factor.solve(z);
    refine(ws, factor, z);
    if (std::all_of(z.begin(), z.end(), [](double v) { return v > 0.0; }))
      for (std::size_t k = 0; k < z.size(); ++k) x(ws.passive[k]) = z[k];
  }

  r = b - A * x;
  sol.iterations = iter;
  sol.residual_l2 = r.norm();
  if (!sol.converged) sol.note = "nnls: iteration cap reached before the dual tolerance was met";
  sol.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

FlowSolution solve_nnls(const LinearSystem& system, const NnlsOptions& options) {
  return solve_nnls(system.A, system.b, options).solution;
}

}  // namespace sfcnet
