#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "sfcnet/ensembles.hpp"
#include "sfcnet/system.hpp"

namespace sfcnet {

enum class Method : std::uint8_t { Nnls, LeastNorm, Bayes, Dcgm };

std::string_view to_string(Method method);
Method method_from_string(std::string_view name);

struct FlowSolution {
  Eigen::VectorXd xi;
  Method method = Method::Nnls;
  std::size_t iterations = 0;
  double residual_l2 = 0.0;
  double wall_time = 0.0;  // seconds; never serialized
  bool converged = false;
  std::string note;
};

// ---- nonnegative least squares ---------------------------------------------

struct NnlsOptions {
  // Dual feasibility tolerance; <= 0 selects 1e-8 * ||A^T b||_inf.
  double tol = 0.0;
  // Outer iteration cap; 0 selects 10 * cols.
  std::size_t max_iter = 0;
  // Record ||A xi - b||^2 after every outer iteration.
  bool record_objective = false;
};

struct NnlsResult {
  FlowSolution solution;
  double tol = 0.0;
  std::vector<double> objective_trace;
};

// Lawson-Hanson active-set method. The passive-set least-squares problems are
// solved through an updated triangular factor R with R^T R = A_P^T A_P, so a
// column entering or leaving the passive set costs O(|P|^2).
NnlsResult solve_nnls(const SparseMatrix& A, const Eigen::VectorXd& b, const NnlsOptions& options = {});
FlowSolution solve_nnls(const LinearSystem& system, const NnlsOptions& options = {});

// ---- least-norm ------------------------------------------------------------

struct LeastNormResult {
  FlowSolution solution;
  Eigen::VectorXd y;  // xi = A^T y
};

// Jacobi-preconditioned conjugate gradients on A A^T y = b, xi = A^T y.
// Converged when ||A xi - b||_2 <= tol * ||b||_2.
LeastNormResult solve_least_norm(const SparseMatrix& A, const Eigen::VectorXd& b, double tol = 1e-10,
                                 std::size_t max_iter = 0);
FlowSolution solve_least_norm(const LinearSystem& system, double tol = 1e-10, std::size_t max_iter = 0);

// ---- Gaussian-prior posterior mean -----------------------------------------

// mu + sigma A^T (sigma A A^T)^{-1} (b - A mu) by sparse LDL^T of A A^T.
// `drop_rows` lists rows known to be redundant; they are removed before
// factorization. Throws SolverError if A A^T is singular on the kept rows.
FlowSolution solve_bayes(const SparseMatrix& A, const Eigen::VectorXd& b, const Eigen::VectorXd& mu,
                         double sigma, std::span<const std::size_t> drop_rows = {});
// Drops redundant_rows(system) first.
FlowSolution solve_bayes(const LinearSystem& system, const Eigen::VectorXd& mu, double sigma = 1.0);
FlowSolution solve_bayes(const LinearSystem& system, double sigma = 1.0);

// ---- degree-corrected gravity weights --------------------------------------

// Places w = (1/z + s_out(origin) s_in(destination)) / W on every edge of a
// layer, with strengths and the per-layer total taken from `reference`.
// `layers` supplies z (FiCM) or the uniform-fitness equivalent L/(N1 N2 - L).
FlowSolution dcgm_weights(const LinearSystem& system, const FlowSolution& reference,
                          const std::array<LayerModel, kLayerCount>& layers);

// z used by dcgm_weights for one layer.
double dcgm_z(const LayerModel& layer);

// ---- diagnostics -----------------------------------------------------------

struct SolverDiagnostics {
  std::optional<double> relative_error_pct;  // empty when ||xi||_1 = 0
  double negative_pct = 0.0;
  std::size_t nonzero_count = 0;
};

// relative error 100 ||A xi - b||_1 / ||xi||_1; entries with
// |xi_k| <= zero_eps * max|xi| count as zero.
SolverDiagnostics diagnostics(const SparseMatrix& A, const Eigen::VectorXd& b, const Eigen::VectorXd& xi,
                              double zero_eps = 1e-9);
SolverDiagnostics diagnostics(const LinearSystem& system, const FlowSolution& solution,
                              double zero_eps = 1e-9);

}  // namespace sfcnet
