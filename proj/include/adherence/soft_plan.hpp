#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace adherence::plan {

/// Entries are indexed x(i, t); vectorized forms use column-major order
/// (index i + L * t), matching Eigen's storage.
struct SoftSolution {
  Eigen::MatrixXd x;
  int iterations = 0;
  double residual = 0.0;  // max constraint violation
  bool converged = false;
  bool polished = false;  // exact active-set solution verified against KKT
};

/// argmax r.x - (gamma/2)|x|^2 over {x >= 0, column sums <= 1, row sums <= 1},
/// i.e. the Euclidean projection of r / gamma onto the matching polytope.
/// Dykstra's alternating projections, stopped when the change between sweeps
/// drops below 1e-8 or after `max_iterations`; then the active set is guessed
/// and solved exactly.
SoftSolution soft_solve(const Eigen::MatrixXd& reward, double gamma, int max_iterations = 10000);

struct SoftJacobian {
  Eigen::MatrixXd J;  // d vec(x*) / d vec(r), (7L x 7L)
  bool finite_difference = false;
  std::vector<std::string> warnings;
};

/// Implicit differentiation of the KKT system: on a fixed strictly
/// complementary active set, dx*/dr = (1/gamma) * (I - G^+ G) with G the
/// active constraint rows. Falls back to central differences when the active
/// set is ambiguous.
SoftJacobian soft_grad(const Eigen::MatrixXd& reward, double gamma);

/// J^T u without materializing J when the active set is clean.
Eigen::MatrixXd soft_vjp(const Eigen::MatrixXd& reward, double gamma, const Eigen::MatrixXd& upstream,
                         std::vector<std::string>* warnings = nullptr);

/// Central-difference Jacobian, used as the oracle in tests.
Eigen::MatrixXd soft_grad_fd(const Eigen::MatrixXd& reward, double gamma, double eps = 1e-6);

}  // namespace adherence::plan
