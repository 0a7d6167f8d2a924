#include "adherence/soft_plan.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "adherence/core.hpp"
#include "adherence/plan.hpp"

namespace adherence::plan {

namespace {

// Projection onto {v >= 0, sum v <= 1}.
void project_capped_simplex(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::VectorXd clipped = v.cwiseMax(0.0);
  if (clipped.sum() <= 1.0) {
    v = clipped;
    return;
  }
  std::vector<double> sorted(v.data(), v.data() + v.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumulative += sorted[k];
    const double candidate = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - candidate > 0.0) theta = candidate;
  }
  v = (v.array() - theta).cwiseMax(0.0).matrix();
}

void project_days(Eigen::MatrixXd& x) {
  for (int t = 0; t < x.cols(); ++t) {
    Eigen::VectorXd col = x.col(t);
    project_capped_simplex(col);
    x.col(t) = col;
  }
}

void project_locations(Eigen::MatrixXd& x) {
  for (int i = 0; i < x.rows(); ++i) {
    Eigen::VectorXd row = x.row(i).transpose();
    project_capped_simplex(row);
    x.row(i) = row.transpose();
  }
}

double max_violation(const Eigen::MatrixXd& x) {
  double v = std::max(0.0, -x.minCoeff());
  v = std::max(v, x.colwise().sum().maxCoeff() - 1.0);
  v = std::max(v, x.rowwise().sum().maxCoeff() - 1.0);
  return v;
}

struct ActiveSet {
  std::vector<int> free;  // vectorized indices with x > 0
  Eigen::MatrixXd A;      // tight sum constraints restricted to free variables
  Eigen::MatrixXd x;
  std::vector<std::pair<bool, int>> labels;  // per row of A: (is_day, index)
  bool full_row_rank = false;
};

// Certificate that x is the projection of y: x feasible and
// max_{z in polytope} (y - x).z == (y - x).x.
bool is_projection(const Eigen::MatrixXd& y, const Eigen::MatrixXd& x) {
  const double scale = std::max(1.0, y.cwiseAbs().maxCoeff());
  if (max_violation(x) > 1e-9) return false;
  const Eigen::MatrixXd w = y - x;
  const double best = solve_plan(w).objective;
  const double at_x = (w.array() * x.array()).sum();
  return best - at_x <= 1e-8 * scale;
}

std::optional<ActiveSet> polish(const Eigen::MatrixXd& y, const Eigen::MatrixXd& approx,
                                double delta) {
  const int L = static_cast<int>(y.rows());
  const int T = static_cast<int>(y.cols());
  ActiveSet s;
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < L; ++i) {
      if (approx(i, t) > delta) s.free.push_back(i + L * t);
    }
  }
  std::vector<std::vector<double>> rows;
  const Eigen::RowVectorXd col_sums = approx.colwise().sum();
  const Eigen::VectorXd row_sums = approx.rowwise().sum();
  const auto add_row = [&](bool is_day, int index, auto member) {
    std::vector<double> r(s.free.size(), 0.0);
    bool any = false;
    for (std::size_t f = 0; f < s.free.size(); ++f) {
      if (member(s.free[f] % L, s.free[f] / L)) {
        r[f] = 1.0;
        any = true;
      }
    }
    if (any) {
      rows.push_back(std::move(r));
      s.labels.push_back({is_day, index});
    }
  };
  for (int t = 0; t < T; ++t) {
    if (std::abs(col_sums(t) - 1.0) < delta) add_row(true, t, [t](int, int tt) { return tt == t; });
  }
  for (int i = 0; i < L; ++i) {
    if (std::abs(row_sums(i) - 1.0) < delta) add_row(false, i, [i](int ii, int) { return ii == i; });
  }

  const int nf = static_cast<int>(s.free.size());
  s.A = Eigen::MatrixXd::Zero(static_cast<int>(rows.size()), nf);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (int f = 0; f < nf; ++f) s.A(static_cast<int>(r), f) = rows[r][f];
  }
  Eigen::VectorXd y_free(nf);
  for (int f = 0; f < nf; ++f) y_free(f) = y(s.free[f] % L, s.free[f] / L);
  Eigen::VectorXd x_free = y_free;
  if (s.A.rows() > 0) {
    const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(s.A);
    const Eigen::VectorXd b = Eigen::VectorXd::Ones(s.A.rows());
    x_free = y_free - cod.solve(s.A * y_free - b);
    s.full_row_rank = cod.rank() == s.A.rows();
  } else {
    s.full_row_rank = true;
  }
  s.x = Eigen::MatrixXd::Zero(L, T);
  for (int f = 0; f < nf; ++f) s.x(s.free[f] % L, s.free[f] / L) = x_free(f);
  if (!is_projection(y, s.x)) return std::nullopt;
  return s;
}

std::optional<ActiveSet> identify(const Eigen::MatrixXd& y, const Eigen::MatrixXd& approx) {
  for (double delta : {1e-9, 1e-7, 1e-5, 1e-3}) {
    if (auto s = polish(y, approx, delta)) return s;
  }
  return std::nullopt;
}

// Strictly complementary with unique multipliers; otherwise the Jacobian is
// not safely identified from the active set alone.
bool clean_active_set(const Eigen::MatrixXd& y, const ActiveSet& s, std::string* why) {
  const int L = static_cast<int>(y.rows());
  const double scale = std::max(1.0, y.cwiseAbs().maxCoeff());
  const double margin = 1e-7 * scale;
  // Free variables must sit clearly inside x > 0.
  for (int k : s.free) {
    if (s.x(k % L, k / L) < 1e-9) {
      *why = "free variable on the boundary";
      return false;
    }
  }
  if (!s.full_row_rank) {
    // Degenerate vertex: multipliers are not unique. When the tight rows pin
    // every free variable the null space is trivial and J = 0 regardless.
    const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(s.A);
    if (cod.rank() == static_cast<Eigen::Index>(s.free.size())) return true;
    *why = "rank-deficient active constraints with a nontrivial null space";
    return false;
  }
  const int nf = static_cast<int>(s.free.size());
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(s.A.rows());
  if (s.A.rows() > 0) {
    Eigen::VectorXd resid(nf);
    for (int f = 0; f < nf; ++f) {
      resid(f) = y(s.free[f] % L, s.free[f] / L) - s.x(s.free[f] % L, s.free[f] / L);
    }
    mu = s.A.transpose().completeOrthogonalDecomposition().solve(resid);
    if (mu.size() > 0 && mu.minCoeff() <= margin) {
      *why = "weakly active sum constraint";
      return false;
    }
  }
  // Multipliers of x >= 0 on the zero set: sum of incident mu minus y.
  std::vector<double> mu_col(y.cols(), 0.0), mu_row(y.rows(), 0.0);
  for (std::size_t r = 0; r < s.labels.size(); ++r) {
    (s.labels[r].first ? mu_col : mu_row)[s.labels[r].second] = mu(static_cast<int>(r));
  }
  std::vector<char> is_free(y.size(), 0);
  for (int k : s.free) is_free[k] = 1;
  for (int k = 0; k < y.size(); ++k) {
    if (is_free[k]) continue;
    const int i = k % L;
    const int t = k / L;
    const double nu = mu_col[t] + mu_row[i] - y(i, t);
    if (nu <= margin) {
      *why = "weakly active nonnegativity bound";
      return false;
    }
  }
  return true;
}

// (1/gamma) * projector onto null(A) on the free block, zero elsewhere.
Eigen::VectorXd apply_projector(const ActiveSet& s, int n, double gamma, const Eigen::VectorXd& u) {
  const int nf = static_cast<int>(s.free.size());
  Eigen::VectorXd u_free(nf);
  for (int f = 0; f < nf; ++f) u_free(f) = u(s.free[f]);
  if (s.A.rows() > 0) {
    const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(s.A);
    u_free -= cod.solve(s.A * u_free);
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (int f = 0; f < nf; ++f) out(s.free[f]) = u_free(f) / gamma;
  return out;
}

}  // namespace

SoftSolution soft_solve(const Eigen::MatrixXd& reward, double gamma, int max_iterations) {
  if (!(gamma > 0.0)) throw InvalidInput("soft_solve needs gamma > 0");
  if (reward.cols() != kDays || reward.rows() < 1) throw InvalidInput("reward must be L x 7");
  if (!reward.allFinite()) throw InvalidInput("reward has non-finite entries");
  const Eigen::MatrixXd y = reward / gamma;

  SoftSolution out;
  // For small gamma the projection is usually the LP vertex itself, and the
  // certificate settles that without iterating.
  const Eigen::MatrixXd vertex = solve_plan(y).as_matrix(static_cast<int>(y.rows()));
  if (is_projection(y, vertex)) {
    out.x = vertex;
    out.converged = true;
    out.polished = true;
    out.residual = max_violation(out.x);
    return out;
  }
  Eigen::MatrixXd x = y;
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(y.rows(), y.cols());
  Eigen::MatrixXd q = p;
  for (int it = 1; it <= max_iterations; ++it) {
    Eigen::MatrixXd a = x + p;
    project_days(a);
    p = x + p - a;
    Eigen::MatrixXd b = a + q;
    project_locations(b);
    q = a + q - b;
    // x alone can stall while the corrections still move; also require the
    // two projections to agree.
    const double change = std::max((b - x).cwiseAbs().maxCoeff(), (a - b).cwiseAbs().maxCoeff());
    x = std::move(b);
    out.iterations = it;
    if (change < 1e-8) {
      out.converged = true;
      break;
    }
  }
  if (const auto s = identify(y, x)) {
    out.x = s->x;
    out.polished = true;
  } else {
    out.x = x;
  }
  out.residual = max_violation(out.x);
  return out;
}

Eigen::MatrixXd soft_grad_fd(const Eigen::MatrixXd& reward, double gamma, double eps) {
  const int n = static_cast<int>(reward.size());
  Eigen::MatrixXd J(n, n);
  for (int k = 0; k < n; ++k) {
    Eigen::MatrixXd plus = reward, minus = reward;
    plus.data()[k] += eps;
    minus.data()[k] -= eps;
    const Eigen::MatrixXd xp = soft_solve(plus, gamma).x;
    const Eigen::MatrixXd xm = soft_solve(minus, gamma).x;
    const Eigen::MatrixXd d = (xp - xm) / (2.0 * eps);
    J.col(k) = Eigen::Map<const Eigen::VectorXd>(d.data(), n);
  }
  return J;
}

SoftJacobian soft_grad(const Eigen::MatrixXd& reward, double gamma) {
  SoftJacobian out;
  const int n = static_cast<int>(reward.size());
  const Eigen::MatrixXd y = reward / gamma;
  const SoftSolution sol = soft_solve(reward, gamma);
  std::string why = "active set could not be verified";
  std::optional<ActiveSet> s;
  if (sol.polished) s = identify(y, sol.x);
  if (s && clean_active_set(y, *s, &why)) {
    out.J.resize(n, n);
    for (int k = 0; k < n; ++k) out.J.col(k) = apply_projector(*s, n, gamma, Eigen::VectorXd::Unit(n, k));
    return out;
  }
  out.warnings.push_back("soft_grad: " + why + "; using finite differences");
  out.finite_difference = true;
  out.J = soft_grad_fd(reward, gamma);
  return out;
}

Eigen::MatrixXd soft_vjp(const Eigen::MatrixXd& reward, double gamma, const Eigen::MatrixXd& upstream,
                         std::vector<std::string>* warnings) {
  const int n = static_cast<int>(reward.size());
  const Eigen::MatrixXd y = reward / gamma;
  const SoftSolution sol = soft_solve(reward, gamma);
  const Eigen::Map<const Eigen::VectorXd> u(upstream.data(), n);
  std::string why = "active set could not be verified";
  std::optional<ActiveSet> s;
  if (sol.polished) s = identify(y, sol.x);
  Eigen::VectorXd g;
  if (s && clean_active_set(y, *s, &why)) {
    g = apply_projector(*s, n, gamma, u);  // J is symmetric
  } else {
    if (warnings) warnings->push_back("soft_vjp: " + why + "; using finite differences");
    // J is symmetric wherever it exists, so J^T u is the derivative along u.
    const double norm = u.norm();
    g = Eigen::VectorXd::Zero(n);
    if (norm > 0.0) {
      const double eps = 1e-6 / norm;
      const Eigen::MatrixXd xp = soft_solve(reward + eps * upstream, gamma).x;
      const Eigen::MatrixXd xm = soft_solve(reward - eps * upstream, gamma).x;
      const Eigen::MatrixXd d = (xp - xm) / (2.0 * eps);
      g = Eigen::Map<const Eigen::VectorXd>(d.data(), n);
    }
  }
  return Eigen::Map<const Eigen::MatrixXd>(g.data(), reward.rows(), reward.cols());
}

}  // namespace adherence::plan
