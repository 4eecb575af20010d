#include "idivnmf/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "idivnmf/lifted.hpp"
#include "idivnmf/solver.hpp"

namespace idivnmf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// D(P || a b) on raw factors; +inf allowed.
double raw_objective(const ProbMatrix& p, const Matrix& a, const Matrix& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double q = 0.0;
      for (std::size_t l = 0; l < a.cols(); ++l) q += a(i, l) * b(l, j);
      const ExtendedReal d = i_div_scalar(p(i, j), q);
      if (d.is_infinite()) return kInf;
      s += d.value();
    }
  return s;
}

LiftedTensor raw_tensor(const NonnegMatrix& a, const NonnegMatrix& b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> data(m * k * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t l = 0; l < k; ++l)
      for (std::size_t j = 0; j < n; ++j) data[(i * k + l) * n + j] = a(i, l) * b(l, j);
  return LiftedTensor(m, k, n, std::move(data));
}

AuxEval aux_eval(const ProbMatrix& p, const FactorPair& pair, const NonnegMatrix& a, const NonnegMatrix& b) {
  if (a.rows() != pair.rows() || a.cols() != pair.inner_size() || b.rows() != pair.inner_size() ||
      b.cols() != pair.cols()) {
    throw DimensionError("auxiliary function: prime shapes do not match the pair");
  }
  const LiftedTensor pstar = best_p_tensor(p, tensor_from_pair(pair));
  const double g = i_div_tensor(pstar, raw_tensor(a, b)).value();
  const double d = i_div_matrix(p.inner(), multiply(a, b)).value();
  const double slack = (std::isinf(g) && std::isinf(d)) ? 0.0 : g - d;
  return {g, d, slack};
}

}  // namespace

Gradient grad(const ProbMatrix& p, const FactorPair& pair) {
  const std::size_t m = pair.rows(), k = pair.inner_size(), n = pair.cols();
  if (p.rows() != m || p.cols() != n) throw DimensionError("grad: shape mismatch");
  const NonnegMatrix q = pair.product();
  // c(ij) = 1 - P(ij)/Q(ij)
  Matrix c(m, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (p(i, j) == 0.0) {
        c(i, j) = 1.0;
      } else if (q(i, j) == 0.0) {
        throw GradientUndefinedError("grad: Q vanishes at (" + std::to_string(i) + "," +
                                     std::to_string(j) + ") where P is positive");
      } else {
        c(i, j) = 1.0 - p(i, j) / q(i, j);
      }
    }
  Gradient g{Matrix(m, k), Matrix(k, n)};
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t l = 0; l < k; ++l) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += pair.qplus()(l, j) * c(i, j);
      g.qminus(i, l) = s;
    }
  for (std::size_t l = 0; l < k; ++l)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) s += pair.qminus()(i, l) * c(i, j);
      g.qplus(l, j) = s;
    }
  return g;
}

Gradient finite_diff_grad(const ProbMatrix& p, const FactorPair& pair, double h) {
  if (!(h >= 1e-8 && h <= 1e-4)) throw DomainError("finite_diff_grad: step outside [1e-8, 1e-4]");
  Matrix a = pair.qminus().matrix();
  Matrix b = pair.qplus().matrix();
  Gradient g{Matrix(a.rows(), a.cols()), Matrix(b.rows(), b.cols())};

  auto central = [&](Matrix& target, Matrix& out) {
    for (std::size_t r = 0; r < target.rows(); ++r)
      for (std::size_t c = 0; c < target.cols(); ++c) {
        const double x = target(r, c);
        if (x - h < 0.0) {
          out(r, c) = std::numeric_limits<double>::quiet_NaN();
          continue;
        }
        target(r, c) = x + h;
        const double up = raw_objective(p, a, b);
        target(r, c) = x - h;
        const double down = raw_objective(p, a, b);
        target(r, c) = x;
        if (std::isinf(up) || std::isinf(down)) {
          throw OracleFailureError("finite_diff_grad: objective infinite at a perturbed point");
        }
        out(r, c) = (up - down) / (2.0 * h);
      }
  };
  central(a, g.qminus);
  central(b, g.qplus);
  return g;
}

KktReport kkt_report(const ProbMatrix& p, const FactorPair& pair, double tol) {
  const std::size_t m = pair.rows(), k = pair.inner_size(), n = pair.cols();
  Gradient g = grad(p, pair);
  KktReport rep;
  rep.complementarity_qminus = Matrix(m, k);
  rep.complementarity_qplus = Matrix(k, n);
  rep.min_zero_gradient = kInf;

  const auto colsum = pair.qminus().col_sums();
  for (std::size_t l = 0; l < k; ++l) {
    const bool dead = colsum[l] <= kDeadColumnTol;
    if (dead) rep.dead_columns.push_back(l);
    for (std::size_t i = 0; i < m; ++i) {
      const double x = pair.qminus()(i, l);
      const double c = x * g.qminus(i, l);
      rep.complementarity_qminus(i, l) = c;
      if (dead) continue;
      rep.max_complementarity = std::max(rep.max_complementarity, std::abs(c));
      if (x <= tol) rep.min_zero_gradient = std::min(rep.min_zero_gradient, g.qminus(i, l));
    }
    for (std::size_t j = 0; j < n; ++j) {
      const double x = pair.qplus()(l, j);
      const double c = x * g.qplus(l, j);
      rep.complementarity_qplus(l, j) = c;
      if (dead) continue;
      rep.max_complementarity = std::max(rep.max_complementarity, std::abs(c));
      if (x <= tol) rep.min_zero_gradient = std::min(rep.min_zero_gradient, g.qplus(l, j));
    }
  }
  rep.gradient_qminus = std::move(g.qminus);
  rep.gradient_qplus = std::move(g.qplus);
  rep.satisfied = rep.max_complementarity <= tol && rep.min_zero_gradient >= -tol;
  return rep;
}

AuxEval aux_G(const ProbMatrix& p, const FactorPair& pair, const FactorPair& pair_prime) {
  return aux_eval(p, pair, pair_prime.qminus(), pair_prime.qplus());
}

AuxEval aux_G_minus(const ProbMatrix& p, const FactorPair& pair, const NonnegMatrix& qminus_prime) {
  return aux_eval(p, pair, qminus_prime, pair.qplus());
}

AuxEval aux_G_plus(const ProbMatrix& p, const FactorPair& pair, const NonnegMatrix& qplus_prime) {
  return aux_eval(p, pair, pair.qminus(), qplus_prime);
}

AuxGainIdentities aux_gain_identities(const ProbMatrix& p, const FactorPair& pair) {
  const std::size_t m = pair.rows(), k = pair.inner_size(), n = pair.cols();
  const NonnegMatrix qm1 = update_qminus(p, pair);
  const NonnegMatrix qp1 = update_qplus(p, pair);
  const FactorPair next(qm1, qp1);
  const auto& qm = pair.qminus();
  const auto& qp = pair.qplus();

  AuxGainIdentities out{};
  out.d_value = objective(p, pair).value();

  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t l = 0; l < k; ++l) out.minus_term += xlogxy(qm1(i, l), qm(i, l));

  const auto weight = qm1.col_sums();
  for (std::size_t l = 0; l < k; ++l) {
    if (weight[l] == 0.0) continue;
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += xlogxy(qp1(l, j), qp(l, j));
    out.plus_term += weight[l] * row;
  }

  const NonnegMatrix q0 = pair.product();
  const NonnegMatrix q1 = next.product();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (p(i, j) == 0.0) continue;
      double s = 0.0;
      for (std::size_t l = 0; l < k; ++l) {
        const double post0 = qm(i, l) * qp(l, j) / q0(i, j);
        const double post1 = qm1(i, l) * qp1(l, j) / q1(i, j);
        s += xlogxy(post0, post1);
      }
      out.posterior_term += p(i, j) * s;
    }

  const double g_minus = aux_G_minus(p, pair, qm1).g_value;
  const double g_plus = aux_G_plus(p, pair, qp1).g_value;
  const double g_joint = aux_G(p, pair, next).g_value;
  out.minus_residual = std::abs(out.d_value - g_minus - out.minus_term);
  out.plus_residual = std::abs(out.d_value - g_plus - out.plus_term);
  out.joint_residual = std::abs(out.d_value - g_joint - out.minus_term - out.plus_term);

  const double gain = out.d_value - objective(p, next).value();
  out.gain_residual = std::abs(gain - out.minus_term - out.plus_term - out.posterior_term);

  const GainComponents gc = gain_components(p, pair, next);
  out.gain_p_residual = std::abs(gc.gain_p - out.posterior_term);
  out.gain_q_residual = std::abs(gc.gain_q - out.minus_term - out.plus_term);
  return out;
}

std::vector<IdentityViolation> check_step_identities(const ProbMatrix& p, const FactorPair& before,
                                                     const FactorPair& after) {
  std::vector<IdentityViolation> out;
  const double d = objective(p, before).value();
  const double bound = kIdentityRelTol * std::max(1.0, d);
  auto expect = [&](const char* name, double residual, double limit) {
    if (!(residual <= limit)) out.push_back({name, residual, limit});
  };

  const LiftedTensor q0 = tensor_from_pair(before);
  const LiftedTensor q1 = tensor_from_pair(after);
  const LiftedTensor p0 = best_p_tensor(p, q0);

  const PythagoreanCheck rule_p = check_pythagorean_P(p, p0, q1);
  if (rule_p.status != IdentityStatus::infinite_consistent) {
    expect("pythagorean_p", rule_p.residual, bound);
    expect("pythagorean_p_collapse", rule_p.collapse_residual, bound);
  }
  const PythagoreanCheck rule_q = check_pythagorean_Q(p0, q0);
  if (rule_q.status != IdentityStatus::infinite_consistent) expect("pythagorean_q", rule_q.residual, bound);

  const AuxGainIdentities aux = aux_gain_identities(p, before);
  expect("aux_minus", aux.minus_residual, bound);
  expect("aux_plus", aux.plus_residual, bound);
  expect("aux_joint", aux.joint_residual, bound);
  expect("aux_gain", aux.gain_residual, bound);
  expect("aux_gain_p", aux.gain_p_residual, bound);
  expect("aux_gain_q", aux.gain_q_residual, bound);

  const AuxEval g = aux_G(p, before, after);
  expect("aux_domination", -g.slack, 1e-12);
  return out;
}

}  // namespace idivnmf
