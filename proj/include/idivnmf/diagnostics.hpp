#pragma once

#include <string>
#include <vector>

#include "idivnmf/core.hpp"

namespace idivnmf {

/// Gradient evaluated where (qminus qplus)(ij) == 0 against P(ij) > 0.
class GradientUndefinedError : public Error {
 public:
  using Error::Error;
};

/// Finite-difference oracle hit an infinite objective.
class OracleFailureError : public Error {
 public:
  using Error::Error;
};

/// Raw (unprojected) partial derivatives of D(P || qminus qplus).
struct Gradient {
  Matrix qminus;  // m x k
  Matrix qplus;   // k x n
};

/// dD/dqminus(il) = sum_j qplus(lj) (1 - P(ij)/Q(ij)),
/// dD/dqplus(lj)  = sum_i qminus(il) (1 - P(ij)/Q(ij)), Q = qminus qplus.
Gradient grad(const ProbMatrix& p, const FactorPair& pair);

/// Central differences of the objective in each raw entry, without
/// re-projecting onto the constraints. Entries where x - h < 0 are skipped
/// and reported as NaN. h must lie in [1e-8, 1e-4].
Gradient finite_diff_grad(const ProbMatrix& p, const FactorPair& pair, double h = 1e-6);

struct KktReport {
  Matrix complementarity_qminus;  // qminus(il) * dD/dqminus(il)
  Matrix complementarity_qplus;   // qplus(lj) * dD/dqplus(lj)
  Matrix gradient_qminus;
  Matrix gradient_qplus;
  /// Max |complementarity| over live entries.
  double max_complementarity = 0.0;
  /// Min gradient over live entries whose value is <= tol; +inf when none.
  double min_zero_gradient = 0.0;
  std::vector<std::size_t> dead_columns;
  bool satisfied = false;
};

/// Stationarity report for the nonnegativity-constrained problem. Columns of
/// qminus with sum <= 1e-12 and their qplus rows are left out of both checks
/// and listed in dead_columns.
KktReport kkt_report(const ProbMatrix& p, const FactorPair& pair, double tol);

/// One evaluation of an auxiliary function against the objective at its
/// second argument.
struct AuxEval {
  double g_value;
  double d_value_at_second_arg;
  double slack;
};

/// G(Q, Q') = D(P*(Q) || Q') on lifted tensors, compared with D(P || Q').
AuxEval aux_G(const ProbMatrix& p, const FactorPair& pair, const FactorPair& pair_prime);

/// G(qminus, qplus, qminus', qplus). qminus' only needs to be nonnegative.
AuxEval aux_G_minus(const ProbMatrix& p, const FactorPair& pair, const NonnegMatrix& qminus_prime);

/// G(qminus, qplus, qminus, qplus'). qplus' only needs to be nonnegative.
AuxEval aux_G_plus(const ProbMatrix& p, const FactorPair& pair, const NonnegMatrix& qplus_prime);

/// Gain identities of one simultaneous update (primes from the update
/// formulas). Each `*_residual` is |lhs - rhs| of one identity.
struct AuxGainIdentities {
  double d_value;            // D(P || Q)
  double minus_term;         // sum_il qminus' log(qminus'/qminus)
  double plus_term;          // sum_l w_l sum_j qplus' log(qplus'/qplus), w_l = sum_i qminus'(il)
  double posterior_term;     // E_P D(posterior of l under Q || under Q')
  double minus_residual;     // D - G-(qminus') vs minus_term
  double plus_residual;      // D - G+(qplus') vs plus_term
  double joint_residual;     // D - G(Q, Q') vs minus_term + plus_term
  double gain_residual;      // D(P||Q) - D(P||Q') vs the three terms
  double gain_p_residual;    // D(P^t || P^{t+1}) vs posterior_term
  double gain_q_residual;    // D(Q^{t+1} || Q^t) vs minus_term + plus_term
};

AuxGainIdentities aux_gain_identities(const ProbMatrix& p, const FactorPair& pair);

struct IdentityViolation {
  std::string name;
  double residual;
  double bound;
};

/// Relative tolerance shared by the per-step identity checks.
inline constexpr double kIdentityRelTol = 1e-10;

/// Evaluates every identity available for one update before -> after: both
/// Pythagorean rules on the lifted iterates, the auxiliary-function gain
/// identities at `before`, and the auxiliary domination G(before, after) >=
/// D(P || after). Returns the identities that fail; empty when all hold.
std::vector<IdentityViolation> check_step_identities(const ProbMatrix& p, const FactorPair& before,
                                                     const FactorPair& after);

}  // namespace idivnmf
