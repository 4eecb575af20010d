#pragma once

#include "idivnmf/core.hpp"

namespace idivnmf {

/// Default tolerance for the membership validators.
inline constexpr double kMembershipTol = 1e-9;

/// T(ilj) = qminus(il) * qplus(lj). The result sums to one.
LiftedTensor tensor_from_pair(const FactorPair& pair);

/// m x n matrix of sums over the middle index.
NonnegMatrix collapse(const LiftedTensor& t);

/// I-projection of Q onto the tensors with (i,j)-marginal P:
/// out(ilj) = Q(ilj) * P(ij) / Q(ij), and 0 on every fiber with Q(ij) == 0.
LiftedTensor best_p_tensor(const ProbMatrix& p, const LiftedTensor& q);

/// I-projection of a probability tensor onto the product tensors:
/// qminus(il) = sum_j T(ilj), qplus(lj) = sum_i T(ilj) / sum_ij T(ilj).
/// Slices l carrying no mass get the uniform row 1/n in qplus.
/// Throws DomainError unless T sums to one within kConstructedSumTol.
FactorPair best_q_pair(const LiftedTensor& t);

struct MembershipReport {
  bool member;
  double max_deviation;
};

/// Max over (i,j) of |collapse(T)(ij) - P(ij)| against tol.
MembershipReport is_member_P(const LiftedTensor& t, const ProbMatrix& p, double tol = kMembershipTol);

/// Max elementwise |T - tensor_from_pair(best_q_pair(T))| against tol.
MembershipReport is_member_Q(const LiftedTensor& t, double tol = kMembershipTol);

enum class IdentityStatus {
  holds,     // every term finite and residual within contract
  violated,  // finite terms but residual above contract
  infinite_consistent,  // both sides infinite
  support_mismatch,     // one side infinite, the other finite
};

/// Outcome of a Pythagorean-rule evaluation lhs = first + second.
struct PythagoreanCheck {
  double lhs;
  double first;
  double second;
  double residual;  // |lhs - first - second|, +inf on support mismatch
  IdentityStatus status;
  /// P-rule only: |D(P*(Q) || Q) - D(P || collapse Q)|, zero for the Q-rule.
  double collapse_residual = 0.0;
};

/// Contract tolerance of both rules: residual <= kPythagoreanRelTol * max(1, lhs).
inline constexpr double kPythagoreanRelTol = 1e-10;

/// D(Tp||Q) = D(Tp||P*(Q)) + D(P*(Q)||Q), with D(P*(Q)||Q) = D(P||collapse Q).
/// Tp must lie in the marginal set of P within kMembershipTol.
PythagoreanCheck check_pythagorean_P(const ProbMatrix& p, const LiftedTensor& tp, const LiftedTensor& q);

/// D(Tp||Q) = D(Tp||Q*(Tp)) + D(Q*(Tp)||Q).
PythagoreanCheck check_pythagorean_Q(const LiftedTensor& tp, const LiftedTensor& q);

}  // namespace idivnmf
