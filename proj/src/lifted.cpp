#include "idivnmf/lifted.hpp"

#include <algorithm>
#include <cmath>

namespace idivnmf {

LiftedTensor tensor_from_pair(const FactorPair& pair) {
  const std::size_t m = pair.rows(), k = pair.inner_size(), n = pair.cols();
  const auto& qm = pair.qminus();
  const auto& qp = pair.qplus();
  std::vector<double> data(m * k * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t l = 0; l < k; ++l)
      for (std::size_t j = 0; j < n; ++j) data[(i * k + l) * n + j] = qm(i, l) * qp(l, j);
  return LiftedTensor(m, k, n, std::move(data));
}

NonnegMatrix collapse(const LiftedTensor& t) {
  Matrix out(t.m(), t.n());
  for (std::size_t i = 0; i < t.m(); ++i)
    for (std::size_t l = 0; l < t.k(); ++l)
      for (std::size_t j = 0; j < t.n(); ++j) out(i, j) += t(i, l, j);
  return NonnegMatrix(std::move(out));
}

LiftedTensor best_p_tensor(const ProbMatrix& p, const LiftedTensor& q) {
  if (p.rows() != q.m() || p.cols() != q.n()) throw DimensionError("best_p_tensor: shape mismatch");
  const std::size_t m = q.m(), k = q.k(), n = q.n();
  const NonnegMatrix qc = collapse(q);
  std::vector<double> data(m * k * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double denom = qc(i, j);
      if (denom == 0.0) continue;
      const double ratio = p(i, j) / denom;
      for (std::size_t l = 0; l < k; ++l) data[(i * k + l) * n + j] = q(i, l, j) * ratio;
    }
  return LiftedTensor(m, k, n, std::move(data));
}

FactorPair best_q_pair(const LiftedTensor& t) {
  if (std::abs(t.sum() - 1.0) > kConstructedSumTol) {
    throw DomainError("best_q_pair: tensor is not a probability tensor");
  }
  const std::size_t m = t.m(), k = t.k(), n = t.n();
  Matrix qm(m, k);
  Matrix qp(k, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t l = 0; l < k; ++l)
      for (std::size_t j = 0; j < n; ++j) {
        qm(i, l) += t(i, l, j);
        qp(l, j) += t(i, l, j);
      }
  for (std::size_t l = 0; l < k; ++l) {
    double mass = 0.0;
    for (std::size_t j = 0; j < n; ++j) mass += qp(l, j);
    for (std::size_t j = 0; j < n; ++j) {
      qp(l, j) = mass > 0.0 ? qp(l, j) / mass : 1.0 / static_cast<double>(n);
    }
  }
  return FactorPair(NonnegMatrix(std::move(qm)), NonnegMatrix(std::move(qp)));
}

MembershipReport is_member_P(const LiftedTensor& t, const ProbMatrix& p, double tol) {
  if (p.rows() != t.m() || p.cols() != t.n()) throw DimensionError("is_member_P: shape mismatch");
  const NonnegMatrix c = collapse(t);
  double dev = 0.0;
  for (std::size_t i = 0; i < t.m(); ++i)
    for (std::size_t j = 0; j < t.n(); ++j) dev = std::max(dev, std::abs(c(i, j) - p(i, j)));
  return {dev <= tol, dev};
}

MembershipReport is_member_Q(const LiftedTensor& t, double tol) {
  const LiftedTensor fit = tensor_from_pair(best_q_pair(t));
  double dev = 0.0;
  const auto a = t.values();
  const auto b = fit.values();
  for (std::size_t idx = 0; idx < a.size(); ++idx) dev = std::max(dev, std::abs(a[idx] - b[idx]));
  return {dev <= tol, dev};
}

namespace {

PythagoreanCheck assemble(ExtendedReal lhs, ExtendedReal first, ExtendedReal second) {
  PythagoreanCheck out{lhs.value(), first.value(), second.value(), 0.0, IdentityStatus::holds};
  const bool rhs_inf = first.is_infinite() || second.is_infinite();
  if (lhs.is_infinite() || rhs_inf) {
    if (lhs.is_infinite() && rhs_inf) {
      out.status = IdentityStatus::infinite_consistent;
    } else {
      out.status = IdentityStatus::support_mismatch;
      out.residual = std::numeric_limits<double>::infinity();
    }
    return out;
  }
  out.residual = std::abs(out.lhs - out.first - out.second);
  if (out.residual > kPythagoreanRelTol * std::max(1.0, out.lhs)) out.status = IdentityStatus::violated;
  return out;
}

}  // namespace

PythagoreanCheck check_pythagorean_P(const ProbMatrix& p, const LiftedTensor& tp, const LiftedTensor& q) {
  if (!tp.same_shape(q)) throw DimensionError("check_pythagorean_P: shape mismatch");
  const MembershipReport mem = is_member_P(tp, p, kMembershipTol);
  if (!mem.member) throw DomainError("check_pythagorean_P: tensor does not have marginal P");
  const LiftedTensor pstar = best_p_tensor(p, q);
  const ExtendedReal lhs = i_div_tensor(tp, q);
  const ExtendedReal first = i_div_tensor(tp, pstar);
  const ExtendedReal second = i_div_matrix(p.inner(), collapse(q));
  PythagoreanCheck out = assemble(lhs, first, second);

  const ExtendedReal lifted_second = i_div_tensor(pstar, q);
  if (lifted_second.is_finite() && second.is_finite()) {
    out.collapse_residual = std::abs(lifted_second.value() - second.value());
    if (out.status == IdentityStatus::holds &&
        out.collapse_residual > kPythagoreanRelTol * std::max(1.0, out.lhs)) {
      out.status = IdentityStatus::violated;
    }
  } else if (lifted_second.is_finite() != second.is_finite()) {
    // P* drops the mass of P on zero fibers of Q, so D(P*||Q) can be finite
    // while D(P||collapse Q) is not.
    out.collapse_residual = std::numeric_limits<double>::infinity();
    out.status = IdentityStatus::support_mismatch;
  }
  return out;
}

PythagoreanCheck check_pythagorean_Q(const LiftedTensor& tp, const LiftedTensor& q) {
  if (!tp.same_shape(q)) throw DimensionError("check_pythagorean_Q: shape mismatch");
  const LiftedTensor qstar = tensor_from_pair(best_q_pair(tp));
  return assemble(i_div_tensor(tp, q), i_div_tensor(tp, qstar), i_div_tensor(qstar, q));
}

}  // namespace idivnmf
