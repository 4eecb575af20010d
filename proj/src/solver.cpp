#include "idivnmf/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "idivnmf/lifted.hpp"

namespace idivnmf {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::simultaneous: return "simultaneous";
    case Variant::sequential: return "sequential";
    case Variant::unnormalized: return "unnormalized";
  }
  return "?";
}

std::string_view to_string(InitKind i) {
  return i == InitKind::deterministic ? "deterministic" : "random";
}

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iters: return "max_iters";
    case SolveStatus::underflow: return "underflow";
    case SolveStatus::degenerate_input: return "degenerate_input";
    case SolveStatus::aborted: return "aborted";
  }
  return "?";
}

std::optional<Variant> parse_variant(std::string_view s) {
  for (Variant v : {Variant::simultaneous, Variant::sequential, Variant::unnormalized})
    if (to_string(v) == s) return v;
  return std::nullopt;
}

std::optional<InitKind> parse_init(std::string_view s) {
  for (InitKind i : {InitKind::deterministic, InitKind::random})
    if (to_string(i) == s) return i;
  return std::nullopt;
}

namespace {

void check_inner_size(std::size_t m, std::size_t n, std::size_t k) {
  if (k < 1 || k > std::min(m, n)) {
    throw DomainError("inner size " + std::to_string(k) + " outside [1, min(m, n)]");
  }
}

// P(ij) / (WH)(ij) with 0 where P(ij) == 0; throws on (WH)(ij) == 0 < P(ij).
Matrix ratio_matrix(const NonnegMatrix& target, const NonnegMatrix& left, const NonnegMatrix& right) {
  if (target.rows() != left.rows() || target.cols() != right.cols() || left.cols() != right.rows()) {
    throw DimensionError("factor shapes do not match the target matrix");
  }
  const std::size_t m = target.rows(), n = target.cols(), k = left.cols();
  Matrix r(m, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double t = target(i, j);
      if (t == 0.0) continue;
      double q = 0.0;
      for (std::size_t l = 0; l < k; ++l) q += left(i, l) * right(l, j);
      if (q == 0.0) {
        throw UnderflowError("product vanishes at (" + std::to_string(i) + "," + std::to_string(j) +
                             ") where the target is positive");
      }
      r(i, j) = t / q;
    }
  return r;
}

// left(il) * sum_j right(lj) R(ij)
Matrix scale_left(const NonnegMatrix& left, const NonnegMatrix& right, const Matrix& r) {
  Matrix out(left.rows(), left.cols());
  for (std::size_t i = 0; i < left.rows(); ++i)
    for (std::size_t l = 0; l < left.cols(); ++l) {
      double s = 0.0;
      for (std::size_t j = 0; j < right.cols(); ++j) s += right(l, j) * r(i, j);
      out(i, l) = left(i, l) * s;
    }
  return out;
}

// right(lj) * sum_i left(il) R(ij), each row divided by its sum (uniform if zero).
Matrix scale_right_stochastic(const NonnegMatrix& left, const NonnegMatrix& right, const Matrix& r) {
  const std::size_t k = right.rows(), n = right.cols();
  Matrix out(k, n);
  for (std::size_t l = 0; l < k; ++l) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < left.rows(); ++i) s += left(i, l) * r(i, j);
      out(l, j) = right(l, j) * s;
      row += out(l, j);
    }
    for (std::size_t j = 0; j < n; ++j) out(l, j) = row > 0.0 ? out(l, j) / row : 1.0 / static_cast<double>(n);
  }
  return out;
}

FactorPair normalized_pair(const Factorization& f) {
  const double w = f.w.sum();
  std::vector<double> q(f.w.values().begin(), f.w.values().end());
  for (double& x : q) x /= w;
  return FactorPair(NonnegMatrix(f.w.rows(), f.w.cols(), std::move(q)), f.h);
}

double max_abs_diff(const NonnegMatrix& a, const NonnegMatrix& b) {
  double d = 0.0;
  for (std::size_t idx = 0; idx < a.values().size(); ++idx)
    d = std::max(d, std::abs(a.values()[idx] - b.values()[idx]));
  return d;
}

double max_abs_diff_live_rows(const FactorPair& before, const FactorPair& after) {
  const auto colsum = after.qminus().col_sums();
  double d = 0.0;
  for (std::size_t l = 0; l < after.inner_size(); ++l) {
    if (colsum[l] <= kDeadColumnTol) continue;
    for (std::size_t j = 0; j < after.cols(); ++j)
      d = std::max(d, std::abs(after.qplus()(l, j) - before.qplus()(l, j)));
  }
  return d;
}

// D(P*(from) || P*(to)) evaluated through factor ratios. An entry of `to` that
// rounded to zero from a positive entry of `from` takes the ratio implied by one
// update of `from`, so late underflow of a factor entry does not make the sum
// infinite.
double projection_divergence(const ProbMatrix& p, const FactorPair& from, const FactorPair& to) {
  const std::size_t m = from.rows(), k = from.inner_size(), n = from.cols();
  const Matrix r = ratio_matrix(p.inner(), from.qminus(), from.qplus());
  const Matrix a = scale_left(NonnegMatrix(m, k, std::vector<double>(m * k, 1.0)), from.qplus(), r);

  Matrix rm(m, k);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t l = 0; l < k; ++l) {
      const double f = from.qminus()(i, l), t = to.qminus()(i, l);
      rm(i, l) = f == 0.0 ? 1.0 : t > 0.0 ? t / f : a(i, l);
    }
  Matrix rp(k, n);
  for (std::size_t l = 0; l < k; ++l) {
    std::vector<double> s(n, 0.0);
    double c = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < m; ++i) s[j] += from.qminus()(i, l) * r(i, j);
      c += from.qplus()(l, j) * s[j];
    }
    for (std::size_t j = 0; j < n; ++j) {
      const double f = from.qplus()(l, j), t = to.qplus()(l, j);
      rp(l, j) = f == 0.0 ? 1.0 : t > 0.0 ? t / f : c > 0.0 ? s[j] / c : 0.0;
    }
  }

  const NonnegMatrix qf = from.product();
  const NonnegMatrix qt = to.product();
  double d = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (p(i, j) == 0.0) continue;
      if (qt(i, j) == 0.0) return std::numeric_limits<double>::infinity();
      const double scale = qf(i, j) / qt(i, j);
      for (std::size_t l = 0; l < k; ++l) {
        const double pf = from.qminus()(i, l) * from.qplus()(l, j) * r(i, j);
        if (pf == 0.0) continue;
        const double ratio = rm(i, l) * rp(l, j) * scale;
        if (ratio == 0.0) return std::numeric_limits<double>::infinity();
        const double x = ratio - 1.0;
        d += pf * (std::abs(x) < 0.5 ? x - std::log1p(x) : x - std::log(ratio));
      }
    }
  return std::max(d, 0.0);
}

}  // namespace

FactorPair init_deterministic(const NonnegMatrix& v, std::size_t k) {
  const ScaledProblem sp = normalize_problem(v);
  check_inner_size(v.rows(), v.cols(), k);
  // marginals of V scaled once, rather than summed from the rounded P
  const auto rs = v.row_sums();
  const auto cs = v.col_sums();
  Matrix qm(v.rows(), k);
  Matrix qp(k, v.cols());
  for (std::size_t i = 0; i < v.rows(); ++i)
    for (std::size_t l = 0; l < k; ++l) qm(i, l) = rs[i] / (sp.total * static_cast<double>(k));
  for (std::size_t l = 0; l < k; ++l)
    for (std::size_t j = 0; j < v.cols(); ++j) qp(l, j) = cs[j] / sp.total;
  return FactorPair(NonnegMatrix(std::move(qm)), NonnegMatrix(std::move(qp)));
}

FactorPair init_random(const NonnegMatrix& v, std::size_t k, std::uint64_t seed) {
  normalize_problem(v);
  check_inner_size(v.rows(), v.cols(), k);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> draw(kRandomInitFloor, 1.0);
  Matrix qm(v.rows(), k);
  Matrix qp(k, v.cols());
  for (double& x : qm.values()) x = draw(rng);
  for (double& x : qp.values()) x = draw(rng);
  double total = 0.0;
  for (double x : qm.values()) total += x;
  for (double& x : qm.values()) x /= total;
  for (std::size_t l = 0; l < k; ++l) {
    double row = 0.0;
    for (std::size_t j = 0; j < v.cols(); ++j) row += qp(l, j);
    for (std::size_t j = 0; j < v.cols(); ++j) qp(l, j) /= row;
  }
  return FactorPair(NonnegMatrix(std::move(qm)), NonnegMatrix(std::move(qp)));
}

NonnegMatrix update_qminus(const ProbMatrix& p, const FactorPair& pair) {
  const Matrix r = ratio_matrix(p.inner(), pair.qminus(), pair.qplus());
  return NonnegMatrix(scale_left(pair.qminus(), pair.qplus(), r));
}

NonnegMatrix update_qplus(const ProbMatrix& p, const FactorPair& pair) {
  const Matrix r = ratio_matrix(p.inner(), pair.qminus(), pair.qplus());
  return NonnegMatrix(scale_right_stochastic(pair.qminus(), pair.qplus(), r));
}

FactorPair step_simultaneous(const ProbMatrix& p, const FactorPair& pair) {
  const Matrix r = ratio_matrix(p.inner(), pair.qminus(), pair.qplus());
  return FactorPair(NonnegMatrix(scale_left(pair.qminus(), pair.qplus(), r)),
                    NonnegMatrix(scale_right_stochastic(pair.qminus(), pair.qplus(), r)));
}

FactorPair step_sequential(const ProbMatrix& p, const FactorPair& pair) {
  const FactorPair half(update_qminus(p, pair), pair.qplus());
  return FactorPair(half.qminus(), update_qplus(p, half));
}

Factorization step_unnormalized(const NonnegMatrix& v, const NonnegMatrix& w, const NonnegMatrix& h) {
  const auto hs = h.row_sums();
  for (std::size_t l = 0; l < hs.size(); ++l) {
    if (std::abs(hs[l] - 1.0) > kIngestedSumTol) {
      throw DomainError("step_unnormalized: H row " + std::to_string(l) + " is not stochastic");
    }
  }
  const Matrix r = ratio_matrix(v, w, h);
  return Factorization{NonnegMatrix(scale_left(w, h, r)), NonnegMatrix(scale_right_stochastic(w, h, r))};
}

ExtendedReal objective(const ProbMatrix& p, const FactorPair& pair) {
  return i_div_matrix(p.inner(), pair.product());
}

GainComponents gain_components(const ProbMatrix& p, const FactorPair& pair_t, const FactorPair& pair_t1) {
  const double gain_p = projection_divergence(p, pair_t, pair_t1);
  const double gain_q = i_div_tensor(tensor_from_pair(pair_t1), tensor_from_pair(pair_t)).value();
  const double gain = objective(p, pair_t).value() - objective(p, pair_t1).value();
  return {gain_p, gain_q, std::abs(gain - gain_p - gain_q)};
}

GainComponents sequential_gain_components(const ProbMatrix& p, const FactorPair& pair_t,
                                          const FactorPair& half, const FactorPair& pair_t1) {
  const LiftedTensor qt = tensor_from_pair(pair_t);
  const LiftedTensor qh = tensor_from_pair(half);
  const LiftedTensor ph = best_p_tensor(p, qh);

  const double gain_p = projection_divergence(p, pair_t, half) + projection_divergence(p, half, pair_t1);
  double gain_q = i_div_tensor(qh, qt).value();
  for (std::size_t l = 0; l < qh.k(); ++l) {
    double mass = 0.0;
    for (std::size_t i = 0; i < qh.m(); ++i)
      for (std::size_t j = 0; j < qh.n(); ++j) mass += ph(i, l, j);
    double row = 0.0;
    for (std::size_t j = 0; j < qh.n(); ++j) row += xlogxy(pair_t1.qplus()(l, j), half.qplus()(l, j));
    if (mass > 0.0) gain_q += mass * row;
  }
  const double gain = objective(p, pair_t).value() - objective(p, pair_t1).value();
  return {gain_p, gain_q, std::abs(gain - gain_p - gain_q)};
}

std::size_t effective_inner_size(const FactorPair& pair) {
  const auto cs = pair.qminus().col_sums();
  return static_cast<std::size_t>(std::count_if(cs.begin(), cs.end(), [](double s) { return s > kDeadColumnTol; }));
}

SolveResult solve(const NonnegMatrix& v, const SolverConfig& config, const StepObserver& observer) {
  const FactorPair start = config.init == InitKind::deterministic
                               ? init_deterministic(v, config.inner_size)
                               : init_random(v, config.inner_size, config.seed);
  return solve_from(v, start, config, observer);
}

SolveResult solve_from(const NonnegMatrix& v, const FactorPair& start, const SolverConfig& config,
                       const StepObserver& observer) {
  const ScaledProblem sp = normalize_problem(v);
  check_inner_size(v.rows(), v.cols(), config.inner_size);
  if (start.inner_size() != config.inner_size || start.rows() != v.rows() || start.cols() != v.cols()) {
    throw DimensionError("starting pair does not match the input and inner size");
  }
  if (config.max_iters < 1) throw DomainError("max_iters must be at least 1");
  if (!(config.tol_gain > 0.0)) throw DomainError("tol_gain must be positive");

  const ProbMatrix& p = sp.p;
  FactorPair pair = start;
  // Unnormalized iterates; W^0 = total * qminus^0 so that W/e'We tracks pair.
  std::optional<Factorization> wh;
  if (config.variant == Variant::unnormalized) wh = denormalize_solution(start, sp.total);

  std::vector<IterationRecord> trace;
  SolveStatus status = SolveStatus::max_iters;
  ExtendedReal current = objective(p, pair);

  for (std::size_t t = 0; t < config.max_iters; ++t) {
    std::optional<FactorPair> next;
    std::optional<FactorPair> half;
    try {
      switch (config.variant) {
        case Variant::simultaneous:
          next = step_simultaneous(p, pair);
          break;
        case Variant::sequential:
          half = FactorPair(update_qminus(p, pair), pair.qplus());
          next = FactorPair(half->qminus(), update_qplus(p, *half));
          break;
        case Variant::unnormalized:
          wh = step_unnormalized(v, wh->w, wh->h);
          next = normalized_pair(*wh);
          break;
      }
    } catch (const UnderflowError&) {
      if (!config.underflow_guard) throw;
      status = SolveStatus::underflow;
      break;
    }

    const ExtendedReal after = objective(p, *next);
    IterationRecord rec;
    rec.iter = t;
    rec.divergence = current.value();
    rec.gain = current.value() - after.value();
    if (config.record_components) {
      const GainComponents gc = half ? sequential_gain_components(p, pair, *half, *next)
                                     : gain_components(p, pair, *next);
      rec.gain_p = gc.gain_p;
      rec.gain_q = gc.gain_q;
      rec.gain_residual = gc.residual;
    }
    rec.delta_qminus = max_abs_diff(next->qminus(), pair.qminus());
    rec.delta_qplus_live = max_abs_diff_live_rows(pair, *next);
    trace.push_back(rec);

    const bool keep_going = !observer || observer(StepView{p, pair, *next, trace.back()});
    pair = std::move(*next);
    const double relative_gain = current.value() > 0.0 ? rec.gain / current.value() : 0.0;
    current = after;
    if (!keep_going) {
      status = SolveStatus::aborted;
      break;
    }
    if (relative_gain <= config.tol_gain) {
      status = SolveStatus::converged;
      break;
    }
  }

  const std::size_t eff = effective_inner_size(pair);
  return SolveResult{std::move(pair), std::move(trace), status, current, eff, sp.total};
}

}  // namespace idivnmf
