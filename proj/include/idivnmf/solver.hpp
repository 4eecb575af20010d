#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "idivnmf/core.hpp"

namespace idivnmf {

enum class Variant { simultaneous, sequential, unnormalized };
enum class InitKind { deterministic, random };
enum class SolveStatus { converged, max_iters, underflow, degenerate_input, aborted };

std::string_view to_string(Variant v);
std::string_view to_string(InitKind i);
std::string_view to_string(SolveStatus s);
std::optional<Variant> parse_variant(std::string_view s);
std::optional<InitKind> parse_init(std::string_view s);

struct SolverConfig {
  std::size_t inner_size = 1;
  std::size_t max_iters = 1000;
  double tol_gain = 1e-10;
  Variant variant = Variant::simultaneous;
  InitKind init = InitKind::deterministic;
  std::uint64_t seed = 0;
  bool record_components = false;
  bool underflow_guard = true;
};

/// One update step t -> t+1.
struct IterationRecord {
  std::size_t iter = 0;
  double divergence = 0.0;  // D(P || Q^t), before the step
  double gain = 0.0;        // D(P || Q^t) - D(P || Q^{t+1})
  // Set only when components are recorded.
  std::optional<double> gain_p;
  std::optional<double> gain_q;
  std::optional<double> gain_residual;
  double delta_qminus = 0.0;       // max |qminus^{t+1} - qminus^t|
  double delta_qplus_live = 0.0;   // same for qplus rows of live columns
};

struct SolveResult {
  FactorPair pair;
  std::vector<IterationRecord> trace;
  SolveStatus status;
  ExtendedReal final_divergence;
  std::size_t effective_inner_size;
  double total;  // e'Ve
};

/// Column of qminus counts as dead when its sum is at or below this.
inline constexpr double kDeadColumnTol = 1e-12;

/// Lower end of the uniform draw used by init_random.
inline constexpr double kRandomInitFloor = 1e-6;

/// Pair obtained from W = (1/k) V e e', H = e e'V / e'Ve after normalization:
/// every column of qminus is the row-sum vector of P over k, every row of
/// qplus the column-sum vector of P. The objective is finite at this pair.
FactorPair init_deterministic(const NonnegMatrix& v, std::size_t k);

/// Entries uniform on (kRandomInitFloor, 1) from a seeded mt19937_64, then
/// qminus normalized globally and qplus per row.
FactorPair init_random(const NonnegMatrix& v, std::size_t k, std::uint64_t seed);

/// Multiplicative update of qminus with qplus held at its current value:
/// qminus'(il) = qminus(il) * sum_j qplus(lj) P(ij) / (qminus qplus)(ij).
NonnegMatrix update_qminus(const ProbMatrix& p, const FactorPair& pair);

/// Multiplicative update of qplus against the pair's own qminus, rows
/// renormalized to one: qplus'(lj) proportional to
/// qplus(lj) * sum_i qminus(il) P(ij) / (qminus qplus)(ij).
NonnegMatrix update_qplus(const ProbMatrix& p, const FactorPair& pair);

/// One simultaneous multiplicative update of both factors from the old pair.
/// Throws UnderflowError when (qminus qplus)(ij) == 0 while P(ij) > 0.
FactorPair step_simultaneous(const ProbMatrix& p, const FactorPair& pair);

/// qminus updated first, then qplus updated against the new qminus.
FactorPair step_sequential(const ProbMatrix& p, const FactorPair& pair);

/// Unnormalized update of (W, H) against V; H must be row-stochastic within
/// kIngestedSumTol. Afterwards W'e = Ve and H'e = e.
Factorization step_unnormalized(const NonnegMatrix& v, const NonnegMatrix& w, const NonnegMatrix& h);

/// D(P || qminus qplus).
ExtendedReal objective(const ProbMatrix& p, const FactorPair& pair);

struct GainComponents {
  double gain_p;    // D(P^t || P^{t+1}) on the lifted tensors
  double gain_q;    // D(Q^{t+1} || Q^t)
  double residual;  // |D(P||Q^t) - D(P||Q^{t+1}) - gain_p - gain_q|
};

/// Lifted decomposition of the gain of a simultaneous step. A pair_t1 not
/// produced from pair_t shows up as a large residual.
GainComponents gain_components(const ProbMatrix& p, const FactorPair& pair_t, const FactorPair& pair_t1);

/// Gain decomposition of a sequential step. `half` is (qminus^{t+1}, qplus^t).
/// Each half step splits as D(P^a || P^b) plus a Q-side term; the Q-side term
/// of the second half is weighted by the column masses of P*(half).
GainComponents sequential_gain_components(const ProbMatrix& p, const FactorPair& pair_t,
                                          const FactorPair& half, const FactorPair& pair_t1);

/// Number of columns of qminus with sum above kDeadColumnTol.
std::size_t effective_inner_size(const FactorPair& pair);

/// State handed to a solve observer after each step.
struct StepView {
  const ProbMatrix& p;
  const FactorPair& before;
  const FactorPair& after;
  const IterationRecord& record;
};

/// Returning false stops the run with status aborted.
using StepObserver = std::function<bool(const StepView&)>;

/// Alternating minimization from the configured initial pair until the
/// relative gain drops to tol_gain or max_iters steps have run.
/// Throws DegenerateInputError for an all-zero V and DomainError for an
/// invalid config. With underflow_guard off, an underflow propagates as
/// UnderflowError instead of ending the run with status underflow.
SolveResult solve(const NonnegMatrix& v, const SolverConfig& config, const StepObserver& observer = {});

/// Same as solve, starting from a caller-supplied normalized pair.
SolveResult solve_from(const NonnegMatrix& v, const FactorPair& start, const SolverConfig& config,
                       const StepObserver& observer = {});

}  // namespace idivnmf
