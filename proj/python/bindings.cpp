#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "idivnmf/core.hpp"
#include "idivnmf/diagnostics.hpp"
#include "idivnmf/lifted.hpp"
#include "idivnmf/solver.hpp"

namespace py = pybind11;
using namespace idivnmf;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw DimensionError("expected a 2-d array");
  const auto r = static_cast<std::size_t>(a.shape(0));
  const auto c = static_cast<std::size_t>(a.shape(1));
  return Matrix(r, c, std::vector<double>(a.data(), a.data() + r * c));
}

NonnegMatrix to_nonneg(const Array& a) { return NonnegMatrix(to_matrix(a)); }

ProbMatrix to_prob(const Array& a) { return ProbMatrix(to_nonneg(a), kIngestedSumTol); }

FactorPair to_pair(const Array& qminus, const Array& qplus) {
  return FactorPair(to_nonneg(qminus), to_nonneg(qplus));
}

Array from_values(std::vector<py::ssize_t> shape, std::span<const double> v) {
  Array out(shape);
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

Array from_matrix(const Matrix& m) {
  return from_values({static_cast<py::ssize_t>(m.rows()), static_cast<py::ssize_t>(m.cols())}, m.values());
}

Array from_matrix(const NonnegMatrix& m) { return from_matrix(m.matrix()); }

LiftedTensor to_tensor(const Array& a) {
  if (a.ndim() != 3) throw DimensionError("expected a 3-d array");
  const auto m = static_cast<std::size_t>(a.shape(0));
  const auto k = static_cast<std::size_t>(a.shape(1));
  const auto n = static_cast<std::size_t>(a.shape(2));
  return LiftedTensor(m, k, n, std::vector<double>(a.data(), a.data() + m * k * n));
}

Array from_tensor(const LiftedTensor& t) {
  return from_values({static_cast<py::ssize_t>(t.m()), static_cast<py::ssize_t>(t.k()),
                      static_cast<py::ssize_t>(t.n())},
                     t.values());
}

py::tuple from_pair(const FactorPair& p) { return py::make_tuple(from_matrix(p.qminus()), from_matrix(p.qplus())); }

py::dict from_check(const PythagoreanCheck& c) {
  py::dict d;
  d["lhs"] = c.lhs;
  d["first"] = c.first;
  d["second"] = c.second;
  d["residual"] = c.residual;
  d["collapse_residual"] = c.collapse_residual;
  d["holds"] = c.status == IdentityStatus::holds;
  return d;
}

py::dict solve_py(const Array& v, std::size_t k, const std::string& variant, const std::string& init,
                  std::uint64_t seed, std::size_t max_iters, double tol, bool components) {
  SolverConfig cfg;
  cfg.inner_size = k;
  cfg.max_iters = max_iters;
  cfg.tol_gain = tol;
  const auto var = parse_variant(variant);
  const auto ini = parse_init(init);
  if (!var) throw py::value_error("unknown variant: " + variant);
  if (!ini) throw py::value_error("unknown init: " + init);
  cfg.variant = *var;
  cfg.init = *ini;
  cfg.seed = seed;
  cfg.record_components = components;

  const NonnegMatrix vm = to_nonneg(v);
  SolveResult r = [&] {
    py::gil_scoped_release release;
    return solve(vm, cfg);
  }();
  const Factorization f = denormalize_solution(r.pair, r.total);

  py::list trace;
  for (const auto& rec : r.trace) {
    py::dict d;
    d["iter"] = rec.iter;
    d["divergence"] = rec.divergence;
    d["gain"] = rec.gain;
    if (rec.gain_p) {
      d["gain_p"] = *rec.gain_p;
      d["gain_q"] = *rec.gain_q;
      d["gain_residual"] = *rec.gain_residual;
    }
    trace.append(d);
  }
  py::dict out;
  out["W"] = from_matrix(f.w);
  out["H"] = from_matrix(f.h);
  out["qminus"] = from_matrix(r.pair.qminus());
  out["qplus"] = from_matrix(r.pair.qplus());
  out["status"] = std::string(to_string(r.status));
  out["final_divergence"] = r.final_divergence.value();
  out["effective_inner_size"] = r.effective_inner_size;
  out["total"] = r.total;
  out["trace"] = trace;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "I-divergence nonnegative matrix factorization by alternating minimization";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<DegenerateInputError>(m, "DegenerateInputError", PyExc_ValueError);
  py::register_exception<UnderflowError>(m, "UnderflowError", PyExc_ArithmeticError);
  py::register_exception<GradientUndefinedError>(m, "GradientUndefinedError", PyExc_ArithmeticError);

  m.def("i_div_scalar", [](double p, double q) { return i_div_scalar(p, q).value(); });
  m.def("i_div", [](const Array& a, const Array& b) {
    if (a.ndim() == 3) return i_div_tensor(to_tensor(a), to_tensor(b)).value();
    return i_div_matrix(to_nonneg(a), to_nonneg(b)).value();
  }, "I-divergence of two nonnegative matrices or m x k x n tensors; inf allowed.");
  m.def("hellinger", [](const Array& a, const Array& b) { return hellinger_tensor(to_tensor(a), to_tensor(b)); });

  m.def("normalize", [](const Array& v) {
    const ScaledProblem sp = normalize_problem(to_nonneg(v));
    return py::make_tuple(from_matrix(sp.p.inner()), sp.total);
  }, "Returns (P, total) with P = V / total.");

  m.def("init_deterministic", [](const Array& v, std::size_t k) { return from_pair(init_deterministic(to_nonneg(v), k)); });
  m.def("init_random", [](const Array& v, std::size_t k, std::uint64_t seed) {
    return from_pair(init_random(to_nonneg(v), k, seed));
  }, py::arg("v"), py::arg("k"), py::arg("seed") = 0);

  m.def("step_simultaneous", [](const Array& p, const Array& qm, const Array& qp) {
    return from_pair(step_simultaneous(to_prob(p), to_pair(qm, qp)));
  });
  m.def("step_sequential", [](const Array& p, const Array& qm, const Array& qp) {
    return from_pair(step_sequential(to_prob(p), to_pair(qm, qp)));
  });
  m.def("step_unnormalized", [](const Array& v, const Array& w, const Array& h) {
    const Factorization f = step_unnormalized(to_nonneg(v), to_nonneg(w), to_nonneg(h));
    return py::make_tuple(from_matrix(f.w), from_matrix(f.h));
  });

  m.def("solve", &solve_py, py::arg("v"), py::arg("k"), py::arg("variant") = "simultaneous",
        py::arg("init") = "deterministic", py::arg("seed") = 0, py::arg("max_iters") = 1000,
        py::arg("tol") = 1e-10, py::arg("components") = false);

  m.def("tensor_from_pair", [](const Array& qm, const Array& qp) { return from_tensor(tensor_from_pair(to_pair(qm, qp))); });
  m.def("collapse", [](const Array& t) { return from_matrix(collapse(to_tensor(t))); });
  m.def("best_p_tensor", [](const Array& p, const Array& q) { return from_tensor(best_p_tensor(to_prob(p), to_tensor(q))); });
  m.def("best_q_pair", [](const Array& t) { return from_pair(best_q_pair(to_tensor(t))); });
  m.def("check_pythagorean_p", [](const Array& p, const Array& tp, const Array& q) {
    return from_check(check_pythagorean_P(to_prob(p), to_tensor(tp), to_tensor(q)));
  });
  m.def("check_pythagorean_q", [](const Array& tp, const Array& q) {
    return from_check(check_pythagorean_Q(to_tensor(tp), to_tensor(q)));
  });

  m.def("grad", [](const Array& p, const Array& qm, const Array& qp) {
    const Gradient g = grad(to_prob(p), to_pair(qm, qp));
    return py::make_tuple(from_matrix(g.qminus), from_matrix(g.qplus));
  });
  m.def("kkt_report", [](const Array& p, const Array& qm, const Array& qp, double tol) {
    const KktReport r = kkt_report(to_prob(p), to_pair(qm, qp), tol);
    py::dict d;
    d["max_complementarity"] = r.max_complementarity;
    d["min_zero_gradient"] = r.min_zero_gradient;
    d["dead_columns"] = r.dead_columns;
    d["satisfied"] = r.satisfied;
    return d;
  }, py::arg("p"), py::arg("qminus"), py::arg("qplus"), py::arg("tol") = 1e-6);
  m.def("aux_gain_identities", [](const Array& p, const Array& qm, const Array& qp) {
    const AuxGainIdentities a = aux_gain_identities(to_prob(p), to_pair(qm, qp));
    py::dict d;
    d["minus_residual"] = a.minus_residual;
    d["plus_residual"] = a.plus_residual;
    d["joint_residual"] = a.joint_residual;
    d["gain_residual"] = a.gain_residual;
    return d;
  });
}
