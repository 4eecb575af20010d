#include "idivnmf/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "idivnmf/diagnostics.hpp"

namespace idivnmf::cli {

using nlohmann::json;

ParseError::ParseError(std::size_t line, const std::string& what)
    : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

ValidationError::ValidationError(std::size_t row, std::size_t col, const std::string& what)
    : Error("entry (" + std::to_string(row) + "," + std::to_string(col) + "): " + what), row_(row), col_(col) {}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

NonnegMatrix parse_matrix(std::string_view text) {
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string_view line = trim(text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos));
    ++line_no;
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    if (line.empty()) continue;

    std::size_t count = 0;
    std::size_t fpos = 0;
    while (true) {
      const auto comma = line.find(',', fpos);
      const std::string_view field = trim(line.substr(fpos, comma == line.npos ? line.npos : comma - fpos));
      ++count;
      double x = 0.0;
      const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), x);
      if (field.empty() || ec != std::errc() || end != field.data() + field.size()) {
        throw ParseError(line_no, "field " + std::to_string(count) + " is not a number: '" +
                                      std::string(field) + "'");
      }
      if (!std::isfinite(x) || x < 0.0) {
        throw ValidationError(rows + 1, count, "value must be finite and nonnegative");
      }
      values.push_back(x);
      if (comma == line.npos) break;
      fpos = comma + 1;
    }
    if (rows == 0) {
      cols = count;
    } else if (count != cols) {
      throw ParseError(line_no, "expected " + std::to_string(cols) + " fields, found " + std::to_string(count));
    }
    ++rows;
  }
  if (rows == 0) throw ParseError(line_no, "no matrix rows found");
  return NonnegMatrix(rows, cols, std::move(values));
}

NonnegMatrix ingest_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_matrix(buf.str());
}

std::string format_double(double x) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, end);
}

std::string format_matrix(const NonnegMatrix& m) {
  std::string out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + tmp.string());
    f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!f) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

namespace {

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

std::string trace_line(const IterationRecord& rec) {
  json j = json::object();
  j["iter"] = rec.iter;
  j["divergence"] = finite_or_null(rec.divergence);
  j["gain"] = finite_or_null(rec.gain);
  if (rec.gain_p) {
    j["gain_p"] = finite_or_null(*rec.gain_p);
    j["gain_q"] = finite_or_null(*rec.gain_q);
    j["gain_residual"] = finite_or_null(*rec.gain_residual);
  }
  return j.dump() + "\n";
}

namespace {

struct Options {
  std::string input;
  std::size_t k = 0;
  std::string variant = "simultaneous";
  std::string init = "deterministic";
  std::uint64_t seed = 0;
  std::size_t max_iters = 1000;
  double tol = 1e-10;
  std::string trace;
  std::string out_dir = ".";
  bool components = false;
  bool kkt = false;
  double kkt_tol = 1e-6;
  bool check_identities = false;
};

json config_echo(const Options& o, const SolverConfig& cfg) {
  json j = json::object();
  j["input"] = o.input;
  j["k"] = cfg.inner_size;
  j["variant"] = std::string(to_string(cfg.variant));
  j["init"] = std::string(to_string(cfg.init));
  j["seed"] = cfg.seed;
  j["max_iters"] = cfg.max_iters;
  j["tol"] = cfg.tol_gain;
  j["components"] = o.components;
  j["check_identities"] = o.check_identities;
  j["underflow_guard"] = cfg.underflow_guard;
  return j;
}

int exit_code_for(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return kConverged;
    case SolveStatus::max_iters: return kMaxIters;
    case SolveStatus::underflow: return kUnderflow;
    case SolveStatus::degenerate_input: return kInputError;
    case SolveStatus::aborted: return kIdentityViolation;
  }
  return kInputError;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"I-divergence nonnegative matrix factorization by alternating minimization", "idivnmf"};
  app.add_option("--input", o.input, "CSV matrix to factor")->required();
  app.add_option("--k", o.k, "inner size")->required();
  app.add_option("--variant", o.variant, "simultaneous | sequential | unnormalized")
      ->check(CLI::IsMember({"simultaneous", "sequential", "unnormalized"}));
  app.add_option("--init", o.init, "deterministic | random")->check(CLI::IsMember({"deterministic", "random"}));
  app.add_option("--seed", o.seed, "seed for --init random");
  app.add_option("--max-iters", o.max_iters, "iteration cap");
  app.add_option("--tol", o.tol, "relative gain threshold");
  app.add_option("--trace", o.trace, "write a JSON Lines trace to this path");
  app.add_option("--out-dir", o.out_dir, "directory for W.csv, H.csv and manifest.json");
  app.add_flag("--components", o.components, "record the lifted gain components");
  app.add_flag("--kkt", o.kkt, "append a stationarity report to the manifest");
  app.add_option("--kkt-tol", o.kkt_tol, "tolerance of the stationarity report");
  app.add_flag("--check-identities", o.check_identities, "verify the lifted identities after every step");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kConverged;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kInputError;
  }

  if (o.k < 1) {
    err << "usage error: --k must be a positive integer\n";
    return kInputError;
  }
  if (o.max_iters < 1 || !(o.tol > 0.0) || !(o.kkt_tol > 0.0)) {
    err << "usage error: --max-iters, --tol and --kkt-tol must be positive\n";
    return kInputError;
  }

  SolverConfig cfg;
  cfg.inner_size = o.k;
  cfg.max_iters = o.max_iters;
  cfg.tol_gain = o.tol;
  cfg.variant = *parse_variant(o.variant);
  cfg.init = *parse_init(o.init);
  cfg.seed = o.seed;
  cfg.record_components = o.components;

  const std::filesystem::path out_dir(o.out_dir);
  json manifest = config_echo(o, cfg);

  std::optional<NonnegMatrix> v;
  try {
    v = ingest_matrix(o.input);
    std::filesystem::create_directories(out_dir);
  } catch (const std::exception& e) {
    err << "input error: " << e.what() << "\n";
    return kInputError;
  }

  std::string trace_text;
  std::string violation;
  const StepObserver observer = [&](const StepView& step) {
    if (!o.trace.empty()) trace_text += trace_line(step.record);
    if (o.check_identities) {
      const auto bad = check_step_identities(step.p, step.before, step.after);
      if (!bad.empty()) {
        std::ostringstream os;
        for (const auto& b : bad) {
          os << "identity violation at iter " << step.record.iter << ": " << b.name << " residual "
             << format_double(b.residual) << " > " << format_double(b.bound) << "\n";
        }
        violation = os.str();
        return false;
      }
    }
    return true;
  };

  const auto started = std::chrono::steady_clock::now();
  std::optional<SolveResult> result;
  try {
    result = solve(*v, cfg, observer);
  } catch (const DegenerateInputError& e) {
    err << "input error: " << e.what() << "\n";
    manifest["status"] = std::string(to_string(SolveStatus::degenerate_input));
    write_file_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");
    return kInputError;
  } catch (const Error& e) {
    err << "input error: " << e.what() << "\n";
    return kInputError;
  }
  const auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started);

  if (!violation.empty()) err << violation;

  const Factorization f = denormalize_solution(result->pair, result->total);
  write_file_atomic(out_dir / "W.csv", format_matrix(f.w));
  write_file_atomic(out_dir / "H.csv", format_matrix(f.h));
  if (!o.trace.empty()) write_file_atomic(o.trace, trace_text);

  manifest["total"] = result->total;
  manifest["status"] = std::string(to_string(result->status));
  manifest["final_divergence"] = finite_or_null(result->final_divergence.value());
  manifest["effective_inner_size"] = result->effective_inner_size;
  manifest["iterations"] = result->trace.size();
  manifest["wall_time_ms"] = elapsed.count();
  if (o.kkt) {
    const ScaledProblem sp = normalize_problem(*v);
    json kkt = json::object();
    try {
      const KktReport rep = kkt_report(sp.p, result->pair, o.kkt_tol);
      kkt["tol"] = o.kkt_tol;
      kkt["max_complementarity"] = rep.max_complementarity;
      kkt["min_zero_gradient"] = finite_or_null(rep.min_zero_gradient);
      kkt["dead_columns"] = rep.dead_columns;
      kkt["satisfied"] = rep.satisfied;
    } catch (const Error& e) {
      kkt["error"] = e.what();
    }
    manifest["kkt"] = kkt;
  }
  write_file_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");

  out << to_string(result->status) << " after " << result->trace.size() << " iterations, divergence "
      << format_double(result->final_divergence.value()) << "\n";
  return exit_code_for(result->status);
}

}  // namespace idivnmf::cli
