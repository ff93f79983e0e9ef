#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "mcperm/bernoulli.hpp"
#include "mcperm/binomial.hpp"
#include "mcperm/engine.hpp"
#include "mcperm/errors.hpp"
#include "mcperm/simulation.hpp"
#include "mcperm/threshold.hpp"

namespace py = pybind11;
using namespace mcperm;

namespace {

// Levels arrive as "1/20", "0.05" or a float; strings keep the exact fraction.
using LevelArg = std::variant<std::string, double>;

Level to_level(const LevelArg& arg) {
  if (const auto* text = std::get_if<std::string>(&arg)) return Level::parse(*text);
  return Level(std::get<double>(arg));
}

PointSet to_points(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return PointSet();
  const std::size_t dim = rows.front().size();
  std::vector<double> flat;
  flat.reserve(rows.size() * dim);
  for (const auto& row : rows) {
    if (row.size() != dim) throw ValidationError("all points need the same dimension");
    flat.insert(flat.end(), row.begin(), row.end());
  }
  return PointSet(dim, std::move(flat));
}

StatisticSpec make_spec(const std::string& statistic, const std::string& bandwidth,
                        const std::string& sides) {
  StatisticSpec spec;
  spec.kind = parse_statistic_kind(statistic);
  spec.bandwidth = BandwidthRule::parse(bandwidth);
  if (sides == "one") {
    spec.sides = Sidedness::OneSided;
  } else if (sides == "two") {
    spec.sides = Sidedness::TwoSided;
  } else {
    throw ValidationError("sides must be 'one' or 'two'");
  }
  return spec;
}

py::dict outcome_dict(const TestOutcome& o, const Level& alpha) {
  py::dict d;
  d["statistic"] = o.observed_statistic;
  d["budget"] = o.budget;
  d["exceedances"] = o.exceedance_count;
  d["ties"] = o.tie_count;
  d["p_value"] = o.p_value;
  d["randomized_p_value"] = o.randomized_p_value;
  d["uniform_draw"] = o.uniform_draw;
  d["reject"] = rejects(o, alpha);
  d["reject_randomized"] = rejects_randomized(o, alpha);
  return d;
}

py::dict estimate_dict(const PowerEstimate& e, std::int64_t n_sim) {
  py::dict d;
  d["budget"] = e.budget;
  d["power"] = e.power;
  d["std_error"] = e.std_error;
  d["randomized_power"] = e.randomized_power;
  d["randomized_std_error"] = e.randomized_std_error;
  d["rejections"] = e.rejections;
  d["n_sim"] = n_sim;
  return d;
}

Scenario scenario_from_text(const std::string& text) {
  std::istringstream in(text);
  return parse_scenario(in);
}

}  // namespace

PYBIND11_MODULE(_mcperm, m) {
  m.doc() = "Monte Carlo permutation tests with budget-aware power analysis";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
  py::register_exception<UnsupportedRangeError>(m, "UnsupportedRangeError", PyExc_ValueError);
  py::register_exception<CapacityError>(m, "CapacityError", PyExc_RuntimeError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<ReplicationError>(m, "ReplicationError", PyExc_RuntimeError);

  m.def("critical_count", [](std::int64_t budget, const LevelArg& alpha) {
    return critical_count(budget, to_level(alpha));
  }, py::arg("budget"), py::arg("alpha"), "k_B = floor((B+1) alpha) - 1");
  m.def("step_type", [](std::int64_t budget, const LevelArg& alpha) {
    return std::string(to_string(step_type(budget, to_level(alpha))));
  }, py::arg("budget"), py::arg("alpha"));
  m.def("is_local_max_index", [](std::int64_t budget, const LevelArg& alpha) {
    return is_local_max_index(budget, to_level(alpha));
  }, py::arg("budget"), py::arg("alpha"));
  m.def("aligned_budgets", [](const LevelArg& alpha, std::int64_t max_budget) {
    return aligned_budgets(to_level(alpha), max_budget);
  }, py::arg("alpha"), py::arg("max_budget"));
  m.def("next_aligned_budget", [](const LevelArg& alpha, std::int64_t min_budget) {
    return next_aligned_budget(to_level(alpha), min_budget);
  }, py::arg("alpha"), py::arg("min_budget"));

  m.def("binomial_cdf", [](std::int64_t k, std::int64_t trials, double p) {
    return binomial_cdf(k, BinomialLaw(trials, p));
  }, py::arg("k"), py::arg("trials"), py::arg("p"));
  m.def("binomial_pmf", [](std::int64_t k, std::int64_t trials, double p) {
    return binomial_pmf(k, BinomialLaw(trials, p));
  }, py::arg("k"), py::arg("trials"), py::arg("p"));
  m.def("regularized_incomplete_beta", &regularized_incomplete_beta, py::arg("a"), py::arg("b"),
        py::arg("x"));
  m.def("decrease_bound", &decrease_bound, py::arg("budget"), py::arg("alpha"));

  m.def("exceedance_prob", &exceedance_prob, py::arg("n"), py::arg("s"));
  m.def("rejection_threshold", [](std::int64_t n, double p1, const LevelArg& alpha) {
    return rejection_threshold(BernoulliDesign(n, p1, to_level(alpha))).min_successes;
  }, py::arg("n"), py::arg("p1"), py::arg("alpha"));
  m.def("exact_power", [](std::int64_t n, double p1, const LevelArg& alpha) {
    return exact_power(BernoulliDesign(n, p1, to_level(alpha)));
  }, py::arg("n"), py::arg("p1"), py::arg("alpha"));
  m.def("mc_power", [](std::int64_t n, double p1, const LevelArg& alpha, std::int64_t budget) {
    return mc_power_closed_form(BernoulliDesign(n, p1, to_level(alpha)), budget);
  }, py::arg("n"), py::arg("p1"), py::arg("alpha"), py::arg("budget"));
  m.def("power_curve", [](std::int64_t n, double p1, const LevelArg& alpha, std::int64_t first,
                          std::int64_t last, std::int64_t stride, unsigned workers) {
    const PowerCurve curve =
        power_curve(BernoulliDesign(n, p1, to_level(alpha)), first, last, stride, workers);
    std::vector<std::pair<std::int64_t, double>> out;
    out.reserve(curve.points.size());
    for (const auto& p : curve.points) out.emplace_back(p.budget, p.power);
    return out;
  }, py::arg("n"), py::arg("p1"), py::arg("alpha"), py::arg("first"), py::arg("last"),
     py::arg("stride") = 1, py::arg("workers") = 0,
     "List of (B, Pow(B)) on the grid plus every aligned budget in range");

  m.def("permutation_test",
        [](const std::vector<std::vector<double>>& x, const std::vector<std::vector<double>>& y,
           std::int64_t budget, std::uint64_t seed, const LevelArg& alpha,
           const std::string& statistic, const std::string& bandwidth, const std::string& sides) {
          const Level level = to_level(alpha);
          const auto problem =
              PermutationProblem::two_sample(to_points(x), to_points(y), make_spec(statistic, bandwidth, sides));
          TestOutcome outcome;
          {
            py::gil_scoped_release release;
            outcome = randomized_p_value(problem, budget, seed);
          }
          return outcome_dict(outcome, level);
        },
        py::arg("x"), py::arg("y"), py::arg("budget"), py::arg("seed"), py::arg("alpha") = "1/20",
        py::arg("statistic") = "mean_diff", py::arg("bandwidth") = "median", py::arg("sides") = "one",
        "Two-sample Monte Carlo permutation test; x and y are lists of points");

  m.def("scenario_defaults", [](const std::string& name, bool null_variant) {
    return format_scenario(Scenario::defaults(parse_scenario_id(name), null_variant));
  }, py::arg("name"), py::arg("null") = false, "Scenario file text with the default parameters");

  m.def("simulate",
        [](const std::string& scenario_text, const LevelArg& alpha,
           const std::vector<std::int64_t>& budgets, std::int64_t n_sim, std::uint64_t seed,
           unsigned workers) {
          const Scenario scenario = scenario_from_text(scenario_text);
          const Level level = to_level(alpha);
          SimulationReport report;
          {
            py::gil_scoped_release release;
            report = power_sweep(scenario, level, budgets, n_sim, seed, {workers});
          }
          py::list rows;
          for (const auto& e : report.estimates) rows.append(estimate_dict(e, n_sim));
          return rows;
        },
        py::arg("scenario"), py::arg("alpha"), py::arg("budgets"), py::arg("n_sim"),
        py::arg("seed"), py::arg("workers") = 0,
        "Power estimates per budget for a scenario given as key = value text");
}
