#include "spinid/continuation.hpp"

#include <algorithm>
#include <ostream>

namespace spinid {

void ContinuationSettings::validate() const {
  if (!(dc0 > 0.0 && dc0 <= 1.0)) throw ValidationError("continuation.dc0", "must lie in (0, 1]");
  if (!(nu1 > 1.0)) throw ValidationError("continuation.nu1", "must exceed 1");
  if (!(nu2 > 0.0 && nu2 < 1.0)) throw ValidationError("continuation.nu2", "must lie in (0, 1)");
  if (!(mu_div > 1.0)) throw ValidationError("continuation.mu_div", "must exceed 1");
  if (!(dc_min > 0.0 && dc_min <= dc0)) {
    throw ValidationError("continuation.dc_min", "must lie in (0, dc0]");
  }
}

std::vector<ContinuationStep> ContinuationTrace::accepted() const {
  std::vector<ContinuationStep> out;
  std::copy_if(steps.begin(), steps.end(), std::back_inserter(out),
               [](const ContinuationStep& s) { return s.accepted; });
  return out;
}

void ContinuationTrace::write_csv(std::ostream& os) const {
  os << "c_from,c,dc,accepted,newton_iterations,rhs_evaluations,cost_full,cost_half1,cost_half2,"
        "next_dc\n";
  const auto old = os.precision(17);
  for (const auto& s : steps) {
    os << s.c_from << ',' << s.c << ',' << s.dc << ',' << (s.accepted ? 1 : 0) << ','
       << s.newton_iterations << ',' << s.rhs_evaluations << ',' << s.cost_full << ','
       << s.cost_half1 << ',' << s.cost_half2 << ',' << s.next_dc << '\n';
  }
  os.precision(old);
}

double next_step_size(const ContinuationSettings& settings, double dc, long cost_full,
                      long cost_half1, long cost_half2) {
  return (cost_half1 + cost_half2 > cost_full) ? settings.nu1 * dc : settings.nu2 * dc;
}

namespace {

struct Attempt {
  bvp::Solution solution;
  long cost = 0;
  int newton = 0;
};

std::optional<Attempt> try_solve(const Family& family, double c, const bvp::Solution& guess,
                                 const bvp::SolverOptions& opts) {
  try {
    bvp::Solution sol = bvp::solve(family(c), guess, opts);
    const auto& d = sol.diagnostics();
    return Attempt{sol, d.rhs_evaluations, d.newton_iterations};
  } catch (const SolverError&) {
  } catch (const DomainError&) {
  }
  return std::nullopt;
}

}  // namespace

ContinuationResult adapter(const Family& family, const bvp::Solution& auxiliary,
                           const ContinuationSettings& settings, const bvp::SolverOptions& opts) {
  settings.validate();
  ContinuationTrace trace;
  bvp::Solution y = auxiliary;
  double c = 0.0;
  double dc = settings.dc0;
  while (c < 1.0) {
    dc = std::min(dc, 1.0 - c);
    const double target = (c + dc >= 1.0) ? 1.0 : c + dc;
    ContinuationStep step;
    step.c_from = c;
    step.c = target;
    step.dc = dc;

    auto full = try_solve(family, target, y, opts);
    std::optional<Attempt> half1;
    std::optional<Attempt> half2;
    if (full) half1 = try_solve(family, c + 0.5 * dc, y, opts);
    if (half1) half2 = try_solve(family, target, half1->solution, opts);

    if (!half2) {
      for (const auto* a : {&full, &half1}) {
        if (*a) {
          step.newton_iterations += (*a)->newton;
          step.rhs_evaluations += (*a)->cost;
        }
      }
      trace.steps.push_back(step);
      dc /= settings.mu_div;
      if (dc < settings.dc_min) {
        throw ContinuationFailedError(
            "continuation step size fell below " + std::to_string(settings.dc_min) +
                " at c = " + std::to_string(c),
            std::move(trace));
      }
      continue;
    }

    step.accepted = true;
    step.cost_full = full->cost;
    step.cost_half1 = half1->cost;
    step.cost_half2 = half2->cost;
    step.newton_iterations = full->newton + half1->newton + half2->newton;
    step.rhs_evaluations = full->cost + half1->cost + half2->cost;
    step.next_dc = next_step_size(settings, dc, full->cost, half1->cost, half2->cost);
    trace.steps.push_back(step);
    y = std::move(half2->solution);
    c = target;
    dc = step.next_dc;
  }
  return {std::move(y), std::move(trace)};
}

ContinuationResult solve_with_fallback(const Family& family, const bvp::Solution& auxiliary,
                                       const std::optional<bvp::Solution>& warm_start,
                                       const ContinuationSettings& settings,
                                       const bvp::SolverOptions& opts) {
  if (auto direct = try_solve(family, 1.0, warm_start ? *warm_start : auxiliary, opts)) {
    ContinuationResult out{std::move(direct->solution), {}};
    out.trace.direct = true;
    return out;
  }
  return adapter(family, auxiliary, settings, opts);
}

}  // namespace spinid
