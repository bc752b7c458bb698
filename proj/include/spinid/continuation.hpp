#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "spinid/bvp.hpp"
#include "spinid/errors.hpp"

namespace spinid {

struct ContinuationSettings {
  double dc0 = 0.1;
  double nu1 = 1.5;        // growth when halving the step did not pay off
  double nu2 = 2.0 / 3.0;  // shrink otherwise
  double mu_div = 2.0;     // divisor after a failed solve
  double dc_min = 1e-4;

  void validate() const;
};

// One attempted step of the homotopy path. Rejected attempts carry the step
// size that failed; accepted ones record the three solve costs and the step
// size proposed for the next step.
struct ContinuationStep {
  double c_from = 0.0;
  double c = 0.0;
  double dc = 0.0;
  bool accepted = false;
  int newton_iterations = 0;
  long rhs_evaluations = 0;
  long cost_full = 0;
  long cost_half1 = 0;
  long cost_half2 = 0;
  double next_dc = 0.0;
};

struct ContinuationTrace {
  std::vector<ContinuationStep> steps;
  bool direct = false;  // solved at c = 1 without continuation

  std::vector<ContinuationStep> accepted() const;
  void write_csv(std::ostream& os) const;
};

class ContinuationFailedError : public SolverError {
 public:
  ContinuationFailedError(const std::string& what, ContinuationTrace trace)
      : SolverError(what), trace_(std::move(trace)) {}
  const ContinuationTrace& trace() const { return trace_; }

 private:
  ContinuationTrace trace_;
};

// Step size after an accepted step: grow by nu1 when the two half steps cost
// more than the full step, shrink by nu2 otherwise.
double next_step_size(const ContinuationSettings& settings, double dc, long cost_full,
                      long cost_half1, long cost_half2);

// Problem family c -> BVP system.
using Family = std::function<bvp::System(double)>;

struct ContinuationResult {
  bvp::Solution solution;
  ContinuationTrace trace;
};

// Advances c from 0 to 1 starting from a solution of the c = 0 member.
ContinuationResult adapter(const Family& family, const bvp::Solution& auxiliary,
                           const ContinuationSettings& settings = {},
                           const bvp::SolverOptions& opts = {});

// Direct solve of the c = 1 member from the warm start (or the auxiliary
// solution); falls back to the adapter on any solver failure.
ContinuationResult solve_with_fallback(const Family& family, const bvp::Solution& auxiliary,
                                       const std::optional<bvp::Solution>& warm_start,
                                       const ContinuationSettings& settings = {},
                                       const bvp::SolverOptions& opts = {});

}  // namespace spinid
