#include "optneq/schedule.hpp"

#include <algorithm>
#include <cmath>

namespace optneq {

std::string to_string(ScheduleMode mode) {
  return mode == ScheduleMode::PushPull ? "PushPull" : "Dsgt";
}

ScheduleValues schedule_at(const ScheduleParams& p, long k) {
  const double t = static_cast<double>(k) + p.offset;
  ScheduleValues s;
  s.gamma = p.gamma_hat / std::pow(t, p.a);
  s.lambda = p.lambda / std::pow(t, p.b);
  // 1 - (t/(t+1))^b evaluated without cancellation.
  s.lambda_change = -std::expm1(p.b * std::log1p(-1.0 / (t + 1.0)));
  return s;
}

bool ScheduleReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
}

ScheduleReport validate_schedule(const ScheduleParams& p) {
  ScheduleReport r;
  auto less = [&r](std::string cond, double lhs, double rhs) {
    r.checks.push_back({std::move(cond), lhs, rhs, lhs < rhs});
  };
  less("0 < b", 0.0, p.b);
  less("b < a", p.b, p.a);
  less("a < 1", p.a, 1.0);
  if (p.mode == ScheduleMode::PushPull) {
    less("a + b < 1", p.a + p.b, 1.0);
    less("2a + 3b < 2", 2.0 * p.a + 3.0 * p.b, 2.0);
  } else {
    less("3a + b < 2", 3.0 * p.a + p.b, 2.0);
  }
  r.checks.push_back({"Gamma >= 1", p.offset, 1.0, p.offset >= 1.0});
  less("0 < gamma_hat", 0.0, p.gamma_hat);
  less("0 < lambda", 0.0, p.lambda);
  r.notes.push_back(
      "lower bounds on Gamma involving strong-convexity and mixing-norm constants are not "
      "computable and are not enforced");
  return r;
}

}  // namespace optneq
