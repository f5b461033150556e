#pragma once

#include <string>
#include <vector>

namespace optneq {

enum class ScheduleMode { PushPull, Dsgt };

std::string to_string(ScheduleMode mode);

/// gamma_k = gamma_hat/(k+Gamma)^a, lambda_k = lambda/(k+Gamma)^b.
struct ScheduleParams {
  double gamma_hat = 1.0;
  double lambda = 1.0;
  double offset = 10.0;  ///< Gamma
  double a = 0.5;
  double b = 0.3;
  ScheduleMode mode = ScheduleMode::PushPull;

  bool operator==(const ScheduleParams&) const = default;
};

struct ScheduleValues {
  double gamma;
  double lambda;
  /// |1 - lambda_{k+1}/lambda_k|
  double lambda_change;
};

ScheduleValues schedule_at(const ScheduleParams& p, long k);

struct ScheduleCheck {
  std::string condition;
  double lhs;
  double rhs;
  bool pass;
};

struct ScheduleReport {
  std::vector<ScheduleCheck> checks;
  std::vector<std::string> notes;
  bool pass() const;
};

/// Exponent conditions for the chosen mode and Gamma >= 1. The lower bounds on
/// Gamma that depend on unknown analysis constants are reported as notes only.
ScheduleReport validate_schedule(const ScheduleParams& p);

}  // namespace optneq
