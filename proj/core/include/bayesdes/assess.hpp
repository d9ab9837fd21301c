#pragma once

#include <optional>
#include <string>

#include "bayesdes/ace.hpp"
#include "bayesdes/design.hpp"
#include "bayesdes/utility.hpp"

namespace bayesdes {

/// 100 exp((U1 - U2) / p).
double relative_d_efficiency(double u1, double u2, Index p);
/// 100 U2 / U1 for negative-trace A-criterion values.
double relative_a_efficiency(double u1, double u2);

enum class EfficiencyKind { None, D, A };

struct AssessmentReport {
  std::string criterion;
  bool deterministic = false;
  Assessment design1;
  Assessment design2;
  std::optional<double> relative_efficiency;  // present for the D and A criteria only
};

/// Re-estimates the expected utility of both designs; for the D and A criteria also the
/// relative efficiency of d1 against d2 (p is the parameter count used by D).
AssessmentReport assess(const UtilityEvaluator& u, const Design& d1, const Design& d2, Index B,
                        int n_assess, Rng& rng, const std::string& criterion = "custom",
                        EfficiencyKind kind = EfficiencyKind::None, Index p = 0);

/// Console lines: "Mean (sd) approximate expected utility of d1 = m (s)" for stochastic
/// utilities, "Approximate expected utility of d1 = v" plus the efficiency line otherwise.
std::string format_report(const AssessmentReport& r);

}  // namespace bayesdes
