#include "bayesdes/assess.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace bayesdes {

double relative_d_efficiency(double u1, double u2, Index p) {
  if (p < 1) throw std::invalid_argument("relative D-efficiency needs p >= 1");
  if (!std::isfinite(u1) || !std::isfinite(u2))
    throw std::invalid_argument("relative D-efficiency needs finite utilities");
  return 100.0 * std::exp((u1 - u2) / static_cast<double>(p));
}

double relative_a_efficiency(double u1, double u2) {
  if (!std::isfinite(u1) || !std::isfinite(u2) || u1 == 0.0)
    throw std::invalid_argument("relative A-efficiency needs finite, nonzero utilities");
  return 100.0 * u2 / u1;
}

AssessmentReport assess(const UtilityEvaluator& u, const Design& d1, const Design& d2, Index B,
                        int n_assess, Rng& rng, const std::string& criterion, EfficiencyKind kind,
                        Index p) {
  if (d1.factors() != d2.factors())
    throw std::invalid_argument("assessed designs must have the same number of factors");
  AssessmentReport r;
  r.criterion = criterion;
  r.deterministic = u.is_deterministic();
  r.design1 = assess_design(u, d1, B, n_assess, rng);
  r.design2 = assess_design(u, d2, B, n_assess, rng);
  if (kind == EfficiencyKind::D)
    r.relative_efficiency = relative_d_efficiency(r.design1.mean, r.design2.mean, p);
  else if (kind == EfficiencyKind::A)
    r.relative_efficiency = relative_a_efficiency(r.design1.mean, r.design2.mean);
  return r;
}

namespace {

std::string num(double x) {
  std::ostringstream os;
  os.precision(7);
  os << x;
  return os.str();
}

}  // namespace

std::string format_report(const AssessmentReport& r) {
  std::ostringstream os;
  const Assessment* designs[] = {&r.design1, &r.design2};
  for (int k = 0; k < 2; ++k) {
    if (r.deterministic)
      os << "Approximate expected utility of d" << k + 1 << " = " << num(designs[k]->mean) << '\n';
    else
      os << "Mean (sd) approximate expected utility of d" << k + 1 << " = " << num(designs[k]->mean)
         << " (" << num(designs[k]->sd) << ")\n";
  }
  if (r.relative_efficiency) {
    const char* label = r.criterion == "A" ? "A" : "D";
    os << "Approximate relative " << label << "-efficiency = " << num(*r.relative_efficiency) << '\n';
  }
  return os.str();
}

}  // namespace bayesdes
