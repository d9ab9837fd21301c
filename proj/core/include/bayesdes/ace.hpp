#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bayesdes/design.hpp"
#include "bayesdes/rng.hpp"
#include "bayesdes/utility.hpp"

namespace bayesdes {

/// Engine settings. Deterministic versus stochastic mode follows the utility evaluator.
struct AceSettings {
  Index B_compare = 20000;  // draws per design in each acceptance test and assessment
  Index B_emulate = 1000;   // draws per emulator training point
  int Q = 20;
  int N1 = 20;
  int N2 = 100;
  bool binary = false;  // proportions test instead of the t-test
  std::uint64_t seed = 1;
  std::size_t grid_size = kDefaultGridSize;

  /// Throws std::invalid_argument naming the first bad field.
  void validate() const;
};

struct AcceptanceDecision {
  double p_star = 0.5;
  bool accepted = false;
};

/// Posterior probability that the proposed mean exceeds the current one: upper tail of a
/// location-scale t with Welch scale and Welch-Satterthwaite degrees of freedom.
double ttest_p_star(const Eigen::VectorXd& current, const Eigen::VectorXd& proposed);
AcceptanceDecision accept_ttest(const Eigen::VectorXd& current, const Eigen::VectorXd& proposed,
                                Rng& rng);

inline constexpr int kProportionDraws = 100000;

/// P(p_proposed > p_current) under independent Beta(1, 1) priors, by paired posterior draws.
double proportions_p_star(const Eigen::VectorXd& current, const Eigen::VectorXd& proposed,
                          Rng& rng);
AcceptanceDecision accept_proportions(const Eigen::VectorXd& current,
                                      const Eigen::VectorXd& proposed, Rng& rng);

struct TracePoint {
  int phase = 1;
  int iteration = 0;
  double expected_utility = 0.0;
};

struct PhaseCounts {
  long long proposals = 0;
  long long accepted = 0;
  long long emulator_failures = 0;

  double acceptance_rate() const {
    return proposals == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposals);
  }
};

struct AceResult {
  Design start;
  Design phase1_design;
  Design phase2_design;
  std::vector<TracePoint> phase1_trace;  // iteration 0 is the start design
  std::vector<TracePoint> phase2_trace;  // iteration 0 is the phase I design
  double phase1_seconds = 0.0;
  double phase2_seconds = 0.0;
  PhaseCounts phase1_counts;
  PhaseCounts phase2_counts;
};

/// Emulator-driven coordinate exchange. Fills the phase I fields of `out`.
void phase1(const UtilityEvaluator& u, const Design& start, const DesignSpace& space,
            const AceSettings& s, Rng& rng, AceResult& out);

/// Point exchange over the design's own rows. Fills the phase II fields of `out`.
void phase2(const UtilityEvaluator& u, const Design& d_in, const DesignSpace& space,
            const AceSettings& s, Rng& rng, AceResult& out);

AceResult ace(const UtilityEvaluator& u, const Design& start, const DesignSpace& space,
              const AceSettings& s, Rng& rng);

struct Assessment {
  double mean = 0.0;
  double sd = 0.0;              // zero in deterministic mode
  std::vector<double> values;  // one per assessment batch
};

/// Stochastic: n_assess independent B_compare-draw means. Deterministic: one evaluation.
Assessment assess_design(const UtilityEvaluator& u, const Design& d, Index B, int n_assess,
                         Rng& rng);

struct PaceResult {
  std::vector<AceResult> repetitions;
  std::vector<Assessment> assessed;
  std::vector<std::string> errors;  // empty string for a successful repetition
  Index best_index = -1;
  Design best_design;

  bool failed(Index r) const { return !errors[static_cast<std::size_t>(r)].empty(); }
};

/// Independent ACE repetitions on substreams (seed, r), each assessed on its own
/// substream; the best assessed design wins with ties going to the smallest index.
/// Throws bayesdes::Error only when every repetition fails.
PaceResult pace(const UtilityEvaluator& u, const std::vector<Design>& starts,
                const DesignSpace& space, const AceSettings& s, int threads = 1,
                int n_assess = 20);

/// Rng stream used for repetition r of a pace run.
Rng repetition_stream(std::uint64_t seed, Index r);

/// CSV with columns phase,iteration,expected_utility.
void write_trace_csv(std::ostream& os, const AceResult& r);
void write_trace_csv(const std::string& path, const AceResult& r);

}  // namespace bayesdes
