#include "bayesdes/ace.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "bayesdes/errors.hpp"
#include "bayesdes/gp_emulator.hpp"

namespace bayesdes {

void AceSettings::validate() const {
  if (B_compare < 2) throw std::invalid_argument("B: comparison size must be at least 2");
  if (B_emulate < 1) throw std::invalid_argument("B: emulator size must be at least 1");
  if (Q < 3) throw std::invalid_argument("Q must be at least 3");
  if (N1 < 0) throw std::invalid_argument("N1 must be non-negative");
  if (N2 < 0) throw std::invalid_argument("N2 must be non-negative");
  if (grid_size < 2) throw std::invalid_argument("grid_size must be at least 2");
}

namespace {

struct Moments {
  double mean;
  double var;
  double n;
};

Moments moments(const Eigen::VectorXd& v) {
  const double n = static_cast<double>(v.size());
  const double m = v.mean();
  return {m, (v.array() - m).square().sum() / (n - 1.0), n};
}

void check_draws(const Eigen::VectorXd& current, const Eigen::VectorXd& proposed) {
  if (current.size() < 2 || proposed.size() < 2)
    throw std::invalid_argument("acceptance test needs at least two draws per design");
}

}  // namespace

double ttest_p_star(const Eigen::VectorXd& current, const Eigen::VectorXd& proposed) {
  check_draws(current, proposed);
  const Moments a = moments(current);
  const Moments b = moments(proposed);
  const double va = a.var / a.n;
  const double vb = b.var / b.n;
  const double se2 = va + vb;
  const double diff = b.mean - a.mean;
  if (!(se2 > 0.0)) return diff == 0.0 ? 0.5 : (diff > 0.0 ? 1.0 : 0.0);
  const double df = se2 * se2 / (va * va / (a.n - 1.0) + vb * vb / (b.n - 1.0));
  return boost::math::cdf(boost::math::students_t(df), diff / std::sqrt(se2));
}

AcceptanceDecision accept_ttest(const Eigen::VectorXd& current, const Eigen::VectorXd& proposed,
                                Rng& rng) {
  AcceptanceDecision dec;
  dec.p_star = ttest_p_star(current, proposed);
  dec.accepted = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < dec.p_star;
  return dec;
}

double proportions_p_star(const Eigen::VectorXd& current, const Eigen::VectorXd& proposed,
                          Rng& rng) {
  check_draws(current, proposed);
  for (const auto* v : {&current, &proposed})
    for (Index i = 0; i < v->size(); ++i)
      if ((*v)(i) != 0.0 && (*v)(i) != 1.0)
        throw std::invalid_argument("proportions test needs 0/1 draws");
  const double s1 = current.sum();
  const double s2 = proposed.sum();
  const double n1 = static_cast<double>(current.size());
  const double n2 = static_cast<double>(proposed.size());
  // Beta(a, b) as X / (X + Y) with X ~ Gamma(a), Y ~ Gamma(b).
  std::gamma_distribution<double> a1(1.0 + s1), b1(1.0 + n1 - s1);
  std::gamma_distribution<double> a2(1.0 + s2), b2(1.0 + n2 - s2);
  long long wins = 0;
  for (int t = 0; t < kProportionDraws; ++t) {
    const double x1 = a1(rng);
    const double p1 = x1 / (x1 + b1(rng));
    const double x2 = a2(rng);
    const double p2 = x2 / (x2 + b2(rng));
    if (p2 > p1) ++wins;
  }
  return static_cast<double>(wins) / kProportionDraws;
}

AcceptanceDecision accept_proportions(const Eigen::VectorXd& current,
                                      const Eigen::VectorXd& proposed, Rng& rng) {
  AcceptanceDecision dec;
  dec.p_star = proportions_p_star(current, proposed, rng);
  dec.accepted = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < dec.p_star;
  return dec;
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Deterministic utility value; a singular information matrix makes the design unusable.
double safe_value(const UtilityEvaluator& u, const Design& d) {
  try {
    return u.value(d);
  } catch (const SingularInformation&) {
    return kNegInf;
  }
}

// Cheap estimate used for emulator training and phase II screening.
double screening_value(const UtilityEvaluator& u, const Design& d, const AceSettings& s, Rng& rng) {
  if (u.is_deterministic()) return safe_value(u, d);
  return u.draws(d, s.B_emulate, rng).mean();
}

// Runs the acceptance step for `proposal` against `current`, updating both when accepted.
// `current_value` tracks the most recent estimate for the accepted design.
void acceptance_step(const UtilityEvaluator& u, Design& current, double& current_value,
                     const Design& proposal, const DesignSpace& space, const AceSettings& s,
                     Rng& rng, PhaseCounts& counts) {
  ++counts.proposals;
  if (u.is_deterministic()) {
    const double v = safe_value(u, proposal);
    if (v > current_value) {
      if (!space.contains(proposal)) throw std::logic_error("ACE proposal left the design space");
      current = proposal;
      current_value = v;
      ++counts.accepted;
    }
    return;
  }
  const Eigen::VectorXd cur = u.draws(current, s.B_compare, rng);
  const Eigen::VectorXd prop = u.draws(proposal, s.B_compare, rng);
  if (!cur.allFinite() || !prop.allFinite()) throw NonFinite("utility produced a non-finite draw");
  const AcceptanceDecision dec =
      s.binary ? accept_proportions(cur, prop, rng) : accept_ttest(cur, prop, rng);
  if (dec.accepted) {
    if (!space.contains(proposal)) throw std::logic_error("ACE proposal left the design space");
    current = proposal;
    current_value = prop.mean();
    ++counts.accepted;
  } else {
    current_value = cur.mean();
  }
}

double initial_value(const UtilityEvaluator& u, const Design& d, const AceSettings& s, Rng& rng) {
  if (u.is_deterministic()) return safe_value(u, d);
  return u.draws(d, s.B_compare, rng).mean();
}

std::vector<double> training_abscissae(const DesignSpace& space, const std::vector<double>& grid,
                                       Index i, Index j, int Q, Rng& rng) {
  std::vector<double> xs;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (space.constrained()) {
    std::vector<std::size_t> idx(grid.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(Q), grid.size());
    // Partial Fisher-Yates: the first `take` entries form a uniform sample without replacement.
    for (std::size_t a = 0; a < take; ++a) {
      std::uniform_int_distribution<std::size_t> pick(a, idx.size() - 1);
      std::swap(idx[a], idx[pick(rng)]);
      xs.push_back(grid[idx[a]]);
    }
    return xs;
  }
  const double lo = space.lower(i, j);
  const double hi = space.upper(i, j);
  for (int q = 0; q < Q; ++q) xs.push_back(lo + (hi - lo) * (q + unif(rng)) / Q);
  return xs;
}

}  // namespace

void phase1(const UtilityEvaluator& u, const Design& start, const DesignSpace& space,
            const AceSettings& s, Rng& rng, AceResult& out) {
  s.validate();
  if (start.runs() != space.runs() || start.factors() != space.factors())
    throw DimensionMismatch("start design does not match the design space");
  if (!space.contains(start)) throw std::invalid_argument("start design lies outside the design space");
  const auto t0 = Clock::now();
  out.start = start;
  out.phase1_counts = {};
  out.phase1_trace.clear();
  Design current = start;
  double current_value = initial_value(u, current, s, rng);
  out.phase1_trace.push_back({1, 0, current_value});

  for (int sweep = 1; sweep <= s.N1; ++sweep) {
    for (Index i = 0; i < current.runs(); ++i) {
      for (Index j = 0; j < current.factors(); ++j) {
        const std::vector<double> grid = default_candidate_grid(space, current, i, j, s.grid_size);
        EmulatorTrainingSet train;
        for (double x : training_abscissae(space, grid, i, j, s.Q, rng)) {
          const double v = screening_value(u, replace_coordinate(current, i, j, x), s, rng);
          if (!std::isfinite(v)) continue;
          train.abscissae.push_back(x);
          train.values.push_back(v);
        }
        double best_x;
        try {
          if (train.abscissae.size() < 3) throw NumericalFailure("too few finite training values");
          const Emulator1D em = fit_1d(train, !u.is_deterministic());
          best_x = maximize_on_grid(em, grid).first;
        } catch (const NumericalFailure&) {
          ++out.phase1_counts.emulator_failures;
          continue;
        } catch (const std::invalid_argument&) {
          ++out.phase1_counts.emulator_failures;
          continue;
        }
        if (best_x == current(i, j)) continue;
        acceptance_step(u, current, current_value, replace_coordinate(current, i, j, best_x), space,
                        s, rng, out.phase1_counts);
      }
    }
    out.phase1_trace.push_back({1, sweep, current_value});
  }
  out.phase1_design = current;
  out.phase1_seconds = seconds_since(t0);
}

void phase2(const UtilityEvaluator& u, const Design& d_in, const DesignSpace& space,
            const AceSettings& s, Rng& rng, AceResult& out) {
  s.validate();
  const auto t0 = Clock::now();
  out.phase2_counts = {};
  out.phase2_trace.clear();
  Design current = d_in;
  if (s.N2 > 0 && current.runs() < 2) throw std::invalid_argument("phase II needs at least two runs");
  double current_value = s.N2 > 0 ? initial_value(u, current, s, rng) : 0.0;
  if (s.N2 > 0) out.phase2_trace.push_back({2, 0, current_value});

  for (int it = 1; it <= s.N2; ++it) {
    const Index n = current.runs();
    Index best_aug = 0;
    double best_aug_value = kNegInf;
    for (Index a = 0; a < n; ++a) {
      const double v = screening_value(u, append_run(current, current.row(a)), s, rng);
      if (v > best_aug_value) {
        best_aug_value = v;
        best_aug = a;
      }
    }
    const Design augmented = append_run(current, current.row(best_aug));
    Index best_del = n;  // removing the added copy restores the current design
    double best_del_value = kNegInf;
    for (Index h = 0; h <= n; ++h) {
      const double v = screening_value(u, remove_run(augmented, h), s, rng);
      if (v > best_del_value) {
        best_del_value = v;
        best_del = h;
      }
    }
    const Design proposal = remove_run(augmented, best_del);
    if (!(proposal == current))
      acceptance_step(u, current, current_value, proposal, space, s, rng, out.phase2_counts);
    out.phase2_trace.push_back({2, it, current_value});
  }
  out.phase2_design = current;
  out.phase2_seconds = seconds_since(t0);
}

AceResult ace(const UtilityEvaluator& u, const Design& start, const DesignSpace& space,
              const AceSettings& s, Rng& rng) {
  AceResult r;
  phase1(u, start, space, s, rng, r);
  phase2(u, r.phase1_design, space, s, rng, r);
  return r;
}

Assessment assess_design(const UtilityEvaluator& u, const Design& d, Index B, int n_assess,
                         Rng& rng) {
  Assessment a;
  if (u.is_deterministic()) {
    a.mean = u.value(d);
    a.values = {a.mean};
    return a;
  }
  if (n_assess < 1) throw std::invalid_argument("n_assess must be positive");
  for (int r = 0; r < n_assess; ++r) a.values.push_back(monte_carlo_expected_utility(u, d, B, rng).mean);
  const Eigen::Map<const Eigen::VectorXd> v(a.values.data(), static_cast<Index>(a.values.size()));
  a.mean = v.mean();
  a.sd = n_assess > 1 ? std::sqrt((v.array() - a.mean).square().sum() / (n_assess - 1)) : 0.0;
  return a;
}

Rng repetition_stream(std::uint64_t seed, Index r) {
  return substream(seed, {0xace, static_cast<std::uint64_t>(r)});
}

PaceResult pace(const UtilityEvaluator& u, const std::vector<Design>& starts,
                const DesignSpace& space, const AceSettings& s, int threads, int n_assess) {
  s.validate();
  if (starts.empty()) throw std::invalid_argument("pace needs at least one start design");
  const std::size_t C = starts.size();
  PaceResult res;
  res.repetitions.resize(C);
  res.assessed.resize(C);
  res.errors.assign(C, "");

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < C; r = next++) {
      try {
        Rng rng = repetition_stream(s.seed, static_cast<Index>(r));
        res.repetitions[r] = ace(u, starts[r], space, s, rng);
        Rng arng = substream(s.seed, {0xa55e55, static_cast<std::uint64_t>(r)});
        res.assessed[r] = assess_design(u, res.repetitions[r].phase2_design, s.B_compare, n_assess, arng);
      } catch (const std::exception& e) {
        res.errors[r] = e.what()[0] ? e.what() : "unknown failure";
      }
    }
  };
  const int nt = std::max(1, std::min<int>(threads, static_cast<int>(C)));
  if (nt == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
  }

  for (std::size_t r = 0; r < C; ++r) {
    if (res.failed(static_cast<Index>(r))) continue;
    if (res.best_index < 0 ||
        res.assessed[r].mean > res.assessed[static_cast<std::size_t>(res.best_index)].mean)
      res.best_index = static_cast<Index>(r);
  }
  if (res.best_index < 0) throw Error("every ACE repetition failed; first error: " + res.errors[0]);
  res.best_design = res.repetitions[static_cast<std::size_t>(res.best_index)].phase2_design;
  return res;
}

void write_trace_csv(std::ostream& os, const AceResult& r) {
  os << "phase,iteration,expected_utility\n";
  for (const auto* trace : {&r.phase1_trace, &r.phase2_trace})
    for (const auto& t : *trace)
      os << t.phase << ',' << t.iteration << ',' << format_double(t.expected_utility) << '\n';
}

void write_trace_csv(const std::string& path, const AceResult& r) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_trace_csv(os, r);
}

}  // namespace bayesdes
