#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bayesdes/rng.hpp"

namespace bayesdes {

using Index = Eigen::Index;

/// An n x k matrix of runs; row i is the treatment applied in run i.
class Design {
 public:
  Design() = default;
  explicit Design(Eigen::MatrixXd runs, std::vector<std::string> column_names = {});

  static Design zeros(Index n, Index k);

  Index runs() const { return values_.rows(); }
  Index factors() const { return values_.cols(); }

  const Eigen::MatrixXd& matrix() const { return values_; }
  double operator()(Index i, Index j) const { return values_(i, j); }
  Eigen::RowVectorXd row(Index i) const { return values_.row(i); }

  const std::vector<std::string>& column_names() const { return names_; }

  bool operator==(const Design& other) const {
    return values_ == other.values_ && names_ == other.names_;
  }

 private:
  Eigen::MatrixXd values_;
  std::vector<std::string> names_;
};

class DesignSpace;

/// Returns the admissible values for coordinate (i, j) of the current design.
using CandidateGridGenerator =
    std::function<std::vector<double>(const Design&, Index i, Index j)>;

/// Box bounds per coordinate plus an optional constraint generator.
class DesignSpace {
 public:
  DesignSpace(Eigen::MatrixXd lower, Eigen::MatrixXd upper,
              CandidateGridGenerator constraint = nullptr);
  /// Scalar bounds broadcast to every coordinate of an n x k design.
  DesignSpace(Index n, Index k, double lower, double upper,
              CandidateGridGenerator constraint = nullptr);

  Index runs() const { return lower_.rows(); }
  Index factors() const { return lower_.cols(); }
  double lower(Index i, Index j) const { return lower_(i, j); }
  double upper(Index i, Index j) const { return upper_(i, j); }
  const Eigen::MatrixXd& lower() const { return lower_; }
  const Eigen::MatrixXd& upper() const { return upper_; }

  bool constrained() const { return static_cast<bool>(constraint_); }
  const CandidateGridGenerator& constraint() const { return constraint_; }

  bool contains(const Design& d) const;

  /// Same bounds resized to n runs (row i takes the bounds of row min(i, n_old - 1)).
  DesignSpace with_runs(Index n) const;

 private:
  Eigen::MatrixXd lower_;
  Eigen::MatrixXd upper_;
  CandidateGridGenerator constraint_;
};

inline constexpr std::size_t kDefaultGridSize = 20000;

/// Random Latin hypercube: per column exactly one point in each of n equal strata.
Design latin_hypercube_start(Index n, Index k, const DesignSpace& space, Rng& rng);

/// Equally spaced grid over [lo, hi] with both endpoints included.
std::vector<double> linspace(double lo, double hi, std::size_t size);

/// Candidate coordinate values for (i, j): the constraint generator's output when one
/// is set, otherwise `size` equally spaced points spanning the coordinate's bounds.
std::vector<double> default_candidate_grid(const DesignSpace& space, const Design& d, Index i,
                                           Index j, std::size_t size = kDefaultGridSize);

/// Generator enforcing a minimum spacing c between the values of column j across runs.
/// Grid points within [s - c, s + c] of any other run's value s are removed.
CandidateGridGenerator min_spacing_constraint(double spacing, double lower, double upper,
                                              std::size_t grid_size = 10000);

Design replace_coordinate(const Design& d, Index i, Index j, double x);

/// Number of clusters of rows under single linkage with max-norm distance <= tol.
Index unique_run_count(const Design& d, double tol);
/// Default tolerance 1e-8 times the range of the design entries.
Index unique_run_count(const Design& d);

Design append_run(const Design& d, const Eigen::RowVectorXd& run);
Design remove_run(const Design& d, Index h);

void write_design_csv(std::ostream& os, const Design& d);
void write_design_csv(const std::string& path, const Design& d);
Design read_design_csv(std::istream& is);
Design read_design_csv(const std::string& path);

/// Formats a double with 17 significant digits.
std::string format_double(double x);

}  // namespace bayesdes
