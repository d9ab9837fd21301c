#include "bayesdes/design.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "bayesdes/errors.hpp"

namespace bayesdes {

Design::Design(Eigen::MatrixXd runs, std::vector<std::string> column_names)
    : values_(std::move(runs)), names_(std::move(column_names)) {
  if (values_.rows() < 1 || values_.cols() < 1)
    throw std::invalid_argument("design needs at least one run and one factor");
  if (!values_.allFinite()) throw std::invalid_argument("design entries must be finite");
  if (names_.empty()) {
    for (Index j = 0; j < values_.cols(); ++j) names_.push_back("x" + std::to_string(j + 1));
  }
  if (static_cast<Index>(names_.size()) != values_.cols())
    throw DimensionMismatch("design column_names size does not match factor count");
}

Design Design::zeros(Index n, Index k) { return Design(Eigen::MatrixXd::Zero(n, k)); }

DesignSpace::DesignSpace(Eigen::MatrixXd lower, Eigen::MatrixXd upper,
                         CandidateGridGenerator constraint)
    : lower_(std::move(lower)), upper_(std::move(upper)), constraint_(std::move(constraint)) {
  if (lower_.rows() != upper_.rows() || lower_.cols() != upper_.cols())
    throw DimensionMismatch("lower and upper bounds differ in shape");
  if (lower_.size() == 0) throw std::invalid_argument("empty design space");
  if (!(lower_.array() < upper_.array()).all())
    throw std::invalid_argument("design space requires lower < upper for every coordinate");
}

DesignSpace::DesignSpace(Index n, Index k, double lower, double upper,
                         CandidateGridGenerator constraint)
    : DesignSpace(Eigen::MatrixXd::Constant(n, k, lower), Eigen::MatrixXd::Constant(n, k, upper),
                  std::move(constraint)) {}

bool DesignSpace::contains(const Design& d) const {
  if (d.runs() != runs() || d.factors() != factors()) return false;
  return (d.matrix().array() >= lower_.array()).all() &&
         (d.matrix().array() <= upper_.array()).all();
}

DesignSpace DesignSpace::with_runs(Index n) const {
  Eigen::MatrixXd lo(n, factors()), hi(n, factors());
  for (Index i = 0; i < n; ++i) {
    const Index src = std::min(i, runs() - 1);
    lo.row(i) = lower_.row(src);
    hi.row(i) = upper_.row(src);
  }
  return DesignSpace(lo, hi, constraint_);
}

Design latin_hypercube_start(Index n, Index k, const DesignSpace& space, Rng& rng) {
  if (n < 1 || k < 1) throw std::invalid_argument("latin hypercube needs n, k >= 1");
  if (space.runs() != n || space.factors() != k)
    throw DimensionMismatch("design space shape does not match requested design");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd m(n, k);
  std::vector<Index> perm(static_cast<std::size_t>(n));
  for (Index j = 0; j < k; ++j) {
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    for (Index i = 0; i < n; ++i) {
      const double u = (static_cast<double>(perm[static_cast<std::size_t>(i)]) + unif(rng)) /
                       static_cast<double>(n);
      const double lo = space.lower(i, j);
      const double hi = space.upper(i, j);
      m(i, j) = std::clamp(lo + (hi - lo) * u, lo, hi);
    }
  }
  return Design(std::move(m));
}

std::vector<double> linspace(double lo, double hi, std::size_t size) {
  if (size == 0) return {};
  if (size == 1) return {lo};
  std::vector<double> g(size);
  const double step = (hi - lo) / static_cast<double>(size - 1);
  for (std::size_t s = 0; s < size; ++s) g[s] = lo + step * static_cast<double>(s);
  g.back() = hi;
  return g;
}

std::vector<double> default_candidate_grid(const DesignSpace& space, const Design& d, Index i,
                                           Index j, std::size_t size) {
  if (i < 0 || i >= d.runs() || j < 0 || j >= d.factors())
    throw std::out_of_range("coordinate index out of range");
  if (!space.constrained()) return linspace(space.lower(i, j), space.upper(i, j), size);
  auto grid = space.constraint()(d, i, j);
  if (grid.empty())
    throw ConstraintExhausted("constraint admits no value for coordinate (" + std::to_string(i) +
                              ", " + std::to_string(j) + ")");
  return grid;
}

CandidateGridGenerator min_spacing_constraint(double spacing, double lower, double upper,
                                              std::size_t grid_size) {
  const auto base = linspace(lower, upper, grid_size);
  return [base, spacing](const Design& d, Index i, Index j) {
    std::vector<double> grid;
    grid.reserve(base.size());
    for (double g : base) {
      bool ok = true;
      for (Index r = 0; r < d.runs() && ok; ++r) {
        if (r == i) continue;
        const double s = d(r, j);
        ok = g < s - spacing || g > s + spacing;
      }
      if (ok) grid.push_back(g);
    }
    return grid;
  };
}

Design replace_coordinate(const Design& d, Index i, Index j, double x) {
  if (i < 0 || i >= d.runs() || j < 0 || j >= d.factors())
    throw std::out_of_range("coordinate index out of range");
  Eigen::MatrixXd m = d.matrix();
  m(i, j) = x;
  return Design(std::move(m), d.column_names());
}

Index unique_run_count(const Design& d, double tol) {
  if (tol < 0) throw std::invalid_argument("tolerance must be non-negative");
  const Index n = d.runs();
  std::vector<Index> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), Index{0});
  auto find = [&](Index a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (Index a = 0; a < n; ++a)
    for (Index b = a + 1; b < n; ++b)
      if ((d.matrix().row(a) - d.matrix().row(b)).cwiseAbs().maxCoeff() <= tol)
        parent[find(a)] = find(b);
  Index clusters = 0;
  for (Index a = 0; a < n; ++a) clusters += (find(a) == a);
  return clusters;
}

Index unique_run_count(const Design& d) {
  const double range = d.matrix().maxCoeff() - d.matrix().minCoeff();
  return unique_run_count(d, 1e-8 * range);
}

Design append_run(const Design& d, const Eigen::RowVectorXd& run) {
  Eigen::MatrixXd m(d.runs() + 1, d.factors());
  m.topRows(d.runs()) = d.matrix();
  m.row(d.runs()) = run;
  return Design(std::move(m), d.column_names());
}

Design remove_run(const Design& d, Index h) {
  if (d.runs() < 2) throw std::invalid_argument("cannot remove the only run of a design");
  if (h < 0 || h >= d.runs()) throw std::out_of_range("run index out of range");
  Eigen::MatrixXd m(d.runs() - 1, d.factors());
  m.topRows(h) = d.matrix().topRows(h);
  m.bottomRows(d.runs() - 1 - h) = d.matrix().bottomRows(d.runs() - 1 - h);
  return Design(std::move(m), d.column_names());
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_design_csv(std::ostream& os, const Design& d) {
  const auto& names = d.column_names();
  for (std::size_t j = 0; j < names.size(); ++j) os << (j ? "," : "") << names[j];
  os << '\n';
  for (Index i = 0; i < d.runs(); ++i) {
    for (Index j = 0; j < d.factors(); ++j) os << (j ? "," : "") << format_double(d(i, j));
    os << '\n';
  }
}

void write_design_csv(const std::string& path, const Design& d) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_design_csv(os, d);
}

namespace {
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    cells.push_back(cell);
  }
  return cells;
}
}  // namespace

Design read_design_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("design csv is empty");
  const auto names = split_csv_line(line);
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != names.size())
      throw std::runtime_error("design csv row has " + std::to_string(cells.size()) +
                               " cells, expected " + std::to_string(names.size()));
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(std::stod(c));
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < names.size(); ++j)
      m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return Design(std::move(m), names);
}

Design read_design_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_design_csv(is);
}

}  // namespace bayesdes
