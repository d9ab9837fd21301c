#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "bayesdes/design.hpp"

using namespace bayesdes;

namespace {

// Stratum index of each entry of one column on [lo, hi] split into n bins.
std::vector<int> strata(const Eigen::VectorXd& col, double lo, double hi) {
  const auto n = col.size();
  std::vector<int> count(static_cast<std::size_t>(n), 0);
  for (Index i = 0; i < n; ++i) {
    auto s = static_cast<Index>((col(i) - lo) / (hi - lo) * static_cast<double>(n));
    s = std::min(s, n - 1);
    ++count[static_cast<std::size_t>(s)];
  }
  return count;
}

}  // namespace

TEST_CASE("latin hypercube puts one point in each stratum") {
  Rng rng = substream(11);
  const Design d1 = latin_hypercube_start(4, 1, DesignSpace(4, 1, 0.0, 1.0), rng);
  CHECK(strata(d1.matrix().col(0), 0.0, 1.0) == std::vector<int>{1, 1, 1, 1});

  const Design d2 = latin_hypercube_start(18, 1, DesignSpace(18, 1, 0.0, 24.0), rng);
  std::set<double> distinct(d2.matrix().data(), d2.matrix().data() + 18);
  CHECK(distinct.size() == 18);

  for (int rep = 0; rep < 20; ++rep) {
    const Design d3 = latin_hypercube_start(6, 4, DesignSpace(6, 4, -1.0, 1.0), rng);
    CHECK((d3.matrix().array().abs() <= 1.0).all());
    for (Index j = 0; j < 4; ++j)
      CHECK(strata(d3.matrix().col(j), -1.0, 1.0) == std::vector<int>(6, 1));
  }
}

TEST_CASE("latin hypercube is reproducible from a seed") {
  Rng a = substream(5, {1});
  Rng b = substream(5, {1});
  const DesignSpace sp(6, 4, -1.0, 1.0);
  CHECK(latin_hypercube_start(6, 4, sp, a) == latin_hypercube_start(6, 4, sp, b));
}

TEST_CASE("candidate grids") {
  CHECK(linspace(0.0, 24.0, 5) == std::vector<double>{0, 6, 12, 18, 24});

  const DesignSpace sp(2, 1, 0.0, 24.0, min_spacing_constraint(0.25, 0.0, 24.0, 10000));
  Eigen::MatrixXd m(2, 1);
  m << 3.0, 12.0;
  const auto grid = default_candidate_grid(sp, Design(m), 0, 0);
  CHECK(!grid.empty());
  for (double g : grid) CHECK((g <= 11.75 || g >= 12.25));

  const DesignSpace one(1, 1, 0.0, 24.0, min_spacing_constraint(0.25, 0.0, 24.0, 101));
  CHECK(default_candidate_grid(one, Design(Eigen::MatrixXd::Constant(1, 1, 12.0)), 0, 0).size() == 101);

  const DesignSpace box(3, 2, -1.0, 1.0);
  const auto g = default_candidate_grid(box, Design::zeros(3, 2), 1, 1, 201);
  CHECK(g.size() == 201);
  CHECK(g.front() == -1.0);
  CHECK(g.back() == 1.0);
}

TEST_CASE("replace coordinate") {
  const Design z = Design::zeros(2, 2);
  const Design r = replace_coordinate(z, 1, 1, 1.0);
  CHECK(r(1, 1) == 1.0);
  CHECK(r.matrix().sum() == 1.0);
  CHECK(replace_coordinate(z, 0, 1, 0.0) == z);

  Rng rng = substream(3);
  const Design d = latin_hypercube_start(5, 3, DesignSpace(5, 3, 0.0, 1.0), rng);
  CHECK(replace_coordinate(replace_coordinate(d, 2, 1, 0.123), 2, 1, d(2, 1)) == d);
  CHECK_THROWS_AS(replace_coordinate(d, 5, 0, 0.0), std::out_of_range);
}

TEST_CASE("unique run count") {
  Eigen::MatrixXd t(18, 1);
  for (Index i = 0; i < 18; ++i) t(i, 0) = 0.5 + static_cast<double>(i);
  CHECK(unique_run_count(Design(t), 0.0) == 18);
  CHECK(unique_run_count(Design(Eigen::MatrixXd::Constant(7, 2, 0.3)), 0.0) == 1);
  Eigen::MatrixXd m(3, 1);
  m << 0.0, 1e-9, 0.5;
  CHECK(unique_run_count(Design(m), 1e-6) == 2);
}

TEST_CASE("append and remove runs") {
  Eigen::MatrixXd m(2, 2);
  m << 1, 2, 3, 4;
  const Design d(m);
  const Design a = append_run(d, d.row(0));
  CHECK(a.runs() == 3);
  CHECK(a.row(2) == d.row(0));
  CHECK(remove_run(a, 2) == d);
  CHECK(remove_run(a, 0).row(0) == d.row(1));
}

TEST_CASE("design csv round trip keeps every bit") {
  Rng rng = substream(17);
  const Design d = latin_hypercube_start(7, 3, DesignSpace(7, 3, -1.0, 1.0), rng);
  std::stringstream ss;
  write_design_csv(ss, d);
  CHECK(ss.str().rfind("x1,x2,x3\n", 0) == 0);
  const Design back = read_design_csv(ss);
  CHECK(back == d);
}
