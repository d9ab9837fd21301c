#include <doctest.h>

#include <cstdlib>
#include <string>

#include "config.hpp"

using namespace bayesdes;
using namespace bayesdes::cli;
using nlohmann::json;

namespace {

json glm_config() {
  return json::parse(R"({
    "schema": 1, "problem": "glm", "criterion": "D", "n": 6, "k": 2,
    "model": {"family": "binomial"},
    "prior": {"type": "normal", "mean": [0, 0, 0], "covariance": [[1,0,0],[0,1,0],[0,0,1]]},
    "engine": {"N1": 2, "N2": 3, "C": 2, "seed": 9}
  })");
}

std::string error_of(const json& j) {
  try {
    load_problem(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

struct SeedEnv {
  explicit SeedEnv(const char* v) { setenv("BAYESDES_SEED", v, 1); }
  ~SeedEnv() { unsetenv("BAYESDES_SEED"); }
};

}  // namespace

TEST_CASE("glm config loads") {
  unsetenv("BAYESDES_SEED");
  const Scenario s = load_problem(glm_config());
  CHECK(s.settings.N1 == 2);
  CHECK(s.settings.N2 == 3);
  CHECK(s.settings.seed == 9);
  CHECK(s.repetitions == 2);
  CHECK(s.parameters == 3);
  CHECK(s.space.runs() == 6);
  CHECK(s.utility.is_deterministic());
  CHECK(s.efficiency == EfficiencyKind::D);
}

TEST_CASE("config errors name the key") {
  json j = glm_config();
  j["criterion"] = "Z";
  CHECK(error_of(j).find("criterion") == 0);

  j = glm_config();
  j["colour"] = 1;
  CHECK(error_of(j) == "colour: unknown key");

  j = glm_config();
  j["engine"]["bogus"] = 1;
  CHECK(error_of(j) == "engine.bogus: unknown key");

  j = glm_config();
  j.erase("n");
  CHECK(error_of(j).find("n: required") == 0);

  j = glm_config();
  j["prior"]["mean"] = {0, 0};
  CHECK(error_of(j).find("prior") == 0);

  j = glm_config();
  j["engine"]["Q"] = 2;
  CHECK(error_of(j).find("engine.Q") == 0);

  j = glm_config();
  j["schema"] = 2;
  CHECK(error_of(j).find("schema") == 0);

  j = glm_config();
  j["criterion"] = "SIG-MC";
  j["method"] = "quadrature";
  CHECK(error_of(j).find("method") == 0);
}

TEST_CASE("scenario configs") {
  unsetenv("BAYESDES_SEED");
  const Scenario s = load_problem(json::parse(R"({"schema": 1, "problem": "scenario:poisson_fisher",
                                                  "engine": {"C": 1, "N2": 0}})"));
  CHECK(s.name == "poisson_fisher");
  CHECK(s.repetitions == 1);
  CHECK(s.settings.N2 == 0);
  CHECK(error_of(json::parse(R"({"schema": 1, "problem": "scenario:none"})")).find("problem") == 0);
  CHECK(error_of(json::parse(R"({"schema": 1, "problem": "scenario:chemical", "criterion": "D"})"))
            .find("criterion") == 0);
}

TEST_CASE("seed from the environment") {
  {
    SeedEnv env("42");
    CHECK(load_problem(glm_config()).settings.seed == 42);
  }
  {
    SeedEnv env("-3");
    CHECK(error_of(glm_config()).find("BAYESDES_SEED") == 0);
  }
  {
    SeedEnv env("12x");
    CHECK(error_of(glm_config()).find("BAYESDES_SEED") == 0);
  }
  CHECK(load_problem(glm_config()).settings.seed == 9);
}

TEST_CASE("nonlinear and stochastic criteria") {
  unsetenv("BAYESDES_SEED");
  const json j = json::parse(R"({
    "schema": 1, "problem": "nonlinear", "criterion": "SIG-Laplace", "n": 5, "k": 1,
    "lower": 0, "upper": 24, "constraint": "min-spacing:0.25",
    "model": {"name": "compartmental", "noise_variance": 0.1},
    "prior": {"type": "uniform", "support": [[0.01, 0.2, 21], [0.2, 2, 21]]}
  })");
  const Scenario s = load_problem(j);
  CHECK(!s.utility.is_deterministic());
  CHECK(s.parameters == 3);
  json bad = j;
  bad["model"]["name"] = "other";
  CHECK(error_of(bad).find("model.name") == 0);
  bad = j;
  bad["constraint"] = "spread";
  CHECK(error_of(bad).find("constraint") == 0);
}
