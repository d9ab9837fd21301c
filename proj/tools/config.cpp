#include "config.hpp"

#include <cstdlib>
#include <fstream>
#include <memory>
#include <set>

#include "bayesdes/models.hpp"
#include "bayesdes/quadrature.hpp"

namespace bayesdes::cli {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key))
      throw ConfigError((where.empty() ? key : where + "." + key) + ": unknown key");
}

const json& require(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError(where + key + ": required key is missing");
  return obj.at(key);
}

double get_number(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError(key + ": expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(key + ": expected a finite number");
  return x;
}

long long get_integer(const json& v, const std::string& key, long long min) {
  if (!v.is_number_integer()) throw ConfigError(key + ": expected an integer");
  const long long x = v.get<long long>();
  if (x < min) throw ConfigError(key + ": must be at least " + std::to_string(min));
  return x;
}

bool get_bool(const json& v, const std::string& key) {
  if (!v.is_boolean()) throw ConfigError(key + ": expected true or false");
  return v.get<bool>();
}

std::string get_string(const json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError(key + ": expected a string");
  return v.get<std::string>();
}

Eigen::VectorXd get_vector(const json& v, const std::string& key) {
  if (!v.is_array() || v.empty()) throw ConfigError(key + ": expected a nonempty array of numbers");
  Eigen::VectorXd out(static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i)
    out(static_cast<Index>(i)) = get_number(v[i], key + "[" + std::to_string(i) + "]");
  return out;
}

Eigen::MatrixXd get_matrix(const json& v, const std::string& key) {
  if (!v.is_array() || v.empty()) throw ConfigError(key + ": expected an array of rows");
  Eigen::MatrixXd out;
  for (std::size_t r = 0; r < v.size(); ++r) {
    const Eigen::VectorXd row = get_vector(v[r], key + "[" + std::to_string(r) + "]");
    if (r == 0) out.resize(static_cast<Index>(v.size()), row.size());
    if (row.size() != out.cols()) throw ConfigError(key + ": rows differ in length");
    out.row(static_cast<Index>(r)) = row.transpose();
  }
  return out;
}

void apply_engine(const json& engine, Scenario& s) {
  if (!engine.is_object()) throw ConfigError("engine: expected an object");
  reject_unknown(engine, "engine",
                 {"B", "Q", "N1", "N2", "C", "seed", "binary", "n_assess", "grid_size"});
  AceSettings& a = s.settings;
  if (engine.contains("B")) {
    const json& b = engine.at("B");
    if (!b.is_array() || b.size() != 2) throw ConfigError("engine.B: expected [comparison, emulator]");
    a.B_compare = get_integer(b[0], "engine.B[0]", 2);
    a.B_emulate = get_integer(b[1], "engine.B[1]", 1);
  }
  if (engine.contains("Q")) a.Q = static_cast<int>(get_integer(engine.at("Q"), "engine.Q", 3));
  if (engine.contains("N1")) a.N1 = static_cast<int>(get_integer(engine.at("N1"), "engine.N1", 0));
  if (engine.contains("N2")) a.N2 = static_cast<int>(get_integer(engine.at("N2"), "engine.N2", 0));
  if (engine.contains("C")) s.repetitions = static_cast<int>(get_integer(engine.at("C"), "engine.C", 1));
  if (engine.contains("seed"))
    a.seed = static_cast<std::uint64_t>(get_integer(engine.at("seed"), "engine.seed", 0));
  if (engine.contains("binary")) a.binary = get_bool(engine.at("binary"), "engine.binary");
  if (engine.contains("n_assess"))
    s.n_assess = static_cast<int>(get_integer(engine.at("n_assess"), "engine.n_assess", 1));
  if (engine.contains("grid_size"))
    a.grid_size = static_cast<std::size_t>(get_integer(engine.at("grid_size"), "engine.grid_size", 2));
}

Prior parse_prior(const json& j) {
  if (!j.is_object()) throw ConfigError("prior: expected an object");
  const std::string type = get_string(require(j, "type", "prior."), "prior.type");
  if (type == "normal") {
    reject_unknown(j, "prior", {"type", "mean", "covariance"});
    NormalPrior p{get_vector(require(j, "mean", "prior."), "prior.mean"),
                  get_matrix(require(j, "covariance", "prior."), "prior.covariance")};
    try {
      p.validate();
    } catch (const std::exception& e) {
      throw ConfigError(std::string("prior.covariance: ") + e.what());
    }
    return p;
  }
  if (type == "uniform") {
    reject_unknown(j, "prior", {"type", "support"});
    IndependentUniformPrior p{get_matrix(require(j, "support", "prior."), "prior.support")};
    try {
      p.validate();
    } catch (const std::exception& e) {
      throw ConfigError(std::string("prior.support: ") + e.what());
    }
    return p;
  }
  throw ConfigError("prior.type: expected \"normal\" or \"uniform\", got \"" + type + "\"");
}

std::shared_ptr<const Model> parse_model(const std::string& kind, const json& j, Index k) {
  if (!j.is_object()) throw ConfigError("model: expected an object");
  if (kind == "glm") {
    reject_unknown(j, "model", {"family", "intercept", "terms"});
    const std::string fam = get_string(require(j, "family", "model."), "model.family");
    GlmFamily family;
    if (fam == "binomial")
      family = GlmFamily::BernoulliLogit;
    else if (fam == "poisson")
      family = GlmFamily::PoissonLog;
    else
      throw ConfigError("model.family: expected \"binomial\" or \"poisson\", got \"" + fam + "\"");
    const bool intercept = j.contains("intercept") ? get_bool(j.at("intercept"), "model.intercept") : true;
    std::vector<Index> terms;
    if (j.contains("terms")) {
      const json& t = j.at("terms");
      if (!t.is_array()) throw ConfigError("model.terms: expected an array of column indices");
      for (std::size_t i = 0; i < t.size(); ++i) {
        const auto c = get_integer(t[i], "model.terms[" + std::to_string(i) + "]", 0);
        if (c >= k) throw ConfigError("model.terms[" + std::to_string(i) + "]: column out of range");
        terms.push_back(static_cast<Index>(c));
      }
    } else {
      for (Index c = 0; c < k; ++c) terms.push_back(c);
    }
    if (terms.empty() && !intercept) throw ConfigError("model.terms: model has no parameters");
    return std::make_shared<GlmModel>(family, intercept, terms);
  }
  reject_unknown(j, "model", {"name", "noise_variance"});
  const std::string name = get_string(require(j, "name", "model."), "model.name");
  if (name != "compartmental")
    throw ConfigError("model.name: unknown nonlinear model \"" + name + "\" (known: compartmental)");
  if (k != 1) throw ConfigError("k: the compartmental model needs k = 1");
  const double s2 = j.contains("noise_variance")
                        ? get_number(j.at("noise_variance"), "model.noise_variance")
                        : 1.0;
  if (!(s2 > 0)) throw ConfigError("model.noise_variance: must be positive");
  return std::make_shared<NonlinearModel>(compartmental_model(s2));
}

std::uint64_t resolve_seed(const json& config) {
  if (const char* env = std::getenv("BAYESDES_SEED")) {
    try {
      std::size_t used = 0;
      const unsigned long long seed = std::stoull(env, &used);
      if (used != std::string(env).size() || std::string(env).find('-') != std::string::npos)
        throw std::invalid_argument("not a plain integer");
      return seed;
    } catch (const std::exception&) {
      throw ConfigError("BAYESDES_SEED: expected a non-negative integer");
    }
  }
  if (config.contains("engine") && config.at("engine").is_object() && config.at("engine").contains("seed"))
    return static_cast<std::uint64_t>(get_integer(config.at("engine").at("seed"), "engine.seed", 0));
  return 1;
}

Scenario build_model_problem(const json& config, const std::string& kind) {
  const Index n = get_integer(require(config, "n", ""), "n", 1);
  const Index k = get_integer(require(config, "k", ""), "k", 1);
  const double lower = config.contains("lower") ? get_number(config.at("lower"), "lower") : -1.0;
  const double upper = config.contains("upper") ? get_number(config.at("upper"), "upper") : 1.0;
  if (!(lower < upper)) throw ConfigError("upper: must exceed lower");

  CandidateGridGenerator constraint;
  if (config.contains("constraint")) {
    const std::string c = get_string(config.at("constraint"), "constraint");
    const std::string prefix = "min-spacing:";
    if (c.rfind(prefix, 0) == 0) {
      double spacing = 0.0;
      try {
        spacing = std::stod(c.substr(prefix.size()));
      } catch (const std::exception&) {
        throw ConfigError("constraint: cannot parse spacing in \"" + c + "\"");
      }
      if (!(spacing > 0)) throw ConfigError("constraint: spacing must be positive");
      constraint = min_spacing_constraint(spacing, lower, upper);
    } else if (c != "none") {
      throw ConfigError("constraint: expected \"none\" or \"min-spacing:<c>\", got \"" + c + "\"");
    }
  }

  Scenario s(DesignSpace(n, k, lower, upper, constraint));
  s.name = kind;
  const auto model = parse_model(kind, require(config, "model", ""), k);
  const Prior prior = parse_prior(require(config, "prior", ""));
  if (prior_dimension(prior) != model->parameter_count())
    throw ConfigError("prior: dimension " + std::to_string(prior_dimension(prior)) +
                      " does not match the model's " + std::to_string(model->parameter_count()) +
                      " parameters");
  s.parameters = model->parameter_count();

  s.criterion = get_string(require(config, "criterion", ""), "criterion");
  const bool pseudo = s.criterion == "D" || s.criterion == "A";
  std::string method = pseudo ? "quadrature" : "MC";
  if (config.contains("method")) method = get_string(config.at("method"), "method");
  if (method != "quadrature" && method != "MC")
    throw ConfigError("method: expected \"quadrature\" or \"MC\", got \"" + method + "\"");
  if (method == "quadrature" && !pseudo)
    throw ConfigError("method: quadrature is available for the D and A criteria only");

  if (config.contains("engine")) apply_engine(config.at("engine"), s);
  s.settings.seed = resolve_seed(config);
  Index b_inner = 1000;
  if (config.contains("B_inner")) b_inner = get_integer(config.at("B_inner"), "B_inner", 1);

  const PriorSampler sampler = prior_sampler(prior);
  if (pseudo) {
    const Criterion c = s.criterion == "D" ? Criterion::D : Criterion::A;
    s.efficiency = c == Criterion::D ? EfficiencyKind::D : EfficiencyKind::A;
    s.utility = method == "quadrature"
                    ? quadrature_criterion_utility(model, prior, c, 3, 2, s.settings.seed)
                    : mc_criterion_utility(model, sampler, c);
  } else if (s.criterion == "SIG-MC") {
    s.utility = sig_nested_mc_utility(model, sampler, b_inner);
  } else if (s.criterion == "SIG-Laplace") {
    s.utility = sig_laplace_utility(model, sampler, log_prior(prior));
  } else if (s.criterion == "NSEL-Norm") {
    s.utility = nsel_normal_utility(model, sampler, moment_matched_log_prior(prior));
  } else {
    throw ConfigError("criterion: expected one of D, A, SIG-MC, SIG-Laplace, NSEL-Norm; got \"" +
                      s.criterion + "\"");
  }

  if (config.contains("column_names")) {
    const json& names = config.at("column_names");
    if (!names.is_array() || static_cast<Index>(names.size()) != k)
      throw ConfigError("column_names: expected " + std::to_string(k) + " names");
    for (std::size_t i = 0; i < names.size(); ++i)
      s.column_names.push_back(get_string(names[i], "column_names[" + std::to_string(i) + "]"));
  }
  const DesignSpace box(n, k, lower, upper);
  const auto names = s.column_names;
  s.random_start = [box, n, k, names](Rng& rng) {
    return Design(latin_hypercube_start(n, k, box, rng).matrix(), names);
  };
  s.description = "user-defined " + kind + " problem";
  return s;
}

}  // namespace

Scenario load_problem(const json& config) {
  if (!config.is_object()) throw ConfigError("config: expected a JSON object");
  const json& schema = require(config, "schema", "");
  if (!schema.is_number_integer() || schema.get<int>() != kConfigSchemaVersion)
    throw ConfigError("schema: unsupported version (expected " + std::to_string(kConfigSchemaVersion) + ")");
  const std::string problem = get_string(require(config, "problem", ""), "problem");

  Scenario s = [&] {
    const std::string prefix = "scenario:";
    if (problem.rfind(prefix, 0) == 0) {
      reject_unknown(config, "", {"schema", "problem", "criterion", "engine"});
      const std::string name = problem.substr(prefix.size());
      const std::uint64_t seed = resolve_seed(config);
      Scenario sc = [&] {
        try {
          return make_scenario(name, seed);
        } catch (const std::invalid_argument&) {
          throw ConfigError("problem: unknown scenario \"" + name + "\"");
        }
      }();
      if (config.contains("criterion") && get_string(config.at("criterion"), "criterion") != sc.criterion)
        throw ConfigError("criterion: scenario " + name + " uses criterion \"" + sc.criterion + "\"");
      if (config.contains("engine")) apply_engine(config.at("engine"), sc);
      sc.settings.seed = seed;
      return sc;
    }
    if (problem != "glm" && problem != "nonlinear")
      throw ConfigError("problem: expected \"glm\", \"nonlinear\" or \"scenario:<name>\", got \"" +
                        problem + "\"");
    reject_unknown(config, "", {"schema", "problem", "model", "prior", "criterion", "method", "n", "k",
                                "lower", "upper", "constraint", "engine", "B_inner", "column_names"});
    return build_model_problem(config, problem);
  }();

  try {
    s.settings.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("engine.") + e.what());
  }
  return s;
}

Scenario load_problem_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  return load_problem(j);
}

}  // namespace bayesdes::cli
