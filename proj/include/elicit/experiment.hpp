#ifndef ELICIT_EXPERIMENT_HPP
#define ELICIT_EXPERIMENT_HPP

#include "elicit/sampling.hpp"
#include "elicit/sweep.hpp"
#include "elicit/theory.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace elicit {

// Where the empirical moments come from.
struct DataSpec {
  enum class Kind { sampled, analytic, explicit_moments };

  Kind kind = Kind::sampled;
  SamplingTemplate tpl;  // sampled: all fields; analytic: name and params
  Eigen::VectorXd m_hat;
  std::optional<Eigen::VectorXd> v_hat;
};

enum class BaseWeights { ones, rhat_squared };

// One experiment document. Parsing fills every defaulted field so that the
// resolved form can be echoed verbatim.
struct ExperimentConfig {
  std::string name;
  std::string model;
  std::vector<double> fixed_params;
  DataSpec data;
  Link link = Link::variance;
  std::vector<SubLoss> sub_losses;
  BaseWeights base = BaseWeights::ones;
  int sweep_index = 0;  // zero-based; the document is one-based
  Eigen::VectorXd fixed_weights;
  double grid_lo = 1e-3;
  double grid_hi = 1e3;
  int grid_points = 41;
  bool warm_start = true;
  OptimizerConfig optimizer;
  std::string output = "out";
};

/// Validates the whole document before anything runs. ConfigError messages
/// name the offending key.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Fully resolved configuration plus the generator name.
nlohmann::json resolved_config(const ExperimentConfig& cfg);

EmpiricalMoments build_moments(const ExperimentConfig& cfg);
Experiment build_experiment(const ExperimentConfig& cfg);
SweepSpec build_sweep(const ExperimentConfig& cfg);

struct RunOutcome {
  SweepCurve curve;
  TheoryReport theory;
  nlohmann::json report;
};

RunOutcome run_experiment(const ExperimentConfig& cfg);

/// curve.csv contents: c_value, theta_*, r_*, gamma, total_loss, sub_loss_*,
/// converged, with shortest round-trip decimals and "inf" for c = +inf.
std::string curve_csv(const SweepCurve& curve);

/// Shortest decimal that parses back to the same double.
std::string format_double(double x);

/// Writes through a temporary file in the same directory, then renames.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

void write_outputs(const ExperimentConfig& cfg, const RunOutcome& outcome, const std::filesystem::path& dir);

nlohmann::json to_json(const CheckResult& check);
nlohmann::json to_json(const CaseClassification& cls);

}  // namespace elicit

#endif  // ELICIT_EXPERIMENT_HPP
