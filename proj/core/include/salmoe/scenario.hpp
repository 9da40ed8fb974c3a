#pragma once

// Seeded data generators for the simulation designs.

#include <nlohmann/json.hpp>
#include <string>

#include "salmoe/model.hpp"
#include "salmoe/random.hpp"

namespace salmoe {

enum class CovariateDesign {
  uniform1,  ///< x = t = (1, U(-1, 1))
  uniform3,  ///< x = t = (1, U, U, U), independent U(-1, 1)
};

struct ScenarioSpec {
  std::string name;
  SalMoeModel truth;  ///< family selects the expert law
  Eigen::Index n = 500;
  CovariateDesign design = CovariateDesign::uniform1;
  double contamination = 0.0;  ///< fraction replaced by (x ~ U(-1,1), y = -2)
  double noise_y = -2.0;

  void validate() const;
};

/// Draws covariates, labels z ~ gating, responses from the expert family,
/// then applies contamination (ceil(c n) distinct rows). Labels of
/// contaminated rows keep their original draw.
Dataset generate(const ScenarioSpec& spec, Rng& rng);

/// Indices of rows replaced by the last contamination step, for tests.
std::vector<Eigen::Index> contaminate(Dataset& d, double fraction, double noise_y, Rng& rng);

/// Reference parameter sets.
SalMoeModel table1_model(ExpertFamily family = ExpertFamily::sal);
SalMoeModel scenario2_model();
SalMoeModel three_component_model(ExpertFamily family);

/// Sets alpha (skew-normal shape) on every expert.
SalMoeModel with_shape(SalMoeModel m, double shape);

nlohmann::json to_json(const ScenarioSpec& spec);

}  // namespace salmoe
