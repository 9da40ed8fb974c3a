#pragma once

#include <string>
#include <vector>

#include "salmoe/model.hpp"

namespace salmoe {

/// eta{k}_{j}, beta{k}_{j}, sigma{k}, alpha{k} with 1-based k, in that order.
std::vector<std::string> parameter_names(const SalMoeModel& m);
std::vector<double> flatten_parameters(const SalMoeModel& m);

/// Relabels `fitted` to the component order of `reference` by minimising
/// the squared distance between expert parameters (beta, alpha, sigma).
SalMoeModel align_to_reference(const SalMoeModel& fitted, const SalMoeModel& reference);

struct ParameterError {
  std::string name;
  double estimate = 0.0;
  double truth = 0.0;
  double bias = 0.0;
  double mse = 0.0;
};

/// Per-parameter bias and squared error after aligning labels to `truth`.
std::vector<ParameterError> parameter_metrics(const SalMoeModel& fitted, const SalMoeModel& truth);

/// sqrt(mean_i (E_truth[Y|x_i,t_i] - E_fitted[Y|x_i,t_i])^2).
double rmse_mean_function(const SalMoeModel& fitted, const SalMoeModel& truth, const Dataset& d);

struct ClusteringScores {
  double ari = 0.0;
  double class_err = 0.0;
  double accuracy = 0.0;
};

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

/// label_map[h - 1] = reference label assigned to estimated label h, chosen to
/// minimise mismatches (exhaustive for up to 6 labels, greedy beyond). The
/// map covers at least `min_labels` labels.
std::vector<int> best_label_map(const std::vector<int>& reference, const std::vector<int>& estimate,
                                int min_labels = 0);

double classification_error(const std::vector<int>& reference, const std::vector<int>& estimate);

ClusteringScores clustering_metrics(const std::vector<int>& z_true, const std::vector<int>& z_hat);

}  // namespace salmoe
