#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "salmoe/fit.hpp"

namespace salmoe {

struct BootstrapConfig {
  int B = 200;
  double level = 0.95;
  int max_iter = 200;
  std::uint64_t seed = 0;
  int threads = 1;
  double max_failure_fraction = 0.2;
};

struct BootstrapInterval {
  std::string name;
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct BootstrapResult {
  std::vector<BootstrapInterval> intervals;
  int successful = 0;
  int failed = 0;
  /// replicates[b] holds flatten_parameters of the aligned replicate fit.
  std::vector<std::vector<double>> replicates;
};

/// 1-based order-statistic ranks of the percentile interval for `count`
/// replicates, e.g. (5, 196) for 200 replicates at level 0.95.
std::pair<std::size_t, std::size_t> percentile_ranks(std::size_t count, double level);

/// Case-resampling bootstrap around `original`. Each replicate is refit by
/// em_mm_fit started at `original`, then relabelled so that its MAP labels on
/// the original data best agree with those of `original`.
BootstrapResult bootstrap_ci(const Dataset& d, const SalMoeModel& original, const FitConfig& cfg,
                             const BootstrapConfig& bc);

}  // namespace salmoe
