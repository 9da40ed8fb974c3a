#include "salmoe/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

#include "salmoe/error.hpp"
#include "salmoe/metrics.hpp"
#include "salmoe/parallel.hpp"
#include "salmoe/random.hpp"

namespace salmoe {

std::pair<std::size_t, std::size_t> percentile_ranks(std::size_t count, double level) {
  if (count == 0) fail(ErrorCode::invalid_argument, "no replicates");
  const double tail = 0.5 * (1.0 - level) * static_cast<double>(count);
  auto lower = static_cast<std::size_t>(std::floor(tail + 1e-9));
  lower = std::clamp<std::size_t>(lower, 1, count);
  return {lower, count + 1 - lower};
}

BootstrapResult bootstrap_ci(const Dataset& d, const SalMoeModel& original, const FitConfig& cfg,
                             const BootstrapConfig& bc) {
  if (bc.B < 50) fail(ErrorCode::invalid_argument, "bootstrap needs B >= 50");
  if (!(bc.level > 0.0 && bc.level < 1.0)) fail(ErrorCode::invalid_argument, "level must lie in (0, 1)");
  d.validate();
  original.validate();

  const std::vector<int> reference = map_cluster(original, d);
  const auto n = d.n();
  std::vector<std::optional<std::vector<double>>> slots(static_cast<std::size_t>(bc.B));

  parallel_for(slots.size(), bc.threads, [&](std::size_t b) {
    Rng rng = make_rng(bc.seed, b);
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
    for (auto& r : rows) r = pick(rng);
    const Dataset resample = d.subset(rows);
    FitConfig c = cfg;
    c.max_iter = bc.max_iter;
    c.K = original.K();
    try {
      const FitReport rep = em_mm_fit(resample, c, original);
      SalMoeModel fitted = rep.model;
      if (fitted.K() > 1) {
        const auto map = best_label_map(reference, map_cluster(fitted, d), fitted.K());
        // map[old - 1] = new label; invert to perm[new] = old.
        std::vector<int> perm(map.size());
        for (std::size_t old = 0; old < map.size(); ++old) {
          perm[static_cast<std::size_t>(map[old] - 1)] = static_cast<int>(old);
        }
        fitted = permute_components(fitted, perm);
      }
      slots[b] = flatten_parameters(fitted);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::empty_component && e.code() != ErrorCode::singular_system &&
          e.code() != ErrorCode::singular_design) {
        throw;
      }
    }
  });

  BootstrapResult out;
  for (auto& s : slots) {
    if (s) {
      out.replicates.push_back(std::move(*s));
    } else {
      ++out.failed;
    }
  }
  out.successful = static_cast<int>(out.replicates.size());
  if (out.failed > bc.max_failure_fraction * bc.B || out.successful == 0) {
    fail(ErrorCode::too_many_failures,
         std::to_string(out.failed) + " of " + std::to_string(bc.B) + " bootstrap refits failed");
  }

  const auto names = parameter_names(original);
  const auto estimate = flatten_parameters(original);
  const auto [lo_rank, hi_rank] = percentile_ranks(out.replicates.size(), bc.level);
  std::vector<double> column(out.replicates.size());
  for (std::size_t j = 0; j < names.size(); ++j) {
    for (std::size_t b = 0; b < out.replicates.size(); ++b) column[b] = out.replicates[b][j];
    std::sort(column.begin(), column.end());
    out.intervals.push_back({names[j], estimate[j], column[lo_rank - 1], column[hi_rank - 1]});
  }
  return out;
}

}  // namespace salmoe
