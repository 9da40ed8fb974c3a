#include "salmoe/select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "salmoe/error.hpp"
#include "salmoe/parallel.hpp"
#include "salmoe/random.hpp"

namespace salmoe {

int degrees_of_freedom(int K, int p, int q) {
  if (K < 1 || p < 0 || q < 0) fail(ErrorCode::invalid_argument, "df needs K >= 1, p, q >= 0");
  return K * (p + q + 4) - q - 1;
}

double log_plus_iterated(double x, int beta) {
  for (int b = 0; b < beta; ++b) x = std::max(1.0, std::log(x));
  return x;
}

double bic(double loglik, int K, int p, int q, double n) {
  if (!(n >= 1.0)) fail(ErrorCode::invalid_argument, "BIC needs n >= 1");
  return -2.0 * loglik + std::log(n) * degrees_of_freedom(K, p, q);
}

double classification_loglik(const SalMoeModel& m, const Dataset& d) {
  const Eigen::MatrixXd terms = joint_log_terms(m, d);
  // Posterior argmax equals argmax of the joint terms (same row normaliser).
  const std::vector<int> z = map_labels(terms);
  double total = 0.0;
  for (Eigen::Index i = 0; i < terms.rows(); ++i) total += terms(i, z[static_cast<std::size_t>(i)] - 1);
  return total;
}

double icl(double classification_ll, int K, int p, int q, double n) {
  return bic(classification_ll, K, p, q, n);
}

double icl(const SalMoeModel& m, const Dataset& d) {
  return icl(classification_loglik(m, d), m.K(), m.p, m.q, static_cast<double>(d.n()));
}

double panic_alpha(int beta, double nu) {
  if (beta < 1 || !(nu > 1.0)) fail(ErrorCode::invalid_argument, "panic_alpha needs beta >= 1, nu > 1");
  return std::log(nu) / (2.0 * std::sqrt(nu) * log_plus_iterated(nu, beta));
}

double panic(double loglik, int K, int p, int q, double n, double alpha, int beta) {
  if (!(n >= 1.0) || !(alpha > 0.0)) fail(ErrorCode::invalid_argument, "PanIC needs n >= 1, alpha > 0");
  return -2.0 * loglik +
         2.0 * alpha * degrees_of_freedom(K, p, q) * std::sqrt(n) * log_plus_iterated(n, beta);
}

std::string PanicCalibration::label() const {
  std::ostringstream os;
  os << "panic_b" << beta << "_nu" << static_cast<long long>(nu);
  return os.str();
}

IcRow score_fit(const SalMoeModel& m, const Dataset& d, const SelectConfig& sel) {
  IcRow row;
  row.K = m.K();
  row.ok = true;
  const double n = static_cast<double>(d.n());
  row.loglik = log_likelihood(m, d);
  row.classification_loglik = classification_loglik(m, d);
  row.df = degrees_of_freedom(m.K(), m.p, m.q);
  row.bic = bic(row.loglik, m.K(), m.p, m.q, n);
  row.icl = icl(row.classification_loglik, m.K(), m.p, m.q, n);
  for (const auto& c : sel.calibrations) {
    row.panic.push_back(panic(row.loglik, m.K(), m.p, m.q, n, c.alpha(), c.beta));
  }
  return row;
}

namespace {

template <class Value>
std::optional<int> argmin_k(const std::vector<IcRow>& rows, Value&& value) {
  std::optional<int> best;
  double best_value = std::numeric_limits<double>::infinity();
  for (const auto& r : rows) {
    if (!r.ok) continue;
    const double v = value(r);
    if (!best || v < best_value || (v == best_value && r.K < *best)) {
      best = r.K;
      best_value = v;
    }
  }
  return best;
}

}  // namespace

void choose_orders(IcTable& table) {
  table.chosen_bic = argmin_k(table.rows, [](const IcRow& r) { return r.bic; });
  table.chosen_icl = argmin_k(table.rows, [](const IcRow& r) { return r.icl; });
  table.chosen_panic.clear();
  for (std::size_t c = 0; c < table.calibrations.size(); ++c) {
    table.chosen_panic.push_back(
        argmin_k(table.rows, [c](const IcRow& r) { return r.panic[c]; }));
  }
}

IcTable sweep_k(const Dataset& d, const std::vector<int>& k_range, const FitConfig& cfg,
                const SelectConfig& sel) {
  if (k_range.empty()) fail(ErrorCode::invalid_argument, "K range is empty");
  IcTable table;
  table.calibrations = sel.calibrations;
  table.rows.resize(k_range.size());
  parallel_for(k_range.size(), cfg.threads, [&](std::size_t j) {
    FitConfig c = cfg;
    c.K = k_range[j];
    c.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(c.K));
    c.threads = 1;
    IcRow& row = table.rows[j];
    try {
      const FitReport rep = fit_salmoe(d, c);
      row = score_fit(rep.model, d, sel);
      row.converged = rep.converged;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::singular_design) throw;
      row = IcRow{};
      row.K = c.K;
      row.ok = false;
      row.error = e.what();
      row.df = degrees_of_freedom(c.K, d.p(), d.q());
    }
  });
  choose_orders(table);
  return table;
}

}  // namespace salmoe
