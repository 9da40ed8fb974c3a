#pragma once

#include <optional>
#include <string>
#include <vector>

#include "salmoe/fit.hpp"

namespace salmoe {

/// K (p + q + 4) - q - 1 free parameters.
int degrees_of_freedom(int K, int p, int q);

/// log_+(x) = max{1, log x}, applied `beta` times.
double log_plus_iterated(double x, int beta);

double bic(double loglik, int K, int p, int q, double n);

/// Sum over rows of log{pi_k g_k} at the MAP component.
double classification_loglik(const SalMoeModel& m, const Dataset& d);

double icl(const SalMoeModel& m, const Dataset& d);
double icl(double classification_ll, int K, int p, int q, double n);

/// alpha(beta, nu) making the PanIC penalty equal df log(nu) at n = nu.
double panic_alpha(int beta, double nu);

/// -2 l + 2 alpha df sqrt(n) log_+^(beta)(n).
double panic(double loglik, int K, int p, int q, double n, double alpha, int beta);

struct PanicCalibration {
  int beta = 1;
  double nu = 1000.0;

  double alpha() const { return panic_alpha(beta, nu); }
  std::string label() const;
};

struct SelectConfig {
  std::vector<PanicCalibration> calibrations{PanicCalibration{}};
};

struct IcRow {
  int K = 0;
  bool ok = false;
  std::string error;  ///< set when the fit for this K failed
  double loglik = 0.0;
  double classification_loglik = 0.0;
  int df = 0;
  double bic = 0.0;
  double icl = 0.0;
  std::vector<double> panic;  ///< one per calibration
  bool converged = false;
};

struct IcTable {
  std::vector<IcRow> rows;
  std::vector<PanicCalibration> calibrations;
  std::optional<int> chosen_bic;
  std::optional<int> chosen_icl;
  std::vector<std::optional<int>> chosen_panic;
};

/// Fills the criteria of a row from a fitted model.
IcRow score_fit(const SalMoeModel& m, const Dataset& d, const SelectConfig& sel);

/// Recomputes argmins over successful rows; ties go to the smaller K.
void choose_orders(IcTable& table);

/// One initialize + em_mm_fit per K (seeded by derive_seed(cfg.seed, K)),
/// reused for every criterion. Failed fits become rows with ok = false.
IcTable sweep_k(const Dataset& d, const std::vector<int>& k_range, const FitConfig& cfg,
                const SelectConfig& sel = {});

}  // namespace salmoe
