#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fixtures.hpp"
#include "salmoe/fit.hpp"
#include "salmoe/select.hpp"

using namespace salmoe;

TEST_SUITE("select") {
  TEST_CASE("degrees of freedom") {
    CHECK(degrees_of_freedom(2, 1, 1) == 10);
    CHECK(degrees_of_freedom(1, 1, 1) == 4);
    CHECK(degrees_of_freedom(2, 4, 4) == 19);
    for (int p : {0, 1, 3})
      for (int q : {0, 2})
        for (int K = 1; K <= 10; ++K) {
          // (p+1) + 2 expert parameters per component, (q+1) gating per free column.
          CHECK(degrees_of_freedom(K, p, q) == K * (p + 3) + (K - 1) * (q + 1));
          if (K > 1) CHECK(degrees_of_freedom(K, p, q) - degrees_of_freedom(K - 1, p, q) == p + q + 4);
        }
  }

  TEST_CASE("BIC values") {
    CHECK(bic(0, 2, 1, 1, std::numbers::e) == doctest::Approx(10).epsilon(1e-15));
    CHECK(bic(-100, 2, 1, 1, 500) == doctest::Approx(200 + 10 * std::log(500.0)).epsilon(1e-15));
    CHECK(bic(-100, 2, 1, 1, 500) == doctest::Approx(262.146).epsilon(1e-6));
  }

  TEST_CASE("PanIC calibration") {
    CHECK(log_plus_iterated(1000, 1) == doctest::Approx(std::log(1000.0)).epsilon(1e-15));
    CHECK(log_plus_iterated(1000, 2) == doctest::Approx(std::log(std::log(1000.0))).epsilon(1e-15));
    CHECK(log_plus_iterated(1000, 2) == doctest::Approx(1.9326).epsilon(1e-4));
    CHECK(log_plus_iterated(500, 8) == 1.0);
    CHECK(log_plus_iterated(2, 1) == 1.0);

    CHECK(panic_alpha(1, 1000) == doctest::Approx(1 / (2 * std::sqrt(1000.0))).epsilon(1e-14));
    CHECK(panic_alpha(1, 1000) == doctest::Approx(0.0158114).epsilon(1e-6));
    CHECK(panic_alpha(2, 1000) == doctest::Approx(0.056512).epsilon(1e-5));
    CHECK(panic_alpha(1, std::numbers::e) == doctest::Approx(std::exp(-0.5) / 2).epsilon(1e-14));
    CHECK(panic_alpha(1, std::numbers::e) == doctest::Approx(0.30327).epsilon(1e-5));

    const double a = panic_alpha(1, 1000);
    const double expect = 200 + 2 * a * 10 * std::sqrt(500.0) * std::log(500.0);
    CHECK(panic(-100, 2, 1, 1, 500, a, 1) == doctest::Approx(expect).epsilon(1e-14));
    CHECK(std::abs(panic(-100, 2, 1, 1, 500, a, 1) - 243.95) < 0.01);
    CHECK(panic(-100, 2, 1, 1, 500, a, 30) == doctest::Approx(200 + 2 * a * 10 * std::sqrt(500.0)).epsilon(1e-14));

    for (int beta : {1, 2})
      for (double nu : {1e3, 1e4})
        for (double ll : {-1234.5, 0.0, 87.0}) {
          const double b = bic(ll, 3, 2, 1, nu);
          CHECK(std::abs(panic(ll, 3, 2, 1, nu, panic_alpha(beta, nu), beta) - b) <= 1e-10 * std::max(1.0, std::abs(b)));
        }
    CHECK(PanicCalibration{2, 1e4}.label() == "panic_b2_nu10000");
  }

  TEST_CASE("criteria increase with df") {
    for (int K = 1; K < 6; ++K) {
      CHECK(bic(-50, K + 1, 1, 1, 300) > bic(-50, K, 1, 1, 300));
      CHECK(icl(-50, K + 1, 1, 1, 300) > icl(-50, K, 1, 1, 300));
      CHECK(panic(-50, K + 1, 1, 1, 300, 0.02, 1) > panic(-50, K, 1, 1, 300, 0.02, 1));
    }
  }

  TEST_CASE("classification log-likelihood") {
    std::mt19937_64 rng(1);
    for (int c = 0; c < 20; ++c) {
      const SalMoeModel m = fixture::random_model(rng, 1 + c % 4, 1, 1);
      const Dataset d = fixture::random_data(rng, 50, 1, 1);
      const double ll = log_likelihood(m, d), cl = classification_loglik(m, d);
      if (m.K() == 1) CHECK(cl == ll);
      CHECK(cl <= ll + 1e-10);
      const double gap = icl(m, d) - bic(ll, m.K(), 1, 1, 50);
      CHECK(gap >= 0);
      CHECK(std::abs(gap - 2 * (ll - cl)) <= 1e-10 * std::max(1.0, std::abs(ll)));
    }
    // Well separated truth: responsibilities are nearly one-hot.
    const Dataset d = fixture::scenario1(3, 500);
    const SalMoeModel t = table1_model();
    const Responsibilities g = responsibilities(t, d);
    std::vector<Eigen::Index> sharp;
    for (Eigen::Index i = 0; i < d.n(); ++i)
      if (g.row(i).maxCoeff() >= 0.999) sharp.push_back(i);
    const Dataset s = d.subset(sharp);
    CHECK(log_likelihood(t, s) - classification_loglik(t, s) <= 0.01 * static_cast<double>(s.n()));
  }

  TEST_CASE("order choice and ties") {
    IcTable t;
    t.calibrations = {PanicCalibration{}};
    for (int K : {1, 2, 3}) {
      IcRow r;
      r.K = K;
      r.ok = K != 3;
      r.bic = K == 3 ? -1e9 : 10;
      r.icl = 20 - K;
      r.panic = {5};
      t.rows.push_back(r);
    }
    choose_orders(t);
    CHECK(*t.chosen_bic == 1);
    CHECK(*t.chosen_icl == 2);
    CHECK(*t.chosen_panic[0] == 1);
  }

  TEST_CASE("sweep with a single K") {
    const Dataset d = fixture::scenario1(5, 200);
    FitConfig c;
    c.restarts = 3;
    const IcTable t = sweep_k(d, {1}, c, SelectConfig{{PanicCalibration{1, 1e3}, PanicCalibration{2, 1e4}}});
    REQUIRE(t.rows.size() == 1);
    CHECK(*t.chosen_bic == 1);
    CHECK(*t.chosen_icl == 1);
    CHECK(*t.chosen_panic[0] == 1);
    CHECK(*t.chosen_panic[1] == 1);
  }

  TEST_CASE("single-component SAL data selects one component") {
    int hits_bic = 0, hits_icl = 0, hits_panic = 0;
    for (int rep = 0; rep < 100; ++rep) {
      ScenarioSpec spec;
      spec.truth = table1_model(ExpertFamily::sal);
      spec.truth.experts.resize(1);
      spec.truth.gating = GatingParams(1, 1);
      spec.n = 500;
      Rng rng(static_cast<std::uint64_t>(rep) + 77);
      const Dataset d = generate(spec, rng);
      FitConfig c;
      c.restarts = 5;
      c.seed = static_cast<std::uint64_t>(rep);
      const IcTable t = sweep_k(d, {1, 2, 3}, c);
      hits_bic += t.chosen_bic == 1;
      hits_icl += t.chosen_icl == 1;
      hits_panic += t.chosen_panic[0] == 1;
    }
    CHECK(hits_bic >= 90);
    CHECK(hits_icl >= 90);
    CHECK(hits_panic >= 90);
  }

  TEST_CASE("three-component SAL data yields a well-formed table") {
    ScenarioSpec spec;
    spec.truth = three_component_model(ExpertFamily::sal);
    spec.n = 500;
    Rng rng(9);
    const Dataset d = generate(spec, rng);
    FitConfig c;
    c.restarts = 5;
    const IcTable t = sweep_k(d, {1, 2, 3, 4}, c, SelectConfig{{PanicCalibration{1, 1e3}, PanicCalibration{2, 1e4}}});
    CHECK(t.rows.size() == 4);
    CHECK(t.chosen_bic.has_value());
    CHECK(t.chosen_icl.has_value());
    CHECK(t.chosen_panic.size() == 2);
    for (const auto& r : t.rows) {
      if (!r.ok) continue;
      CHECK(r.df == degrees_of_freedom(r.K, 1, 1));
      CHECK(r.icl >= r.bic - 1e-9);
      CHECK(r.panic.size() == 2);
    }
  }
}
