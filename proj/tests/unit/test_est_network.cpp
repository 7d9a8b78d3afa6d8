#include "doctest.h"
#include "fixtures.hpp"

#include "ilab/est_basic.hpp"
#include "ilab/est_network.hpp"

#include <cmath>

using namespace ilab;
using namespace ilab::network;

namespace {

BipartiteGraph star_graph() {
  // Unit 1 -> {1,2,3}; unit 2 -> {1}; unit 3 -> {2}; unit 4 (ineligible) -> {1}.
  BipartiteGraph g;
  g.treatment_units = {{1, true}, {2, true}, {3, true}, {4, false}};
  g.connected_units = {1, 2, 3};
  g.edges = {{1, 1, 1.0}, {1, 2, 2.0}, {1, 3, 0.5}, {2, 1, 1.0}, {3, 2, 3.0}, {4, 1, 1.0}};
  return g;
}

// Exposures evaluated literally from the edge list.
std::vector<double> brute_direct(const BipartiteGraph& g, const std::vector<int>& w, bool weighted) {
  std::vector<double> out(g.treatment_units.size(), 0.0);
  for (std::size_t j = 0; j < g.treatment_units.size(); ++j) {
    for (const auto& e : g.edges) {
      if (e.treatment_id == g.treatment_units[j].id) out[j] += w[j] * (weighted ? e.weight : 1.0);
    }
  }
  return out;
}

std::vector<double> brute_indirect(const BipartiteGraph& g, const std::vector<int>& w, bool weighted) {
  std::vector<double> out(g.treatment_units.size(), 0.0);
  for (std::size_t j = 0; j < g.treatment_units.size(); ++j) {
    for (const auto& ejc : g.edges) {
      if (ejc.treatment_id != g.treatment_units[j].id) continue;
      for (std::size_t k = 0; k < g.treatment_units.size(); ++k) {
        if (k == j) continue;
        for (const auto& ekc : g.edges) {
          if (ekc.treatment_id == g.treatment_units[k].id && ekc.connected_id == ejc.connected_id) {
            out[j] += (weighted ? ejc.weight : 1.0) * w[k];
          }
        }
      }
    }
  }
  return out;
}

double max_gap(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return INFINITY;
  double g = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) g = std::max(g, std::abs(a[i] - b[i]));
  return g;
}

regress::LearnerConfig tiny_lambda() {
  regress::LearnerConfig l;
  l.lambda_grid = {1e-10};
  return l;
}

}  // namespace

TEST_SUITE("est_network") {
  TEST_CASE("direct exposure is own treatment times degree") {
    const auto g = star_graph();
    const auto e = direct_exposure(g, std::vector<int>{1, 0, 1, 0});
    CHECK(e == std::vector<double>{3, 0, 1, 0});
    const auto ew = direct_exposure(g, std::vector<int>{1, 0, 1, 0}, true);
    CHECK(ew == std::vector<double>{3.5, 0, 3, 0});
  }

  TEST_CASE("indirect exposure counts treated co-serving units") {
    const auto g = star_graph();
    // Unit 2 shares connected unit 1 with treated unit 1 only.
    CHECK(indirect_exposure(g, std::vector<int>{1, 0, 0, 0})[1] == 1.0);
    CHECK(indirect_exposure(g, std::vector<int>{1, 1, 1, 0}) == std::vector<double>{2, 1, 1, 2});
    for (double v : indirect_exposure(g, std::vector<int>{0, 0, 0, 0})) CHECK(v == 0.0);
    for (double v : direct_exposure(g, std::vector<int>{0, 0, 0, 0})) CHECK(v == 0.0);
  }

  TEST_CASE("assignments must cover every treatment unit") {
    CHECK_THROWS_AS(direct_exposure(star_graph(), std::vector<int>{1, 0}), std::invalid_argument);
    CHECK_THROWS_AS(indirect_exposure(star_graph(), std::vector<int>{1, 0, 0, 0, 1}), std::invalid_argument);
  }

  TEST_CASE("exposures equal brute force on random graphs") {
    Rng rng(123);
    for (int trial = 0; trial < 200; ++trial) {
      const auto g = fixtures::random_graph(rng, 30);
      std::vector<int> w(g.treatment_units.size());
      for (std::size_t j = 0; j < w.size(); ++j) w[j] = g.treatment_units[j].eligible && uniform01(rng) < 0.5;
      for (bool weighted : {false, true}) {
        // Summation order differs, so weighted sums agree to rounding only.
        CHECK(max_gap(direct_exposure(g, w, weighted), brute_direct(g, w, weighted)) < 1e-12);
        CHECK(max_gap(indirect_exposure(g, w, weighted), brute_indirect(g, w, weighted)) < 1e-12);
      }
    }
  }

  TEST_CASE("exposure bounds hold") {
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
      const auto g = fixtures::random_graph(rng, 40);
      const auto adj = g.adjacency();
      std::vector<int> w(g.treatment_units.size());
      for (std::size_t j = 0; j < w.size(); ++j) w[j] = g.treatment_units[j].eligible && uniform01(rng) < 0.6;
      const auto dir = direct_exposure(g, w);
      const auto ind = indirect_exposure(g, w);
      for (std::size_t j = 0; j < w.size(); ++j) {
        const auto deg = static_cast<double>(adj.of_treatment[j].size());
        CHECK((dir[j] == 0.0 || dir[j] == deg));
        double cap = 0.0;
        for (const auto& [c, wt] : adj.of_treatment[j]) cap += static_cast<double>(adj.of_connected[c].size()) - 1.0;
        CHECK(ind[j] >= 0.0);
        CHECK(ind[j] <= cap);
      }
    }
  }

  TEST_CASE("eligible exposures map ids to panel rows and hold ineligible units at zero") {
    const auto g = star_graph();
    const auto e = eligible_exposures(g, std::vector<int>{1, 1, 1});
    CHECK(e.direct.size() == 3);
    CHECK(e.direct(0) == 3.0);
    CHECK(e.indirect(0) == 2.0);  // the ineligible neighbour of unit 1 stays untreated
    CHECK(e.indirect(1) == 1.0);
  }

  TEST_CASE("psi reproduces an exactly linear outcome") {
    ExposureVector e{Vector::LinSpaced(8, 0, 7), Vector::LinSpaced(8, 3, -4).cwiseAbs()};
    const Vector y = e.direct;
    const auto m = fit_psi(e, Matrix(8, 0), y, tiny_lambda(), 1);
    CHECK((m.predict(e.direct, e.indirect, Matrix(8, 0)) - y).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(m.residual_scale < 1e-6);
    CHECK(m.direct_max == 7.0);
  }

  TEST_CASE("constant outcomes give a constant predictor and zero contrast") {
    ExposureVector e{(Vector(4) << 0, 1, 2, 3).finished(), (Vector(4) << 1, 0, 2, 1).finished()};
    const auto m = fit_psi(e, Matrix(4, 0), Vector::Constant(4, 2.5), {}, 1);
    ExposureVector all{Vector::Constant(4, 9.0), Vector::Constant(4, 4.0)};
    CHECK((m.predict(all.direct, all.indirect, Matrix(4, 0)).array() - 2.5).abs().maxCoeff() < 1e-12);
    CHECK(std::abs(ptte_point(m, all, Matrix(4, 0))) < 1e-12);
  }

  TEST_CASE("identical exposure pairs are degenerate") {
    ExposureVector e{Vector::Constant(5, 2.0), Vector::Constant(5, 1.0)};
    CHECK_THROWS_AS(fit_psi(e, Matrix(5, 0), Vector::LinSpaced(5, 0, 1), {}, 1), regress::DegenerateError);
  }

  TEST_CASE("psi equal to direct exposure gives the mean degree") {
    // Degrees {1,2,3}; under all-treated Psi = e_dir, so PTTE = 2.
    BipartiteGraph g;
    g.treatment_units = {{1, true}, {2, true}, {3, true}};
    g.connected_units = {1, 2, 3};
    g.edges = {{1, 1, 1.0}, {2, 2, 1.0}, {2, 3, 1.0}, {3, 1, 1.0}, {3, 2, 1.0}, {3, 3, 1.0}};
    const ExposureVector obs{(Vector(3) << 1, 0, 3).finished(), (Vector(3) << 1, 2, 1).finished()};
    const auto m = fit_psi(obs, Matrix(3, 0), obs.direct, tiny_lambda(), 1);
    const auto all = eligible_exposures(g, std::vector<int>{1, 1, 1});
    CHECK(ptte_point(m, all, Matrix(3, 0)) == doctest::Approx(2.0).epsilon(1e-6));
  }

  TEST_CASE("psi explains noiseless simulated deltas out of sample") {
    fixtures::SimSetup s;
    s.graph.n_eligible = 400;
    s.graph.n_ineligible = 50;
    s.graph.n_connected = 200;
    s.dgp.gamma = 0.8;
    s.dgp.sigma = 0;
    s.rollout = {{5}, {0.5}};
    const auto d = fixtures::simulate(s, 3);
    const Vector delta = basic::deltas(basic::aggregate_pre_post(d));
    const auto e = eligible_exposures(*d.graph, d.treatments.final_assignment());
    const Eigen::Index half = 200;
    const ExposureVector train{e.direct.head(half), e.indirect.head(half)};
    const auto m = fit_psi(train, Matrix(half, 0), delta.head(half), {}, 1);
    const Vector pred = m.predict(e.direct.tail(half), e.indirect.tail(half), Matrix(half, 0));
    const Vector yt = delta.tail(half);
    const double ss_res = (yt - pred).squaredNorm();
    const double ss_tot = (yt.array() - yt.mean()).square().sum();
    CHECK(1.0 - ss_res / ss_tot >= 0.9);
  }

  TEST_CASE("estimate needs a graph and reports its conventions") {
    auto d = fixtures::tiny_dataset();
    const auto e = estimate_ptte(d, {}, {20, 1});
    CHECK(e.method == Method::network_aware);
    CHECK(e.ci_low <= e.point);
    CHECK(e.point <= e.ci_high);
    CHECK(e.metadata.at("all_treated_exposure") == "eligible_treated_ineligible_control");
    CHECK(e.metadata.at("weighted_exposures") == "false");
    d.graph.reset();
    CHECK_THROWS_AS(estimate_ptte(d, {}, {20, 1}), ValidationError);
  }

  TEST_CASE("extrapolation beyond the observed exposures is flagged") {
    fixtures::SimSetup s;
    s.graph.n_eligible = 100;
    s.graph.n_connected = 30;
    s.rollout = {{5}, {0.3}};
    const auto d = fixtures::simulate(s, 8);
    const auto e = estimate_ptte(d, {}, {20, 1});
    bool flagged = false;
    for (const auto& w : e.warnings) flagged = flagged || w.find("exceed the observed range") != std::string::npos;
    CHECK(flagged);
  }

  TEST_CASE("without interference network and basic estimates agree within joint noise") {
    fixtures::SimSetup s;
    s.graph.n_eligible = 400;
    s.graph.n_connected = 200;
    s.dgp.gamma = 0;
    s.dgp.sigma = 2;
    s.rollout = {{5}, {0.5}};
    const auto d = fixtures::simulate(s, 21);
    const auto n = estimate_ptte(d, {}, {150, 2});
    const auto b = basic::estimate_basic(d, {}, {150, 2});
    const double se_n = (n.ci_high - n.ci_low) / 3.92;
    const double se_b = (b.ci_high - b.ci_low) / 3.92;
    CHECK(std::abs(n.point - b.point) < 3 * std::sqrt(se_n * se_n + se_b * se_b));
  }

  TEST_CASE("weighted exposures use edge weights") {
    auto d = fixtures::tiny_dataset();
    const auto plain = estimate_ptte(d, {{}, false}, {10, 1});
    const auto weighted = estimate_ptte(d, {{}, true}, {10, 1});
    CHECK(weighted.metadata.at("weighted_exposures") == "true");
    CHECK(plain.metadata.at("weighted_exposures") == "false");
  }
}
