#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "sumrules/errors.hpp"
#include "sumrules/ldp.hpp"
#include "sumrules/oprl.hpp"

using namespace sumrules;

namespace {

// Exact -(1/n) log P(|S_n - x| <= delta): n S_n is Gamma(n, 1).
double exact_window_rate(double x, std::size_t n, double delta) {
  const double nd = static_cast<double>(n);
  const double lo = nd * std::max(0.0, x - delta);
  const double hi = nd * (x + delta);
  // Difference of whichever tail is small, so the far tail does not cancel.
  const double p = x > 1.0 ? boost::math::gamma_q(nd, lo) - boost::math::gamma_q(nd, hi)
                           : boost::math::gamma_p(nd, hi) - boost::math::gamma_p(nd, lo);
  return -std::log(p) / nd;
}

// Single-threaded replay of the naive hit count over the documented streams.
std::uint64_t replay_naive_hits(double x, std::size_t n, std::size_t trials, double delta, std::uint64_t seed) {
  std::uint64_t hits = 0;
  for (std::size_t s = 0; s < kMcStreams; ++s) {
    const std::size_t count = trials / kMcStreams + (s < trials % kMcStreams ? 1 : 0);
    auto gen = make_stream(seed, s);
    for (std::size_t t = 0; t < count; ++t) {
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) sum += sample_exponential(gen);
      if (std::abs(sum / static_cast<double>(n) - x) <= delta) ++hits;
    }
  }
  return hits;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

}  // namespace

TEST_CASE("log-MGF of the unit exponential") {
  CHECK(logmgf_exponential(0.0) == 0.0);
  CHECK(logmgf_exponential(0.5) == doctest::Approx(std::log(2.0)));
  CHECK(logmgf_exponential(-1.0) == doctest::Approx(-std::log(2.0)));
  CHECK_THROWS_AS(logmgf_exponential(1.0), DomainError);
  // Convexity by second differences.
  for (double l = -5.0; l < 0.9; l += 0.1) {
    const double h = 1e-3;
    CHECK(logmgf_exponential(l + h) - 2.0 * logmgf_exponential(l) + logmgf_exponential(l - h) > 0.0);
  }
}

TEST_CASE("legendre transform examples") {
  for (double x : {0.25, 0.5, 1.0, 1.44, 2.0, 4.0}) {
    const auto r = legendre(logmgf_exponential, x, kExponentialLambdaRange);
    CHECK(r.value == doctest::Approx(x - 1.0 - std::log(x)).epsilon(1e-10));
    CHECK(r.maximizer == doctest::Approx(1.0 - 1.0 / x).epsilon(1e-6));
    CHECK_FALSE(r.boundary_supremum);
  }
  CHECK(std::abs(legendre(logmgf_exponential, 1.0, kExponentialLambdaRange).value) < 1e-14);
  // A range that cuts off the maximizer is flagged.
  const auto clipped = legendre(logmgf_exponential, 4.0, {-1.0, 0.5});
  CHECK(clipped.boundary_supremum);
  CHECK(clipped.value < 4.0 - 1.0 - std::log(4.0));
  CHECK_THROWS_AS(legendre(logmgf_exponential, 1.0, {1.0, 0.0}), DomainError);
  // Small x needs lambda* = 1 - 1/x far below the default range.
  for (double x : {1e-2, 1e-4}) {
    const auto r = legendre_exponential(x);
    CHECK_FALSE(r.boundary_supremum);
    CHECK(r.value == doctest::Approx(x - 1.0 - std::log(x)).epsilon(1e-10));
  }
}

TEST_CASE("cramer_rate_exponential equals G(sqrt x)") {
  for (double x : {0.1, 0.7, 1.0, 1.3, 2.5, 9.0}) {
    CHECK(cramer_rate_exponential(x) == doctest::Approx(g_functional(std::sqrt(x))).epsilon(1e-13));
  }
  CHECK_THROWS_AS(cramer_rate_exponential(0.0), DomainError);
}

TEST_CASE("check_G_rate on 100 grid points") {
  const auto grid = linspace(0.1, 3.0, 100);
  const auto est = check_G_rate(grid);
  CHECK(est.max_legendre_error() <= 1e-8);
  CHECK_FALSE(est.mc);
  for (bool flag : est.boundary_flags) CHECK_FALSE(flag);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(est.analytic[i] == doctest::Approx(grid[i] * grid[i] - 1.0 - 2.0 * std::log(grid[i])).epsilon(1e-12));
  }
  const std::vector<double> bad{1.0, -0.5};
  CHECK_THROWS_AS(check_G_rate(bad), DomainError);
}

TEST_CASE("splitmix64 and streams") {
  // Reference outputs of splitmix64 seeded with 0 (first three draws).
  std::uint64_t state = 0;
  const std::uint64_t expect[] = {0xE220A8397B1DCDAFULL, 0x6E789E6AA1B965F4ULL, 0x06C45D188009454FULL};
  for (auto e : expect) {
    CHECK(splitmix64(state) == e);
    state += 0x9E3779B97F4A7C15ULL;
  }
  auto a = make_stream(7, 0);
  auto b = make_stream(7, 0);
  auto c = make_stream(7, 1);
  const auto a0 = a();
  CHECK(a0 == b());
  CHECK(a0 != c());
  auto g = make_stream(1, 0);
  double mean = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double e = sample_exponential(g);
    CHECK_MESSAGE(e >= 0.0, "negative exponential draw");
    mean += e;
  }
  CHECK(mean / 100000.0 == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("mc_rate near the mean") {
  const auto r = mc_rate(1.0, 50, 100000, 0.02, 20141);
  CHECK_FALSE(r.divergent);
  CHECK(r.rate <= 0.05);
  CHECK(r.rate == doctest::Approx(exact_window_rate(1.0, 50, 0.02)).epsilon(0.02));
  const auto naive = mc_rate(1.0, 50, 100000, 0.02, 20141, McMethod::naive);
  CHECK(naive.rate <= 0.05);
  CHECK(naive.rate == doctest::Approx(exact_window_rate(1.0, 50, 0.02)).epsilon(0.02));
}

TEST_CASE("mc_rate against Cramer at x = 1.5 and x = 2.0") {
  for (double x : {1.5, 2.0}) {
    const auto r = mc_rate(x, 200, 200000, 0.02, 20141);
    CHECK_FALSE(r.divergent);
    CHECK(std::abs(r.rate - cramer_rate_exponential(x)) <= 0.15 * cramer_rate_exponential(x));
    CHECK(r.rate == doctest::Approx(exact_window_rate(x, 200, 0.02)).epsilon(0.01));
  }
}

TEST_CASE("mc_rate at x = 1.3 tracks the finite-n estimand, not Cramer") {
  const double exact = exact_window_rate(1.3, 200, 0.02);
  const double cramer = cramer_rate_exponential(1.3);
  const auto r = mc_rate(1.3, 200, 200000, 0.02, 20141);
  CHECK(r.rate == doctest::Approx(exact).epsilon(0.01));
  // The O(log n / n) prefactor keeps the estimand itself more than 15% from Cramer.
  CHECK(std::abs(exact - cramer) > 0.15 * cramer);
}

TEST_CASE("naive estimator in the far tail reports divergence") {
  const auto r = mc_rate(1.5, 200, 100000, 0.02, 20141, McMethod::naive);
  CHECK(r.divergent);
  CHECK(r.hits == 0);
  CHECK(std::isinf(r.rate));
}

TEST_CASE("mc_rate is deterministic and thread-independent") {
  const auto a = mc_rate(1.2, 30, 50000, 0.02, 99, McMethod::naive);
  const auto b = mc_rate(1.2, 30, 50000, 0.02, 99, McMethod::naive);
  CHECK(a.hits == b.hits);
  CHECK(a.rate == b.rate);
  CHECK(a.hits == replay_naive_hits(1.2, 30, 50000, 0.02, 99));
  const auto c = mc_rate(1.2, 30, 50000, 0.02, 100, McMethod::naive);
  CHECK(c.hits != a.hits);
  const auto t1 = mc_rate(1.7, 100, 20000, 0.02, 5);
  const auto t2 = mc_rate(1.7, 100, 20000, 0.02, 5);
  CHECK(t1.rate == t2.rate);
  CHECK(t1.probability == t2.probability);
}

TEST_CASE("mc_rate argument checks") {
  CHECK_THROWS_AS(mc_rate(0.0, 10, 10000, 0.02, 1), DomainError);
  CHECK_THROWS_AS(mc_rate(1.0, 0, 10000, 0.02, 1), DomainError);
  CHECK_THROWS_AS(mc_rate(1.0, 10, 10000, 0.0, 1), DomainError);
  CHECK_THROWS_AS(mc_rate(1.0, 10, 100, 0.02, 1), DomainError);
  CHECK(mc_method_from_string("naive") == McMethod::naive);
  CHECK(to_string(McMethod::tilted) == "tilted");
  CHECK_THROWS_AS(mc_method_from_string("exact"), InputError);
}

TEST_CASE("semicircle log potential") {
  CHECK(log_potential_semicircle_closed_form(2.5) == doctest::Approx(std::log(2.0) + 0.125).epsilon(1e-14));
  CHECK(log_potential_semicircle(2.5) == doctest::Approx(std::log(2.0) + 0.125).epsilon(1e-10));
  for (double E : {2.05, 2.5, 3.0, 5.0, 10.0, -2.2, -7.0}) {
    CHECK(std::abs(log_potential_semicircle(E) - log_potential_semicircle_closed_form(E)) <= 1e-8);
    CHECK(log_potential_semicircle_closed_form(E) == log_potential_semicircle_closed_form(-E));
    // U'(E) = integral of 1 / (E - x) = -m_free(E) = 1 / beta.
    const double h = 1e-5;
    const double d = (log_potential_semicircle_closed_form(E + h) - log_potential_semicircle_closed_form(E - h)) / (2 * h);
    CHECK(std::abs(d + m_free(E).real()) <= 1e-6);
  }
  // Far field: U(E) = log E - 1/(2 E^2) + O(E^-4).
  const double E = 1e3;
  CHECK(std::abs(log_potential_semicircle_closed_form(E) - std::log(E)) <= 1e-6);
  CHECK_THROWS_AS(log_potential_semicircle(1.0), DomainError);
}

TEST_CASE("F integral identity and the potential relation") {
  const auto energies = linspace(2.05, 6.0, 40);
  for (double E : energies) CHECK(std::abs(f_integral_identity(E) - f_functional(E)) <= 1e-8);
  CHECK(f_integral_identity(2.0) == 0.0);
  CHECK_THROWS_AS(f_integral_identity(1.0), DomainError);
  const auto rows = potential_relation(energies);
  REQUIRE(rows.size() == energies.size());
  for (const auto& row : rows) {
    CHECK(row.f_value == f_functional(row.energy));
    CHECK(std::abs(row.relation_residual) <= 1e-8);
  }
}

TEST_CASE("rate-function serialization") {
  const std::vector<double> grid{0.5, 1.0, 1.5};
  const auto plain = check_G_rate(grid);
  const std::string csv = to_csv(plain);
  CHECK(csv.rfind("x,analytic,legendre,mc,n,trials,delta,seed\n", 0) == 0);
  std::istringstream lines(csv);
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    if (count > 0) CHECK(std::count(line.begin(), line.end(), ',') == 7);
    ++count;
  }
  CHECK(count == 4);
  const auto js = to_json(plain);
  CHECK(js["mc"].is_null());
  CHECK(js["xs"].size() == 3);

  McConfig cfg;
  cfg.n = 50;
  cfg.trials = 20000;
  const auto with_mc = check_G_rate(grid, cfg);
  const auto jm = to_json(with_mc);
  REQUIRE(jm["mc"].is_array());
  CHECK(jm["mc"].size() == 3);
  CHECK(jm["mc_config"]["streams"] == kMcStreams);
  CHECK(jm["mc_config"]["method"] == "tilted");
}
