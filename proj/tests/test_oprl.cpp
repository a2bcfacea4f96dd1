#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "sumrules/errors.hpp"
#include "sumrules/measures.hpp"
#include "sumrules/oprl.hpp"

using namespace sumrules;

namespace {

constexpr std::size_t kTruncation = 600;

JacobiParams random_jacobi(std::mt19937_64& gen) {
  std::uniform_int_distribution<std::size_t> len(1, 5);
  std::uniform_real_distribution<double> ua(0.5, 2.0);
  std::uniform_real_distribution<double> ub(-1.0, 1.0);
  const std::size_t n = len(gen);
  std::vector<double> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = ua(gen);
    b[i] = ub(gen);
  }
  return {a, b};
}

// <delta_1, (J_n - z)^{-1} delta_1> for the n x n truncation, by a tridiagonal
// solve (Thomas algorithm). Exponentially close to m(z) off the real axis.
Complex truncated_resolvent(const JacobiParams& J, Complex z, std::size_t n = kTruncation) {
  // Solve (J - z) x = e_1 and return x_1, eliminating from the bottom.
  Complex d = J.b_at(n) - z;
  for (std::size_t k = n - 1; k >= 1; --k) {
    const double a = J.a_at(k);
    d = J.b_at(k) - z - a * a / d;
  }
  return 1.0 / d;
}

// Number of eigenvalues of the n x n truncation below x (Sturm count).
std::size_t sturm_count(const JacobiParams& J, double x, std::size_t n = kTruncation) {
  std::size_t count = 0;
  double q = J.b_at(1) - x;
  if (q < 0.0) ++count;
  for (std::size_t k = 2; k <= n; ++k) {
    const double a = J.a_at(k - 1);
    if (q == 0.0) q = 1e-300;
    q = J.b_at(k) - x - a * a / q;
    if (q < 0.0) ++count;
  }
  return count;
}

// Eigenvalues outside [-2 - margin, 2 + margin] by bisection on the Sturm count.
std::vector<double> oracle_eigenvalues(const JacobiParams& J, double margin = 1e-6) {
  const double hi_bound = 50.0;
  std::vector<double> out;
  auto locate = [&](double lo, double hi, std::size_t k) {
    // smallest x with count(x) > k
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (sturm_count(J, mid) > k ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
  };
  const std::size_t below = sturm_count(J, -2.0 - margin);
  for (std::size_t k = 0; k < below; ++k) out.push_back(locate(-hi_bound, -2.0 - margin, k));
  const std::size_t upto = sturm_count(J, 2.0 + margin);
  const std::size_t total = sturm_count(J, hi_bound);
  for (std::size_t k = upto; k < total; ++k) out.push_back(locate(2.0 + margin, hi_bound, k));
  return out;
}

double reference_f(double E) {
  boost::math::quadrature::tanh_sinh<double> ts;
  return 0.5 * ts.integrate([](double t) { return std::sqrt(std::max(0.0, t * t - 4.0)); }, 2.0, std::abs(E));
}

}  // namespace

TEST_CASE("three_term_step") {
  // Free case reproduces Chebyshev U_n(cos theta) = sin((n+1) theta) / sin theta.
  const double th = 0.7;
  const double x = 2.0 * std::cos(th);
  double prev = 0.0;
  double cur = 1.0;
  for (int n = 0; n < 30; ++n) {
    CHECK(cur == doctest::Approx(std::sin((n + 1) * th) / std::sin(th)).epsilon(1e-12));
    const double next = three_term_step(prev, cur, x, n == 0 ? 0.0 : 1.0, 1.0, 0.0);
    prev = cur;
    cur = next;
  }
  CHECK(three_term_step(0.0, 1.0, x, 1.0, 1.0, 0.0) == doctest::Approx(x));
  const double p1 = three_term_step(0.0, 1.0, 0.0, 1.0, 1.0, 0.0);
  CHECK(three_term_step(1.0, p1, 0.0, 1.0, 1.0, 0.0) == doctest::Approx(-1.0));
  CHECK(three_term_step(0.0, 1.0, 1.7, 1.0, 1.0, 0.5) == doctest::Approx(1.2));
  CHECK_THROWS_AS(three_term_step(0.0, 1.0, 1.0, 1.0, 0.0, 0.0), DomainError);
}

TEST_CASE("JacobiParams invariants and JSON") {
  CHECK_THROWS_AS(JacobiParams({0.0}, {0.0}), DomainError);
  CHECK_THROWS_AS(JacobiParams({-1.0}, {0.0}), DomainError);
  CHECK_THROWS_AS(JacobiParams({1.0}, {std::nan("")}), DomainError);
  CHECK_THROWS_AS(JacobiParams({1.0, 1.0}, {0.0}), DomainError);
  const JacobiParams J({1.2, 0.8}, {0.5, -0.1});
  CHECK(J.a_at(3) == 1.0);
  CHECK(J.b_at(3) == 0.0);
  const auto back = jacobi_from_json(to_json(J));
  CHECK(back.a() == J.a());
  CHECK(back.b() == J.b());
  const auto doc = nlohmann::json::parse(R"({"a":[1.2,1,1],"b":[0.5,0,0],"tail_free_after":1})");
  CHECK(jacobi_from_json(doc).tail_free_after() == 1);
  CHECK_THROWS_AS(jacobi_from_json(nlohmann::json::parse(R"({"a":[1.2,1.1],"b":[0.5,0],"tail_free_after":1})")),
                  InputError);
  CHECK_THROWS_AS(jacobi_from_json(nlohmann::json::parse(R"({"a":[0],"b":[0]})")), InputError);
  CHECK_THROWS_AS(jacobi_from_json(nlohmann::json::parse(R"({"a":[1]})")), InputError);
  CHECK_THROWS_AS(jacobi_from_json(nlohmann::json::parse(R"({"a":["1"],"b":[0]})")), InputError);
}

TEST_CASE("m_free") {
  const Complex m10 = m_free(Complex(0.0, 10.0));
  CHECK(m10.real() == doctest::Approx(0.0));
  CHECK(m10.imag() == doctest::Approx((std::sqrt(104.0) - 10.0) / 2.0).epsilon(1e-13));
  CHECK(m_free(3.0).real() == doctest::Approx((-3.0 + std::sqrt(5.0)) / 2.0).epsilon(1e-14));
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 200; ++i) {
    Complex z(u(gen), u(gen));
    if (std::abs(z.imag()) < 1e-3) continue;
    const Complex m = m_free(z);
    CHECK(std::abs(m - 1.0 / (-z - m)) <= 1e-14 * std::max(1.0, std::abs(m)));
    CHECK(std::abs(m) < 1.0);
  }
  CHECK_THROWS_AS(m_free(Complex(1.0, 0.0)), DomainError);
  const Complex mb = m_free_boundary(1.0);
  CHECK(mb.real() == doctest::Approx(-0.5));
  CHECK(mb.imag() == doctest::Approx(std::sqrt(3.0) / 2.0));
  CHECK(std::abs(m_free(Complex(1.0, 1e-12)) - mb) < 1e-6);
}

TEST_CASE("m_function examples and truncated-matrix oracle") {
  const Complex z(0.3, 0.7);
  CHECK(std::abs(m_function(JacobiParams::free(), z).m - m_free(z)) < 1e-15);
  const JacobiParams J({1.0}, {0.5});
  const Complex z10(0.0, 10.0);
  CHECK(std::abs(m_function(J, z10).m - 1.0 / (0.5 - z10 - m_free(z10))) < 1e-15);
  const Complex big(0.0, 1e6);
  CHECK(std::abs(m_function(J, big).m * big + 1.0) < 1e-5);

  std::mt19937_64 gen(3);
  for (int i = 0; i < 20; ++i) {
    const auto Jr = random_jacobi(gen);
    const Complex w(std::uniform_real_distribution<double>(-3.0, 3.0)(gen), 1.0);
    CHECK(std::abs(m_function(Jr, w).m - truncated_resolvent(Jr, w)) < 1e-10);
  }
}

TEST_CASE("Herglotz property on 200 random (J, z)") {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> re(-4.0, 4.0);
  std::uniform_real_distribution<double> lim(-3.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const auto J = random_jacobi(gen);
    const Complex z(re(gen), std::pow(10.0, lim(gen)));
    CHECK(m_function(J, z).m.imag() > 0.0);
  }
}

TEST_CASE("m_function detects poles") {
  // b_1 = 3 has an eigenvalue at 10/3, where the stripping denominator vanishes.
  CHECK_THROWS_AS(m_function(JacobiParams({1.0}, {3.0}), Complex(10.0 / 3.0, 0.0)), PoleProximityError);
}

TEST_CASE("jacobi_from_measure") {
  const auto free = jacobi_from_measure(semicircle(), 6);
  for (std::size_t n = 1; n <= 6; ++n) {
    CHECK(std::abs(free.a_at(n) - 1.0) <= 1e-8);
    CHECK(std::abs(free.b_at(n)) <= 1e-8);
  }
  const LineMeasure mixed([](double x) { return 0.5 * semicircle_density(x); }, {{2.5, 0.5}});
  const auto one = jacobi_from_measure(mixed, 1);
  CHECK(one.b_at(1) == doctest::Approx(1.25).epsilon(1e-8));
  const auto more = jacobi_from_measure(mixed, 10);
  for (double a : more.a()) CHECK(a > 0.0);
  CHECK_THROWS_AS(jacobi_from_measure(semicircle(64), 100), DomainError);
}

TEST_CASE("jacobi_from_measure with a threshold resonance") {
  // b_1 + 2 - a_1^2 m_free(-2) = 0: w ~ 1 / sqrt(4 - x^2) at x = -2, plus an eigenvalue at 2.05.
  const JacobiParams J({1.5}, {0.25});
  const auto mu = spectral_measure(J);
  REQUIRE(mu.point_masses().size() == 1);
  CHECK(mu.point_masses()[0].position == doctest::Approx(2.05).epsilon(1e-12));
  CHECK(mu.point_masses()[0].mass == doctest::Approx(0.2).epsilon(1e-10));
  const auto back = jacobi_from_measure(mu, 4);
  for (std::size_t k = 1; k <= 4; ++k) {
    CHECK(std::abs(back.a_at(k) - J.a_at(k)) <= 1e-10);
    CHECK(std::abs(back.b_at(k) - J.b_at(k)) <= 1e-10);
  }
}

TEST_CASE("jacobi_from_measure flags a degenerate measure") {
  // Only two atoms and no a.c. part: a_2 vanishes.
  const LineMeasure atoms([](double) { return 0.0; }, {{3.0, 0.5}, {-3.0, 0.5}});
  CHECK_THROWS_AS(jacobi_from_measure(atoms, 3), IllConditionedError);
}

TEST_CASE("spectral_measure of the free matrix is the semicircle") {
  const auto mu = spectral_measure(JacobiParams::free());
  const auto semi = semicircle();
  for (std::size_t j = 0; j < mu.quad_points(); ++j) CHECK(mu.samples()[j] == doctest::Approx(semi.samples()[j]));
  CHECK(mu.point_masses().empty());
}

TEST_CASE("spectral_measure with b_1 = 3") {
  const JacobiParams J({1.0}, {3.0});
  const auto mu = spectral_measure(J);
  REQUIRE(mu.point_masses().size() == 1);
  const double E = mu.point_masses()[0].position;

  // Scalar oracle: bisection on b_1 - E - m_free(E).
  double lo = 2.5;
  double hi = 5.0;
  auto g = [](double e) { return 3.0 - e - m_free(e).real(); };
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  CHECK(E == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-11));
  CHECK(E == doctest::Approx(10.0 / 3.0).epsilon(1e-11));
  // Weight is the residue 1 / (1 + m_free'(E)).
  const double h = 1e-6;
  const double dm = (m_free(E + h).real() - m_free(E - h).real()) / (2.0 * h);
  CHECK(mu.point_masses()[0].mass == doctest::Approx(1.0 / (1.0 + dm)).epsilon(1e-8));
  CHECK(mu.point_masses()[0].mass == doctest::Approx(8.0 / 9.0).epsilon(1e-10));
  CHECK(std::abs(mu.total_mass() - 1.0) <= 1e-8);
}

TEST_CASE("jacobi_eigenvalues match the truncated-matrix Sturm oracle") {
  const std::vector<JacobiParams> cases{JacobiParams({1.0}, {3.0}),       JacobiParams({1.0, 1.0}, {3.0, -3.0}),
                                        JacobiParams({1.9, 1.8}, {0.9, -0.9}), JacobiParams({2.0}, {0.0}),
                                        JacobiParams({0.5, 2.0, 1.5}, {1.0, -1.0, 0.5})};
  for (const auto& J : cases) {
    const auto got = jacobi_eigenvalues(J);
    const auto want = oracle_eigenvalues(J);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i].energy == doctest::Approx(want[i]).epsilon(1e-10));
    double total = spectral_measure(J).ac_mass();
    for (const auto& ev : got) total += ev.weight;
    CHECK(std::abs(total - 1.0) <= 1e-8);
  }
}

TEST_CASE("beta_of_E") {
  CHECK(beta_of_E(2.5) == doctest::Approx(2.0));
  CHECK(beta_of_E(-2.5) == doctest::Approx(-2.0));
  const double b = beta_of_E(2.0001);
  CHECK(b == doctest::Approx(1.0100503).epsilon(1e-6));
  CHECK(std::abs(b + 1.0 / b - 2.0001) <= 1e-14);
  for (double E : {2.0001, 2.1, 3.0, 7.5, -2.3, -11.0}) {
    const double be = beta_of_E(E);
    CHECK(std::abs(be) > 1.0);
    CHECK(std::abs(be + 1.0 / be - E) <= 1e-14 * std::abs(E));
  }
  CHECK_THROWS_AS(beta_of_E(2.0), DomainError);
  CHECK_THROWS_AS(beta_of_E(0.0), DomainError);
}

TEST_CASE("F functional") {
  CHECK(f_functional(2.5) == doctest::Approx(0.25 * (4.0 - 0.25 - std::log(16.0))).epsilon(1e-14));
  CHECK(f_functional(2.5) == doctest::Approx(0.244352).epsilon(1e-5));
  CHECK(f_functional(2.5) == doctest::Approx(reference_f(2.5)).epsilon(1e-12));
  const double ratio = f_functional(2.01) / ((2.0 / 3.0) * std::pow(0.01, 1.5));
  CHECK(std::abs(ratio - 1.0) <= 0.03);
  for (double E : {2.05, 2.5, 3.7, 6.0}) CHECK(f_functional(E) == f_functional(-E));
  for (int i = 0; i < 50; ++i) {
    const double E = 2.05 + (6.0 - 2.05) * i / 49.0;
    CHECK(std::abs(f_functional(E) - reference_f(E)) <= 1e-8);
    CHECK(f_functional(E) > 0.0);
    const double h = 1e-5;
    const double d = (f_functional(E + h) - f_functional(E - h)) / (2.0 * h);
    CHECK(std::abs(d - 0.5 * std::sqrt(E * E - 4.0)) <= 1e-6);
  }
  // The stable series branch near the edge agrees with the integral.
  for (double s : {1e-8, 1e-6, 1e-4, 1e-3}) {
    CHECK(f_functional(2.0 + s) == doctest::Approx(reference_f(2.0 + s)).epsilon(1e-8));
  }
  CHECK_THROWS_AS(f_functional(2.0), DomainError);
}

TEST_CASE("G functional") {
  CHECK(g_functional(1.0) == 0.0);
  CHECK(g_functional(2.0) == doctest::Approx(3.0 - std::log(4.0)).epsilon(1e-14));
  CHECK(g_functional(1.2) == doctest::Approx(0.44 - std::log(1.44)).epsilon(1e-14));
  CHECK(std::abs(g_functional(1.01) / (2.0 * 0.01 * 0.01) - 1.0) <= 0.02);
  for (double a = 0.05; a < 4.0; a += 0.05) {
    if (std::abs(a - 1.0) > 1e-9) CHECK(g_functional(a) > 0.0);
  }
  const double h = 1e-4;
  const double g2 = (g_functional(1.0 + h) - 2.0 * g_functional(1.0) + g_functional(1.0 - h)) / (h * h);
  CHECK(g2 == doctest::Approx(4.0).epsilon(1e-5));
  CHECK_THROWS_AS(g_functional(0.0), DomainError);
}

TEST_CASE("Q functional") {
  CHECK(std::abs(q_functional(semicircle())) <= 1e-10);

  const double eps = 0.1;
  const LineMeasure mixed([eps](double x) { return (1.0 - eps) * semicircle_density(x); }, {{3.0, eps}});
  CHECK(q_functional(mixed) == doctest::Approx(0.5 * std::log(1.0 / 0.9)).epsilon(1e-10));
  CHECK(q_functional(mixed) == doctest::Approx(0.05268).epsilon(1e-3));

  // Tilted semicircles w = semicircle * (1 + c x): Q against tanh-sinh.
  boost::math::quadrature::tanh_sinh<double> ts;
  for (double c : {0.1, 0.3, -0.45}) {
    const LineMeasure mu([c](double x) { return semicircle_density(x) * (1.0 + c * x); }, {});
    const double want = ts.integrate(
                            [c](double x) {
                              const double s = std::sqrt(std::max(0.0, 4.0 - x * x));
                              return -std::log1p(c * x) * s;
                            },
                            -2.0, 2.0) /
                        (4.0 * kPi);
    CHECK(q_functional(mu) == doctest::Approx(want).epsilon(1e-8));
    CHECK(q_functional(mu) > 0.0);
  }
}

TEST_CASE("ks_rhs and ks_lhs examples") {
  CHECK(ks_rhs(JacobiParams::free()) == 0.0);
  CHECK(ks_rhs(JacobiParams({1.0}, {0.5})) == doctest::Approx(0.0625));
  CHECK(ks_rhs(JacobiParams({1.2}, {0.0})) == doctest::Approx(0.5 * (0.44 - std::log(1.44))).epsilon(1e-14));
  CHECK(std::abs(ks_lhs(semicircle())) <= 1e-10);
  const double eps = 0.2;
  const LineMeasure with_ev([eps](double x) { return (1.0 - eps) * semicircle_density(x); }, {{2.5, eps}});
  CHECK(ks_lhs(with_ev) == doctest::Approx(0.5 * std::log(1.0 / (1.0 - eps)) + f_functional(2.5)).epsilon(1e-10));
}

TEST_CASE("verify_killip_simon examples") {
  const auto free = verify_killip_simon(JacobiParams::free(), 4096, 1e-10);
  CHECK(free.residual <= 1e-10);
  CHECK(free.passed());
  CHECK(free.rule == "killip-simon");

  const auto r1 = verify_killip_simon(JacobiParams({1.2}, {0.5}));
  CHECK(r1.residual <= 1e-6);
  CHECK(r1.quad_points == 4096);

  const auto r2 = verify_killip_simon(JacobiParams({1.0}, {3.0}));
  CHECK(r2.residual <= 1e-6);
  double ev_term = 0.0;
  for (const auto& t : r2.lhs_terms) {
    if (t.name != "Q") ev_term += t.value;
  }
  CHECK(ev_term == doctest::Approx(f_functional(10.0 / 3.0)).epsilon(1e-10));
}

TEST_CASE("sum rule, positivity and Favard roundtrip on random eventually-free J") {
  std::mt19937_64 gen(42);
  for (int trial = 0; trial < 25; ++trial) {
    const auto J = random_jacobi(gen);
    const auto report = verify_killip_simon(J);
    CHECK(report.residual <= 1e-6);
    for (const auto& t : report.lhs_terms) CHECK(t.value >= -1e-10);
    for (const auto& t : report.rhs_terms) CHECK(t.value >= -1e-10);

    const auto mu = spectral_measure(J);
    const std::size_t n = J.tail_free_after() + 2;
    const auto back = jacobi_from_measure(mu, n);
    for (std::size_t k = 1; k <= n; ++k) {
      CHECK(std::abs(back.a_at(k) - J.a_at(k)) <= 1e-6);
      CHECK(std::abs(back.b_at(k) - J.b_at(k)) <= 1e-6);
    }
  }
}

TEST_CASE("sum rule with one to three bound states") {
  const std::vector<JacobiParams> cases{JacobiParams({1.0}, {2.5}), JacobiParams({1.0, 1.0}, {3.0, -3.0}),
                                        JacobiParams({2.0, 2.0, 2.0}, {1.0, -1.0, 1.0})};
  for (const auto& J : cases) {
    const auto report = verify_killip_simon(J);
    CHECK(report.residual <= 1e-6);
    CHECK(report.lhs_terms.size() >= 2);
  }
  CHECK(jacobi_eigenvalues(JacobiParams({2.0, 2.0, 2.0}, {1.0, -1.0, 1.0})).size() >= 2);
}

TEST_CASE("gem_check_ks") {
  const auto free = gem_check_ks(JacobiParams::free(), semicircle());
  CHECK(free.coeff_sum == 0.0);
  CHECK(free.q_finite);
  CHECK(free.evsum == 0.0);
  CHECK(free.esssupp_ok);

  const JacobiParams J({1.2}, {0.5});
  const auto gem = gem_check_ks(J, spectral_measure(J));
  CHECK(gem.coeff_sum == doctest::Approx(0.29));
  CHECK(gem.q_finite);
  CHECK(std::isfinite(gem.evsum));
  CHECK(gem.eigenvalue_count <= 1);

  // Growing perturbations give growing lhs.
  double prev = -1.0;
  for (double b : {0.2, 0.5, 1.0, 2.0, 3.0}) {
    const auto r = verify_killip_simon(JacobiParams({1.0}, {b}));
    CHECK(r.lhs_total() > prev);
    prev = r.lhs_total();
  }
}
