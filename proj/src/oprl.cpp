#include "sumrules/oprl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sumrules/errors.hpp"

namespace sumrules {

JacobiParams::JacobiParams(std::vector<double> a, std::vector<double> b) : a_(std::move(a)), b_(std::move(b)) {
  if (a_.size() != b_.size()) throw DomainError("JacobiParams: a and b must have the same length");
  for (double v : a_) {
    // a_n = 0 would split the matrix; the measure would be trivial.
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("JacobiParams: every a_n must be positive and finite");
  }
  for (double v : b_) {
    if (!std::isfinite(v)) throw DomainError("JacobiParams: every b_n must be finite");
  }
}

nlohmann::json to_json(const JacobiParams& jacobi) {
  return {{"a", jacobi.a()}, {"b", jacobi.b()}, {"tail_free_after", jacobi.tail_free_after()}};
}

JacobiParams jacobi_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw InputError("jacobi: expected a JSON object");
  auto list = [&doc](const char* key) {
    if (!doc.contains(key) || !doc.at(key).is_array()) {
      throw InputError(std::string("jacobi: missing numeric array \"") + key + "\"");
    }
    std::vector<double> out;
    for (const auto& v : doc.at(key)) {
      if (!v.is_number()) throw InputError(std::string("jacobi: non-numeric entry in \"") + key + "\"");
      out.push_back(v.get<double>());
    }
    return out;
  };
  auto a = list("a");
  auto b = list("b");
  if (a.size() != b.size()) throw InputError("jacobi: \"a\" and \"b\" must have the same length");
  if (doc.contains("tail_free_after")) {
    const auto& n = doc.at("tail_free_after");
    if (!n.is_number_integer() || n.get<long long>() < 0) {
      throw InputError("jacobi: \"tail_free_after\" must be a nonnegative integer");
    }
    const auto tail = n.get<std::size_t>();
    if (tail < a.size()) {
      // Entries past the tail marker must already be free.
      for (std::size_t i = tail; i < a.size(); ++i) {
        if (a[i] != 1.0 || b[i] != 0.0) {
          throw InputError("jacobi: entries after \"tail_free_after\" must be a = 1, b = 0");
        }
      }
      a.resize(tail);
      b.resize(tail);
    } else if (tail > a.size()) {
      throw InputError("jacobi: \"tail_free_after\" exceeds the number of listed parameters");
    }
  }
  try {
    return JacobiParams(std::move(a), std::move(b));
  } catch (const DomainError& e) {
    throw InputError(e.what());
  }
}

double three_term_step(double p_prev, double p_curr, double x, double a_n, double a_next, double b_next) {
  if (!(a_next > 0.0)) throw DomainError("three_term_step: a_{n+1} must be positive");
  return ((x - b_next) * p_curr - a_n * p_prev) / a_next;
}

JacobiParams jacobi_from_measure(const LineMeasure& mu, std::size_t count) {
  // Midpoint nodes in theta (the measure's own samples). The GC2 grid would
  // drop the theta = 0, pi endpoint terms, which are nonzero when a threshold
  // resonance makes w ~ 1 / sqrt(4 - x^2), and fall to O(1/M) accuracy.
  const QuadratureRule rule = uniform_line_rule(mu.quad_points());
  const auto& samples = mu.samples();
  std::vector<double> nodes;
  std::vector<double> weights;
  nodes.reserve(rule.nodes.size() + mu.point_masses().size());
  weights.reserve(nodes.capacity());
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    nodes.push_back(rule.nodes[k]);
    weights.push_back(rule.weights[k] * samples[k]);
  }
  for (const auto& pm : mu.point_masses()) {
    nodes.push_back(pm.position);
    weights.push_back(pm.mass);
  }
  const std::size_t m = nodes.size();
  if (count >= m) throw DomainError("jacobi_from_measure: order exceeds the discretization size");

  auto dot = [m](const std::vector<double>& u, const std::vector<double>& v) {
    CompensatedSum<double> acc;
    for (std::size_t i = 0; i < m; ++i) acc.add(u[i] * v[i]);
    return acc.value();
  };

  std::vector<std::vector<double>> basis;
  basis.reserve(count + 1);
  std::vector<double> q(m);
  for (std::size_t i = 0; i < m; ++i) q[i] = std::sqrt(weights[i]);
  const double q_norm = std::sqrt(dot(q, q));
  for (double& v : q) v /= q_norm;
  basis.push_back(q);

  constexpr double kMinOffDiagonal = 1e-10;
  std::vector<double> a, b;
  a.reserve(count);
  b.reserve(count);
  std::vector<double> v(m);
  for (std::size_t n = 0; n < count; ++n) {
    const auto& qn = basis.back();
    for (std::size_t i = 0; i < m; ++i) v[i] = nodes[i] * qn[i];
    const double bn = dot(qn, v);
    for (std::size_t i = 0; i < m; ++i) v[i] -= bn * qn[i];
    if (n > 0) {
      const auto& qprev = basis[basis.size() - 2];
      for (std::size_t i = 0; i < m; ++i) v[i] -= a.back() * qprev[i];
    }
    // Two passes of classical Gram-Schmidt against every previous vector.
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& qj : basis) {
        const double c = dot(qj, v);
        for (std::size_t i = 0; i < m; ++i) v[i] -= c * qj[i];
      }
    }
    const double an = std::sqrt(dot(v, v));
    if (!(an >= kMinOffDiagonal)) {
      std::ostringstream msg;
      msg << "jacobi_from_measure: a_" << (n + 1) << " = " << an << " below " << kMinOffDiagonal;
      throw IllConditionedError(msg.str(), n + 1);
    }
    b.push_back(bn);
    a.push_back(an);
    if (n + 1 < count) {
      std::vector<double> next(m);
      for (std::size_t i = 0; i < m; ++i) next[i] = v[i] / an;
      basis.push_back(std::move(next));
    }
  }
  return JacobiParams(std::move(a), std::move(b));
}

Complex m_free(Complex z) {
  if (z.imag() == 0.0 && std::abs(z.real()) <= 2.0) {
    throw DomainError("m_free: z lies on [-2, 2]; use m_free_boundary");
  }
  const Complex s = std::sqrt(z * z - 4.0);
  const Complex r1 = 0.5 * (-z + s);
  const Complex r2 = 0.5 * (-z - s);
  // r1 * r2 = 1; invert the larger root to get the small one accurately.
  return std::abs(r1) >= std::abs(r2) ? 1.0 / r1 : 1.0 / r2;
}

Complex m_free_boundary(double x) {
  if (!(std::abs(x) <= 2.0)) throw DomainError("m_free_boundary: x must lie in [-2, 2]");
  return {-0.5 * x, 0.5 * std::sqrt((2.0 - x) * (2.0 + x))};
}

namespace {

constexpr double kPoleTolerance = 1e-13;

Complex strip(const JacobiParams& jacobi, Complex z, Complex m) {
  for (std::size_t n = jacobi.tail_free_after(); n >= 1; --n) {
    const double an = jacobi.a_at(n);
    const Complex d = jacobi.b_at(n) - z - an * an * m;
    if (std::abs(d) < kPoleTolerance) {
      std::ostringstream msg;
      msg << "m_function: continued-fraction denominator " << std::abs(d) << " at level " << n
          << " (z = " << z << " is at a pole)";
      throw PoleProximityError(msg.str());
    }
    m = 1.0 / d;
  }
  return m;
}

// Decaying solution psi_n = beta^{-n}, n > N, continued back to n = 0
// (normalized psi_{N+1} = 1). Eigenvalues are the zeros of psi_0.
struct JostSolution {
  double beta;
  std::vector<double> psi;  // psi_0 .. psi_{N+1}
};

JostSolution jost_solution(const JacobiParams& jacobi, double E) {
  const std::size_t n_free = jacobi.tail_free_after();
  JostSolution sol{beta_of_E(E), std::vector<double>(n_free + 2)};
  double next = 1.0 / sol.beta;  // psi_{N+2}
  sol.psi[n_free + 1] = 1.0;
  for (std::size_t n = n_free + 1; n >= 1; --n) {
    const double cur = sol.psi[n];
    sol.psi[n - 1] = ((E - jacobi.b_at(n)) * cur - jacobi.a_at(n) * next) / jacobi.a_at(n - 1);
    next = cur;
  }
  return sol;
}

double jost_value(const JacobiParams& jacobi, double E) { return jost_solution(jacobi, E).psi[0]; }

double spectral_weight(const JacobiParams& jacobi, double E) {
  const JostSolution sol = jost_solution(jacobi, E);
  const std::size_t n_free = jacobi.tail_free_after();
  CompensatedSum<double> norm;
  for (std::size_t n = 1; n <= n_free; ++n) norm.add(sol.psi[n] * sol.psi[n]);
  // Geometric tail psi_{N+1}^2 (1 + beta^-2 + beta^-4 + ...).
  norm.add(sol.psi[n_free + 1] * sol.psi[n_free + 1] / (1.0 - 1.0 / (sol.beta * sol.beta)));
  return sol.psi[1] * sol.psi[1] / norm.value();
}

constexpr std::size_t kScanPoints = 10000;
constexpr double kEdgeExclusion = 1e-10;
constexpr double kBisectionTolerance = 1e-12;

double bisect_jost(const JacobiParams& jacobi, double lo, double hi) {
  double f_lo = jost_value(jacobi, lo);
  for (int iter = 0; iter < 200 && hi - lo > kBisectionTolerance; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = jost_value(jacobi, mid);
    if (f_mid == 0.0) return mid;
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  if (hi - lo > kBisectionTolerance) {
    std::ostringstream msg;
    msg << "jacobi_eigenvalues: bisection did not converge on [" << lo << ", " << hi << "]";
    throw RootFindingError(msg.str());
  }
  return 0.5 * (lo + hi);
}

}  // namespace

HerglotzValue m_function(const JacobiParams& jacobi, Complex z) { return {z, strip(jacobi, z, m_free(z))}; }

std::vector<Eigenvalue> jacobi_eigenvalues(const JacobiParams& jacobi) {
  double a_max = 1.0;
  double b_max = 0.0;
  for (double v : jacobi.a()) a_max = std::max(a_max, v);
  for (double v : jacobi.b()) b_max = std::max(b_max, std::abs(v));
  const auto n = static_cast<double>(jacobi.tail_free_after());
  const double e_max = std::max(2.0 + a_max * n + b_max + 2.0, b_max + 2.0 * a_max) + 1.0;

  std::vector<Eigenvalue> out;
  for (double sign : {-1.0, 1.0}) {
    const double start = 2.0 + kEdgeExclusion;
    double prev_e = start;
    double prev_f = jost_value(jacobi, sign * start);
    for (std::size_t i = 1; i < kScanPoints; ++i) {
      const double e = start + (e_max - start) * static_cast<double>(i) / static_cast<double>(kScanPoints - 1);
      const double f = jost_value(jacobi, sign * e);
      if (prev_f != 0.0 && (f == 0.0 || (f < 0.0) != (prev_f < 0.0))) {
        const double lo = sign > 0 ? prev_e : -e;
        const double hi = sign > 0 ? e : -prev_e;
        const double root = f == 0.0 ? sign * e : bisect_jost(jacobi, lo, hi);
        if (std::abs(root) - 2.0 > kEdgeExclusion) {
          out.push_back({root, spectral_weight(jacobi, root)});
        }
      }
      prev_e = e;
      prev_f = f;
    }
  }
  std::sort(out.begin(), out.end(), [](const Eigenvalue& l, const Eigenvalue& r) { return l.energy < r.energy; });
  return out;
}

LineMeasure spectral_measure(const JacobiParams& jacobi, std::size_t quad_points) {
  Density w = [jacobi](double x) {
    if (!(std::abs(x) < 2.0)) return 0.0;
    return strip(jacobi, Complex(x, 0.0), m_free_boundary(x)).imag() / kPi;
  };
  const auto eigen = jacobi_eigenvalues(jacobi);
  std::vector<PointMass> masses;
  CompensatedSum<double> total;
  total.add(integrate(uniform_line_rule(quad_points), w));
  for (const auto& ev : eigen) {
    masses.push_back({ev.energy, ev.weight});
    total.add(ev.weight);
  }
  if (std::abs(total.value() - 1.0) > 1e-6) {
    std::ostringstream msg;
    msg << "spectral_measure: total mass " << total.value() << " (a.c. part plus " << eigen.size()
        << " eigenvalues) deviates from 1";
    throw ConsistencyError(msg.str());
  }
  nlohmann::json descriptor{{"type", "named"}, {"name", "jacobi-spectral"}, {"params", to_json(jacobi)}};
  return LineMeasure(std::move(w), std::move(masses), quad_points, std::move(descriptor));
}

double beta_of_E(double E) {
  if (!(std::abs(E) > 2.0)) throw DomainError("beta_of_E: requires |E| > 2");
  const double root = std::sqrt((std::abs(E) - 2.0) * (std::abs(E) + 2.0));
  return 0.5 * (E + std::copysign(root, E));
}

double f_functional(double E) {
  if (!(std::abs(E) > 2.0)) throw DomainError("f_functional: requires |E| > 2");
  // With log|beta| = t = acosh(|E|/2): beta^2 - beta^-2 = 2 sinh(2t), so
  // F = (sinh(2t) - 2t) / 2; the series avoids cancellation near the edge.
  const double u = 2.0 * std::acosh(0.5 * std::abs(E));
  if (u < 0.1) {
    const double u2 = u * u;
    double term = u * u2 / 6.0;
    double sum = 0.0;
    for (int k = 1; k <= 8; ++k) {
      sum += term;
      term *= u2 / static_cast<double>((2 * k + 2) * (2 * k + 3));
    }
    return 0.5 * sum;
  }
  return 0.5 * (std::sinh(u) - u);
}

double g_functional(double a) {
  if (!(a > 0.0)) throw DomainError("g_functional: requires a > 0");
  const double u = (a - 1.0) * (a + 1.0);
  return u - std::log1p(u);
}

double q_functional(const LineMeasure& mu) {
  const auto& w = mu.samples();
  const std::size_t m = w.size();
  CompensatedSum<double> acc;
  for (std::size_t j = 0; j < m; ++j) {
    if (w[j] < kDensityFloor) return std::numeric_limits<double>::infinity();
    const double s = std::sin(mu.theta(j));
    const double w0 = s / kPi;  // semicircle density at x = 2 cos(theta)
    acc.add(std::log(w0 / w[j]) * s * s);
  }
  return acc.value() / static_cast<double>(m);
}

double ks_rhs(const JacobiParams& jacobi) {
  CompensatedSum<double> acc;
  for (std::size_t n = 1; n <= jacobi.tail_free_after(); ++n) {
    const double b = jacobi.b_at(n);
    acc.add(0.25 * b * b);
    acc.add(0.5 * g_functional(jacobi.a_at(n)));
  }
  return acc.value();
}

double ks_lhs(const LineMeasure& mu) {
  const double q = q_functional(mu);
  if (!std::isfinite(q)) return q;
  CompensatedSum<double> acc;
  acc.add(q);
  for (const auto& pm : mu.point_masses()) acc.add(f_functional(pm.position));
  return acc.value();
}

SumRuleReport verify_killip_simon(const JacobiParams& jacobi, std::size_t quad_points, double tolerance) {
  const LineMeasure mu = spectral_measure(jacobi, quad_points);
  SumRuleReport report;
  report.rule = "killip-simon";
  report.tolerance = tolerance;
  report.quad_points = quad_points;
  report.convention_note = kKillipSimonConvention;

  report.lhs_terms.push_back({"Q", q_functional(mu)});
  nlohmann::ordered_json eigen = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < mu.point_masses().size(); ++i) {
    const auto& pm = mu.point_masses()[i];
    report.lhs_terms.push_back({"F(E_" + std::to_string(i + 1) + ")", f_functional(pm.position)});
    eigen.push_back({{"energy", pm.position}, {"weight", pm.mass}, {"beta", beta_of_E(pm.position)}});
  }
  for (std::size_t n = 1; n <= jacobi.tail_free_after(); ++n) {
    const double b = jacobi.b_at(n);
    report.rhs_terms.push_back({"b_" + std::to_string(n) + "^2/4", 0.25 * b * b});
    report.rhs_terms.push_back({"G(a_" + std::to_string(n) + ")/2", 0.5 * g_functional(jacobi.a_at(n))});
  }
  report.resolution["quad_points"] = quad_points;
  report.resolution["quadrature"] = "uniform-line (midpoint in theta, x = 2 cos theta)";
  report.resolution["eigenvalue_scan_points"] = kScanPoints;
  report.resolution["eigenvalue_bisection_tolerance"] = kBisectionTolerance;
  report.details["jacobi"] = to_json(jacobi);
  report.details["eigenvalues"] = eigen;
  report.details["ac_mass"] = mu.ac_mass();
  report.details["total_mass"] = mu.total_mass();
  report.finalize();
  return report;
}

KsGemReport gem_check_ks(const JacobiParams& jacobi, const LineMeasure& mu) {
  KsGemReport out;
  CompensatedSum<double> coeff;
  for (std::size_t n = 1; n <= jacobi.tail_free_after(); ++n) {
    const double da = jacobi.a_at(n) - 1.0;
    const double b = jacobi.b_at(n);
    const double term = da * da + b * b;
    coeff.add(term);
    out.last_coeff_term = term;
  }
  out.coeff_sum = coeff.value();
  out.q_value = q_functional(mu);
  out.q_finite = std::isfinite(out.q_value);
  CompensatedSum<double> ev;
  for (const auto& pm : mu.point_masses()) {
    const double term = std::pow(std::abs(pm.position) - 2.0, 1.5);
    ev.add(term);
    out.last_ev_term = term;
  }
  out.evsum = ev.value();
  out.eigenvalue_count = mu.point_masses().size();
  // Point masses sit outside [-2, 2] by construction; the a.c. part must fill the interval.
  out.esssupp_ok = std::all_of(mu.samples().begin(), mu.samples().end(), [](double w) { return w >= kDensityFloor; });
  return out;
}

}  // namespace sumrules
