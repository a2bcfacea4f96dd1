#pragma once

#include <cstddef>
#include <vector>

#include <json.hpp>

#include "sumrules/measures.hpp"
#include "sumrules/numeric.hpp"
#include "sumrules/report.hpp"

namespace sumrules {

// Jacobi parameters a_1..a_N > 0, b_1..b_N, with a_n = 1, b_n = 0 for n > N.
class JacobiParams {
 public:
  JacobiParams() = default;
  JacobiParams(std::vector<double> a, std::vector<double> b);

  static JacobiParams free() { return {}; }

  const std::vector<double>& a() const { return a_; }
  const std::vector<double>& b() const { return b_; }
  std::size_t tail_free_after() const { return a_.size(); }
  // 1-based accessors that continue into the free tail.
  double a_at(std::size_t n) const { return n >= 1 && n <= a_.size() ? a_[n - 1] : 1.0; }
  double b_at(std::size_t n) const { return n >= 1 && n <= b_.size() ? b_[n - 1] : 0.0; }

 private:
  std::vector<double> a_;
  std::vector<double> b_;
};

// {"a": [...], "b": [...], "tail_free_after": N}
nlohmann::json to_json(const JacobiParams& jacobi);
JacobiParams jacobi_from_json(const nlohmann::json& doc);

/// p_{n+1}(x) = ((x - b_{n+1}) p_n(x) - a_n p_{n-1}(x)) / a_{n+1}.
double three_term_step(double p_prev, double p_curr, double x, double a_n, double a_next, double b_next);

/// Jacobi parameters of mu from the discretized measure (the midpoint-in-theta
/// samples of w plus the point masses), by Lanczos with full reorthogonalization.
/// Throws IllConditionedError if some a_n falls below 1e-10.
JacobiParams jacobi_from_measure(const LineMeasure& mu, std::size_t count);

// m(z) = integral of dmu(x) / (x - z).
struct HerglotzValue {
  Complex z;
  Complex m;
};

/// m-function of the free Jacobi matrix: the root of m^2 + z m + 1 = 0 with |m| < 1.
Complex m_free(Complex z);
/// Boundary value m_free(x + i0) = (-x + i sqrt(4 - x^2)) / 2 for x in [-2, 2].
Complex m_free_boundary(double x);

/// Coefficient stripping m_{n-1} = 1 / (b_n - z - a_n^2 m_n), anchored at
/// m_N = m_free. Throws PoleProximityError when a denominator drops below 1e-13.
HerglotzValue m_function(const JacobiParams& jacobi, Complex z);

struct Eigenvalue {
  double energy;
  double weight;
};

/// Eigenvalues of J outside [-2, 2] with their spectral weights.
std::vector<Eigenvalue> jacobi_eigenvalues(const JacobiParams& jacobi);

/// Spectral measure of an eventually-free J: w(x) = Im m(x + i0) / pi from
/// the exact boundary value of m_free fed through the stripping recursion,
/// plus the point masses from jacobi_eigenvalues.
LineMeasure spectral_measure(const JacobiParams& jacobi, std::size_t quad_points = kDefaultQuadPoints);

/// beta with |beta| > 1 and beta + 1/beta = E.
double beta_of_E(double E);

/// F(E) = (beta^2 - beta^-2 - log beta^4) / 4, which equals
/// (1/2) * integral from 2 to |E| of sqrt(t^2 - 4) dt.
double f_functional(double E);

/// G(a) = a^2 - 1 - log(a^2)
double g_functional(double a);

/// Q(mu) = (1/4pi) integral over [-2, 2] of log(sqrt(4 - x^2) / (2 pi w(x))) sqrt(4 - x^2) dx,
/// via x = 2 cos(theta) and the midpoint rule. +infinity if w falls below the
/// density floor at any node.
double q_functional(const LineMeasure& mu);

/// sum_n b_n^2 / 4 + G(a_n) / 2
double ks_rhs(const JacobiParams& jacobi);
/// Q(mu) + sum over point masses of F(E_n)
double ks_lhs(const LineMeasure& mu);

inline constexpr const char* kKillipSimonConvention =
    "Q(mu) + sum F(E_n) = sum [b_n^2/4 + G(a_n)/2]; Q = +(1/4pi) int log(sqrt(4-x^2)/(2pi w)) sqrt(4-x^2) dx >= 0; "
    "F(beta + 1/beta) = [beta^2 - beta^-2 - log beta^4]/4; G(a) = a^2 - 1 - log a^2";

SumRuleReport verify_killip_simon(const JacobiParams& jacobi, std::size_t quad_points = kDefaultQuadPoints,
                                  double tolerance = 1e-6);

struct KsGemReport {
  double coeff_sum = 0.0;  // sum (a_n - 1)^2 + b_n^2
  bool q_finite = false;
  double q_value = 0.0;
  double evsum = 0.0;  // sum (|E_m| - 2)^{3/2}
  bool esssupp_ok = false;
  double last_coeff_term = 0.0;
  double last_ev_term = 0.0;
  std::size_t eigenvalue_count = 0;
};

KsGemReport gem_check_ks(const JacobiParams& jacobi, const LineMeasure& mu);

}  // namespace sumrules
