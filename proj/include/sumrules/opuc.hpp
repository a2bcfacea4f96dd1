#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

#include "sumrules/measures.hpp"
#include "sumrules/numeric.hpp"
#include "sumrules/report.hpp"

namespace sumrules {

// Verblunsky coefficients alpha_0..alpha_{N-1}, each strictly inside the unit disk.
class VerblunskySeq {
 public:
  VerblunskySeq() = default;
  explicit VerblunskySeq(std::vector<Complex> alphas);

  const std::vector<Complex>& alphas() const { return alphas_; }
  std::size_t size() const { return alphas_.size(); }
  bool empty() const { return alphas_.empty(); }
  Complex operator[](std::size_t n) const { return alphas_[n]; }

 private:
  std::vector<Complex> alphas_;
};

// {"alphas": [[re, im], ...]}
nlohmann::json to_json(const VerblunskySeq& alphas);
VerblunskySeq verblunsky_from_json(const nlohmann::json& doc);

// Monic Phi_n and its reversal Phi*_n(z) = z^n conj(Phi_n(1/conj z)), both as
// monomial coefficients in increasing degree.
struct MonicOpucPair {
  std::vector<Complex> phi;
  std::vector<Complex> phi_star;
  std::size_t degree() const { return phi.size() - 1; }
};

MonicOpucPair opuc_start();

/// One Szego recursion step:
///   Phi_{n+1}  = z Phi_n - conj(alpha) Phi*_n
///   Phi*_{n+1} = Phi*_n  - alpha z Phi_n
MonicOpucPair szego_step(const MonicOpucPair& pair, Complex alpha);

/// Runs szego_step over the whole sequence starting from Phi_0 = 1.
MonicOpucPair szego_polynomials(const VerblunskySeq& alphas);

Complex horner(std::span<const Complex> coeffs, Complex z);

/// Levinson-type recursion on the moments c_0..c_N. alpha_n is read off as
/// -conj(Phi_{n+1}(0)). Throws IllConditionedError (with the failing order)
/// once the Toeplitz pivot ||Phi_n||^2 drops below 1e-12.
VerblunskySeq verblunsky_from_moments(std::span<const Complex> moments, std::size_t count);
VerblunskySeq verblunsky_from_measure(const CircleMeasure& mu, std::size_t count);

/// Purely a.c. measure prod(1 - |alpha_n|^2) / |Phi*_N(e^{i theta})|^2, whose
/// Verblunsky coefficients are alphas followed by zeros.
CircleMeasure bernstein_szego_measure(const VerblunskySeq& alphas,
                                      std::size_t quad_points = kDefaultQuadPoints);

// Fraction of nodes with vanishing density above which szego_lhs reports -inf.
inline constexpr double kDefaultVanishingFraction = 0.01;

/// Trapezoid value of the integral of log w dtheta/2pi. Returns -infinity when
/// more than vanishing_fraction of the nodes have w below the density floor;
/// fewer such nodes raise a DomainError.
double szego_lhs(const CircleMeasure& mu, double vanishing_fraction = kDefaultVanishingFraction);

/// sum_n log(1 - |alpha_n|^2)
double szego_rhs(const VerblunskySeq& alphas);

inline constexpr const char* kSzegoConvention =
    "integral of log w dtheta/2pi = sum_n log(1 - |alpha_n|^2) (sign fixed so both sides are <= 0; "
    "Phi_{n+1} = z Phi_n - conj(alpha_n) Phi*_n)";

// verify_szego warns when the sampled mass of the Bernstein-Szego density is
// off 1 by more than this.
inline constexpr double kResolvedMassTolerance = 1e-10;

SumRuleReport verify_szego(const VerblunskySeq& alphas, std::size_t quad_points = kDefaultQuadPoints,
                           double tolerance = 1e-6);

struct SzegoGemReport {
  double sum_sq_alphas = 0.0;
  double entropy = 0.0;
  bool both_finite = false;
  std::size_t order = 0;
  double last_alpha_abs = 0.0;
  std::vector<Complex> alphas;
};

/// Truncation-level check of: sum |alpha_j|^2 < inf iff integral of log w > -inf.
SzegoGemReport gem_check_szego(const CircleMeasure& mu, std::size_t count);

}  // namespace sumrules
