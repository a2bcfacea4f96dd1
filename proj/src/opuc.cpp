#include "sumrules/opuc.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "sumrules/errors.hpp"

namespace sumrules {

namespace {

void check_in_disk(Complex alpha, const char* who) {
  if (!(std::abs(alpha) < 1.0)) {
    std::ostringstream msg;
    msg << who << ": Verblunsky coefficient " << alpha << " is not inside the unit disk";
    throw DomainError(msg.str());
  }
}

}  // namespace

VerblunskySeq::VerblunskySeq(std::vector<Complex> alphas) : alphas_(std::move(alphas)) {
  for (Complex a : alphas_) check_in_disk(a, "VerblunskySeq");
}

nlohmann::json to_json(const VerblunskySeq& alphas) {
  nlohmann::json arr = nlohmann::json::array();
  for (Complex a : alphas.alphas()) arr.push_back({a.real(), a.imag()});
  return {{"alphas", arr}};
}

VerblunskySeq verblunsky_from_json(const nlohmann::json& doc) {
  const nlohmann::json* list = &doc;
  if (doc.is_object()) {
    if (!doc.contains("alphas")) throw InputError("alphas: missing \"alphas\" field");
    list = &doc.at("alphas");
  }
  if (!list->is_array()) throw InputError("alphas: expected an array of [re, im] pairs");
  std::vector<Complex> out;
  for (std::size_t i = 0; i < list->size(); ++i) {
    const auto& item = (*list)[i];
    if (item.is_number()) {
      out.emplace_back(item.get<double>(), 0.0);
    } else if (item.is_array() && item.size() == 2 && item[0].is_number() && item[1].is_number()) {
      out.emplace_back(item[0].get<double>(), item[1].get<double>());
    } else {
      throw InputError("alphas[" + std::to_string(i) + "]: expected [re, im]");
    }
  }
  try {
    return VerblunskySeq(std::move(out));
  } catch (const DomainError& e) {
    throw InputError(e.what());
  }
}

MonicOpucPair opuc_start() { return {{Complex(1.0)}, {Complex(1.0)}}; }

MonicOpucPair szego_step(const MonicOpucPair& pair, Complex alpha) {
  check_in_disk(alpha, "szego_step");
  const std::size_t n = pair.degree();
  MonicOpucPair next{std::vector<Complex>(n + 2), std::vector<Complex>(n + 2)};
  for (std::size_t j = 0; j <= n; ++j) {
    next.phi[j + 1] += pair.phi[j];
    next.phi[j] -= std::conj(alpha) * pair.phi_star[j];
    next.phi_star[j] += pair.phi_star[j];
    next.phi_star[j + 1] -= alpha * pair.phi[j];
  }
  return next;
}

MonicOpucPair szego_polynomials(const VerblunskySeq& alphas) {
  MonicOpucPair pair = opuc_start();
  for (Complex a : alphas.alphas()) pair = szego_step(pair, a);
  return pair;
}

Complex horner(std::span<const Complex> coeffs, Complex z) {
  Complex acc{};
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * z + *it;
  return acc;
}

VerblunskySeq verblunsky_from_moments(std::span<const Complex> moments, std::size_t count) {
  if (moments.size() < count + 1) {
    throw DomainError("verblunsky_from_moments: need moments c_0..c_N");
  }
  constexpr double kMinPivot = 1e-12;
  std::vector<Complex> alphas;
  alphas.reserve(count);
  MonicOpucPair pair = opuc_start();
  // Integral of z^j dmu is conj(c_j).
  for (std::size_t n = 0; n < count; ++n) {
    CompensatedSum<Complex> pivot_acc, shifted_acc;
    for (std::size_t j = 0; j <= n; ++j) {
      pivot_acc.add(pair.phi_star[j] * std::conj(moments[j]));
      shifted_acc.add(pair.phi[j] * std::conj(moments[j + 1]));
    }
    const double pivot = pivot_acc.value().real();
    if (!(pivot >= kMinPivot)) {
      std::ostringstream msg;
      msg << "verblunsky_from_moments: Toeplitz pivot " << pivot << " below " << kMinPivot
          << " at order " << n;
      throw IllConditionedError(msg.str(), n);
    }
    const Complex alpha = std::conj(shifted_acc.value() / pivot);
    if (!(std::abs(alpha) < 1.0)) {
      throw IllConditionedError("verblunsky_from_moments: coefficient left the unit disk at order " +
                                    std::to_string(n),
                                n);
    }
    pair = szego_step(pair, alpha);
    // Equals alpha up to rounding; reading it from the polynomial keeps the
    // returned value consistent with the recursion actually performed.
    alphas.push_back(-std::conj(pair.phi[0]));
  }
  return VerblunskySeq(std::move(alphas));
}

VerblunskySeq verblunsky_from_measure(const CircleMeasure& mu, std::size_t count) {
  const auto moments = circle_moments(mu, count);
  return verblunsky_from_moments(moments, count);
}

CircleMeasure bernstein_szego_measure(const VerblunskySeq& alphas, std::size_t quad_points) {
  const MonicOpucPair pair = szego_polynomials(alphas);
  double norm = 1.0;
  for (Complex a : alphas.alphas()) norm *= 1.0 - std::norm(a);
  Density w = [phi_star = pair.phi_star, norm](double theta) {
    return norm / std::norm(horner(phi_star, std::polar(1.0, theta)));
  };
  nlohmann::json descriptor{{"type", "named"}, {"name", "bernstein-szego"}, {"params", to_json(alphas)}};
  return CircleMeasure(std::move(w), {}, quad_points, std::move(descriptor), MassCheck::skip);
}

double szego_lhs(const CircleMeasure& mu, double vanishing_fraction) {
  const auto& w = mu.samples();
  std::size_t vanishing = 0;
  CompensatedSum<double> acc;
  for (double v : w) {
    if (v < kDensityFloor) {
      ++vanishing;
      continue;
    }
    acc.add(std::log(v));
  }
  if (vanishing > 0) {
    const double fraction = static_cast<double>(vanishing) / static_cast<double>(w.size());
    if (fraction > vanishing_fraction) return -std::numeric_limits<double>::infinity();
    std::ostringstream msg;
    msg << "szego_lhs: density below " << kDensityFloor << " at " << vanishing << " of " << w.size()
        << " nodes";
    throw DomainError(msg.str());
  }
  return acc.value() / static_cast<double>(w.size());
}

double szego_rhs(const VerblunskySeq& alphas) {
  CompensatedSum<double> acc;
  for (Complex a : alphas.alphas()) acc.add(std::log1p(-std::norm(a)));
  return acc.value();
}

SumRuleReport verify_szego(const VerblunskySeq& alphas, std::size_t quad_points, double tolerance) {
  const CircleMeasure mu = bernstein_szego_measure(alphas, quad_points);
  SumRuleReport report;
  report.rule = "szego";
  report.tolerance = tolerance;
  report.quad_points = quad_points;
  report.convention_note = kSzegoConvention;
  report.lhs_terms.push_back({"entropy", szego_lhs(mu)});
  for (std::size_t n = 0; n < alphas.size(); ++n) {
    report.rhs_terms.push_back(
        {"log(1-|alpha_" + std::to_string(n) + "|^2)", std::log1p(-std::norm(alphas[n]))});
  }
  report.resolution["quad_points"] = quad_points;
  report.resolution["quadrature"] = to_string(QuadratureKind::uniform_circle);
  report.details["alphas"] = to_json(alphas).at("alphas");
  report.details["total_mass"] = mu.total_mass();
  if (std::abs(mu.total_mass() - 1.0) > kResolvedMassTolerance) {
    std::ostringstream msg;
    msg << "density under-resolved at " << quad_points << " nodes: sampled mass " << std::setprecision(12)
        << mu.total_mass() << " (exactly 1 analytically); a zero of Phi_N lies near the unit circle, "
        << "increase quad_points";
    report.warnings.push_back(msg.str());
  }
  report.finalize();
  return report;
}

SzegoGemReport gem_check_szego(const CircleMeasure& mu, std::size_t count) {
  SzegoGemReport out;
  out.order = count;
  const VerblunskySeq alphas = verblunsky_from_measure(mu, count);
  CompensatedSum<double> acc;
  for (Complex a : alphas.alphas()) acc.add(std::norm(a));
  out.sum_sq_alphas = acc.value();
  out.last_alpha_abs = alphas.empty() ? 0.0 : std::abs(alphas.alphas().back());
  out.entropy = szego_lhs(mu);
  out.both_finite = std::isfinite(out.sum_sq_alphas) && std::isfinite(out.entropy);
  out.alphas = alphas.alphas();
  return out;
}

}  // namespace sumrules
