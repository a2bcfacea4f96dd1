#include "sumrules/report.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "sumrules/numeric.hpp"

namespace sumrules {

namespace {

double side_total(const std::vector<Term>& terms) {
  CompensatedSum<double> acc;
  for (const auto& t : terms) {
    if (!std::isfinite(t.value)) return t.value;
    acc.add(t.value);
  }
  return acc.value();
}

nlohmann::ordered_json number_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

nlohmann::ordered_json terms_to_json(const std::vector<Term>& terms) {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  for (const auto& t : terms) out[t.name] = number_or_null(t.value);
  return out;
}

}  // namespace

double SumRuleReport::lhs_total() const { return side_total(lhs_terms); }
double SumRuleReport::rhs_total() const { return side_total(rhs_terms); }

void SumRuleReport::finalize() {
  const double lhs = lhs_total();
  const double rhs = rhs_total();
  if (!std::isfinite(lhs) || !std::isfinite(rhs)) {
    divergent = true;
    residual = std::numeric_limits<double>::infinity();
    return;
  }
  residual = std::abs(lhs - rhs);
}

nlohmann::ordered_json to_json(const SumRuleReport& report) {
  nlohmann::ordered_json out;
  out["rule"] = report.rule;
  out["lhs_terms"] = terms_to_json(report.lhs_terms);
  out["rhs_terms"] = terms_to_json(report.rhs_terms);
  out["lhs_total"] = number_or_null(report.lhs_total());
  out["rhs_total"] = number_or_null(report.rhs_total());
  out["residual"] = number_or_null(report.residual);
  out["tolerance"] = report.tolerance;
  out["passed"] = report.passed();
  out["divergent"] = report.divergent;
  out["inconclusive"] = report.inconclusive;
  out["quad_points"] = report.quad_points;
  out["resolution"] = report.resolution;
  out["convention_note"] = report.convention_note;
  out["warnings"] = report.warnings;
  out["details"] = report.details;
  return out;
}

std::string to_csv(const SumRuleReport& report) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "side,term,value\n";
  auto row = [&out](const char* side, const std::string& name, double v) {
    out << side << ",\"" << name << "\",";
    if (std::isfinite(v)) out << v;
    out << "\n";
  };
  for (const auto& t : report.lhs_terms) row("lhs", t.name, t.value);
  for (const auto& t : report.rhs_terms) row("rhs", t.name, t.value);
  row("total", "lhs", report.lhs_total());
  row("total", "rhs", report.rhs_total());
  row("total", "residual", report.residual);
  return out.str();
}

}  // namespace sumrules
