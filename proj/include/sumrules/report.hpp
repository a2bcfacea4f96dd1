#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

namespace sumrules {

struct Term {
  std::string name;
  double value;
};

// Itemized sum-rule evaluation shared by the Szego, Killip-Simon and KdV
// verifiers. residual is |sum(lhs) - sum(rhs)| over exactly the listed terms.
struct SumRuleReport {
  std::string rule;  // "szego" | "killip-simon" | "kdv"
  std::vector<Term> lhs_terms;
  std::vector<Term> rhs_terms;
  double residual = 0.0;
  double tolerance = 0.0;
  std::size_t quad_points = 0;
  nlohmann::ordered_json resolution = nlohmann::ordered_json::object();
  std::string convention_note;
  bool divergent = false;
  bool inconclusive = false;
  std::vector<std::string> warnings;
  nlohmann::ordered_json details = nlohmann::ordered_json::object();

  double lhs_total() const;
  double rhs_total() const;
  // Recomputes residual from the current terms; marks the report divergent if
  // either side is not finite.
  void finalize();
  bool passed() const { return !divergent && !inconclusive && residual <= tolerance; }
};

// Non-finite term values serialize as null; the divergence flag carries the meaning.
nlohmann::ordered_json to_json(const SumRuleReport& report);

// Rows "side,term,value" with a trailing residual row.
std::string to_csv(const SumRuleReport& report);

}  // namespace sumrules
