#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sumrules/numeric.hpp"

namespace sumrules {

using Density = std::function<double(double)>;

struct PointMass {
  double position;  // theta in [0, 2pi) on the circle, E with |E| > 2 on the line
  double mass;
};

enum class QuadratureKind {
  uniform_circle,               // theta_j = 2 pi j / n, weights 1/n (for dtheta / 2pi)
  gauss_chebyshev_second_kind,  // sqrt(4 - x^2) dx on [-2, 2]
  uniform_line,                 // dx on [-2, 2], midpoint rule in theta with x = 2 cos(theta)
};

std::string to_string(QuadratureKind kind);

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  QuadratureKind kind;
};

QuadratureRule uniform_circle_rule(std::size_t n);

/// n-point Gauss rule for the weight sqrt(4 - x^2) on [-2, 2]; exact through
/// degree 2n - 1. Nodes are 2 cos(k pi / (n + 1)), k = 1..n, in decreasing order.
QuadratureRule gauss_chebyshev2(std::size_t n);

/// Midpoint rule in theta for plain dx on [-2, 2]. Nodes avoid x = +-2, so
/// integrands with integrable log singularities at the edges stay finite.
QuadratureRule uniform_line_rule(std::size_t n);

/// Sum of w_i f(x_i) with compensated summation. Throws DomainError when f is
/// not finite at a node.
double integrate(const QuadratureRule& rule, const std::function<double(double)>& f);

// Whether a constructor rejects sampled total mass off 1 by more than
// kMassTolerance. Densities normalized analytically (Bernstein-Szego) skip the
// check, because their sampled mass only measures the quadrature resolution.
enum class MassCheck { enforce, skip };

// Probability measure w(theta) dtheta/2pi + sum of point masses on the unit
// circle. The density is sampled once at the quad_points uniform nodes; every
// integral against the measure uses those samples.
class CircleMeasure {
 public:
  CircleMeasure(Density density, std::vector<PointMass> point_masses,
                std::size_t quad_points = kDefaultQuadPoints,
                nlohmann::json descriptor = nullptr, MassCheck mass_check = MassCheck::enforce);

  double density(double theta) const { return density_(theta); }
  const Density& density_function() const { return density_; }
  const std::vector<PointMass>& point_masses() const { return point_masses_; }
  std::size_t quad_points() const { return samples_.size(); }
  // w at theta_j = 2 pi j / quad_points
  const std::vector<double>& samples() const { return samples_; }
  double node(std::size_t j) const;
  double ac_mass() const { return ac_mass_; }
  double total_mass() const;
  // {"type": "named"|"table", ...} or null for a density given only as a function.
  const nlohmann::json& descriptor() const { return descriptor_; }

 private:
  Density density_;
  std::vector<PointMass> point_masses_;
  std::vector<double> samples_;
  double ac_mass_ = 0.0;
  nlohmann::json descriptor_;
};

// Probability measure w(x) dx on [-2, 2] plus point masses at |E| > 2.
// Samples live on the uniform_line_rule nodes x_j = 2 cos(theta_j),
// theta_j = pi (j + 1/2) / quad_points.
class LineMeasure {
 public:
  LineMeasure(Density density, std::vector<PointMass> point_masses,
              std::size_t quad_points = kDefaultQuadPoints,
              nlohmann::json descriptor = nullptr);

  double density(double x) const { return density_(x); }
  const Density& density_function() const { return density_; }
  const std::vector<PointMass>& point_masses() const { return point_masses_; }
  std::size_t quad_points() const { return samples_.size(); }
  const std::vector<double>& samples() const { return samples_; }
  double theta(std::size_t j) const;
  double ac_mass() const { return ac_mass_; }
  double total_mass() const;
  const nlohmann::json& descriptor() const { return descriptor_; }

 private:
  Density density_;
  std::vector<PointMass> point_masses_;
  std::vector<double> samples_;
  double ac_mass_ = 0.0;
  nlohmann::json descriptor_;
};

// Constructors accept a total mass within this tolerance of 1.
inline constexpr double kMassTolerance = 1e-6;

CircleMeasure lebesgue_circle(std::size_t quad_points = kDefaultQuadPoints);

/// sqrt(4 - x^2) / (2 pi) on [-2, 2]; the spectral measure of the free Jacobi matrix.
LineMeasure semicircle(std::size_t quad_points = kDefaultQuadPoints);
double semicircle_density(double x);

inline constexpr std::size_t kDefaultMomentCap = 1024;

/// c_k = integral of exp(-i k theta) dmu for k = 0..max_order. Rejects orders
/// above moment_cap or at/above quad_points / 2 (aliasing).
std::vector<Complex> circle_moments(const CircleMeasure& mu, std::size_t max_order,
                                    std::size_t moment_cap = kDefaultMomentCap);

// Tabled densities (linear interpolation; periodic on the circle, zero outside
// the table on the line).
Density table_density_circle(std::vector<double> thetas, std::vector<double> values);
Density table_density_line(std::vector<double> xs, std::vector<double> values);

// JSON documents:
// {"kind": "circle"|"line",
//  "density": {"type": "table", "thetas"|"xs": [...], "values": [...]}
//           | {"type": "named", "name": "lebesgue"|"semicircle"|"bernstein-szego", "params": {...}},
//  "point_masses": [{"position": p, "mass": m}, ...],
//  "quad_points": n}
// A measure without a descriptor serializes its density as a table of the
// node samples.
nlohmann::json to_json(const CircleMeasure& mu);
nlohmann::json to_json(const LineMeasure& mu);
CircleMeasure circle_measure_from_json(const nlohmann::json& doc);
LineMeasure line_measure_from_json(const nlohmann::json& doc);

}  // namespace sumrules
