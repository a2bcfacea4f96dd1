#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sumrules/numeric.hpp"
#include "sumrules/report.hpp"

namespace sumrules {

struct PotentialOptions {
  double cutoff = 1e-10;          // |V| below this counts as zero
  double step = 1e-3;             // h
  std::optional<double> extent;   // L; default support_radius + margin
  double margin = 15.0;
};

// Decaying potential for -psi'' + V psi = E psi on [-L, L], sampled at half
// steps so the fixed-step RK4 propagator never re-evaluates V.
class Potential {
 public:
  Potential(std::function<double(double)> v, PotentialOptions options = {}, nlohmann::json descriptor = nullptr,
            std::optional<double> support_radius = std::nullopt);

  double operator()(double x) const { return v_(x); }
  double support_radius() const { return support_radius_; }
  double cutoff() const { return options_.cutoff; }
  double step() const { return step_; }
  double extent() const { return extent_; }
  std::size_t intervals() const { return intervals_; }
  double x(std::size_t i) const { return -extent_ + step_ * static_cast<double>(i); }
  // V(-L + k h / 2), k = 0..2 * intervals
  const std::vector<double>& half_step_samples() const { return samples_; }
  double min_value() const { return min_value_; }
  double max_abs() const { return max_abs_; }
  // Trapezoid value of the integral of V^2 over the grid.
  double l2_norm_sq() const { return l2_norm_sq_; }
  const PotentialOptions& options() const { return options_; }
  const nlohmann::json& descriptor() const { return descriptor_; }

 private:
  std::function<double(double)> v_;
  PotentialOptions options_;
  nlohmann::json descriptor_;
  double support_radius_ = 0.0;
  double extent_ = 0.0;
  double step_ = 0.0;
  std::size_t intervals_ = 0;
  std::vector<double> samples_;
  double min_value_ = 0.0;
  double max_abs_ = 0.0;
  double l2_norm_sq_ = 0.0;
};

/// -depth * sech^2(x); depth = n(n+1) is reflectionless with bound states -k^2, k = 1..n.
Potential sech2_potential(double depth, PotentialOptions options = {});
/// -depth * exp(-(x / width)^2)
Potential gaussian_potential(double depth, double width = 1.0, PotentialOptions options = {});
/// height on [-half_width, half_width], zero elsewhere.
Potential barrier_potential(double height, double half_width = 1.0, PotentialOptions options = {});
/// Linear interpolation of (xs, vs), zero outside the table.
Potential table_potential(std::vector<double> xs, std::vector<double> vs, PotentialOptions options = {});

// {"type": "named", "name": "sech2"|"gaussian"|"barrier", "params": {...}}
// | {"type": "table", "xs": [...], "vs": [...]}, optional "grid": {"step", "extent", "cutoff", "margin"}.
Potential potential_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const Potential& potential);

enum class Endpoint { left, right };

struct SchrodingerSolution {
  std::vector<double> xs;
  std::vector<Complex> psi;
  std::vector<Complex> dpsi;
};

/// Fixed-step RK4 for -psi'' + V psi = E psi from one end of the grid with the
/// given (psi, psi') seed; values are returned in increasing x. Throws
/// StepSizeError unless h^2 max|V - E| <= 0.05.
SchrodingerSolution integrate_schrodinger(const Potential& potential, double E, Endpoint from, Complex psi0,
                                          Complex dpsi0);

struct BoundStates {
  std::vector<double> energies;  // increasing, all negative
  std::vector<std::string> warnings;
  std::vector<double> excluded;  // near-threshold states left out of sums
};

/// Negative eigenvalues by oscillation counting of the solution decaying at
/// -infinity, bisected to 1e-12.
BoundStates bound_states(const Potential& potential);

/// Number of eigenvalues below E < 0 (oscillation count).
std::size_t count_eigenvalues_below(const Potential& potential, double E);

struct Transmission {
  double energy;
  double abs_t;
  double abs_r;
  double log_inv_t;  // -log|t| = -(1/2) log(1 - |r|^2)
  double unitarity_defect;
};

/// Integrates e^{ikx} from +L to -L and matches onto a e^{ikx} + b e^{-ikx}:
/// |t| = 1/|a|, |r| = |b|/|a|. Throws ConsistencyError if ||a|^2 - |b|^2 - 1| > 1e-4.
Transmission transmission(const Potential& potential, double E);

struct ScatteringData {
  std::vector<double> bound_states;
  std::vector<Transmission> transmission;
  double step = 0.0;
  double extent = 0.0;
};

ScatteringData scattering_data(const Potential& potential, const std::vector<double>& energies);

inline constexpr const char* kKdvConvention =
    "(1/pi) int_0^Emax log|t(E)|^-1 E^(1/2) dE + (2/3) sum |E_n|^(3/2) = (1/8) int V^2 dx; "
    "log|t|^-1 evaluated as -(1/2) log(1 - |r|^2)";

inline constexpr double kKdvThreshold = 1e-6;
inline constexpr double kKdvLowestEnergy = 1e-6;

/// Born-approximation estimate of the energy integral beyond e_max.
double kdv_tail_estimate(const Potential& potential, double e_max);

SumRuleReport verify_kdv(const Potential& potential, double e_max = 50.0, std::size_t n_energies = 400,
                         double tolerance = 5e-3);

}  // namespace sumrules
