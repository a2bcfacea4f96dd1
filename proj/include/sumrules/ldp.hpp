#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace sumrules {

/// Lambda(lambda) = -log(1 - lambda), the cumulant generating function of a
/// unit-mean exponential. Defined for lambda < 1.
double logmgf_exponential(double lambda);

/// Closed-form Cramer rate of unit-mean exponential averages: x - 1 - log x.
double cramer_rate_exponential(double x);

struct Interval {
  double lo;
  double hi;
};

struct LegendreResult {
  double value;      // lambda* x - Lambda(lambda*)
  double maximizer;  // lambda*
  bool boundary_supremum = false;
};

/// sup over lambda in range of [lambda x - Lambda(lambda)] by golden-section
/// search (Lambda convex). Flags maximizers that land on the range boundary.
LegendreResult legendre(const std::function<double(double)>& logmgf, double x, Interval range,
                        double tolerance = 1e-10);

// lambda-range used for the exponential log-MGF (its domain is lambda < 1).
inline constexpr Interval kExponentialLambdaRange{-60.0, 1.0 - 1e-9};

/// legendre() of the exponential log-MGF starting from kExponentialLambdaRange;
/// the lower end is pushed out (up to -1e12) while the maximizer sits on it.
LegendreResult legendre_exponential(double x, double tolerance = 1e-10);

// Seeded 64-bit streams. Stream s of seed k is a std::mt19937_64 whose seed
// is splitmix64(k + (s + 1) * 0x9E3779B97F4A7C15); trials are dealt to
// kMcStreams streams in contiguous blocks, so results never depend on the
// number of worker threads.
std::uint64_t splitmix64(std::uint64_t x);
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream);
// Unit-mean exponential by inverse CDF from the top 53 bits of one draw.
double sample_exponential(std::mt19937_64& gen);

inline constexpr std::size_t kMcStreams = 64;
inline constexpr double kDefaultMcWindow = 0.02;

enum class McMethod {
  naive,   // hit fraction of |S_n - x| <= delta under unit-mean exponentials
  tilted,  // same probability, sampled under the exponentially tilted law with mean x
};

std::string to_string(McMethod method);
McMethod mc_method_from_string(const std::string& name);

struct McEstimate {
  double rate = 0.0;         // -(1/n) log(probability)
  double probability = 0.0;  // estimated P(|S_n - x| <= delta)
  bool divergent = false;    // zero hits
  std::uint64_t hits = 0;
  double x = 0.0;
  std::size_t n = 0;
  std::size_t trials = 0;
  double delta = 0.0;
  std::uint64_t seed = 0;
  McMethod method = McMethod::tilted;
  double tilt = 0.0;
};

/// Empirical rate -(1/n) log P(|S_n - x| <= delta), S_n the mean of n unit
/// exponentials. Deterministic in (arguments, seed).
McEstimate mc_rate(double x, std::size_t n, std::size_t trials, double delta, std::uint64_t seed,
                   McMethod method = McMethod::tilted);

struct McConfig {
  std::size_t n = 200;
  std::size_t trials = 1000000;
  double delta = kDefaultMcWindow;
  std::uint64_t seed = 20141;
  McMethod method = McMethod::tilted;
};

// Columns over a grid of a > 0: G(a) in closed form and as the numeric
// Legendre transform of the exponential log-MGF at a^2; optionally the MC rate at a^2.
struct RateFunctionEstimate {
  std::vector<double> xs;
  std::vector<double> analytic;
  std::vector<double> legendre;
  std::vector<bool> boundary_flags;
  std::optional<std::vector<McEstimate>> mc;
  std::optional<McConfig> mc_config;

  double max_legendre_error() const;
};

RateFunctionEstimate check_G_rate(std::span<const double> a_grid, std::optional<McConfig> mc = std::nullopt);

// CSV columns: x, analytic, legendre, mc, n, trials, delta, seed (mc fields empty when absent).
std::string to_csv(const RateFunctionEstimate& estimate);
nlohmann::ordered_json to_json(const RateFunctionEstimate& estimate);

/// Integral of log|E - x| against the semicircle law, by Gauss-Chebyshev
/// quadrature. Requires |E| > 2.
double log_potential_semicircle(double E, std::size_t nodes = 4096);

/// log|beta| + beta^-2 / 2, from integrating the semicircle Stieltjes transform.
double log_potential_semicircle_closed_form(double E);

/// (1/2) integral from 2 to |E| of sqrt(t^2 - 4) dt by tanh-sinh quadrature.
double f_integral_identity(double E);

// Observed link between F and the semicircle potential in the field x^2/4:
// F(E) - (E^2/4 - U(E) - 1/2), reported by the CLI rather than assumed.
struct PotentialRelationRow {
  double energy;
  double f_value;
  double potential;
  double relation_residual;
};
std::vector<PotentialRelationRow> potential_relation(std::span<const double> energies);

}  // namespace sumrules
