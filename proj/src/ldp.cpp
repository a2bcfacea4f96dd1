#include "sumrules/ldp.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <thread>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "sumrules/errors.hpp"
#include "sumrules/measures.hpp"
#include "sumrules/numeric.hpp"
#include "sumrules/oprl.hpp"

namespace sumrules {

double logmgf_exponential(double lambda) {
  if (!(lambda < 1.0)) throw DomainError("logmgf_exponential: requires lambda < 1");
  return -std::log1p(-lambda);
}

double cramer_rate_exponential(double x) {
  if (!(x > 0.0)) throw DomainError("cramer_rate_exponential: requires x > 0");
  const double u = x - 1.0;
  return u - std::log1p(u);
}

LegendreResult legendre(const std::function<double(double)>& logmgf, double x, Interval range, double tolerance) {
  if (!(range.hi > range.lo)) throw DomainError("legendre: empty lambda range");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  auto objective = [&](double lambda) { return lambda * x - logmgf(lambda); };
  double lo = range.lo;
  double hi = range.hi;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = objective(c);
  double fd = objective(d);
  while (hi - lo > tolerance) {
    if (fc >= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = objective(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = objective(d);
    }
  }
  LegendreResult out;
  out.maximizer = 0.5 * (lo + hi);
  out.value = objective(out.maximizer);
  const double edge = 10.0 * tolerance;
  out.boundary_supremum = out.maximizer - range.lo < edge || range.hi - out.maximizer < edge;
  return out;
}

LegendreResult legendre_exponential(double x, double tolerance) {
  Interval range = kExponentialLambdaRange;
  LegendreResult out = legendre(logmgf_exponential, x, range, tolerance);
  while (out.boundary_supremum && out.maximizer - range.lo < 0.5 * (range.hi - range.lo) && range.lo > -1e12) {
    range.lo *= 8.0;
    out = legendre(logmgf_exponential, x, range, tolerance);
  }
  return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(splitmix64(seed + (stream + 1) * 0x9E3779B97F4A7C15ULL));
}

double sample_exponential(std::mt19937_64& gen) {
  const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;  // [0, 1)
  return -std::log1p(-u);
}

std::string to_string(McMethod method) { return method == McMethod::naive ? "naive" : "tilted"; }

McMethod mc_method_from_string(const std::string& name) {
  if (name == "naive") return McMethod::naive;
  if (name == "tilted") return McMethod::tilted;
  throw InputError("unknown Monte Carlo method \"" + name + "\" (expected naive or tilted)");
}

namespace {

struct StreamTally {
  std::uint64_t hits = 0;
  double weight_sum = 0.0;
};

}  // namespace

McEstimate mc_rate(double x, std::size_t n, std::size_t trials, double delta, std::uint64_t seed, McMethod method) {
  if (!(x > 0.0)) throw DomainError("mc_rate: requires x > 0");
  if (!(delta > 0.0)) throw DomainError("mc_rate: requires delta > 0");
  if (n == 0) throw DomainError("mc_rate: requires n >= 1");
  if (trials < 10000) throw DomainError("mc_rate: requires at least 1e4 trials");

  McEstimate out;
  out.x = x;
  out.n = n;
  out.trials = trials;
  out.delta = delta;
  out.seed = seed;
  out.method = method;

  // Tilt lambda* from the numeric Legendre transform; any tilt gives an
  // unbiased estimate, this one centers the sampled means on x.
  double tilt = 0.0;
  if (method == McMethod::tilted) tilt = legendre_exponential(x).maximizer;
  out.tilt = tilt;
  const double tilted_mean = 1.0 / (1.0 - tilt);
  const double nd = static_cast<double>(n);

  std::vector<StreamTally> tallies(kMcStreams);
  auto run_stream = [&](std::size_t s) {
    const std::size_t base = trials / kMcStreams;
    const std::size_t count = base + (s < trials % kMcStreams ? 1 : 0);
    std::mt19937_64 gen = make_stream(seed, s);
    CompensatedSum<double> weights;
    std::uint64_t hits = 0;
    for (std::size_t t = 0; t < count; ++t) {
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) sum += sample_exponential(gen);
      const double mean = tilted_mean * sum / nd;
      if (std::abs(mean - x) <= delta) {
        ++hits;
        // Likelihood ratio relative to its value at mean == x.
        if (method == McMethod::tilted) weights.add(std::exp(-tilt * nd * (mean - x)));
      }
    }
    tallies[s] = {hits, weights.value()};
  };

  const std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, kMcStreams);
  if (workers == 1) {
    for (std::size_t s = 0; s < kMcStreams; ++s) run_stream(s);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t s = w; s < kMcStreams; s += workers) run_stream(s);
      });
    }
    for (auto& th : pool) th.join();
  }

  CompensatedSum<double> weight_total;
  for (const auto& t : tallies) {
    out.hits += t.hits;
    weight_total.add(t.weight_sum);
  }
  if (out.hits == 0) {
    out.divergent = true;
    out.rate = std::numeric_limits<double>::infinity();
    return out;
  }
  const double td = static_cast<double>(trials);
  double log_p = 0.0;
  if (method == McMethod::naive) {
    log_p = std::log(static_cast<double>(out.hits) / td);
  } else {
    const double log_ref = nd * std::log(tilted_mean) - tilt * nd * x;
    log_p = log_ref + std::log(weight_total.value() / td);
  }
  out.probability = std::exp(log_p);
  out.rate = -log_p / nd;
  return out;
}

double RateFunctionEstimate::max_legendre_error() const {
  double err = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) err = std::max(err, std::abs(analytic[i] - legendre[i]));
  return err;
}

RateFunctionEstimate check_G_rate(std::span<const double> a_grid, std::optional<McConfig> mc) {
  RateFunctionEstimate out;
  out.mc_config = mc;
  if (mc) out.mc.emplace();
  for (double a : a_grid) {
    if (!(a > 0.0)) throw DomainError("check_G_rate: grid points must be positive");
    out.xs.push_back(a);
    out.analytic.push_back(g_functional(a));
    const auto lt = legendre_exponential(a * a);
    out.legendre.push_back(lt.value);
    out.boundary_flags.push_back(lt.boundary_supremum);
    if (mc) out.mc->push_back(mc_rate(a * a, mc->n, mc->trials, mc->delta, mc->seed, mc->method));
  }
  return out;
}

std::string to_csv(const RateFunctionEstimate& estimate) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "x,analytic,legendre,mc,n,trials,delta,seed\n";
  for (std::size_t i = 0; i < estimate.xs.size(); ++i) {
    out << estimate.xs[i] << ',' << estimate.analytic[i] << ',' << estimate.legendre[i] << ',';
    if (estimate.mc) {
      const auto& m = (*estimate.mc)[i];
      if (!m.divergent) out << m.rate;
      out << ',' << m.n << ',' << m.trials << ',' << m.delta << ',' << m.seed;
    } else {
      out << ",,,,";
    }
    out << '\n';
  }
  return out.str();
}

nlohmann::ordered_json to_json(const RateFunctionEstimate& estimate) {
  nlohmann::ordered_json out;
  out["xs"] = estimate.xs;
  out["analytic"] = estimate.analytic;
  out["legendre"] = estimate.legendre;
  out["boundary_supremum"] = estimate.boundary_flags;
  out["max_legendre_error"] = estimate.max_legendre_error();
  if (estimate.mc) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& m : *estimate.mc) {
      nlohmann::ordered_json row;
      row["x"] = m.x;
      row["rate"] = m.divergent ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(m.rate);
      row["probability"] = m.probability;
      row["hits"] = m.hits;
      row["divergent"] = m.divergent;
      rows.push_back(row);
    }
    out["mc"] = rows;
    const auto& cfg = *estimate.mc_config;
    out["mc_config"] = {{"n", cfg.n},
                        {"trials", cfg.trials},
                        {"delta", cfg.delta},
                        {"seed", cfg.seed},
                        {"method", to_string(cfg.method)},
                        {"streams", kMcStreams}};
  } else {
    out["mc"] = nullptr;
  }
  return out;
}

double log_potential_semicircle(double E, std::size_t nodes) {
  if (!(std::abs(E) > 2.0)) throw DomainError("log_potential_semicircle: requires |E| > 2");
  const QuadratureRule rule = gauss_chebyshev2(nodes);
  return integrate(rule, [E](double x) { return std::log(std::abs(E - x)); }) / kTwoPi;
}

double log_potential_semicircle_closed_form(double E) {
  const double beta = beta_of_E(E);
  return std::log(std::abs(beta)) + 0.5 / (beta * beta);
}

double f_integral_identity(double E) {
  const double top = std::abs(E);
  if (!(top > 2.0)) {
    if (top == 2.0) return 0.0;
    throw DomainError("f_integral_identity: requires |E| >= 2");
  }
  boost::math::quadrature::tanh_sinh<double> integrator;
  const double value =
      integrator.integrate([](double t) { return std::sqrt(std::max(0.0, (t - 2.0) * (t + 2.0))); }, 2.0, top);
  return 0.5 * value;
}

std::vector<PotentialRelationRow> potential_relation(std::span<const double> energies) {
  std::vector<PotentialRelationRow> rows;
  for (double e : energies) {
    const double f = f_functional(e);
    const double u = log_potential_semicircle(e);
    rows.push_back({e, f, u, f - (0.25 * e * e - u - 0.5)});
  }
  return rows;
}

}  // namespace sumrules
