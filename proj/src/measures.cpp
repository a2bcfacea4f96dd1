#include "sumrules/measures.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sumrules/errors.hpp"
#include "sumrules/oprl.hpp"
#include "sumrules/opuc.hpp"

namespace sumrules {

std::string to_string(QuadratureKind kind) {
  switch (kind) {
    case QuadratureKind::uniform_circle:
      return "uniform-circle";
    case QuadratureKind::gauss_chebyshev_second_kind:
      return "gauss-chebyshev-second-kind";
    case QuadratureKind::uniform_line:
      return "uniform-line";
  }
  return "unknown";
}

QuadratureRule uniform_circle_rule(std::size_t n) {
  if (n == 0) throw DomainError("uniform_circle_rule: n must be positive");
  QuadratureRule rule{std::vector<double>(n), std::vector<double>(n, 1.0 / static_cast<double>(n)),
                      QuadratureKind::uniform_circle};
  for (std::size_t j = 0; j < n; ++j) {
    rule.nodes[j] = kTwoPi * static_cast<double>(j) / static_cast<double>(n);
  }
  return rule;
}

QuadratureRule gauss_chebyshev2(std::size_t n) {
  if (n == 0) throw DomainError("gauss_chebyshev2: n must be positive");
  QuadratureRule rule{std::vector<double>(n), std::vector<double>(n),
                      QuadratureKind::gauss_chebyshev_second_kind};
  const double step = kPi / static_cast<double>(n + 1);
  for (std::size_t k = 1; k <= n; ++k) {
    const double theta = step * static_cast<double>(k);
    const double s = std::sin(theta);
    rule.nodes[k - 1] = 2.0 * std::cos(theta);
    rule.weights[k - 1] = 4.0 * step * s * s;
  }
  // Symmetric rule: pin the middle node so odd moments vanish exactly.
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

QuadratureRule uniform_line_rule(std::size_t n) {
  if (n == 0) throw DomainError("uniform_line_rule: n must be positive");
  QuadratureRule rule{std::vector<double>(n), std::vector<double>(n), QuadratureKind::uniform_line};
  const double step = kPi / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double theta = step * (static_cast<double>(j) + 0.5);
    rule.nodes[j] = 2.0 * std::cos(theta);
    rule.weights[j] = 2.0 * step * std::sin(theta);
  }
  return rule;
}

double integrate(const QuadratureRule& rule, const std::function<double(double)>& f) {
  CompensatedSum<double> acc;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double v = f(rule.nodes[i]);
    if (!std::isfinite(v)) {
      std::ostringstream msg;
      msg << "integrate: integrand not finite at node x = " << rule.nodes[i];
      throw DomainError(msg.str());
    }
    acc.add(rule.weights[i] * v);
  }
  return acc.value();
}

namespace {

void check_samples(const std::vector<double>& samples, const char* who) {
  for (double w : samples) {
    if (!std::isfinite(w) || w < 0.0) {
      throw InputError(std::string(who) + ": density must be finite and nonnegative at every node");
    }
  }
}

void check_point_masses(const std::vector<PointMass>& masses, const char* who) {
  for (std::size_t i = 0; i < masses.size(); ++i) {
    if (!(masses[i].mass > 0.0) || !std::isfinite(masses[i].mass)) {
      throw InputError(std::string(who) + ": point masses must be positive");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (masses[j].position == masses[i].position) {
        throw InputError(std::string(who) + ": point mass positions must be distinct");
      }
    }
  }
}

void check_total(double total, const char* who) {
  if (std::abs(total - 1.0) > kMassTolerance) {
    std::ostringstream msg;
    msg << who << ": total mass " << total << " differs from 1";
    throw InputError(msg.str());
  }
}

double point_mass_total(const std::vector<PointMass>& masses) {
  CompensatedSum<double> acc;
  for (const auto& pm : masses) acc.add(pm.mass);
  return acc.value();
}

}  // namespace

CircleMeasure::CircleMeasure(Density density, std::vector<PointMass> point_masses,
                             std::size_t quad_points, nlohmann::json descriptor, MassCheck mass_check)
    : density_(std::move(density)),
      point_masses_(std::move(point_masses)),
      descriptor_(std::move(descriptor)) {
  if (quad_points == 0) throw InputError("CircleMeasure: quad_points must be positive");
  if (!density_) throw InputError("CircleMeasure: density function is empty");
  for (const auto& pm : point_masses_) {
    if (!(pm.position >= 0.0 && pm.position < kTwoPi)) {
      throw InputError("CircleMeasure: point mass angle must lie in [0, 2pi)");
    }
  }
  check_point_masses(point_masses_, "CircleMeasure");
  samples_.resize(quad_points);
  CompensatedSum<double> acc;
  for (std::size_t j = 0; j < quad_points; ++j) {
    samples_[j] = density_(node(j));
    acc.add(samples_[j]);
  }
  check_samples(samples_, "CircleMeasure");
  ac_mass_ = acc.value() / static_cast<double>(quad_points);
  if (mass_check == MassCheck::enforce) check_total(total_mass(), "CircleMeasure");
}

double CircleMeasure::node(std::size_t j) const {
  return kTwoPi * static_cast<double>(j) / static_cast<double>(samples_.size());
}

double CircleMeasure::total_mass() const { return ac_mass_ + point_mass_total(point_masses_); }

LineMeasure::LineMeasure(Density density, std::vector<PointMass> point_masses,
                         std::size_t quad_points, nlohmann::json descriptor)
    : density_(std::move(density)),
      point_masses_(std::move(point_masses)),
      descriptor_(std::move(descriptor)) {
  if (quad_points == 0) throw InputError("LineMeasure: quad_points must be positive");
  if (!density_) throw InputError("LineMeasure: density function is empty");
  for (const auto& pm : point_masses_) {
    // |E| = 2 is the edge of the essential support and is rejected.
    if (!(std::abs(pm.position) > 2.0) || !std::isfinite(pm.position)) {
      throw InputError("LineMeasure: point masses must satisfy |E| > 2");
    }
  }
  check_point_masses(point_masses_, "LineMeasure");
  samples_.resize(quad_points);
  CompensatedSum<double> acc;
  const double step = kPi / static_cast<double>(quad_points);
  for (std::size_t j = 0; j < quad_points; ++j) {
    const double th = theta(j);
    samples_[j] = density_(2.0 * std::cos(th));
    acc.add(2.0 * step * std::sin(th) * samples_[j]);
  }
  check_samples(samples_, "LineMeasure");
  ac_mass_ = acc.value();
  check_total(total_mass(), "LineMeasure");
}

double LineMeasure::theta(std::size_t j) const {
  return kPi * (static_cast<double>(j) + 0.5) / static_cast<double>(samples_.size());
}

double LineMeasure::total_mass() const { return ac_mass_ + point_mass_total(point_masses_); }

CircleMeasure lebesgue_circle(std::size_t quad_points) {
  return CircleMeasure([](double) { return 1.0; }, {}, quad_points,
                       nlohmann::json{{"type", "named"}, {"name", "lebesgue"}, {"params", nlohmann::json::object()}});
}

double semicircle_density(double x) {
  if (x <= -2.0 || x >= 2.0) return 0.0;
  return std::sqrt((2.0 - x) * (2.0 + x)) / kTwoPi;
}

LineMeasure semicircle(std::size_t quad_points) {
  return LineMeasure(semicircle_density, {}, quad_points,
                     nlohmann::json{{"type", "named"}, {"name", "semicircle"}, {"params", nlohmann::json::object()}});
}

std::vector<Complex> circle_moments(const CircleMeasure& mu, std::size_t max_order,
                                    std::size_t moment_cap) {
  if (max_order > moment_cap) {
    std::ostringstream msg;
    msg << "circle_moments: order " << max_order << " exceeds the moment cap " << moment_cap;
    throw DomainError(msg.str());
  }
  const std::size_t m = mu.quad_points();
  if (2 * max_order >= m && max_order > 0) {
    std::ostringstream msg;
    msg << "circle_moments: order " << max_order << " aliases at quad_points = " << m;
    throw DomainError(msg.str());
  }
  std::vector<Complex> c(max_order + 1);
  const auto& w = mu.samples();
  for (std::size_t k = 0; k <= max_order; ++k) {
    CompensatedSum<Complex> acc;
    for (std::size_t j = 0; j < m; ++j) {
      // Reduce k*j mod m so the angle stays in [0, 2pi) exactly.
      const std::size_t idx = (k * j) % m;
      const double angle = kTwoPi * static_cast<double>(idx) / static_cast<double>(m);
      acc.add(w[j] * Complex(std::cos(angle), -std::sin(angle)));
    }
    Complex ck = acc.value() / static_cast<double>(m);
    for (const auto& pm : mu.point_masses()) {
      ck += pm.mass * std::polar(1.0, -static_cast<double>(k) * pm.position);
    }
    c[k] = ck;
  }
  return c;
}

namespace {

double interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  if (it == xs.begin()) return ys.front();
  if (it == xs.end()) return ys.back();
  const std::size_t i = static_cast<std::size_t>(it - xs.begin());
  const double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
  return ys[i - 1] + t * (ys[i] - ys[i - 1]);
}

void check_table(const std::vector<double>& xs, const std::vector<double>& ys, const char* who) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw InputError(std::string(who) + ": table needs at least two (abscissa, value) pairs of equal length");
  }
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (!(xs[i] > xs[i - 1])) throw InputError(std::string(who) + ": table abscissas must increase");
  }
}

}  // namespace

Density table_density_circle(std::vector<double> thetas, std::vector<double> values) {
  check_table(thetas, values, "table_density_circle");
  if (thetas.front() < 0.0 || thetas.back() >= kTwoPi) {
    throw InputError("table_density_circle: angles must lie in [0, 2pi)");
  }
  // Close the period so interpolation wraps from the last entry to the first.
  thetas.push_back(thetas.front() + kTwoPi);
  values.push_back(values.front());
  return [thetas = std::move(thetas), values = std::move(values)](double theta) {
    double t = std::fmod(theta, kTwoPi);
    if (t < 0.0) t += kTwoPi;
    if (t < thetas.front()) t += kTwoPi;
    return interpolate(thetas, values, t);
  };
}

Density table_density_line(std::vector<double> xs, std::vector<double> values) {
  check_table(xs, values, "table_density_line");
  return [xs = std::move(xs), values = std::move(values)](double x) {
    if (x < xs.front() || x > xs.back()) return 0.0;
    return interpolate(xs, values, x);
  };
}

namespace {

nlohmann::json masses_to_json(const std::vector<PointMass>& masses) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& pm : masses) out.push_back({{"position", pm.position}, {"mass", pm.mass}});
  return out;
}

std::vector<PointMass> masses_from_json(const nlohmann::json& doc) {
  std::vector<PointMass> out;
  if (!doc.contains("point_masses")) return out;
  const auto& arr = doc.at("point_masses");
  if (!arr.is_array()) throw InputError("measure: \"point_masses\" must be an array");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& item = arr[i];
    if (!item.is_object() || !item.contains("position") || !item.contains("mass")) {
      throw InputError("measure: point_masses[" + std::to_string(i) + "] needs \"position\" and \"mass\"");
    }
    out.push_back({item.at("position").get<double>(), item.at("mass").get<double>()});
  }
  return out;
}

std::size_t quad_points_from_json(const nlohmann::json& doc) {
  if (!doc.contains("quad_points")) return kDefaultQuadPoints;
  const auto& q = doc.at("quad_points");
  if (!q.is_number_integer() || q.get<long long>() <= 0) {
    throw InputError("measure: \"quad_points\" must be a positive integer");
  }
  return q.get<std::size_t>();
}

std::vector<double> number_list(const nlohmann::json& obj, const char* key) {
  if (!obj.contains(key) || !obj.at(key).is_array()) {
    throw InputError(std::string("measure density: missing numeric array \"") + key + "\"");
  }
  std::vector<double> out;
  for (const auto& v : obj.at(key)) {
    if (!v.is_number()) throw InputError(std::string("measure density: non-numeric entry in \"") + key + "\"");
    out.push_back(v.get<double>());
  }
  return out;
}

void expect_kind(const nlohmann::json& doc, const char* kind) {
  if (!doc.is_object()) throw InputError("measure: document must be a JSON object");
  if (!doc.contains("kind") || doc.at("kind") != kind) {
    throw InputError(std::string("measure: expected \"kind\": \"") + kind + "\"");
  }
  if (!doc.contains("density") || !doc.at("density").is_object()) {
    throw InputError("measure: missing \"density\" object");
  }
}

}  // namespace

nlohmann::json to_json(const CircleMeasure& mu) {
  nlohmann::json density = mu.descriptor();
  if (density.is_null()) {
    std::vector<double> thetas(mu.quad_points());
    for (std::size_t j = 0; j < thetas.size(); ++j) thetas[j] = mu.node(j);
    density = {{"type", "table"}, {"thetas", thetas}, {"values", mu.samples()}};
  }
  return {{"kind", "circle"},
          {"density", density},
          {"point_masses", masses_to_json(mu.point_masses())},
          {"quad_points", mu.quad_points()}};
}

nlohmann::json to_json(const LineMeasure& mu) {
  nlohmann::json density = mu.descriptor();
  if (density.is_null()) {
    // Samples run from x near 2 down to x near -2; tables must increase.
    const std::size_t m = mu.quad_points();
    std::vector<double> xs(m), values(m);
    for (std::size_t j = 0; j < m; ++j) {
      xs[m - 1 - j] = 2.0 * std::cos(mu.theta(j));
      values[m - 1 - j] = mu.samples()[j];
    }
    density = {{"type", "table"}, {"xs", xs}, {"values", values}};
  }
  return {{"kind", "line"},
          {"density", density},
          {"point_masses", masses_to_json(mu.point_masses())},
          {"quad_points", mu.quad_points()}};
}

CircleMeasure circle_measure_from_json(const nlohmann::json& doc) {
  try {
    expect_kind(doc, "circle");
    const auto& density = doc.at("density");
    const std::size_t quad_points = quad_points_from_json(doc);
    auto masses = masses_from_json(doc);
    const std::string type = density.value("type", "");
    if (type == "table") {
      return CircleMeasure(table_density_circle(number_list(density, "thetas"), number_list(density, "values")),
                           std::move(masses), quad_points, density);
    }
    if (type != "named") throw InputError("measure density: \"type\" must be \"table\" or \"named\"");
    const std::string name = density.value("name", "");
    if (name == "lebesgue") {
      const nlohmann::json params = density.value("params", nlohmann::json::object());
      const double scale = params.value("scale", 1.0);
      return CircleMeasure([scale](double) { return scale; }, std::move(masses), quad_points, density);
    }
    if (name == "bernstein-szego") {
      const nlohmann::json params = density.value("params", nlohmann::json::object());
      const auto alphas = verblunsky_from_json(params);
      const CircleMeasure bs = bernstein_szego_measure(alphas, quad_points);
      return CircleMeasure(bs.density_function(), std::move(masses), quad_points, density);
    }
    throw InputError("circle measure: unknown named density \"" + name + "\"");
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("circle measure: ") + e.what());
  }
}

LineMeasure line_measure_from_json(const nlohmann::json& doc) {
  try {
    expect_kind(doc, "line");
    const auto& density = doc.at("density");
    const std::size_t quad_points = quad_points_from_json(doc);
    auto masses = masses_from_json(doc);
    const std::string type = density.value("type", "");
    if (type == "table") {
      return LineMeasure(table_density_line(number_list(density, "xs"), number_list(density, "values")),
                         std::move(masses), quad_points, density);
    }
    if (type != "named") throw InputError("measure density: \"type\" must be \"table\" or \"named\"");
    const std::string name = density.value("name", "");
    if (name == "semicircle") {
      // Optional scale so that a semicircle fraction can be combined with point masses.
      const nlohmann::json params = density.value("params", nlohmann::json::object());
      const double scale = params.value("scale", 1.0);
      return LineMeasure([scale](double x) { return scale * semicircle_density(x); }, std::move(masses),
                         quad_points, density);
    }
    if (name == "jacobi-spectral") {
      // a.c. part of the spectral measure of an eventually-free Jacobi matrix;
      // its eigenvalues must be listed as point masses.
      const JacobiParams jacobi = jacobi_from_json(density.value("params", nlohmann::json::object()));
      const LineMeasure spectral = spectral_measure(jacobi, quad_points);
      return LineMeasure(spectral.density_function(), std::move(masses), quad_points, density);
    }
    throw InputError("line measure: unknown named density \"" + name + "\"");
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("line measure: ") + e.what());
  }
}

}  // namespace sumrules
