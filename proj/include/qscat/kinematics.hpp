#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace qscat {

/// SI value of the action constant h in J*s, used when momenta are reported
/// in SI units instead of natural units.
inline constexpr double kActionSI = 6.62607015e-34;

/// Action constant h. Defaults to 1 (natural units). It scales reported
/// momentum transfers, never angles: every sin(theta) below is a ratio of
/// lengths.
class ActionConstant {
 public:
  constexpr ActionConstant() = default;
  explicit ActionConstant(double value) : h_(value) {
    if (!(h_ > 0.0)) throw std::domain_error("action constant must be positive");
  }
  static ActionConstant si() { return ActionConstant(kActionSI); }
  constexpr double value() const { return h_; }

 private:
  double h_ = 1.0;
};

/// lambda = h / p, the length scale attached to a particle of momentum p.
inline double characteristic_length(double momentum, ActionConstant h = {}) {
  if (!(momentum > 0.0)) throw std::domain_error("momentum must be positive");
  return h.value() / momentum;
}

/// Incident particle. Stores the characteristic length lambda and the
/// momentum p with p = h / lambda; one is always derived from the other so
/// the pair can never drift apart.
class Beam {
 public:
  static Beam from_characteristic_length(double lambda, ActionConstant h = {}) {
    if (!(lambda > 0.0)) throw std::domain_error("characteristic length must be positive");
    return Beam(lambda, h.value() / lambda, h.value());
  }
  static Beam from_momentum(double momentum, ActionConstant h = {}) {
    if (!(momentum > 0.0)) throw std::domain_error("momentum must be positive");
    return Beam(h.value() / momentum, momentum, h.value());
  }

  double lambda() const { return lambda_; }
  double momentum() const { return p_; }
  double action() const { return h_; }

 private:
  Beam(double lambda, double p, double h) : lambda_(lambda), p_(p), h_(h) {}
  double lambda_;
  double p_;
  double h_;
};

/// plus: the action quantum over the interval is n*h.
/// minus: it is (n + 1/2)*h.
enum class QuantizationRule { plus, minus };

/// A displacement Q over which the amplitude repeats up to sign, together
/// with the rule that sign choice implies.
struct SymmetryInterval {
  double length = 0.0;  // Q
  QuantizationRule rule = QuantizationRule::plus;
  std::string label;
};

// ---------------------------------------------------------------------------
// Scattering scenarios
// ---------------------------------------------------------------------------

struct LaueLattice {
  double plane_spacing = 0.0;  // d
};

struct Aperture {
  double width = 0.0;  // a
};

struct DoubleSlit {
  double slit_width = 0.0;  // a, each slit
  double separation = 0.0;  // c, center to center
};

using Scenario = std::variant<LaueLattice, Aperture, DoubleSlit>;

namespace detail {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace detail

inline void validate(const Scenario& scenario) {
  std::visit(detail::overloaded{
                 [](const LaueLattice& s) {
                   if (!(s.plane_spacing > 0.0))
                     throw std::invalid_argument("plane spacing must be positive");
                 },
                 [](const Aperture& s) {
                   if (!(s.width > 0.0))
                     throw std::invalid_argument("aperture width must be positive");
                 },
                 [](const DoubleSlit& s) {
                   if (!(s.slit_width > 0.0))
                     throw std::invalid_argument("slit width must be positive");
                   if (!(s.separation > s.slit_width))
                     throw std::invalid_argument(
                         "slit separation must exceed slit width (slits may not overlap)");
                 }},
             scenario);
}

/// The symmetry intervals a scenario exposes. The double slit has two: the
/// center-to-center displacement (integer rule) and the outer edge-to-edge
/// displacement (half-integer rule).
inline std::vector<SymmetryInterval> symmetry_intervals(const Scenario& scenario) {
  validate(scenario);
  return std::visit(
      detail::overloaded{
          [](const LaueLattice& s) {
            return std::vector<SymmetryInterval>{
                {s.plane_spacing, QuantizationRule::plus, "lattice period"}};
          },
          [](const Aperture& s) {
            return std::vector<SymmetryInterval>{
                {s.width, QuantizationRule::plus, "aperture width"}};
          },
          [](const DoubleSlit& s) {
            return std::vector<SymmetryInterval>{
                {s.separation, QuantizationRule::plus, "slit separation"},
                {s.separation + s.slit_width, QuantizationRule::minus, "outer edge span"}};
          }},
      scenario);
}

// ---------------------------------------------------------------------------
// Discrete branches
// ---------------------------------------------------------------------------

enum class BranchKind { laue_order, aperture_order, interference, envelope };

inline const char* to_string(BranchKind kind) {
  switch (kind) {
    case BranchKind::laue_order: return "laue_order";
    case BranchKind::aperture_order: return "aperture_order";
    case BranchKind::interference: return "interference";
    case BranchKind::envelope: return "envelope";
  }
  return "?";
}

enum class TransferKind { reflection, transmission };

/// Transverse momentum exchanged with the scatterer. Reflection reverses the
/// transverse component (factor 2); transmission keeps the single projection.
inline double momentum_transfer(double theta, const Beam& beam, TransferKind kind) {
  const double factor = kind == TransferKind::reflection ? 2.0 : 1.0;
  return factor * beam.momentum() * std::sin(theta);
}

constexpr TransferKind transfer_kind(BranchKind kind) {
  return kind == BranchKind::laue_order ? TransferKind::reflection
                                        : TransferKind::transmission;
}

/// One allowed discrete outcome of a scattering scenario.
struct ScatteringBranch {
  BranchKind branch;
  int order;         // n, or m for envelope branches
  double sin_theta;  // in [-1, 1]
  double theta;      // radians, asin(sin_theta)
  double delta_pz;   // transverse momentum transfer for this branch
};

/// Integer order bounds of one branch family. min_order > max_order means the
/// family is empty (characteristic length too large).
struct OrderRange {
  BranchKind branch;
  int min_order;
  int max_order;
  bool empty() const { return min_order > max_order; }
  int count() const { return empty() ? 0 : max_order - min_order + 1; }
};

namespace detail {

inline bool admissible(double sin_theta, bool boundary_inclusive) {
  return boundary_inclusive ? std::abs(sin_theta) <= 1.0 : std::abs(sin_theta) < 1.0;
}

// Largest n >= 0 with n*step admissible. The arithmetic estimate is corrected
// by direct admissibility tests so the bound agrees exactly with the values
// the enumeration later emits.
inline int max_integer_order(double step, bool boundary_inclusive) {
  if (!(step > 0.0)) throw std::invalid_argument("order step must be positive");
  const double estimate = std::floor(1.0 / step);
  if (estimate > 1e9) throw std::invalid_argument("scattering order count exceeds enumeration limit");
  int n = static_cast<int>(estimate) + 1;
  while (n > 0 && !admissible(n * step, boundary_inclusive)) --n;
  while (admissible((n + 1) * step, boundary_inclusive)) ++n;
  return n;
}

// Largest m >= 0 with (m + 1/2)*step admissible, or -1 when none fits.
inline int max_half_integer_order(double step, bool boundary_inclusive) {
  if (!(step > 0.0)) throw std::invalid_argument("order step must be positive");
  const double estimate = std::floor(1.0 / step - 0.5);
  if (estimate > 1e9) throw std::invalid_argument("scattering order count exceeds enumeration limit");
  int m = static_cast<int>(std::max(estimate, 0.0)) + 1;
  while (m >= 0 && !admissible((m + 0.5) * step, boundary_inclusive)) --m;
  while (admissible((m + 1.5) * step, boundary_inclusive)) ++m;
  return m;
}

inline double branch_sin(const Scenario& scenario, const Beam& beam, BranchKind kind, int order) {
  const double lambda = beam.lambda();
  switch (kind) {
    case BranchKind::laue_order:
      return order * lambda / (2.0 * std::get<LaueLattice>(scenario).plane_spacing);
    case BranchKind::aperture_order:
      return order * lambda / std::get<Aperture>(scenario).width;
    case BranchKind::interference:
      return order * lambda / std::get<DoubleSlit>(scenario).separation;
    case BranchKind::envelope:
      return (order + 0.5) * lambda / std::get<DoubleSlit>(scenario).slit_width;
  }
  return 0.0;
}

}  // namespace detail

/// Integer order bounds for every branch family of the scenario. These are
/// exactly the bounds quantized_angles enumerates.
inline std::vector<OrderRange> order_range(const Scenario& scenario, const Beam& beam,
                                           bool boundary_inclusive = false) {
  validate(scenario);
  const double lambda = beam.lambda();
  return std::visit(
      detail::overloaded{
          [&](const LaueLattice& s) {
            // Order 0 is the unreflected beam, not a Laue reflection.
            const int n = detail::max_integer_order(lambda / (2.0 * s.plane_spacing),
                                                    boundary_inclusive);
            return std::vector<OrderRange>{{BranchKind::laue_order, 1, n}};
          },
          [&](const Aperture& s) {
            const int n = detail::max_integer_order(lambda / s.width, boundary_inclusive);
            return std::vector<OrderRange>{{BranchKind::aperture_order, -n, n}};
          },
          [&](const DoubleSlit& s) {
            const int n =
                detail::max_integer_order(lambda / s.separation, boundary_inclusive);
            const int m =
                detail::max_half_integer_order(lambda / s.slit_width, boundary_inclusive);
            return std::vector<OrderRange>{
                {BranchKind::interference, -n, n},
                {BranchKind::envelope, m < 0 ? 0 : -(m + 1), m}};
          }},
      scenario);
}

/// All admissible scattering branches of the scenario, sorted by sin(theta).
/// |sin| = 1 is excluded unless boundary_inclusive. An empty result is valid
/// (characteristic length too large for any deflection).
inline std::vector<ScatteringBranch> quantized_angles(const Scenario& scenario, const Beam& beam,
                                                      bool boundary_inclusive = false) {
  const auto ranges = order_range(scenario, beam, boundary_inclusive);
  std::vector<ScatteringBranch> out;
  for (const auto& range : ranges) {
    for (int order = range.min_order; order <= range.max_order; ++order) {
      const double s = detail::branch_sin(scenario, beam, range.branch, order);
      const double theta = std::asin(s);
      out.push_back({range.branch, order, s, theta,
                     momentum_transfer(theta, beam, transfer_kind(range.branch))});
    }
  }
  std::sort(out.begin(), out.end(), [](const ScatteringBranch& x, const ScatteringBranch& y) {
    if (x.sin_theta != y.sin_theta) return x.sin_theta < y.sin_theta;
    if (x.branch != y.branch) return static_cast<int>(x.branch) < static_cast<int>(y.branch);
    return x.order < y.order;
  });
  return out;
}

/// True iff the branch's momentum transfer times the interval length is an
/// allowed action quantum (k*h or (k + 1/2)*h) within relative tolerance.
inline bool verify_quantum(const ScatteringBranch& branch, const SymmetryInterval& interval,
                           ActionConstant h = {}, double tol = 1e-12) {
  const double quanta = branch.delta_pz * interval.length / h.value();
  const double shifted = interval.rule == QuantizationRule::minus ? quanta - 0.5 : quanta;
  const double residual = std::abs(shifted - std::round(shifted));
  return residual <= tol * std::max(1.0, std::abs(quanta));
}

/// Scenario-aware quantum check. Laue and aperture branches check against the
/// scenario's single interval. Double-slit interference branches check the
/// center-to-center interval directly; envelope branches check the joint pair
/// construction, where the outer (c+a, half-integer) and inner (c, integer)
/// conditions differ by delta_pz * a = (m + 1/2) h.
inline bool verify_scenario_quanta(const ScatteringBranch& branch, const Scenario& scenario,
                                   ActionConstant h = {}, double tol = 1e-12) {
  return std::visit(
      detail::overloaded{
          [&](const LaueLattice& s) {
            return verify_quantum(branch, {s.plane_spacing, QuantizationRule::plus, ""}, h, tol);
          },
          [&](const Aperture& s) {
            return verify_quantum(branch, {s.width, QuantizationRule::plus, ""}, h, tol);
          },
          [&](const DoubleSlit& s) {
            if (branch.branch == BranchKind::interference)
              return verify_quantum(branch, {s.separation, QuantizationRule::plus, ""}, h, tol);
            return verify_quantum(branch, {s.slit_width, QuantizationRule::minus, ""}, h, tol);
          }},
      scenario);
}

}  // namespace qscat
