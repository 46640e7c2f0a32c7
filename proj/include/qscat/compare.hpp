#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "qscat/kinematics.hpp"
#include "qscat/oracle.hpp"

namespace qscat {

/// Knobs for the oracle side of a comparison run.
struct OracleOptions {
  int grid_points = 20001;
  double refine_tol = 1e-10;
  int lattice_planes = 50;
};

/// Matches whose oracle intensity falls below this are flagged as suppressed
/// orders (an interference order sitting on an envelope zero, or vice versa).
inline constexpr double kSuppressedIntensity = 1e-6;

/// Residual thresholds per branch family. The envelope threshold is relative
/// to lambda/a because the half-integer rule deviates from the true secondary
/// maxima by at most ~0.0697 lambda/a (worst case at the first one).
inline constexpr double kSharpFamilyThreshold = 1e-9;
inline constexpr double kEnvelopeThresholdScale = 0.08;

struct BranchMatchRow {
  ScatteringBranch branch;
  bool matched = false;
  double oracle_sin_theta = std::numeric_limits<double>::quiet_NaN();
  double residual = std::numeric_limits<double>::quiet_NaN();
  ExtremumKind oracle_kind = ExtremumKind::maximum;
  bool suppressed = false;
  // Reported but exempt from pass/fail: the forward aperture order paired
  // with the central maximum, where the flat peak top limits how precisely
  // golden section can localize the oracle side.
  bool informational = false;
};

/// Comparison outcome for one branch family against one oracle extrema set.
struct FamilyComparison {
  BranchKind family;
  double residual_threshold = 0.0;
  bool unmatched_allowed = false;  // true only for envelope branches
  std::vector<BranchMatchRow> rows;
  std::vector<Extremum> unmatched_oracle;

  std::size_t matched_count() const {
    std::size_t n = 0;
    for (const auto& r : rows) n += r.matched ? 1 : 0;
    return n;
  }
  std::size_t unmatched_count() const { return rows.size() - matched_count(); }
  double max_residual() const {
    double m = 0.0;
    for (const auto& r : rows)
      if (r.matched && !r.informational && r.residual > m) m = r.residual;
    return m;
  }
  bool pass() const {
    for (const auto& r : rows) {
      if (r.informational) continue;
      if (!r.matched && !unmatched_allowed) return false;
      if (r.matched && r.residual > residual_threshold) return false;
    }
    return true;
  }
};

struct ScenarioComparison {
  std::vector<FamilyComparison> families;
  bool pass() const {
    for (const auto& f : families)
      if (!f.pass()) return false;
    return true;
  }
};

/// Principal (Bragg) maxima of a lattice profile: the near-unit peaks, with
/// the forward peak at sin(theta) = 0 dropped since order 0 is not a
/// reflection. Finite-N ripple maxima stay well below the 0.5 cut.
inline std::vector<Extremum> principal_lattice_maxima(const IntensityProfile& profile,
                                                      const OracleOptions& opt = {}) {
  const double forward_cut =
      profile.lambda() / (4.0 * profile.plane_spacing());  // half the first-order spacing
  std::vector<Extremum> peaks;
  for (const auto& e :
       find_extrema(profile, ExtremaFilter::maxima, opt.grid_points, opt.refine_tol)) {
    if (e.value >= 0.5 && std::abs(e.location) > forward_cut) peaks.push_back(e);
  }
  return peaks;
}

namespace detail {

inline std::vector<ScatteringBranch> branches_of(const std::vector<ScatteringBranch>& all,
                                                 BranchKind kind) {
  std::vector<ScatteringBranch> out;
  for (const auto& b : all)
    if (b.branch == kind) out.push_back(b);
  return out;
}

inline FamilyComparison match_family(BranchKind family,
                                     const std::vector<ScatteringBranch>& branches,
                                     const std::vector<Extremum>& extrema, double matching_tol,
                                     double threshold, bool unmatched_allowed,
                                     const IntensityProfile* suppression_profile) {
  FamilyComparison fc;
  fc.family = family;
  fc.residual_threshold = threshold;
  fc.unmatched_allowed = unmatched_allowed;

  const ComparisonReport report = compare_extrema(branches, extrema, matching_tol);
  fc.rows.resize(branches.size());
  for (std::size_t i = 0; i < branches.size(); ++i) {
    fc.rows[i].branch = branches[i];
    if (suppression_profile)
      fc.rows[i].suppressed =
          intensity(*suppression_profile, branches[i].sin_theta) < kSuppressedIntensity;
  }
  for (const auto& m : report.matched) {
    auto& row = fc.rows[m.branch_index];
    row.matched = true;
    row.oracle_sin_theta = extrema[m.extremum_index].location;
    row.residual = m.residual;
    row.oracle_kind = extrema[m.extremum_index].kind;
  }
  for (std::size_t e : report.unmatched_extrema) fc.unmatched_oracle.push_back(extrema[e]);
  return fc;
}

}  // namespace detail

/// Runs the full scenario-vs-oracle comparison:
///   Laue       — orders against principal lattice maxima.
///   Aperture   — nonzero orders against single-slit minima; the undeflected
///                order against the central maximum.
///   DoubleSlit — interference orders against maxima of the bare cos^2
///                factor; envelope orders against single-slit maxima, where
///                the innermost envelope orders legitimately have no
///                secondary-maximum partner and stay unmatched.
/// Suppressed flags are evaluated on the full double-slit profile.
inline ScenarioComparison compare_scenario(const Scenario& scenario, const Beam& beam,
                                           bool boundary_inclusive = false,
                                           const OracleOptions& opt = {}) {
  validate(scenario);
  const auto branches = quantized_angles(scenario, beam, boundary_inclusive);
  const double lambda = beam.lambda();

  ScenarioComparison result;
  std::visit(
      detail::overloaded{
          [&](const LaueLattice& s) {
            const auto profile =
                IntensityProfile::lattice(s.plane_spacing, lambda, opt.lattice_planes);
            const auto peaks = principal_lattice_maxima(profile, opt);
            const double spacing = lambda / (2.0 * s.plane_spacing);
            result.families.push_back(detail::match_family(
                BranchKind::laue_order, branches, peaks, 0.4 * spacing, kSharpFamilyThreshold,
                false, nullptr));
          },
          [&](const Aperture& s) {
            const auto profile = IntensityProfile::single_slit(s.width, lambda);
            const auto minima =
                find_extrema(profile, ExtremaFilter::minima, opt.grid_points, opt.refine_tol);
            const auto maxima =
                find_extrema(profile, ExtremaFilter::maxima, opt.grid_points, opt.refine_tol);
            std::vector<ScatteringBranch> nonzero;
            std::vector<ScatteringBranch> zero;
            for (const auto& b : branches) (b.order == 0 ? zero : nonzero).push_back(b);
            const double spacing = lambda / s.width;
            auto fam = detail::match_family(BranchKind::aperture_order, nonzero, minima,
                                            0.4 * spacing, kSharpFamilyThreshold, false, nullptr);
            // Fold the undeflected order in against the central maximum so every
            // branch has a row.
            auto fam0 = detail::match_family(BranchKind::aperture_order, zero, maxima,
                                             0.4 * spacing, kSharpFamilyThreshold, false, nullptr);
            for (auto& row : fam0.rows) {
              row.informational = true;
              fam.rows.push_back(row);
            }
            for (auto& e : fam0.unmatched_oracle) fam.unmatched_oracle.push_back(e);
            std::sort(fam.rows.begin(), fam.rows.end(),
                      [](const BranchMatchRow& x, const BranchMatchRow& y) {
                        return x.branch.sin_theta < y.branch.sin_theta;
                      });
            result.families.push_back(std::move(fam));
          },
          [&](const DoubleSlit& s) {
            const auto full = IntensityProfile::double_slit(s.slit_width, s.separation, lambda);
            const auto cos_factor_maxima = find_extrema(
                [&](double x) { return interference_factor(s.separation, lambda, x); },
                ExtremaFilter::maxima, opt.grid_points, opt.refine_tol);
            const auto envelope_maxima =
                find_extrema(IntensityProfile::single_slit(s.slit_width, lambda),
                             ExtremaFilter::maxima, opt.grid_points, opt.refine_tol);
            const double envelope_tol = kEnvelopeThresholdScale * lambda / s.slit_width;
            result.families.push_back(detail::match_family(
                BranchKind::interference, detail::branches_of(branches, BranchKind::interference),
                cos_factor_maxima, 0.4 * lambda / s.separation, kSharpFamilyThreshold, false,
                &full));
            result.families.push_back(detail::match_family(
                BranchKind::envelope, detail::branches_of(branches, BranchKind::envelope),
                envelope_maxima, envelope_tol, envelope_tol, true, &full));
          }},
      scenario);
  return result;
}

}  // namespace qscat
