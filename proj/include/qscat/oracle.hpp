#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "qscat/kinematics.hpp"

namespace qscat {

// ---------------------------------------------------------------------------
// Fraunhofer intensity profiles
// ---------------------------------------------------------------------------

enum class ProfileKind { single_slit, double_slit, lattice };

/// Far-field intensity model evaluated as a function of sin(theta), used as
/// the independent reference the quantized branches are compared against.
class IntensityProfile {
 public:
  static IntensityProfile single_slit(double slit_width, double lambda) {
    require_positive(slit_width, "slit width");
    require_positive(lambda, "lambda");
    return IntensityProfile(ProfileKind::single_slit, slit_width, 0.0, 0.0, 0, lambda);
  }
  static IntensityProfile double_slit(double slit_width, double separation, double lambda) {
    require_positive(slit_width, "slit width");
    require_positive(lambda, "lambda");
    if (!(separation > slit_width))
      throw std::invalid_argument("slit separation must exceed slit width");
    return IntensityProfile(ProfileKind::double_slit, slit_width, separation, 0.0, 0, lambda);
  }
  static IntensityProfile lattice(double plane_spacing, double lambda, int n_planes = 50) {
    require_positive(plane_spacing, "plane spacing");
    require_positive(lambda, "lambda");
    if (n_planes < 2) throw std::invalid_argument("lattice needs at least 2 planes");
    return IntensityProfile(ProfileKind::lattice, 0.0, 0.0, plane_spacing, n_planes, lambda);
  }

  ProfileKind kind() const { return kind_; }
  double slit_width() const { return a_; }
  double separation() const { return c_; }
  double plane_spacing() const { return d_; }
  int n_planes() const { return n_planes_; }
  double lambda() const { return lambda_; }

 private:
  IntensityProfile(ProfileKind kind, double a, double c, double d, int n, double lambda)
      : kind_(kind), a_(a), c_(c), d_(d), n_planes_(n), lambda_(lambda) {}
  static void require_positive(double v, const char* what) {
    if (!(v > 0.0)) throw std::invalid_argument(std::string(what) + " must be positive");
  }

  ProfileKind kind_;
  double a_;
  double c_;
  double d_;
  int n_planes_;
  double lambda_;
};

/// The reference profile for a scenario: single slit for an aperture, the
/// two-slit pattern for a double slit, the N-plane lattice sum for Laue.
inline IntensityProfile oracle_profile(const Scenario& scenario, const Beam& beam,
                                       int n_planes = 50) {
  const double lambda = beam.lambda();
  return std::visit(
      detail::overloaded{
          [&](const LaueLattice& s) {
            return IntensityProfile::lattice(s.plane_spacing, lambda, n_planes);
          },
          [&](const Aperture& s) { return IntensityProfile::single_slit(s.width, lambda); },
          [&](const DoubleSlit& s) {
            return IntensityProfile::double_slit(s.slit_width, s.separation, lambda);
          }},
      scenario);
}

namespace detail {

inline double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }

}  // namespace detail

/// sinc^2 envelope of one slit of the given width.
inline double envelope_factor(double slit_width, double lambda, double sin_theta) {
  const double s = detail::sinc(std::numbers::pi * slit_width * sin_theta / lambda);
  return s * s;
}

/// cos^2 two-source interference factor for slits separated by `separation`.
inline double interference_factor(double separation, double lambda, double sin_theta) {
  const double c = std::cos(std::numbers::pi * separation * sin_theta / lambda);
  return c * c;
}

namespace detail {

// (sin(N x) / (N sin x))^2 with x = pi * 2 d sin(theta) / lambda, normalized
// to 1 at the principal maxima. Near x = k*pi both numerator and denominator
// vanish; the limit there is 1.
inline double lattice_sum_factor(double plane_spacing, double lambda, int n_planes,
                                 double sin_theta) {
  const double x = std::numbers::pi * (2.0 * plane_spacing * sin_theta) / lambda;
  const double offset = x - std::numbers::pi * std::round(x / std::numbers::pi);
  if (std::abs(offset) < 1e-12) return 1.0;
  const double r = std::sin(n_planes * x) / (n_planes * std::sin(x));
  return r * r;
}

}  // namespace detail

/// Relative intensity of the profile at sin(theta) in [-1, 1], peak 1.
inline double intensity(const IntensityProfile& profile, double sin_theta) {
  if (!(std::abs(sin_theta) <= 1.0))
    throw std::domain_error("sin_theta outside [-1, 1]");
  switch (profile.kind()) {
    case ProfileKind::single_slit:
      return envelope_factor(profile.slit_width(), profile.lambda(), sin_theta);
    case ProfileKind::double_slit: {
      const double cf =
          std::cos(std::numbers::pi * profile.separation() * sin_theta / profile.lambda());
      const double sc =
          detail::sinc(std::numbers::pi * profile.slit_width() * sin_theta / profile.lambda());
      return cf * cf * sc * sc;
    }
    case ProfileKind::lattice:
      return detail::lattice_sum_factor(profile.plane_spacing(), profile.lambda(),
                                        profile.n_planes(), sin_theta);
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Extremum finder
// ---------------------------------------------------------------------------

enum class ExtremumKind { maximum, minimum };

inline const char* to_string(ExtremumKind kind) {
  return kind == ExtremumKind::maximum ? "maximum" : "minimum";
}

struct Extremum {
  double location;  // sin(theta)
  ExtremumKind kind;
  double value;  // relative intensity at the location
};

enum class ExtremaFilter { all, maxima, minima };

namespace detail {

inline double golden_section_max(const std::function<double(double)>& f, double lo, double hi,
                                 double tol) {
  constexpr double invphi = 0.6180339887498949;
  // Below ~1e-5 widths the curvature signal of sharp peaks drops under the
  // evaluation noise and pure golden section starts to wander, so stop there
  // and finish with one parabolic vertex step from noise-safe spacing.
  const double stop = std::max(tol, 1e-5);
  double c = hi - invphi * (hi - lo);
  double d = lo + invphi * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 200 && hi - lo > stop; ++it) {
    if (fc > fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - invphi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + invphi * (hi - lo);
      fd = f(d);
    }
  }
  const double mid = 0.5 * (lo + hi);
  if (hi - lo <= tol) return mid;
  const double delta = 0.5 * (hi - lo);
  const double fa = f(mid - delta);
  const double fm = f(mid);
  const double fb = f(mid + delta);
  const double denom = fa - 2.0 * fm + fb;
  if (!(denom < 0.0)) return mid;  // machine-flat plateau
  const double vertex = mid + 0.5 * delta * (fa - fb) / denom;
  if (!(vertex >= lo && vertex <= hi)) return mid;
  return vertex;
}

// Bisection on the sign of a symmetric difference. Robust at minima that are
// exact zeros of the intensity, where the value itself underflows long before
// the location is pinned down.
inline double bisect_min(const std::function<double(double)>& f, double lo, double hi,
                         double tol) {
  for (int it = 0; it < 200 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double h = 0.25 * (hi - lo);
    const double g = f(mid + h) - f(mid - h);
    if (g < 0.0) {
      lo = mid;
    } else if (g > 0.0) {
      hi = mid;
    } else {
      lo = mid - h;
      hi = mid + h;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Scans f over sin(theta) in [-1, 1] on a uniform grid, brackets first
/// difference sign changes, and refines each bracket to refine_tol (golden
/// section for maxima, derivative-sign bisection for minima). Plateau runs at
/// machine precision produce a single extremum. Results are sorted and
/// deduplicated; the interval endpoints themselves are never reported.
inline std::vector<Extremum> find_extrema(const std::function<double(double)>& f,
                                          ExtremaFilter filter, int grid_points,
                                          double refine_tol) {
  if (grid_points < 1001) throw std::invalid_argument("grid_points must be >= 1001");
  if (!(refine_tol > 0.0) || refine_tol > 1e-8)
    throw std::invalid_argument("refine_tol must be in (0, 1e-8]");

  const int n = grid_points;
  std::vector<double> xs(n), fs(n);
  for (int i = 0; i < n; ++i) {
    xs[i] = -1.0 + 2.0 * i / (n - 1);
    fs[i] = f(xs[i]);
  }

  std::vector<Extremum> out;
  int last_sign = 0;
  int last_diff_left = -1;  // left grid index of the most recent nonzero difference
  for (int i = 0; i + 1 < n; ++i) {
    const double d = fs[i + 1] - fs[i];
    const int sign = (d > 0.0) - (d < 0.0);
    if (sign == 0) continue;
    if (last_sign != 0 && sign != last_sign) {
      const bool is_max = last_sign > 0;
      const bool wanted = filter == ExtremaFilter::all ||
                          (is_max ? filter == ExtremaFilter::maxima
                                  : filter == ExtremaFilter::minima);
      if (wanted) {
        const double lo = xs[last_diff_left];
        const double hi = xs[i + 1];
        const double loc = is_max ? detail::golden_section_max(f, lo, hi, refine_tol)
                                  : detail::bisect_min(f, lo, hi, refine_tol);
        out.push_back({loc, is_max ? ExtremumKind::maximum : ExtremumKind::minimum, f(loc)});
      }
    }
    last_sign = sign;
    last_diff_left = i;
  }

  std::vector<Extremum> result;
  for (const auto& e : out) {
    if (!result.empty() && result.back().kind == e.kind &&
        e.location - result.back().location <= 2.0 * refine_tol) {
      continue;
    }
    result.push_back(e);
  }
  return result;
}

inline std::vector<Extremum> find_extrema(const IntensityProfile& profile,
                                          ExtremaFilter filter = ExtremaFilter::all,
                                          int grid_points = 20001, double refine_tol = 1e-10) {
  return find_extrema([&](double s) { return intensity(profile, s); }, filter, grid_points,
                      refine_tol);
}

// ---------------------------------------------------------------------------
// Branch / extremum matching
// ---------------------------------------------------------------------------

struct MatchedExtremum {
  std::size_t branch_index;
  std::size_t extremum_index;
  double residual;  // |sin_theta_branch - extremum location|
};

/// Result of greedily pairing branches with oracle extrema. Matched pairs plus
/// the unmatched leftovers on both sides conserve both input sizes.
struct ComparisonReport {
  std::vector<MatchedExtremum> matched;          // sorted by branch index
  std::vector<std::size_t> unmatched_branches;   // indices into the branch list
  std::vector<std::size_t> unmatched_extrema;    // indices into the extrema list
};

/// Greedy nearest-neighbor matching on sin(theta): candidate pairs within
/// matching_tol are taken smallest residual first, each side used at most
/// once.
inline ComparisonReport compare_extrema(const std::vector<ScatteringBranch>& branches,
                                        const std::vector<Extremum>& extrema,
                                        double matching_tol) {
  struct Candidate {
    double residual;
    std::size_t branch;
    std::size_t extremum;
  };
  std::vector<Candidate> candidates;
  for (std::size_t b = 0; b < branches.size(); ++b) {
    for (std::size_t e = 0; e < extrema.size(); ++e) {
      const double r = std::abs(branches[b].sin_theta - extrema[e].location);
      if (r <= matching_tol) candidates.push_back({r, b, e});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
    if (x.residual != y.residual) return x.residual < y.residual;
    if (x.branch != y.branch) return x.branch < y.branch;
    return x.extremum < y.extremum;
  });

  std::vector<bool> branch_used(branches.size(), false);
  std::vector<bool> extremum_used(extrema.size(), false);
  ComparisonReport report;
  for (const auto& c : candidates) {
    if (branch_used[c.branch] || extremum_used[c.extremum]) continue;
    branch_used[c.branch] = true;
    extremum_used[c.extremum] = true;
    report.matched.push_back({c.branch, c.extremum, c.residual});
  }
  std::sort(report.matched.begin(), report.matched.end(),
            [](const MatchedExtremum& x, const MatchedExtremum& y) {
              return x.branch_index < y.branch_index;
            });
  for (std::size_t b = 0; b < branches.size(); ++b)
    if (!branch_used[b]) report.unmatched_branches.push_back(b);
  for (std::size_t e = 0; e < extrema.size(); ++e)
    if (!extremum_used[e]) report.unmatched_extrema.push_back(e);
  return report;
}

}  // namespace qscat
