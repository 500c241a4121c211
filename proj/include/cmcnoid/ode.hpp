#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cmcnoid/error.hpp"
#include "cmcnoid/types.hpp"

namespace cmcnoid {

/// Line segment or circular arc in the z-plane, parametrized by arc length.
struct PathSegment {
  enum class Kind { Line, Arc };
  Kind kind = Kind::Line;
  Complex from{};  // Line
  Complex to{};    // Line
  Complex center{};
  double radius = 0.0;
  double phi0 = 0.0;  // Arc: start angle
  double phi1 = 0.0;  // Arc: end angle; phi1 < phi0 runs clockwise

  static PathSegment line(Complex a, Complex b);
  static PathSegment arc(Complex center, double radius, double phi0, double phi1);

  double length() const noexcept;
  Complex point(double s) const noexcept;
  /// dz/ds (unit modulus).
  Complex tangent(double s) const noexcept;
  Complex start() const noexcept { return point(0.0); }
  Complex end() const noexcept { return point(length()); }
  PathSegment reversed() const noexcept;
};

class Path {
 public:
  Path() = default;
  explicit Path(std::vector<PathSegment> segments) : segments_(std::move(segments)) {}

  /// Segment from base towards center, full circle of the given radius
  /// (counterclockwise unless ccw is false), and back.
  static Path loop_around(Complex base, Complex center, double radius, bool ccw = true);

  const std::vector<PathSegment>& segments() const noexcept { return segments_; }
  Path& append(const PathSegment& seg);
  Path& append(const Path& other);
  Path reversed() const;
  /// Image under z -> a z.
  Path rotated(Complex a) const;
  /// Each segment split into `pieces` equal parts.
  Path refined(int pieces) const;
  bool closed(double tol = 1e-12) const;

 private:
  std::vector<PathSegment> segments_;
};

struct OdeOptions {
  double tol = 1e-10;
  double min_step = 1e-12;
  double initial_step = 1e-2;
  long max_steps = 2'000'000;
};

struct OdeStats {
  long accepted = 0;
  long rejected = 0;
};

/// Dormand-Prince 5(4) with the embedded error estimate. rhs(s, y) returns
/// dy/ds; post(y) runs after every accepted step (e.g. renormalization).
/// Error is measured as max |err| / (tol (1 + |y|)) over entries.
template <class State, class Rhs, class Post>
State dopri5(Rhs&& rhs, State y, double s0, double s1, const OdeOptions& opt, Post&& post,
             OdeStats* stats = nullptr) {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  const double span = s1 - s0;
  if (span <= 0.0) return y;
  double s = s0;
  double hstep = std::min(opt.initial_step, span);
  long steps = 0;
  State k1 = rhs(s, y);
  while (s < s1) {
    if (++steps > opt.max_steps) throw Error(ErrorKind::StepSizeUnderflow, "ODE step budget exhausted");
    const bool last = s + hstep >= s1;
    if (last) hstep = s1 - s;
    const State k2 = rhs(s + c2 * hstep, State(y + hstep * (a21 * k1)));
    const State k3 = rhs(s + c3 * hstep, State(y + hstep * (a31 * k1 + a32 * k2)));
    const State k4 = rhs(s + c4 * hstep, State(y + hstep * (a41 * k1 + a42 * k2 + a43 * k3)));
    const State k5 = rhs(s + c5 * hstep, State(y + hstep * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
    const State k6 =
        rhs(s + hstep, State(y + hstep * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
    State y5 = y + hstep * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const State k7 = rhs(s + hstep, y5);  // FSAL stage, used only for the error estimate
    const State err = hstep * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double scale_ref = 1.0 + std::max(y.cwiseAbs().maxCoeff(), y5.cwiseAbs().maxCoeff());
    const double en = err.cwiseAbs().maxCoeff() / (opt.tol * scale_ref);
    if (en <= 1.0 || hstep <= opt.min_step) {
      if (en > 1.0) throw Error(ErrorKind::StepSizeUnderflow, "ODE step size fell below the minimum");
      s = last ? s1 : s + hstep;
      y = std::move(y5);
      post(y);
      k1 = rhs(s, y);
      if (stats) ++stats->accepted;
      const double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
      hstep *= fac;
    } else {
      if (stats) ++stats->rejected;
      hstep *= std::clamp(0.9 * std::pow(en, -0.2), 0.1, 1.0);
      if (hstep < opt.min_step) hstep = opt.min_step;
    }
  }
  return y;
}

}  // namespace cmcnoid
