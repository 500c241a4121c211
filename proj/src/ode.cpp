#include "cmcnoid/ode.hpp"

namespace cmcnoid {

PathSegment PathSegment::line(Complex a, Complex b) {
  PathSegment s;
  s.kind = Kind::Line;
  s.from = a;
  s.to = b;
  return s;
}

PathSegment PathSegment::arc(Complex center, double radius, double phi0, double phi1) {
  PathSegment s;
  s.kind = Kind::Arc;
  s.center = center;
  s.radius = radius;
  s.phi0 = phi0;
  s.phi1 = phi1;
  return s;
}

double PathSegment::length() const noexcept {
  if (kind == Kind::Line) return std::abs(to - from);
  return radius * std::abs(phi1 - phi0);
}

Complex PathSegment::point(double s) const noexcept {
  if (kind == Kind::Line) {
    const double len = length();
    return len == 0.0 ? from : from + (to - from) * (s / len);
  }
  const double dir = phi1 >= phi0 ? 1.0 : -1.0;
  return center + radius * std::exp(kI * (phi0 + dir * s / radius));
}

Complex PathSegment::tangent(double s) const noexcept {
  if (kind == Kind::Line) {
    const double len = length();
    return len == 0.0 ? Complex(0.0) : (to - from) / len;
  }
  const double dir = phi1 >= phi0 ? 1.0 : -1.0;
  return dir * kI * std::exp(kI * (phi0 + dir * s / radius));
}

PathSegment PathSegment::reversed() const noexcept {
  PathSegment r = *this;
  if (kind == Kind::Line) {
    std::swap(r.from, r.to);
  } else {
    std::swap(r.phi0, r.phi1);
  }
  return r;
}

Path Path::loop_around(Complex base, Complex center, double radius, bool ccw) {
  const Complex offset = base - center;
  if (std::abs(offset) <= radius) {
    throw Error(ErrorKind::InvalidArgument, "loop basepoint must lie outside the circle");
  }
  const double phi = std::arg(offset);
  const Complex entry = center + radius * std::exp(kI * phi);
  Path p;
  p.append(PathSegment::line(base, entry));
  p.append(PathSegment::arc(center, radius, phi, ccw ? phi + 2.0 * kPi : phi - 2.0 * kPi));
  p.append(PathSegment::line(entry, base));
  return p;
}

Path& Path::append(const PathSegment& seg) {
  segments_.push_back(seg);
  return *this;
}

Path& Path::append(const Path& other) {
  segments_.insert(segments_.end(), other.segments_.begin(), other.segments_.end());
  return *this;
}

Path Path::reversed() const {
  Path r;
  for (auto it = segments_.rbegin(); it != segments_.rend(); ++it) r.append(it->reversed());
  return r;
}

Path Path::rotated(Complex a) const {
  Path r;
  const double turn = std::arg(a);
  const double stretch = std::abs(a);
  for (auto seg : segments_) {
    if (seg.kind == PathSegment::Kind::Line) {
      seg.from *= a;
      seg.to *= a;
    } else {
      seg.center *= a;
      seg.radius *= stretch;
      seg.phi0 += turn;
      seg.phi1 += turn;
    }
    r.append(seg);
  }
  return r;
}

Path Path::refined(int pieces) const {
  Path r;
  for (const auto& seg : segments_) {
    for (int k = 0; k < pieces; ++k) {
      const double t0 = static_cast<double>(k) / pieces, t1 = static_cast<double>(k + 1) / pieces;
      if (seg.kind == PathSegment::Kind::Line) {
        r.append(PathSegment::line(seg.from + (seg.to - seg.from) * t0, seg.from + (seg.to - seg.from) * t1));
      } else {
        r.append(PathSegment::arc(seg.center, seg.radius, seg.phi0 + (seg.phi1 - seg.phi0) * t0,
                                  seg.phi0 + (seg.phi1 - seg.phi0) * t1));
      }
    }
  }
  return r;
}

bool Path::closed(double tol) const {
  if (segments_.empty()) return true;
  for (std::size_t i = 1; i < segments_.size(); ++i) {
    if (std::abs(segments_[i].start() - segments_[i - 1].end()) > tol) return false;
  }
  return std::abs(segments_.front().start() - segments_.back().end()) <= tol;
}

}  // namespace cmcnoid
