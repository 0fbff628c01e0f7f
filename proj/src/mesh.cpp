#include "fictsolve/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "fictsolve/error.hpp"

namespace fictsolve {

BackgroundMesh::BackgroundMesh(int level) : level_(level) {
  if (level < 0 || level > kMaxLevel)
    throw ConfigError("mesh level must be in [0, " + std::to_string(kMaxLevel) + "], got " +
                      std::to_string(level));
  n_ = 1 << level;
  h_ = 1.0 / n_;
}

BackgroundMesh build_background(int level) { return BackgroundMesh(level); }

CellLocation locate_point(const BackgroundMesh& mesh, const Point& p) {
  const double x = p[0], y = p[1];
  if (!(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0))
    throw DomainError("point (" + std::to_string(x) + ", " + std::to_string(y) +
                      ") outside the unit square");
  const int n = mesh.cells_per_side();
  const double sx = x * n, sy = y * n;
  CellLocation loc;
  loc.i = std::min(static_cast<int>(std::floor(sx)), n - 1);
  loc.j = std::min(static_cast<int>(std::floor(sy)), n - 1);
  loc.xi = sx - loc.i;
  loc.eta = sy - loc.j;
  return loc;
}

Point reference_to_physical(const BackgroundMesh& mesh, const CellLocation& loc) {
  const double h = mesh.h();
  return {(loc.i + loc.xi) * h, (loc.j + loc.eta) * h};
}

namespace {
double dist(const Point& a, const Point& b) { return std::hypot(b[0] - a[0], b[1] - a[1]); }
}  // namespace

ImmersedMesh::ImmersedMesh(std::vector<Point> vertices, std::vector<std::array<int, 2>> segments)
    : vertices_(std::move(vertices)), segments_(std::move(segments)) {
  if (segments_.size() < 3) throw ConfigError("immersed mesh needs at least 3 segments");
  const int nv = static_cast<int>(vertices_.size());
  for (std::size_t s = 0; s < segments_.size(); ++s) {
    const auto [a, b] = segments_[s];
    if (a < 0 || b < 0 || a >= nv || b >= nv) throw ConfigError("segment vertex index out of range");
    const double len = segment_length(s);
    if (!(len > 0.0)) throw ConfigError("degenerate immersed segment");
    h_gamma_ = std::max(h_gamma_, len);
  }
}

double ImmersedMesh::segment_length(std::size_t s) const {
  return dist(vertices_[segments_[s][0]], vertices_[segments_[s][1]]);
}

double ImmersedMesh::total_length() const {
  double t = 0.0;
  for (std::size_t s = 0; s < segments_.size(); ++s) t += segment_length(s);
  return t;
}

bool ImmersedMesh::is_closed() const {
  std::vector<int> deg(vertices_.size(), 0);
  for (const auto& s : segments_) {
    ++deg[s[0]];
    ++deg[s[1]];
  }
  return std::all_of(deg.begin(), deg.end(), [](int d) { return d == 2; });
}

InterfaceSpec InterfaceSpec::circle(Point c, double r, int n) {
  InterfaceSpec s;
  s.kind = InterfaceKind::circle;
  s.center = c;
  s.radius = r;
  s.n_facets = n;
  return s;
}

InterfaceSpec InterfaceSpec::flower(double R, double r, Point c, double theta, int n) {
  InterfaceSpec s;
  s.kind = InterfaceKind::flower;
  s.flower_R = R;
  s.flower_r = r;
  s.center = c;
  s.flower_theta = theta;
  s.n_facets = n;
  return s;
}

InterfaceSpec InterfaceSpec::square(double a, double b, int n) {
  InterfaceSpec s;
  s.kind = InterfaceKind::square;
  s.a = a;
  s.b = b;
  s.n_facets = n;
  return s;
}

InterfaceKind parse_interface_kind(const std::string& s) {
  if (s == "circle") return InterfaceKind::circle;
  if (s == "flower") return InterfaceKind::flower;
  if (s == "flower-verbatim") return InterfaceKind::flower_verbatim;
  if (s == "square") return InterfaceKind::square;
  throw ConfigError("unknown interface '" + s + "'");
}

std::string to_string(InterfaceKind k) {
  switch (k) {
    case InterfaceKind::circle: return "circle";
    case InterfaceKind::flower: return "flower";
    case InterfaceKind::flower_verbatim: return "flower-verbatim";
    case InterfaceKind::square: return "square";
  }
  return "?";
}

ImmersedMesh build_interface(const InterfaceSpec& spec) {
  const int n = spec.n_facets;
  if (n < 3) throw ConfigError("an interface needs at least 3 facets");
  constexpr double pi = std::numbers::pi;
  std::vector<Point> v(n);
  switch (spec.kind) {
    case InterfaceKind::circle: {
      if (!(spec.radius > 0.0)) throw ConfigError("circle radius must be positive");
      for (int k = 0; k < n; ++k) {
        const double t = 2.0 * pi * k / n;
        v[k] = {spec.center[0] + spec.radius * std::cos(t), spec.center[1] + spec.radius * std::sin(t)};
      }
      break;
    }
    case InterfaceKind::flower:
    case InterfaceKind::flower_verbatim: {
      if (!(spec.flower_R > 0.0) || !(spec.flower_r > 0.0))
        throw ConfigError("flower radii must be positive");
      for (int k = 0; k < n; ++k) {
        const double x = static_cast<double>(k) / n;
        const double wave = spec.flower_r * std::cos(spec.flower_theta * pi * x);
        if (spec.kind == InterfaceKind::flower) {
          const double rho = spec.flower_R + wave;
          v[k] = {spec.center[0] + rho * std::cos(2 * pi * x), spec.center[1] + rho * std::sin(2 * pi * x)};
        } else {
          v[k] = {spec.flower_R + spec.center[0] + wave * std::cos(2 * pi * x),
                  spec.flower_R + spec.center[1] + wave * std::sin(2 * pi * x)};
        }
      }
      break;
    }
    case InterfaceKind::square: {
      if (!(spec.a > 0.0 && spec.a < spec.b && spec.b < 1.0))
        throw ConfigError("square interface needs 0 < a < b < 1");
      const double a = spec.a, b = spec.b, L = b - a;
      // counterclockwise from (a,a): bottom, right, top, left
      for (int k = 0; k < n; ++k) {
        const double t = 4.0 * k / n;
        const int side = std::min(3, static_cast<int>(std::floor(t)));
        const double s = (t - side) * L;
        switch (side) {
          case 0: v[k] = {a + s, a}; break;
          case 1: v[k] = {b, a + s}; break;
          case 2: v[k] = {b - s, b}; break;
          default: v[k] = {a, b - s}; break;
        }
      }
      break;
    }
  }
  std::vector<std::array<int, 2>> seg(n);
  for (int k = 0; k < n; ++k) seg[k] = {k, (k + 1) % n};
  return ImmersedMesh(std::move(v), std::move(seg));
}

std::string mesh_to_json(const BackgroundMesh& mesh) {
  nlohmann::json j;
  const int n = mesh.cells_per_side();
  auto& verts = j["vertices"] = nlohmann::json::array();
  for (int jj = 0; jj <= n; ++jj)
    for (int i = 0; i <= n; ++i) {
      const Point p = mesh.vertex(i, jj);
      verts.push_back({p[0], p[1]});
    }
  auto& cells = j["cells"] = nlohmann::json::array();
  for (int jj = 0; jj < n; ++jj)
    for (int i = 0; i < n; ++i) {
      const int v0 = jj * (n + 1) + i;
      cells.push_back({v0, v0 + 1, v0 + n + 2, v0 + n + 1});
    }
  return j.dump();
}

std::string mesh_to_json(const ImmersedMesh& mesh) {
  nlohmann::json j;
  auto& verts = j["vertices"] = nlohmann::json::array();
  for (const auto& p : mesh.vertices()) verts.push_back({p[0], p[1]});
  auto& segs = j["segments"] = nlohmann::json::array();
  for (const auto& s : mesh.segments()) segs.push_back({s[0], s[1]});
  return j.dump();
}

}  // namespace fictsolve
