#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace fictsolve {

using Point = std::array<double, 2>;

inline constexpr int kMaxLevel = 12;

/// Uniform quadrilateral mesh of the unit square after `level` global refinements.
/// Cells are indexed (i, j) with i along x; linear index j * cells_per_side + i.
class BackgroundMesh {
 public:
  explicit BackgroundMesh(int level);

  int level() const { return level_; }
  int cells_per_side() const { return n_; }
  double h() const { return h_; }
  std::size_t cell_count() const { return static_cast<std::size_t>(n_) * n_; }
  std::size_t vertex_count() const { return static_cast<std::size_t>(n_ + 1) * (n_ + 1); }
  Point vertex(int i, int j) const { return {i * h_, j * h_}; }
  // lower-left corner of cell (i, j)
  Point cell_origin(int i, int j) const { return {i * h_, j * h_}; }

 private:
  int level_;
  int n_;
  double h_;
};

BackgroundMesh build_background(int level);

struct CellLocation {
  int i = 0;
  int j = 0;
  double xi = 0.0;   // reference coordinates in [0,1]
  double eta = 0.0;
  std::size_t index(const BackgroundMesh& m) const {
    return static_cast<std::size_t>(j) * m.cells_per_side() + i;
  }
};

/// Floor-division point location. Throws DomainError outside [0,1]^2.
CellLocation locate_point(const BackgroundMesh& mesh, const Point& p);

/// Maps reference coordinates of cell (i, j) back to physical space.
Point reference_to_physical(const BackgroundMesh& mesh, const CellLocation& loc);

/// Closed polyline immersed in the unit square.
class ImmersedMesh {
 public:
  ImmersedMesh(std::vector<Point> vertices, std::vector<std::array<int, 2>> segments);

  const std::vector<Point>& vertices() const { return vertices_; }
  const std::vector<std::array<int, 2>>& segments() const { return segments_; }
  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t segment_count() const { return segments_.size(); }
  double h_gamma() const { return h_gamma_; }
  double segment_length(std::size_t s) const;
  double total_length() const;
  // every vertex has exactly two incident segments
  bool is_closed() const;

 private:
  std::vector<Point> vertices_;
  std::vector<std::array<int, 2>> segments_;
  double h_gamma_ = 0.0;
};

enum class InterfaceKind { circle, flower, flower_verbatim, square };

struct InterfaceSpec {
  InterfaceKind kind = InterfaceKind::circle;
  Point center{0.5, 0.5};  // circle center; (x_c, y_c) for the flower
  double radius = 0.21;     // circle radius
  double flower_R = 0.2;
  double flower_r = 0.04;
  double flower_theta = 10.0;
  double a = 0.25;          // square [a,b]^2
  double b = 0.5;
  int n_facets = 16;

  static InterfaceSpec circle(Point c, double r, int n);
  static InterfaceSpec flower(double R, double r, Point c, double theta, int n);
  static InterfaceSpec square(double a, double b, int n);
};

InterfaceKind parse_interface_kind(const std::string& s);
std::string to_string(InterfaceKind k);

/// Closed uniform-parameter polyline, vertices in counterclockwise order.
ImmersedMesh build_interface(const InterfaceSpec& spec);

std::string mesh_to_json(const BackgroundMesh& mesh);
std::string mesh_to_json(const ImmersedMesh& mesh);

}  // namespace fictsolve
