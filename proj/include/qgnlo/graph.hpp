#pragma once

// Planar metric graphs: edges carry a length and a direction angle, vertices
// are either Dirichlet leaves (degree 1) or Kirchhoff interior vertices.
// The graph is embedded in the plane by walking edges from the root vertex.

#include "json.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qgnlo {

class GraphError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class Axis { x = 0, y = 1 };

inline constexpr Axis kAxes[2] = {Axis::x, Axis::y};

inline char axis_name(Axis a) { return a == Axis::x ? 'x' : 'y'; }

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

enum class VertexKind { dirichlet_leaf, kirchhoff_interior };

enum class EdgeEnd { tail, head };

struct Incidence {
  std::size_t edge;
  EdgeEnd end;
};

/// Edge p runs from its tail (s = 0) to its head (s = length) along angle.
struct Edge {
  int id = 0;
  double length = 0.0;
  double angle = 0.0; // radians from the x-axis
  std::size_t tail = 0;
  std::size_t head = 0;
};

struct Vertex {
  int id = 0;
  VertexKind kind = VertexKind::dirichlet_leaf;
  std::vector<Incidence> incident;
  Point2 position;

  std::size_t degree() const { return incident.size(); }
  bool is_leaf() const { return kind == VertexKind::dirichlet_leaf; }
};

/// Input form of an edge; vertex ids are arbitrary integers.
struct EdgeSpec {
  double length = 0.0;
  double angle = 0.0; // radians
  int from = 0;
  int to = 1;
};

class QuantumGraph {
public:
  /// Validates and embeds. `origin` is where the lowest-id vertex sits.
  explicit QuantumGraph(std::vector<EdgeSpec> edges, std::string name = {},
                        Point2 origin = {});

  const std::vector<Edge> &edges() const { return edges_; }
  const std::vector<Vertex> &vertices() const { return vertices_; }
  const Edge &edge(std::size_t p) const { return edges_.at(p); }
  const Vertex &vertex(std::size_t v) const { return vertices_.at(v); }
  std::size_t edge_count() const { return edges_.size(); }
  std::size_t vertex_count() const { return vertices_.size(); }
  const std::string &name() const { return name_; }
  Point2 origin() const { return origin_; }
  const std::vector<EdgeSpec> &specs() const { return specs_; }

  /// Cartesian position of the s = 0 end of edge p.
  Point2 offset(std::size_t p) const { return vertices_[edges_.at(p).tail].position; }

  double total_length() const { return total_length_; }
  std::size_t leaf_count() const;
  std::size_t cycle_rank() const { return edges_.size() + 1 - vertices_.size(); }
  /// Connected, every vertex of degree two: a single closed loop.
  bool is_pure_cycle() const;
  /// Largest |sum of signed displacements| over the fundamental cycles.
  double closure_defect() const { return closure_defect_; }

  /// x_0p + s cos(theta_p) or y_0p + s sin(theta_p). Throws if s is outside
  /// [0, a_p] by more than a rounding margin.
  double project(std::size_t p, double s, Axis axis) const;

  QuantumGraph with_edge_angle(std::size_t p, double angle) const;
  QuantumGraph scaled(double factor) const;
  QuantumGraph rotated(double delta) const;
  /// theta -> -theta for every edge (mirror in the x-axis).
  QuantumGraph reflected() const;
  QuantumGraph translated(double dx, double dy) const;

private:
  void embed();

  std::vector<EdgeSpec> specs_;
  std::vector<Edge> edges_;
  std::vector<Vertex> vertices_;
  std::string name_;
  Point2 origin_;
  double total_length_ = 0.0;
  double closure_defect_ = 0.0;
};

double total_length(const QuantumGraph &g);
std::vector<VertexKind> classify_vertices(const QuantumGraph &g);
double project_coordinate(const QuantumGraph &g, std::size_t edge, double s,
                          Axis axis);

/// Parses the graph document
///   { "name": "...", "edges": [ {"length": r, "angle_deg": r, "from": v, "to": v} ] }
/// with an optional "origin": [x, y].
QuantumGraph parse_graph(const nlohmann::json &doc);
QuantumGraph parse_graph_text(const std::string &text);
QuantumGraph load_graph(const std::filesystem::path &path);
nlohmann::json graph_to_json(const QuantumGraph &g);

/// Named reference graphs used by the CLI generators and the test suites.
namespace shapes {
/// Straight Dirichlet box of the given length along angle.
QuantumGraph box(double length, double angle = 0.0);
/// Chain of edges joined end to end; angles in radians.
QuantumGraph wire(const std::vector<double> &lengths,
                  const std::vector<double> &angles);
/// Star with arms leaving the centre vertex (id 0).
QuantumGraph star(const std::vector<double> &lengths,
                  const std::vector<double> &angles);
/// Arms 0.4 at 180 deg, 0.2 at 90 deg, 0.6 at `rotating_angle`.
QuantumGraph reference_three_star(double rotating_angle);
/// Closed polygon through the given points (in order).
QuantumGraph polygon_loop(const std::vector<Point2> &points);
/// Loop of perimeter L folded onto two antiparallel edges of length L/2.
QuantumGraph two_edge_loop(double perimeter);
/// Three-prong graph of seven edges (three joined stars).
QuantumGraph seven_edge();
} // namespace shapes

double deg_to_rad(double deg);
double rad_to_deg(double rad);

} // namespace qgnlo
