#include "qgnlo/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <queue>
#include <sstream>

namespace qgnlo {

double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

QuantumGraph::QuantumGraph(std::vector<EdgeSpec> edges, std::string name,
                           Point2 origin)
    : specs_(std::move(edges)), name_(std::move(name)), origin_(origin) {
  if (specs_.empty())
    throw GraphError("graph has no edges");

  std::map<int, std::size_t> index_of;
  for (const auto &e : specs_) {
    index_of.emplace(e.from, 0);
    index_of.emplace(e.to, 0);
  }
  // vertex index follows ascending id, so the root is the lowest id
  std::size_t next = 0;
  for (auto &[id, idx] : index_of) {
    idx = next++;
    Vertex v;
    v.id = id;
    vertices_.push_back(v);
  }

  for (std::size_t p = 0; p < specs_.size(); ++p) {
    const auto &s = specs_[p];
    if (!(s.length > 0.0) || !std::isfinite(s.length))
      throw GraphError("edge " + std::to_string(p + 1) +
                       ": length must be positive and finite");
    if (!std::isfinite(s.angle))
      throw GraphError("edge " + std::to_string(p + 1) + ": angle is not finite");
    if (s.from == s.to)
      throw GraphError("edge " + std::to_string(p + 1) + ": self-loop at vertex " +
                       std::to_string(s.from) + " is not supported");
    Edge e;
    e.id = static_cast<int>(p + 1);
    e.length = s.length;
    e.angle = s.angle;
    e.tail = index_of.at(s.from);
    e.head = index_of.at(s.to);
    vertices_[e.tail].incident.push_back({p, EdgeEnd::tail});
    vertices_[e.head].incident.push_back({p, EdgeEnd::head});
    edges_.push_back(e);
    total_length_ += s.length;
  }
  for (auto &v : vertices_)
    v.kind = v.degree() == 1 ? VertexKind::dirichlet_leaf
                             : VertexKind::kirchhoff_interior;
  embed();
}

void QuantumGraph::embed() {
  const std::size_t nv = vertices_.size();
  std::vector<bool> seen(nv, false);
  std::vector<bool> tree_edge(edges_.size(), false);
  std::queue<std::size_t> queue;
  vertices_[0].position = origin_;
  seen[0] = true;
  queue.push(0);
  while (!queue.empty()) {
    const std::size_t v = queue.front();
    queue.pop();
    for (const auto &inc : vertices_[v].incident) {
      const Edge &e = edges_[inc.edge];
      const std::size_t w = inc.end == EdgeEnd::tail ? e.head : e.tail;
      if (seen[w])
        continue;
      const double sign = inc.end == EdgeEnd::tail ? 1.0 : -1.0;
      vertices_[w].position = {
          vertices_[v].position.x + sign * e.length * std::cos(e.angle),
          vertices_[v].position.y + sign * e.length * std::sin(e.angle)};
      seen[w] = true;
      tree_edge[inc.edge] = true;
      queue.push(w);
    }
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end())
    throw GraphError("graph is not connected");

  // every non-tree edge closes a fundamental cycle; its displacement must
  // match the embedded endpoints
  closure_defect_ = 0.0;
  for (std::size_t p = 0; p < edges_.size(); ++p) {
    if (tree_edge[p])
      continue;
    const Edge &e = edges_[p];
    const double dx = vertices_[e.tail].position.x +
                      e.length * std::cos(e.angle) -
                      vertices_[e.head].position.x;
    const double dy = vertices_[e.tail].position.y +
                      e.length * std::sin(e.angle) -
                      vertices_[e.head].position.y;
    closure_defect_ = std::max(closure_defect_, std::hypot(dx, dy));
  }
  if (closure_defect_ > 1e-9 * total_length_) {
    std::ostringstream msg;
    msg << "cycle closure violated: displacement defect " << closure_defect_
        << " exceeds " << 1e-9 * total_length_;
    throw GraphError(msg.str());
  }
}

std::size_t QuantumGraph::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(
      vertices_.begin(), vertices_.end(), [](const Vertex &v) { return v.is_leaf(); }));
}

bool QuantumGraph::is_pure_cycle() const {
  return std::all_of(vertices_.begin(), vertices_.end(),
                     [](const Vertex &v) { return v.degree() == 2; });
}

double QuantumGraph::project(std::size_t p, double s, Axis axis) const {
  const Edge &e = edges_.at(p);
  const double margin = 1e-12 * e.length;
  if (s < -margin || s > e.length + margin)
    throw GraphError("arc length " + std::to_string(s) + " outside edge " +
                     std::to_string(e.id) + " of length " +
                     std::to_string(e.length));
  const Point2 o = offset(p);
  return axis == Axis::x ? o.x + s * std::cos(e.angle)
                         : o.y + s * std::sin(e.angle);
}

QuantumGraph QuantumGraph::with_edge_angle(std::size_t p, double angle) const {
  auto specs = specs_;
  specs.at(p).angle = angle;
  return QuantumGraph(std::move(specs), name_, origin_);
}

QuantumGraph QuantumGraph::scaled(double factor) const {
  auto specs = specs_;
  for (auto &s : specs)
    s.length *= factor;
  return QuantumGraph(std::move(specs), name_, {origin_.x * factor, origin_.y * factor});
}

QuantumGraph QuantumGraph::rotated(double delta) const {
  auto specs = specs_;
  for (auto &s : specs)
    s.angle += delta;
  const double c = std::cos(delta), sn = std::sin(delta);
  return QuantumGraph(std::move(specs), name_,
                      {c * origin_.x - sn * origin_.y, sn * origin_.x + c * origin_.y});
}

QuantumGraph QuantumGraph::reflected() const {
  auto specs = specs_;
  for (auto &s : specs)
    s.angle = -s.angle;
  return QuantumGraph(std::move(specs), name_, {origin_.x, -origin_.y});
}

QuantumGraph QuantumGraph::translated(double dx, double dy) const {
  return QuantumGraph(specs_, name_, {origin_.x + dx, origin_.y + dy});
}

double total_length(const QuantumGraph &g) { return g.total_length(); }

std::vector<VertexKind> classify_vertices(const QuantumGraph &g) {
  std::vector<VertexKind> kinds;
  kinds.reserve(g.vertex_count());
  for (const auto &v : g.vertices())
    kinds.push_back(v.kind);
  return kinds;
}

double project_coordinate(const QuantumGraph &g, std::size_t edge, double s,
                          Axis axis) {
  return g.project(edge, s, axis);
}

QuantumGraph parse_graph(const nlohmann::json &doc) {
  if (!doc.is_object())
    throw GraphError("graph document must be a JSON object");
  if (!doc.contains("edges") || !doc["edges"].is_array())
    throw GraphError("graph document needs an \"edges\" array");
  std::vector<EdgeSpec> specs;
  std::size_t idx = 0;
  for (const auto &e : doc["edges"]) {
    ++idx;
    const std::string where = "edges[" + std::to_string(idx - 1) + "]";
    if (!e.is_object())
      throw GraphError(where + " must be an object");
    for (const char *key : {"length", "angle_deg", "from", "to"})
      if (!e.contains(key))
        throw GraphError(where + " is missing \"" + key + "\"");
    if (!e["length"].is_number() || !e["angle_deg"].is_number())
      throw GraphError(where + ": length and angle_deg must be numbers");
    if (!e["from"].is_number_integer() || !e["to"].is_number_integer())
      throw GraphError(where + ": from and to must be integer vertex ids");
    specs.push_back({e["length"].get<double>(),
                     deg_to_rad(e["angle_deg"].get<double>()),
                     e["from"].get<int>(), e["to"].get<int>()});
  }
  std::string name;
  if (doc.contains("name")) {
    if (!doc["name"].is_string())
      throw GraphError("\"name\" must be a string");
    name = doc["name"].get<std::string>();
  }
  Point2 origin;
  if (doc.contains("origin")) {
    const auto &o = doc["origin"];
    if (!o.is_array() || o.size() != 2 || !o[0].is_number() || !o[1].is_number())
      throw GraphError("\"origin\" must be [x, y]");
    origin = {o[0].get<double>(), o[1].get<double>()};
  }
  return QuantumGraph(std::move(specs), std::move(name), origin);
}

QuantumGraph parse_graph_text(const std::string &text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error &e) {
    throw GraphError(std::string("graph document is not valid JSON: ") + e.what());
  }
  return parse_graph(doc);
}

QuantumGraph load_graph(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw GraphError("cannot open graph file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_graph_text(buf.str());
}

nlohmann::json graph_to_json(const QuantumGraph &g) {
  nlohmann::json doc;
  if (!g.name().empty())
    doc["name"] = g.name();
  if (g.origin().x != 0.0 || g.origin().y != 0.0)
    doc["origin"] = {g.origin().x, g.origin().y};
  doc["edges"] = nlohmann::json::array();
  for (const auto &s : g.specs())
    doc["edges"].push_back({{"length", s.length},
                            {"angle_deg", rad_to_deg(s.angle)},
                            {"from", s.from},
                            {"to", s.to}});
  return doc;
}

namespace shapes {

QuantumGraph box(double length, double angle) {
  return QuantumGraph({{length, angle, 0, 1}}, "box");
}

QuantumGraph wire(const std::vector<double> &lengths,
                  const std::vector<double> &angles) {
  if (lengths.size() != angles.size())
    throw GraphError("wire: lengths and angles differ in size");
  std::vector<EdgeSpec> specs;
  for (std::size_t p = 0; p < lengths.size(); ++p)
    specs.push_back({lengths[p], angles[p], static_cast<int>(p),
                     static_cast<int>(p + 1)});
  return QuantumGraph(std::move(specs), "wire");
}

QuantumGraph star(const std::vector<double> &lengths,
                  const std::vector<double> &angles) {
  if (lengths.size() != angles.size())
    throw GraphError("star: lengths and angles differ in size");
  std::vector<EdgeSpec> specs;
  for (std::size_t p = 0; p < lengths.size(); ++p)
    specs.push_back({lengths[p], angles[p], 0, static_cast<int>(p + 1)});
  return QuantumGraph(std::move(specs), "star");
}

QuantumGraph reference_three_star(double rotating_angle) {
  auto g = star({0.4, 0.2, 0.6},
                {deg_to_rad(180.0), deg_to_rad(90.0), rotating_angle});
  return g;
}

QuantumGraph polygon_loop(const std::vector<Point2> &points) {
  const std::size_t n = points.size();
  if (n < 2)
    throw GraphError("polygon_loop needs at least two points");
  std::vector<EdgeSpec> specs;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a = points[i];
    const Point2 b = points[(i + 1) % n];
    specs.push_back({std::hypot(b.x - a.x, b.y - a.y),
                     std::atan2(b.y - a.y, b.x - a.x), static_cast<int>(i),
                     static_cast<int>((i + 1) % n)});
  }
  return QuantumGraph(std::move(specs), "loop", points[0]);
}

QuantumGraph two_edge_loop(double perimeter) {
  return QuantumGraph({{perimeter / 2, 0.0, 0, 1},
                       {perimeter / 2, std::numbers::pi, 1, 0}},
                      "loop");
}

QuantumGraph seven_edge() {
  // first star centre (vertex 0) at the origin; edges 3 and 5 link the stars
  const std::vector<EdgeSpec> specs = {
      {0.63, deg_to_rad(180.0), 0, 1}, {3.61, deg_to_rad(60.0), 0, 2},
      {1.36, deg_to_rad(0.0), 0, 3},   {1.50, deg_to_rad(60.0), 3, 4},
      {2.26, deg_to_rad(0.0), 3, 5},   {2.70, deg_to_rad(36.0), 5, 6},
      {4.36, deg_to_rad(0.0), 5, 7}};
  return QuantumGraph(specs, "seven-edge");
}

} // namespace shapes
} // namespace qgnlo
