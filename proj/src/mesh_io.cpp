#include "cdglab/mesh_io.hpp"

#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "json.hpp"

namespace cdglab {

namespace {

using nlohmann::ordered_json;

ordered_json vec_to_json(Vec2 v) { return ordered_json::array({v.x, v.y}); }

// Quantized midpoint key for matching boundary tags on import.
std::pair<std::int64_t, std::int64_t> midpoint_key(Vec2 a, Vec2 b) {
  const double scale = 1e12;
  return {std::int64_t(std::llround((a.x + b.x) * 0.5 * scale)),
          std::int64_t(std::llround((a.y + b.y) * 0.5 * scale))};
}

}  // namespace

std::string mesh_to_json(const Mesh& mesh) {
  ordered_json doc;
  doc["n"] = mesh.n;
  doc["periodic"] = mesh.periodic;

  ordered_json vertices = ordered_json::array();
  for (const Vec2& v : mesh.vertices) vertices.push_back(vec_to_json(v));
  doc["vertices"] = std::move(vertices);

  ordered_json elements = ordered_json::array();
  for (const auto& tri : mesh.elements)
    elements.push_back(ordered_json::array({tri[0], tri[1], tri[2]}));
  doc["elements"] = std::move(elements);

  ordered_json interior = ordered_json::array();
  for (const InteriorFace& f : mesh.interior_faces) {
    ordered_json item;
    item["elem_plus"] = f.elem_plus;
    item["elem_minus"] = f.elem_minus;
    item["local_face_plus"] = f.local_face_plus;
    item["local_face_minus"] = f.local_face_minus;
    item["normal_plus"] = vec_to_json(f.normal);
    interior.push_back(std::move(item));
  }
  doc["interior_faces"] = std::move(interior);

  ordered_json boundary = ordered_json::array();
  for (const BoundaryFace& f : mesh.boundary_faces) {
    ordered_json item;
    item["elem"] = f.elem;
    item["local_face"] = f.local_face;
    item["normal"] = vec_to_json(f.normal);
    item["tag"] = f.tag == BoundaryTag::Dirichlet ? "dirichlet" : "neumann";
    boundary.push_back(std::move(item));
  }
  doc["boundary_faces"] = std::move(boundary);

  return doc.dump(2) + "\n";
}

void write_mesh_json(std::ostream& out, const Mesh& mesh) {
  out << mesh_to_json(mesh);
}

Mesh mesh_from_json(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("mesh JSON parse failure: ") +
                                e.what());
  }
  try {
    const bool periodic = doc.at("periodic").get<bool>();
    if (periodic) {
      const int n = doc.at("n").get<int>();
      if (n < 1)
        throw std::invalid_argument(
            "periodic mesh JSON must carry its grid parameter");
      return build_structured_mesh(n, true);
    }

    std::vector<Vec2> vertices;
    for (const auto& v : doc.at("vertices"))
      vertices.push_back({v.at(0).get<double>(), v.at(1).get<double>()});

    std::vector<std::array<int, 3>> elements;
    for (const auto& tri : doc.at("elements")) {
      const std::array<int, 3> idx = {tri.at(0).get<int>(),
                                      tri.at(1).get<int>(),
                                      tri.at(2).get<int>()};
      for (int v : idx)
        if (v < 0 || v >= int(vertices.size()))
          throw std::invalid_argument("element references a bad vertex");
      elements.push_back(idx);
    }

    // Match exported boundary tags by face midpoint.
    std::map<std::pair<std::int64_t, std::int64_t>, BoundaryTag> tags;
    for (const auto& f : doc.at("boundary_faces")) {
      const int e = f.at("elem").get<int>();
      const int k = f.at("local_face").get<int>();
      if (e < 0 || e >= int(elements.size()) || k < 0 || k > 2)
        throw std::invalid_argument("boundary face references a bad element");
      const Vec2 a = vertices.at(elements[e][(k + 1) % 3]);
      const Vec2 b = vertices.at(elements[e][(k + 2) % 3]);
      const std::string tag = f.at("tag").get<std::string>();
      if (tag != "dirichlet" && tag != "neumann")
        throw std::invalid_argument("unknown boundary tag: " + tag);
      tags[midpoint_key(a, b)] = tag == "dirichlet" ? BoundaryTag::Dirichlet
                                                    : BoundaryTag::Neumann;
    }

    const auto tagger = [&tags](Vec2 mid) {
      const auto it = tags.find(midpoint_key(mid, mid));
      return it == tags.end() ? BoundaryTag::Dirichlet : it->second;
    };
    Mesh mesh = build_triangle_mesh(std::move(vertices), std::move(elements),
                                    tagger);
    mesh.n = doc.value("n", 0);
    return mesh;
  } catch (const ordered_json::exception& e) {
    throw std::invalid_argument(std::string("mesh JSON layout failure: ") +
                                e.what());
  }
}

Mesh read_mesh_json(std::istream& in) {
  std::ostringstream buf;
  buf << in.rdbuf();
  return mesh_from_json(buf.str());
}

}  // namespace cdglab
