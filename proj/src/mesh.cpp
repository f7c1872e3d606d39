#include "cdglab/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace cdglab {

namespace {

constexpr double kPointTol = 1e-12;

bool same_point(Vec2 a, Vec2 b) {
  return std::abs(a.x - b.x) <= kPointTol && std::abs(a.y - b.y) <= kPointTol;
}

struct SideRef {
  int elem;
  int local_face;
};

// local face k runs from vertex (k+1)%3 to vertex (k+2)%3 (ccw)
void face_endpoints(const Mesh& mesh, int elem, int lf, Vec2& a, Vec2& b) {
  const auto& tri = mesh.elements[elem];
  a = mesh.vertices[tri[(lf + 1) % 3]];
  b = mesh.vertices[tri[(lf + 2) % 3]];
}

void finish_faces(Mesh& mesh,
                  const std::vector<std::pair<SideRef, SideRef>>& interior,
                  const std::vector<SideRef>& boundary,
                  const BoundaryTagger& tagger) {
  mesh.element_faces.assign(mesh.elements.size(), {});

  for (const auto& [s1, s2] : interior) {
    SideRef plus = s1, minus = s2;
    if (plus.elem > minus.elem) std::swap(plus, minus);
    if (plus.elem == minus.elem)
      throw std::logic_error("element paired with itself across a face");

    InteriorFace f;
    f.elem_plus = plus.elem;
    f.elem_minus = minus.elem;
    f.local_face_plus = plus.local_face;
    f.local_face_minus = minus.local_face;
    face_endpoints(mesh, plus.elem, plus.local_face, f.a_plus, f.b_plus);
    Vec2 c, d;
    face_endpoints(mesh, minus.elem, minus.local_face, c, d);
    // match endpoints up to a common translation (handles periodic copies);
    // conforming ccw meshes traverse a shared face in opposite directions
    if (same_point(f.a_plus - d, f.b_plus - c)) {
      f.a_minus = d;
      f.b_minus = c;
    } else if (same_point(f.a_plus - c, f.b_plus - d)) {
      f.a_minus = c;
      f.b_minus = d;
    } else {
      throw std::logic_error("face endpoints of neighbors do not match");
    }
    const Vec2 t = f.b_plus - f.a_plus;
    f.length = norm(t);
    if (f.length <= kPointTol) throw std::logic_error("zero-length face");
    f.normal = {t.y / f.length, -t.x / f.length};
    mesh.interior_faces.push_back(f);
  }
  std::sort(mesh.interior_faces.begin(), mesh.interior_faces.end(),
            [](const InteriorFace& a, const InteriorFace& b) {
              return std::pair(a.elem_plus, a.local_face_plus) <
                     std::pair(b.elem_plus, b.local_face_plus);
            });

  for (const SideRef& s : boundary) {
    BoundaryFace f;
    f.elem = s.elem;
    f.local_face = s.local_face;
    face_endpoints(mesh, s.elem, s.local_face, f.a, f.b);
    const Vec2 t = f.b - f.a;
    f.length = norm(t);
    if (f.length <= kPointTol) throw std::logic_error("zero-length face");
    f.normal = {t.y / f.length, -t.x / f.length};
    f.tag = tagger ? tagger(0.5 * (f.a + f.b)) : BoundaryTag::Dirichlet;
    mesh.boundary_faces.push_back(f);
  }
  std::sort(mesh.boundary_faces.begin(), mesh.boundary_faces.end(),
            [](const BoundaryFace& a, const BoundaryFace& b) {
              return std::pair(a.elem, a.local_face) <
                     std::pair(b.elem, b.local_face);
            });

  for (int i = 0; i < static_cast<int>(mesh.interior_faces.size()); ++i) {
    const InteriorFace& f = mesh.interior_faces[i];
    mesh.element_faces[f.elem_plus][f.local_face_plus] = {i, true, true};
    mesh.element_faces[f.elem_minus][f.local_face_minus] = {i, true, false};
  }
  for (int i = 0; i < static_cast<int>(mesh.boundary_faces.size()); ++i) {
    const BoundaryFace& f = mesh.boundary_faces[i];
    mesh.element_faces[f.elem][f.local_face] = {i, false, false};
  }

  for (int e = 0; e < mesh.num_elements(); ++e)
    for (int k = 0; k < 3; ++k)
      if (mesh.element_faces[e][k].index < 0)
        throw std::logic_error("element face without face record");
}

}  // namespace

ElementGeometry Mesh::element_geometry(int e) const {
  const auto& tri = elements[e];
  return make_element_geometry(vertices[tri[0]], vertices[tri[1]],
                               vertices[tri[2]]);
}

Mesh build_structured_mesh(int n, bool periodic, const BoundaryTagger& tagger) {
  if (n < 1) throw std::invalid_argument("structured mesh needs n >= 1");

  Mesh mesh;
  mesh.n = n;
  mesh.periodic = periodic;
  const double h = 1.0 / n;

  mesh.vertices.reserve((n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) mesh.vertices.push_back({i * h, j * h});
  const auto vid = [n](int i, int j) { return i + (n + 1) * j; };

  mesh.elements.reserve(2 * n * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      // lower-left -> upper-right diagonal split, both triangles ccw
      mesh.elements.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
      mesh.elements.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
    }

  // edges keyed by doubled midpoint in grid units, wrapped when periodic
  std::map<std::pair<int, int>, std::vector<SideRef>> edges;
  for (int e = 0; e < mesh.num_elements(); ++e)
    for (int k = 0; k < 3; ++k) {
      const int va = mesh.elements[e][(k + 1) % 3];
      const int vb = mesh.elements[e][(k + 2) % 3];
      int mi = va % (n + 1) + vb % (n + 1);
      int mj = va / (n + 1) + vb / (n + 1);
      if (periodic) {
        mi %= 2 * n;
        mj %= 2 * n;
      }
      edges[{mi, mj}].push_back({e, k});
    }

  std::vector<std::pair<SideRef, SideRef>> interior;
  std::vector<SideRef> boundary;
  for (const auto& [key, sides] : edges) {
    if (sides.size() == 2) {
      interior.push_back({sides[0], sides[1]});
    } else if (sides.size() == 1 && !periodic) {
      boundary.push_back(sides[0]);
    } else {
      throw std::logic_error("non-conforming edge in structured mesh");
    }
  }
  finish_faces(mesh, interior, boundary, tagger);
  return mesh;
}

Mesh build_triangle_mesh(std::vector<Vec2> vertices,
                         std::vector<std::array<int, 3>> elements,
                         const BoundaryTagger& tagger) {
  Mesh mesh;
  mesh.vertices = std::move(vertices);
  mesh.elements = std::move(elements);
  if (mesh.elements.empty()) throw std::invalid_argument("empty mesh");
  for (int e = 0; e < mesh.num_elements(); ++e)
    mesh.element_geometry(e);  // validates orientation/degeneracy

  std::map<std::pair<int, int>, std::vector<SideRef>> edges;
  for (int e = 0; e < mesh.num_elements(); ++e)
    for (int k = 0; k < 3; ++k) {
      const int va = mesh.elements[e][(k + 1) % 3];
      const int vb = mesh.elements[e][(k + 2) % 3];
      edges[{std::min(va, vb), std::max(va, vb)}].push_back({e, k});
    }

  std::vector<std::pair<SideRef, SideRef>> interior;
  std::vector<SideRef> boundary;
  for (const auto& [key, sides] : edges) {
    if (sides.size() == 2)
      interior.push_back({sides[0], sides[1]});
    else if (sides.size() == 1)
      boundary.push_back(sides[0]);
    else
      throw std::invalid_argument("edge shared by more than two elements");
  }
  finish_faces(mesh, interior, boundary, tagger);
  return mesh;
}

SwitchAssignment assign_switches(const Mesh& mesh, SwitchStrategy strategy) {
  if (mesh.interior_faces.empty())
    throw std::invalid_argument("switch assignment needs interior faces");

  SwitchAssignment sw;
  sw.strategy = strategy;
  sw.s_plus.resize(mesh.interior_faces.size());

  if (strategy == SwitchStrategy::Natural) {
    for (size_t i = 0; i < mesh.interior_faces.size(); ++i)
      sw.s_plus[i] =
          mesh.interior_faces[i].elem_plus < mesh.interior_faces[i].elem_minus
              ? 0
              : 1;
    return sw;
  }

  // consistent: switch follows the sign of a fixed global vector against the
  // element's outward normal; no structured-mesh normal is orthogonal to it
  const Vec2 g{1.0, 0.3};
  for (size_t i = 0; i < mesh.interior_faces.size(); ++i) {
    const double gn = dot(g, mesh.interior_faces[i].normal);
    if (std::abs(gn) < 1e-12)
      throw std::invalid_argument(
          "consistent switch undefined: face normal orthogonal to the "
          "global direction");
    sw.s_plus[i] = gn > 0.0 ? 1 : 0;
  }

  // guard the defining property: per element at most 2 of 3 switches are one
  std::vector<int> count(mesh.num_elements(), 0);
  for (size_t i = 0; i < mesh.interior_faces.size(); ++i) {
    count[mesh.interior_faces[i].elem_plus] += sw.s_plus[i];
    count[mesh.interior_faces[i].elem_minus] += 1 - sw.s_plus[i];
  }
  for (int e = 0; e < mesh.num_elements(); ++e)
    if (count[e] > 2)
      throw std::logic_error("consistent switch rule violated on an element");
  return sw;
}

Vec2 c12_vector(const Mesh& mesh, const SwitchAssignment& sw, int face) {
  if (face < 0 || face >= static_cast<int>(mesh.interior_faces.size()))
    throw std::out_of_range("c12_vector: not an interior face");
  const double s = sw.s_plus[face] ? 0.5 : -0.5;
  return s * mesh.interior_faces[face].normal;
}

int cdg_face_sigma_support(const Mesh& mesh, const SwitchAssignment& sw,
                           int face) {
  if (face < 0 || face >= static_cast<int>(mesh.interior_faces.size()))
    throw std::out_of_range("cdg_face_sigma_support: not an interior face");
  return sw.s_plus[face] ? mesh.interior_faces[face].elem_plus
                         : mesh.interior_faces[face].elem_minus;
}

}  // namespace cdglab
