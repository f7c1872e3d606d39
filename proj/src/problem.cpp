#include "cdglab/problem.hpp"

#include "cdglab/basis.hpp"

namespace cdglab {

std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::CDG: return "cdg";
    case Scheme::LDG: return "ldg";
    case Scheme::BR2: return "br2";
  }
  return "?";
}

std::string switch_name(SwitchStrategy s) {
  return s == SwitchStrategy::Consistent ? "consistent" : "natural";
}

namespace {

template <typename Fill>
DGField interpolate_impl(const Mesh& mesh, const NodalBasis& basis, int arity,
                         Fill&& fill) {
  DGField field;
  field.arity = arity;
  field.num_elements = mesh.num_elements();
  field.block_size = basis.size();
  field.coeff.resize(std::size_t(field.num_elements) * field.block_size *
                     arity);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementGeometry geom = mesh.element_geometry(e);
    for (int i = 0; i < basis.size(); ++i) {
      const Vec2 xp = geom.to_physical(basis.nodes()[i]);
      fill(field, e, i, xp);
    }
  }
  return field;
}

}  // namespace

DGField interpolate(const Mesh& mesh, const NodalBasis& basis,
                    const ScalarFn& fn) {
  return interpolate_impl(mesh, basis, 1,
                          [&](DGField& f, int e, int i, Vec2 xp) {
                            f.at(e, i) = fn(xp.x, xp.y);
                          });
}

DGField interpolate_vector(const Mesh& mesh, const NodalBasis& basis,
                           const VectorFn& fn) {
  return interpolate_impl(mesh, basis, 2,
                          [&](DGField& f, int e, int i, Vec2 xp) {
                            const Vec2 v = fn(xp.x, xp.y);
                            f.at(e, i, 0) = v.x;
                            f.at(e, i, 1) = v.y;
                          });
}

}  // namespace cdglab
