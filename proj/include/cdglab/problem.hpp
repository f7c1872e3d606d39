#pragma once

#include <functional>
#include <optional>
#include <string>

#include "cdglab/geometry.hpp"
#include "cdglab/mesh.hpp"

namespace cdglab {

using ScalarFn = std::function<double(double x, double y)>;
using VectorFn = std::function<Vec2(double x, double y)>;

// Data for  -div(kappa grad u) = f  on the unit square.
struct ProblemSpec {
  ScalarFn kappa = [](double, double) { return 1.0; };
  ScalarFn f = [](double, double) { return 0.0; };
  ScalarFn g_dirichlet = [](double, double) { return 0.0; };
  // Neumann datum kappa grad u . n on faces tagged Neumann.
  ScalarFn g_neumann = [](double, double) { return 0.0; };
};

enum class Scheme { CDG, LDG, BR2 };

std::string scheme_name(Scheme s);
std::string switch_name(SwitchStrategy s);

// Discretization knobs.  c11 values are plain constant penalty coefficients
// (the assembled penalty on a face is c11 * jump * jump, no h scaling);
// eta multiplies the BR2 face-local lifting stabilization.
struct SchemeConfig {
  Scheme scheme = Scheme::CDG;
  SwitchStrategy switch_strategy = SwitchStrategy::Consistent;
  double c11_interior = 0.0;
  double c11_boundary = 0.0;
  double eta = 3.0;  // BR2 only; must exceed the number of element faces
};

// Coefficients of a piecewise-polynomial field: `arity` components per node,
// stored element-major as coeff[(e * S + i) * arity + c].
struct DGField {
  int arity = 1;
  int num_elements = 0;
  int block_size = 0;  // S
  std::vector<double> coeff;

  double& at(int e, int i, int c = 0) {
    return coeff[std::size_t(e * block_size + i) * arity + c];
  }
  double at(int e, int i, int c = 0) const {
    return coeff[std::size_t(e * block_size + i) * arity + c];
  }
};

class NodalBasis;

// Nodal interpolation of a smooth function onto the DG space.
DGField interpolate(const Mesh& mesh, const NodalBasis& basis,
                    const ScalarFn& fn);
DGField interpolate_vector(const Mesh& mesh, const NodalBasis& basis,
                           const VectorFn& fn);

}  // namespace cdglab
