#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "cdglab/geometry.hpp"
#include "cdglab/quadrature.hpp"

namespace cdglab {

// Basis values / reference gradients at a set of points; rows = basis
// functions (S of them), columns = points.
struct RefEval {
  Eigen::MatrixXd values;
  Eigen::MatrixXd grad_xi;
  Eigen::MatrixXd grad_eta;
};

// Lagrange basis on the reference triangle (0,0),(1,0),(0,1) through the
// equally spaced nodes {(i/p, j/p) : i+j <= p}.  Evaluation goes through an
// orthonormal (Koornwinder) modal basis and the generalized Vandermonde
// matrix, which keeps the node-interpolation problem well conditioned for
// the supported degrees.
class NodalBasis {
 public:
  explicit NodalBasis(int degree);  // 1 <= degree <= 10

  int p() const { return p_; }
  int size() const { return S_; }       // dofs per element, (p+1)(p+2)/2
  int face_size() const { return Se_; } // dofs per face, p+1

  const std::vector<Vec2>& nodes() const { return nodes_; }
  // Node ids on local face k, ordered along the ccw traversal of the face
  // (local face k runs from vertex (k+1)%3 to vertex (k+2)%3).
  const std::array<std::vector<int>, 3>& face_nodes() const {
    return face_nodes_;
  }

  RefEval eval(const std::vector<Vec2>& ref_points, bool gradients) const;

 private:
  int p_, S_, Se_;
  std::vector<Vec2> nodes_;
  std::array<std::vector<int>, 3> face_nodes_;
  Eigen::PartialPivLU<Eigen::MatrixXd> vdm_t_lu_;  // LU of V^T
};

// Basis values / physical gradients on one element at given reference points.
struct ElementEval {
  Eigen::MatrixXd values;  // S x Q
  Eigen::MatrixXd grad_x;  // S x Q
  Eigen::MatrixXd grad_y;  // S x Q
};

ElementEval evaluate_on_element(const NodalBasis& basis,
                                const ElementGeometry& geom,
                                const std::vector<Vec2>& ref_points,
                                bool gradients);

}  // namespace cdglab
