#include "cdglab/basis.hpp"

#include <stdexcept>

namespace cdglab {

namespace {

// P_0..P_n^{(a,b)} at t.
void jacobi_all(int n, double a, double b, double t, std::vector<double>& out) {
  out.resize(n + 1);
  out[0] = 1.0;
  if (n == 0) return;
  out[1] = 0.5 * (a - b) + 0.5 * (a + b + 2.0) * t;
  for (int k = 2; k <= n; ++k) {
    const double s = 2.0 * k + a + b;
    const double c1 = 2.0 * k * (k + a + b) * (s - 2.0);
    const double c2 = (s - 1.0) * (a * a - b * b);
    const double c3 = (s - 2.0) * (s - 1.0) * s;
    const double c4 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * s;
    out[k] = ((c2 + c3 * t) * out[k - 1] - c4 * out[k - 2]) / c1;
  }
}

// d/dt P_n^{(a,b)} = (n+a+b+1)/2 * P_{n-1}^{(a+1,b+1)}
void jacobi_deriv_all(int n, double a, double b, double t,
                      std::vector<double>& out) {
  out.assign(n + 1, 0.0);
  if (n == 0) return;
  std::vector<double> shifted;
  jacobi_all(n - 1, a + 1.0, b + 1.0, t, shifted);
  for (int k = 1; k <= n; ++k)
    out[k] = 0.5 * (k + a + b + 1.0) * shifted[k - 1];
}

// Scaled Legendre Q_m(x,w) = w^m P_m((2x-w)/w), a bivariate polynomial,
// evaluated together with its partials via the homogenized three-term
// recurrence; stays finite at the collapsed vertex w = 0.
struct ScaledLegendre {
  std::vector<double> q, qx, qw;
  ScaledLegendre(int pmax, double x, double w)
      : q(pmax + 1), qx(pmax + 1), qw(pmax + 1) {
    q[0] = 1.0;
    qx[0] = qw[0] = 0.0;
    if (pmax == 0) return;
    q[1] = 2.0 * x - w;
    qx[1] = 2.0;
    qw[1] = -1.0;
    for (int m = 1; m < pmax; ++m) {
      const double c = 2.0 * m + 1.0, cm = m, cp = m + 1.0;
      q[m + 1] = (c * (2.0 * x - w) * q[m] - cm * w * w * q[m - 1]) / cp;
      qx[m + 1] =
          (c * (2.0 * q[m] + (2.0 * x - w) * qx[m]) - cm * w * w * qx[m - 1]) /
          cp;
      qw[m + 1] = (c * (-q[m] + (2.0 * x - w) * qw[m]) -
                   cm * (2.0 * w * q[m - 1] + w * w * qw[m - 1])) /
                  cp;
    }
  }
};

}  // namespace

// Orthonormal modes on the reference triangle:
//   psi_{mn}(x,y) = sqrt((2m+1)(2m+2n+2)) Q_m(x,1-y) P_n^{(2m+1,0)}(2y-1),
// m+n <= p, ordered m-major.  Columns of the output are points.
static void modal_eval(int p, const std::vector<Vec2>& pts, bool gradients,
                       Eigen::MatrixXd& val, Eigen::MatrixXd& dxi,
                       Eigen::MatrixXd& deta) {
  const int S = (p + 1) * (p + 2) / 2;
  const int Q = static_cast<int>(pts.size());
  val.resize(S, Q);
  if (gradients) {
    dxi.resize(S, Q);
    deta.resize(S, Q);
  }
  std::vector<double> jn, djn;
  for (int qi = 0; qi < Q; ++qi) {
    const double x = pts[qi].x, y = pts[qi].y;
    const ScaledLegendre sl(p, x, 1.0 - y);
    const double b = 2.0 * y - 1.0;
    int row = 0;
    for (int m = 0; m <= p; ++m) {
      jacobi_all(p - m, 2.0 * m + 1.0, 0.0, b, jn);
      if (gradients) jacobi_deriv_all(p - m, 2.0 * m + 1.0, 0.0, b, djn);
      for (int n = 0; n <= p - m; ++n, ++row) {
        const double scale = std::sqrt((2.0 * m + 1.0) * (2.0 * m + 2.0 * n + 2.0));
        val(row, qi) = scale * sl.q[m] * jn[n];
        if (gradients) {
          dxi(row, qi) = scale * sl.qx[m] * jn[n];
          deta(row, qi) =
              scale * (-sl.qw[m] * jn[n] + 2.0 * sl.q[m] * djn[n]);
        }
      }
    }
  }
}

NodalBasis::NodalBasis(int degree) : p_(degree) {
  if (degree < 1 || degree > 10)
    throw std::invalid_argument("basis degree must be in [1,10]");
  S_ = (p_ + 1) * (p_ + 2) / 2;
  Se_ = p_ + 1;

  nodes_.reserve(S_);
  std::vector<std::vector<int>> id(p_ + 1, std::vector<int>(p_ + 1, -1));
  for (int j = 0; j <= p_; ++j)
    for (int i = 0; i + j <= p_; ++i) {
      id[i][j] = static_cast<int>(nodes_.size());
      nodes_.push_back({double(i) / p_, double(j) / p_});
    }

  // local face k goes from vertex (k+1)%3 to vertex (k+2)%3
  face_nodes_[0].reserve(Se_);  // (1,0) -> (0,1): i+j = p
  face_nodes_[1].reserve(Se_);  // (0,1) -> (0,0): i = 0
  face_nodes_[2].reserve(Se_);  // (0,0) -> (1,0): j = 0
  for (int k = 0; k <= p_; ++k) {
    face_nodes_[0].push_back(id[p_ - k][k]);
    face_nodes_[1].push_back(id[0][p_ - k]);
    face_nodes_[2].push_back(id[k][0]);
  }

  Eigen::MatrixXd val, unused1, unused2;
  modal_eval(p_, nodes_, false, val, unused1, unused2);
  // V(k,j) = psi_j(node_k); nodal values at points solve V^T z = psi(points)
  vdm_t_lu_.compute(val);  // modal_eval returns psi-major rows = V^T already
}

RefEval NodalBasis::eval(const std::vector<Vec2>& ref_points,
                         bool gradients) const {
  Eigen::MatrixXd val, dxi, deta;
  modal_eval(p_, ref_points, gradients, val, dxi, deta);
  RefEval out;
  out.values = vdm_t_lu_.solve(val);
  if (gradients) {
    out.grad_xi = vdm_t_lu_.solve(dxi);
    out.grad_eta = vdm_t_lu_.solve(deta);
  }
  return out;
}

ElementEval evaluate_on_element(const NodalBasis& basis,
                                const ElementGeometry& geom,
                                const std::vector<Vec2>& ref_points,
                                bool gradients) {
  RefEval ref = basis.eval(ref_points, gradients);
  ElementEval out;
  out.values = std::move(ref.values);
  if (gradients) {
    out.grad_x = geom.jinv[0][0] * ref.grad_xi + geom.jinv[1][0] * ref.grad_eta;
    out.grad_y = geom.jinv[0][1] * ref.grad_xi + geom.jinv[1][1] * ref.grad_eta;
  }
  return out;
}

}  // namespace cdglab
