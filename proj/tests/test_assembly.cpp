#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <cstring>
#include <random>
#include <stdexcept>
#include <vector>

#include "cdglab/assembly.hpp"
#include "cdglab/manufactured.hpp"

using namespace cdglab;

namespace {

struct PolyCase {
  int degree;
  ScalarFn u, ux, uy;
  double lap_sign_free;  // unused marker to keep the struct aggregate
};

ScalarFn unit_kappa() {
  return [](double, double) { return 1.0; };
}

// exact polynomial solutions with their gradients and Laplacians
struct Exact {
  ScalarFn u, ux, uy, lap;
};

Exact exact_linear() {
  return {[](double x, double y) { return 3.0 * x - 2.0 * y + 1.0; },
          [](double, double) { return 3.0; },
          [](double, double) { return -2.0; },
          [](double, double) { return 0.0; }};
}

Exact exact_quadratic() {
  return {[](double x, double y) {
            return x * x - x * y + 2.0 * y * y + x - 1.0;
          },
          [](double x, double y) { return 2.0 * x - y + 1.0; },
          [](double x, double y) { return -x + 4.0 * y; },
          [](double, double) { return 6.0; }};
}

Exact exact_cubic() {
  return {[](double x, double y) {
            return x * x * x - 2.0 * x * x * y + y * y * y + x * y - x + 2.0;
          },
          [](double x, double y) {
            return 3.0 * x * x - 4.0 * x * y + y - 1.0;
          },
          [](double x, double y) { return -2.0 * x * x + 3.0 * y * y + x; },
          [](double x, double y) { return 6.0 * x - 4.0 * y + 6.0 * y; }};
}

Exact exact_for_degree(int p) {
  if (p <= 1) return exact_linear();
  if (p == 2) return exact_quadratic();
  return exact_cubic();
}

// problem data for -div(kappa grad u) = f with kappa = 1
ProblemSpec poly_problem(const Exact& e) {
  ProblemSpec prob;
  prob.f = [e](double x, double y) { return -e.lap(x, y); };
  prob.g_dirichlet = e.u;
  prob.g_neumann = e.ux;  // Neumann faces, when used, sit on the right edge
  return prob;
}

// problem data for linear kappa = 1 + 0.4 x + 0.2 y
ProblemSpec poly_problem_kappa(const Exact& e) {
  ProblemSpec prob;
  prob.kappa = [](double x, double y) { return 1.0 + 0.4 * x + 0.2 * y; };
  prob.f = [e, prob](double x, double y) {
    return -(0.4 * e.ux(x, y) + 0.2 * e.uy(x, y) +
             prob.kappa(x, y) * e.lap(x, y));
  };
  prob.g_dirichlet = e.u;
  prob.g_neumann = [e, prob](double x, double y) {
    return prob.kappa(x, y) * e.ux(x, y);
  };
  return prob;
}

ProblemSpec manufactured_problem() {
  ProblemSpec prob;
  prob.f = [](double x, double y) { return manufactured::eval_f(x, y); };
  prob.g_dirichlet = [](double x, double y) {
    return manufactured::eval_u(x, y);
  };
  return prob;
}

Eigen::VectorXd solve_dense(const AssembledSystem& sys) {
  return Eigen::PartialPivLU<Eigen::MatrixXd>(sys.A.to_dense()).solve(sys.b);
}

double max_nodal_mismatch(const Mesh& mesh, const NodalBasis& basis,
                          const Eigen::VectorXd& u, const ScalarFn& exact) {
  double worst = 0.0;
  const int S = basis.size();
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementGeometry geom = mesh.element_geometry(e);
    for (int i = 0; i < S; ++i) {
      const Vec2 x = geom.to_physical(basis.nodes()[i]);
      worst = std::max(worst,
                       std::abs(u[std::int64_t(e) * S + i] - exact(x.x, x.y)));
    }
  }
  return worst;
}

Eigen::VectorXd random_vector(std::int64_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::VectorXd v(n);
  for (std::int64_t i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

// ---- oracle machinery: evaluates the bilinear form through the public
// ---- lifting operators and plain quadrature, independently of assemble()

void axpy(DGField& y, const DGField& x, double a = 1.0) {
  for (std::size_t i = 0; i < y.coeff.size(); ++i) y.coeff[i] += a * x.coeff[i];
}

std::vector<double> face_jump(const Mesh& mesh, const NodalBasis& basis,
                              const Eigen::VectorXd& u, int f,
                              const FaceRule& rule) {
  const InteriorFace& face = mesh.interior_faces[f];
  const int S = basis.size();
  const ElementGeometry gp = mesh.element_geometry(face.elem_plus);
  const ElementGeometry gm = mesh.element_geometry(face.elem_minus);
  std::vector<double> jump(rule.points.size());
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const std::vector<Vec2> rp = {gp.to_reference(face.x_plus(rule.points[q]))};
    const std::vector<Vec2> rm = {
        gm.to_reference(face.x_minus(rule.points[q]))};
    const RefEval ep = basis.eval(rp, false);
    const RefEval em = basis.eval(rm, false);
    double up = 0.0, um = 0.0;
    for (int i = 0; i < S; ++i) {
      up += u[std::int64_t(face.elem_plus) * S + i] * ep.values(i, 0);
      um += u[std::int64_t(face.elem_minus) * S + i] * em.values(i, 0);
    }
    jump[q] = up - um;
  }
  return jump;
}

std::vector<double> boundary_trace(const Mesh& mesh, const NodalBasis& basis,
                                   const Eigen::VectorXd& u, int bf,
                                   const FaceRule& rule) {
  const BoundaryFace& face = mesh.boundary_faces[bf];
  const int S = basis.size();
  const ElementGeometry g = mesh.element_geometry(face.elem);
  std::vector<double> tr(rule.points.size());
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const std::vector<Vec2> r = {g.to_reference(face.at(rule.points[q]))};
    const RefEval ev = basis.eval(r, false);
    double v = 0.0;
    for (int i = 0; i < S; ++i)
      v += u[std::int64_t(face.elem) * S + i] * ev.values(i, 0);
    tr[q] = v;
  }
  return tr;
}

struct Lifts {
  DGField total;                  // sum over all faces
  std::vector<DGField> per_face;  // interior faces, then Dirichlet faces
};

DGField zero_field2(const Mesh& mesh, const NodalBasis& basis) {
  DGField f;
  f.arity = 2;
  f.num_elements = mesh.num_elements();
  f.block_size = basis.size();
  f.coeff.assign(std::size_t(f.num_elements) * f.block_size * 2, 0.0);
  return f;
}

Lifts make_lifts(const Mesh& mesh, const NodalBasis& basis,
                 const SwitchAssignment& sw, const SchemeConfig& config,
                 const Eigen::VectorXd& u, const FaceRule& rule) {
  const bool br2 = config.scheme == Scheme::BR2;
  Lifts L;
  L.total = zero_field2(mesh, basis);
  for (int f = 0; f < int(mesh.interior_faces.size()); ++f) {
    const std::vector<double> jump = face_jump(mesh, basis, u, f, rule);
    std::vector<Vec2> phi(jump.size());
    for (std::size_t q = 0; q < jump.size(); ++q)
      phi[q] = jump[q] * mesh.interior_faces[f].normal;
    DGField rf = lift_r_face(mesh, basis, f, phi, rule);
    if (!br2) {
      std::vector<double> ql(jump.size());
      for (std::size_t q = 0; q < jump.size(); ++q)
        ql[q] = (sw.s_plus[f] ? 0.5 : -0.5) * jump[q];
      const DGField lf = lift_l_face(mesh, basis, f, ql, rule);
      axpy(rf, lf);
    }
    axpy(L.total, rf);
    L.per_face.push_back(std::move(rf));
  }
  for (int bf = 0; bf < int(mesh.boundary_faces.size()); ++bf) {
    if (mesh.boundary_faces[bf].tag != BoundaryTag::Dirichlet) continue;
    const std::vector<double> tr = boundary_trace(mesh, basis, u, bf, rule);
    DGField rd = lift_rD_face(mesh, basis, bf, tr, rule);
    axpy(L.total, rd);
    L.per_face.push_back(std::move(rd));
  }
  return L;
}

double weighted_volume_dot(const Mesh& mesh, const NodalBasis& basis,
                           const ScalarFn& kappa, const DGField& a,
                           const DGField& b, const TriangleRule& vol) {
  const RefEval ev = basis.eval(vol.points, false);
  const int S = basis.size();
  double total = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementGeometry geom = mesh.element_geometry(e);
    for (std::size_t q = 0; q < vol.points.size(); ++q) {
      double ax = 0.0, ay = 0.0, bx = 0.0, by = 0.0;
      for (int i = 0; i < S; ++i) {
        ax += a.at(e, i, 0) * ev.values(i, q);
        ay += a.at(e, i, 1) * ev.values(i, q);
        bx += b.at(e, i, 0) * ev.values(i, q);
        by += b.at(e, i, 1) * ev.values(i, q);
      }
      const Vec2 x = geom.to_physical(vol.points[q]);
      total += vol.weights[q] * geom.det * kappa(x.x, x.y) *
               (ax * bx + ay * by);
    }
  }
  return total;
}

double grad_dot_field(const Mesh& mesh, const NodalBasis& basis,
                      const ScalarFn& kappa, const Eigen::VectorXd& u,
                      const DGField& r, const TriangleRule& vol) {
  const int S = basis.size();
  double total = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementGeometry geom = mesh.element_geometry(e);
    const ElementEval ee = evaluate_on_element(basis, geom, vol.points, true);
    for (std::size_t q = 0; q < vol.points.size(); ++q) {
      double gx = 0.0, gy = 0.0, rx = 0.0, ry = 0.0;
      for (int i = 0; i < S; ++i) {
        const double c = u[std::int64_t(e) * S + i];
        gx += c * ee.grad_x(i, q);
        gy += c * ee.grad_y(i, q);
        rx += r.at(e, i, 0) * ee.values(i, q);
        ry += r.at(e, i, 1) * ee.values(i, q);
      }
      const Vec2 x = geom.to_physical(vol.points[q]);
      total +=
          vol.weights[q] * geom.det * kappa(x.x, x.y) * (gx * rx + gy * ry);
    }
  }
  return total;
}

double stiffness_term(const Mesh& mesh, const NodalBasis& basis,
                      const ScalarFn& kappa, const Eigen::VectorXd& u,
                      const Eigen::VectorXd& v, const TriangleRule& vol) {
  const int S = basis.size();
  double total = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementGeometry geom = mesh.element_geometry(e);
    const ElementEval ee = evaluate_on_element(basis, geom, vol.points, true);
    for (std::size_t q = 0; q < vol.points.size(); ++q) {
      double ux = 0.0, uy = 0.0, vx = 0.0, vy = 0.0;
      for (int i = 0; i < S; ++i) {
        ux += u[std::int64_t(e) * S + i] * ee.grad_x(i, q);
        uy += u[std::int64_t(e) * S + i] * ee.grad_y(i, q);
        vx += v[std::int64_t(e) * S + i] * ee.grad_x(i, q);
        vy += v[std::int64_t(e) * S + i] * ee.grad_y(i, q);
      }
      const Vec2 x = geom.to_physical(vol.points[q]);
      total +=
          vol.weights[q] * geom.det * kappa(x.x, x.y) * (ux * vx + uy * vy);
    }
  }
  return total;
}

double oracle_bilinear(const Mesh& mesh, const NodalBasis& basis,
                       const SwitchAssignment& sw, const ProblemSpec& problem,
                       const SchemeConfig& config, const Eigen::VectorXd& u,
                       const Eigen::VectorXd& v) {
  const int p = basis.p();
  const TriangleRule vol = triangle_quadrature(2 * p + 6);
  const FaceRule rule = face_quadrature(2 * p + 6);
  const bool br2 = config.scheme == Scheme::BR2;

  const Lifts lu = make_lifts(mesh, basis, sw, config, u, rule);
  const Lifts lv = make_lifts(mesh, basis, sw, config, v, rule);

  double total = stiffness_term(mesh, basis, problem.kappa, u, v, vol);
  total += grad_dot_field(mesh, basis, problem.kappa, u, lv.total, vol);
  total += grad_dot_field(mesh, basis, problem.kappa, v, lu.total, vol);

  if (config.scheme == Scheme::LDG) {
    total +=
        weighted_volume_dot(mesh, basis, problem.kappa, lu.total, lv.total,
                            vol);
  } else {
    const double coef = br2 ? config.eta : 1.0;
    for (std::size_t k = 0; k < lu.per_face.size(); ++k)
      total += coef * weighted_volume_dot(mesh, basis, problem.kappa,
                                          lu.per_face[k], lv.per_face[k], vol);
  }

  if (!br2) {
    for (int f = 0; f < int(mesh.interior_faces.size()); ++f) {
      if (config.c11_interior == 0.0) break;
      const std::vector<double> ju = face_jump(mesh, basis, u, f, rule);
      const std::vector<double> jv = face_jump(mesh, basis, v, f, rule);
      for (std::size_t q = 0; q < ju.size(); ++q)
        total += config.c11_interior * rule.weights[q] *
                 mesh.interior_faces[f].length * ju[q] * jv[q];
    }
    for (int bf = 0; bf < int(mesh.boundary_faces.size()); ++bf) {
      if (config.c11_boundary == 0.0) break;
      if (mesh.boundary_faces[bf].tag != BoundaryTag::Dirichlet) continue;
      const std::vector<double> tu = boundary_trace(mesh, basis, u, bf, rule);
      const std::vector<double> tv = boundary_trace(mesh, basis, v, bf, rule);
      for (std::size_t q = 0; q < tu.size(); ++q)
        total += config.c11_boundary * rule.weights[q] *
                 mesh.boundary_faces[bf].length * tu[q] * tv[q];
    }
  }
  return total;
}

}  // namespace

TEST_CASE("assembled operators are symmetric") {
  const NodalBasis basis(2);
  const ProblemSpec prob = manufactured_problem();
  for (bool periodic : {false, true}) {
    const Mesh mesh = build_structured_mesh(2, periodic);
    for (Scheme scheme : {Scheme::CDG, Scheme::LDG, Scheme::BR2})
      for (SwitchStrategy strat :
           {SwitchStrategy::Consistent, SwitchStrategy::Natural})
        for (double c11 : {0.0, 1.0}) {
          const SwitchAssignment sw = assign_switches(mesh, strat);
          SchemeConfig config;
          config.scheme = scheme;
          config.switch_strategy = strat;
          config.c11_interior = c11;
          config.c11_boundary = c11;
          const AssembledSystem sys =
              assemble(mesh, basis, sw, prob, config, 0);
          CHECK(sys.A.symmetry_error() <=
                1e-10 * std::max(1.0, sys.A.inf_norm()));
        }
  }
}

TEST_CASE("polynomial solutions are reproduced exactly") {
  for (int p : {1, 2, 3}) {
    const NodalBasis basis(p);
    const Exact exact = exact_for_degree(p);
    const ProblemSpec prob = poly_problem(exact);
    for (int n : {1, 2}) {
      const Mesh mesh = build_structured_mesh(n, false);
      const SwitchAssignment sw =
          assign_switches(mesh, SwitchStrategy::Consistent);
      for (Scheme scheme : {Scheme::CDG, Scheme::LDG, Scheme::BR2}) {
        SchemeConfig config;
        config.scheme = scheme;
        config.c11_boundary = scheme == Scheme::BR2 ? 0.0 : 1.0;
        const AssembledSystem sys = assemble(mesh, basis, sw, prob, config, 0);
        const Eigen::VectorXd u = solve_dense(sys);
        CAPTURE(p);
        CAPTURE(n);
        CAPTURE(int(scheme));
        CHECK(max_nodal_mismatch(mesh, basis, u, exact.u) <= 1e-9);
      }
    }
  }
}

TEST_CASE("polynomial solutions with natural switches") {
  const NodalBasis basis(2);
  const Exact exact = exact_quadratic();
  const ProblemSpec prob = poly_problem(exact);
  const Mesh mesh = build_structured_mesh(2, false);
  const SwitchAssignment sw = assign_switches(mesh, SwitchStrategy::Natural);
  for (Scheme scheme : {Scheme::CDG, Scheme::LDG}) {
    SchemeConfig config;
    config.scheme = scheme;
    config.switch_strategy = SwitchStrategy::Natural;
    config.c11_interior = 1.0;
    config.c11_boundary = 1.0;
    const AssembledSystem sys = assemble(mesh, basis, sw, prob, config, 0);
    const Eigen::VectorXd u = solve_dense(sys);
    CHECK(max_nodal_mismatch(mesh, basis, u, exact.u) <= 1e-9);
  }
}

TEST_CASE("polynomial solutions with mixed boundary conditions") {
  // faces on the right edge are Neumann, the rest Dirichlet
  const BoundaryTagger tagger = [](Vec2 mid) {
    return mid.x > 1.0 - 1e-9 ? BoundaryTag::Neumann : BoundaryTag::Dirichlet;
  };
  const NodalBasis basis(2);
  const Exact exact = exact_quadratic();
  const Mesh mesh = build_structured_mesh(2, false, tagger);
  const SwitchAssignment sw =
      assign_switches(mesh, SwitchStrategy::Consistent);
  int neumann = 0;
  for (const BoundaryFace& f : mesh.boundary_faces)
    neumann += f.tag == BoundaryTag::Neumann ? 1 : 0;
  REQUIRE(neumann == 2);
  for (const ProblemSpec& prob :
       {poly_problem(exact), poly_problem_kappa(exact)})
    for (Scheme scheme : {Scheme::CDG, Scheme::LDG, Scheme::BR2}) {
      SchemeConfig config;
      config.scheme = scheme;
      config.c11_boundary = scheme == Scheme::BR2 ? 0.0 : 1.0;
      const AssembledSystem sys = assemble(mesh, basis, sw, prob, config, 0);
      const Eigen::VectorXd u = solve_dense(sys);
      CHECK(max_nodal_mismatch(mesh, basis, u, exact.u) <= 1e-9);
    }
}

TEST_CASE("polynomial solutions with a variable coefficient") {
  const NodalBasis basis(3);
  const Exact exact = exact_cubic();
  const ProblemSpec prob = poly_problem_kappa(exact);
  const Mesh mesh = build_structured_mesh(2, false);
  const SwitchAssignment sw =
      assign_switches(mesh, SwitchStrategy::Consistent);
  for (Scheme scheme : {Scheme::CDG, Scheme::LDG, Scheme::BR2}) {
    SchemeConfig config;
    config.scheme = scheme;
    config.c11_interior = scheme == Scheme::BR2 ? 0.0 : 1.0;
    config.c11_boundary = scheme == Scheme::BR2 ? 0.0 : 1.0;
    const AssembledSystem sys = assemble(mesh, basis, sw, prob, config, 0);
    const Eigen::VectorXd u = solve_dense(sys);
    CHECK(max_nodal_mismatch(mesh, basis, u, exact.u) <= 1e-9);
  }
}

TEST_CASE("zero data produce a zero load vector") {
  const NodalBasis basis(2);
  const Mesh mesh = build_structured_mesh(2, false);
  const SwitchAssignment sw =
      assign_switches(mesh, SwitchStrategy::Consistent);
  const ProblemSpec prob;  // all data default to zero
  for (Scheme scheme : {Scheme::CDG, Scheme::LDG, Scheme::BR2}) {
    SchemeConfig config;
    config.scheme = scheme;
    config.c11_boundary = 1.0;
    const AssembledSystem sys = assemble(mesh, basis, sw, prob, config, 0);
    CHECK(sys.b.lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("neumann data load only the boundary elements") {
  const BoundaryTagger tagger = [](Vec2 mid) {
    return mid.x > 1.0 - 1e-9 ? BoundaryTag::Neumann : BoundaryTag::Dirichlet;
  };
  const NodalBasis basis(2);
  const Mesh mesh = build_structured_mesh(2, false, tagger);
  const SwitchAssignment sw =
      assign_switches(mesh, SwitchStrategy::Consistent);
  ProblemSpec prob;
  prob.g_neumann = [](double, double) { return 1.0; };
  SchemeConfig config;
  config.scheme = Scheme::CDG;
  const AssembledSystem sys = assemble(mesh, basis, sw, prob, config, 0);
  std::vector<bool> owns(mesh.num_elements(), false);
  for (const BoundaryFace& f : mesh.boundary_faces)
    if (f.tag == BoundaryTag::Neumann) owns[f.elem] = true;
  const int S = basis.size();
  bool any = false;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const double norm =
        sys.b.segment(std::int64_t(e) * S, S).lpNorm<Eigen::Infinity>();
    if (owns[e]) {
      any = any || norm > 0.0;
    } else {
      CHECK(norm == 0.0);
    }
  }
  CHECK(any);
}

TEST_CASE("lifting operators satisfy their defining identities") {
  const int p = 3;
  const NodalBasis basis(p);
  const TriangleRule vol = triangle_quadrature(2 * p + 6);
  const FaceRule rule = face_quadrature(2 * p + 6);
  const VectorFn tau_fn = [](double x, double y) {
    return Vec2{x * x - y + 0.5 * x * y, x * y + 1.0 - y * y};
  };

  auto volume_dot_tau = [&](const Mesh& mesh, const DGField& w,
                            const DGField& tau) {
    return weighted_volume_dot(mesh, basis, unit_kappa(), w, tau, vol);
  };
  auto tau_side = [&](const Mesh& mesh, const DGField& tau, int elem,
                      Vec2 phys) {
    const ElementGeometry g = mesh.element_geometry(elem);
    const std::vector<Vec2> r = {g.to_reference(phys)};
    const RefEval ev = basis.eval(r, false);
    Vec2 out{0.0, 0.0};
    for (int i = 0; i < basis.size(); ++i) {
      out.x += tau.at(elem, i, 0) * ev.values(i, 0);
      out.y += tau.at(elem, i, 1) * ev.values(i, 0);
    }
    return out;
  };

  for (bool periodic : {false, true}) {
    const Mesh mesh = build_structured_mesh(2, periodic);
    const DGField tau = interpolate_vector(mesh, basis, tau_fn);

    // pick an ordinary face, and on the periodic mesh a wrapped face
    int f = 0;
    if (periodic) {
      for (int k = 0; k < int(mesh.interior_faces.size()); ++k)
        if (norm(mesh.interior_faces[k].a_plus -
                 mesh.interior_faces[k].a_minus) > 0.5)
          f = k;
    }
    const InteriorFace& face = mesh.interior_faces[f];

    std::vector<Vec2> phi(rule.points.size());
    std::vector<double> qs(rule.points.size());
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const double t = rule.points[q];
      phi[q] = Vec2{std::sin(1.0 + 3.0 * t), std::cos(2.0 * t)};
      qs[q] = std::sin(2.0 + t);
    }

    // r: integral of r(phi).tau = -integral of phi.{tau}
    {
      const DGField w = lift_r_face(mesh, basis, f, phi, rule);
      double rhs = 0.0;
      for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const Vec2 tp =
            tau_side(mesh, tau, face.elem_plus, face.x_plus(rule.points[q]));
        const Vec2 tm =
            tau_side(mesh, tau, face.elem_minus, face.x_minus(rule.points[q]));
        const Vec2 avg = 0.5 * (tp + tm);
        rhs -= rule.weights[q] * face.length * dot(phi[q], avg);
      }
      CHECK(std::abs(volume_dot_tau(mesh, w, tau) - rhs) <=
            1e-10 * (1.0 + std::abs(rhs)));
    }

    // l: integral of l(q).tau = -integral of q [tau]
    {
      const DGField w = lift_l_face(mesh, basis, f, qs, rule);
      double rhs = 0.0;
      for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const Vec2 tp =
            tau_side(mesh, tau, face.elem_plus, face.x_plus(rule.points[q]));
        const Vec2 tm =
            tau_side(mesh, tau, face.elem_minus, face.x_minus(rule.points[q]));
        const double jump_tau = dot(face.normal, tp - tm);
        rhs -= rule.weights[q] * face.length * qs[q] * jump_tau;
      }
      CHECK(std::abs(volume_dot_tau(mesh, w, tau) - rhs) <=
            1e-10 * (1.0 + std::abs(rhs)));
    }
  }

  // rD on a Dirichlet boundary face
  {
    const Mesh mesh = build_structured_mesh(2, false);
    const DGField tau = interpolate_vector(mesh, basis, tau_fn);
    const int bf = 1;
    const BoundaryFace& face = mesh.boundary_faces[bf];
    std::vector<double> qs(rule.points.size());
    for (std::size_t q = 0; q < rule.points.size(); ++q)
      qs[q] = std::sin(2.0 + rule.points[q]);
    const DGField w = lift_rD_face(mesh, basis, bf, qs, rule);
    double rhs = 0.0;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Vec2 ts = tau_side(mesh, tau, face.elem, face.at(rule.points[q]));
      rhs -= rule.weights[q] * face.length * qs[q] * dot(ts, face.normal);
    }
    CHECK(std::abs(volume_dot_tau(mesh, w, tau) - rhs) <=
          1e-10 * (1.0 + std::abs(rhs)));
  }
}

TEST_CASE("assembled matrices match the lifting-based oracle") {
  const NodalBasis basis(2);
  const Mesh mesh = build_structured_mesh(2, false);
  ProblemSpec prob;
  prob.kappa = [](double x, double y) { return 1.0 + 0.4 * x + 0.2 * y; };

  struct Setup {
    Scheme scheme;
    SwitchStrategy strat;
    double c11i, c11b;
  };
  const Setup setups[] = {
      {Scheme::CDG, SwitchStrategy::Consistent, 1.0, 1.0},
      {Scheme::CDG, SwitchStrategy::Natural, 0.0, 1.0},
      {Scheme::LDG, SwitchStrategy::Consistent, 1.0, 1.0},
      {Scheme::LDG, SwitchStrategy::Consistent, 0.0, 0.0},
      {Scheme::BR2, SwitchStrategy::Consistent, 0.0, 0.0},
  };
  for (const Setup& s : setups) {
    const SwitchAssignment sw = assign_switches(mesh, s.strat);
    SchemeConfig config;
    config.scheme = s.scheme;
    config.switch_strategy = s.strat;
    config.c11_interior = s.c11i;
    config.c11_boundary = s.c11b;
    config.eta = 3.0;
    const AssembledSystem sys = assemble(mesh, basis, sw, prob, config, 0);
    for (unsigned trial = 0; trial < 3; ++trial) {
      const Eigen::VectorXd u = random_vector(sys.A.rows(), 100 + trial);
      const Eigen::VectorXd v = random_vector(sys.A.rows(), 200 + trial);
      const double through_matrix = v.dot(sys.A.apply(u));
      const double through_oracle =
          oracle_bilinear(mesh, basis, sw, prob, config, u, v);
      CAPTURE(int(s.scheme));
      CAPTURE(int(s.strat));
      CHECK(std::abs(through_matrix - through_oracle) <=
            1e-9 * (1.0 + sys.A.inf_norm()) * double(sys.A.rows()));
    }
  }
}

TEST_CASE("serial and parallel assembly agree bitwise") {
  const NodalBasis basis(2);
  const Mesh mesh = build_structured_mesh(4, false);
  const SwitchAssignment sw =
      assign_switches(mesh, SwitchStrategy::Consistent);
  const ProblemSpec prob = manufactured_problem();
  for (Scheme scheme : {Scheme::CDG, Scheme::LDG, Scheme::BR2}) {
    SchemeConfig config;
    config.scheme = scheme;
    config.c11_interior = 1.0;
    config.c11_boundary = 1.0;
    const AssembledSystem serial = assemble(mesh, basis, sw, prob, config, 0);
    const AssembledSystem parallel =
        assemble(mesh, basis, sw, prob, config, 4);
    const Eigen::MatrixXd d1 = serial.A.to_dense();
    const Eigen::MatrixXd d2 = parallel.A.to_dense();
    CHECK((d1.array() == d2.array()).all());
    CHECK(std::memcmp(serial.b.data(), parallel.b.data(),
                      sizeof(double) * serial.b.size()) == 0);
  }
}

TEST_CASE("stabilized configurations are positive definite") {
  const NodalBasis basis(2);
  const Mesh mesh = build_structured_mesh(2, false);
  const SwitchAssignment sw =
      assign_switches(mesh, SwitchStrategy::Consistent);
  const ProblemSpec prob = manufactured_problem();
  struct Setup {
    Scheme scheme;
    double c11i, c11b;
  };
  for (const Setup& s : {Setup{Scheme::CDG, 0.0, 1.0},
                         Setup{Scheme::LDG, 1.0, 1.0},
                         Setup{Scheme::BR2, 0.0, 0.0}}) {
    SchemeConfig config;
    config.scheme = s.scheme;
    config.c11_interior = s.c11i;
    config.c11_boundary = s.c11b;
    const AssembledSystem sys = assemble(mesh, basis, sw, prob, config, 0);
    const Eigen::MatrixXd dense = sys.A.to_dense();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
        0.5 * (dense + dense.transpose()));
    CAPTURE(int(s.scheme));
    CHECK(eig.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("configuration warnings") {
  const NodalBasis basis(1);
  const Mesh mesh = build_structured_mesh(2, false);
  const ProblemSpec prob;
  {
    SchemeConfig config;
    config.scheme = Scheme::BR2;
    config.c11_interior = 1.0;
    const SwitchAssignment sw =
        assign_switches(mesh, SwitchStrategy::Consistent);
    const AssembledSystem sys = assemble(mesh, basis, sw, prob, config, 0);
    REQUIRE(sys.warnings.size() == 1);
    CHECK(sys.warnings[0].find("ignored") != std::string::npos);
  }
  {
    SchemeConfig config;
    config.scheme = Scheme::BR2;
    config.switch_strategy = SwitchStrategy::Natural;
    const SwitchAssignment sw = assign_switches(mesh, SwitchStrategy::Natural);
    const AssembledSystem sys = assemble(mesh, basis, sw, prob, config, 0);
    REQUIRE(sys.warnings.size() == 1);
    CHECK(sys.warnings[0].find("switch") != std::string::npos);
  }
  {
    SchemeConfig config;  // CDG defaults
    const SwitchAssignment sw =
        assign_switches(mesh, SwitchStrategy::Consistent);
    const AssembledSystem sys = assemble(mesh, basis, sw, prob, config, 0);
    CHECK(sys.warnings.empty());
  }
}

TEST_CASE("a non-periodic problem without dirichlet faces is rejected") {
  const BoundaryTagger all_neumann = [](Vec2) { return BoundaryTag::Neumann; };
  const Mesh mesh = build_structured_mesh(2, false, all_neumann);
  const NodalBasis basis(1);
  const SwitchAssignment sw =
      assign_switches(mesh, SwitchStrategy::Consistent);
  const ProblemSpec prob;
  const SchemeConfig config;
  CHECK_THROWS_AS(assemble(mesh, basis, sw, prob, config, 0),
                  std::invalid_argument);
}

TEST_CASE("periodic operators annihilate constants") {
  const NodalBasis basis(1);
  const Mesh mesh = build_structured_mesh(2, true);
  const ProblemSpec prob;
  for (Scheme scheme : {Scheme::CDG, Scheme::LDG, Scheme::BR2}) {
    SchemeConfig config;
    config.scheme = scheme;
    config.c11_interior = scheme == Scheme::BR2 ? 0.0 : 1.0;
    const SwitchAssignment sw =
        assign_switches(mesh, SwitchStrategy::Consistent);
    const AssembledSystem sys = assemble(mesh, basis, sw, prob, config, 0);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(sys.A.rows());
    CHECK(sys.A.apply(ones).lpNorm<Eigen::Infinity>() <=
          1e-10 * std::max(1.0, sys.A.inf_norm()));
    CHECK(sys.b.lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("compact packing accepts the compact scheme and rejects the rest") {
  const NodalBasis basis(2);
  const Mesh mesh = build_structured_mesh(4, false);
  const SwitchAssignment sw =
      assign_switches(mesh, SwitchStrategy::Consistent);
  const ProblemSpec prob = manufactured_problem();

  SchemeConfig config;
  config.scheme = Scheme::CDG;
  config.c11_interior = 1.0;
  config.c11_boundary = 1.0;
  const AssembledSystem cdg = assemble(mesh, basis, sw, prob, config, 0);
  const CdgCompactMatrix packed =
      CdgCompactMatrix::pack(cdg.A, mesh, basis, sw);
  const Eigen::MatrixXd d1 = cdg.A.to_dense();
  const Eigen::MatrixXd d2 = packed.unpack().to_dense();
  CHECK((d1.array() == d2.array()).all());

  const Eigen::VectorXd x = random_vector(cdg.A.rows(), 5);
  const Eigen::VectorXd y1 = cdg.A.apply(x);
  const Eigen::VectorXd y2 = packed.apply(x);
  CHECK((y1 - y2).lpNorm<Eigen::Infinity>() <=
        1e-12 * (1.0 + y1.lpNorm<Eigen::Infinity>()));

  config.scheme = Scheme::LDG;
  const AssembledSystem ldg = assemble(mesh, basis, sw, prob, config, 0);
  CHECK_THROWS_AS(CdgCompactMatrix::pack(ldg.A, mesh, basis, sw),
                  std::invalid_argument);
}

TEST_CASE("scheme difference involves only jump products") {
  // the extra coupling of the full double-sum scheme is built from lifted
  // jumps, so it must annihilate any continuous field vanishing on the
  // boundary
  const NodalBasis basis(2);
  const Mesh mesh = build_structured_mesh(2, false);
  const SwitchAssignment sw =
      assign_switches(mesh, SwitchStrategy::Consistent);
  const ProblemSpec prob = manufactured_problem();
  SchemeConfig config;
  config.c11_interior = 1.0;
  config.c11_boundary = 1.0;
  config.scheme = Scheme::CDG;
  const AssembledSystem cdg = assemble(mesh, basis, sw, prob, config, 0);
  config.scheme = Scheme::LDG;
  const AssembledSystem ldg = assemble(mesh, basis, sw, prob, config, 0);

  const ScalarFn smooth = [](double x, double y) {
    return x * (1.0 - x) * y * (1.0 - y) * (1.0 + 2.0 * x - y);
  };
  const DGField ui = interpolate(mesh, basis, smooth);
  Eigen::VectorXd u(cdg.A.rows());
  const int S = basis.size();
  for (int e = 0; e < mesh.num_elements(); ++e)
    for (int i = 0; i < S; ++i) u[std::int64_t(e) * S + i] = ui.at(e, i);

  const Eigen::VectorXd diff = ldg.A.apply(u) - cdg.A.apply(u);
  const double scale =
      std::max(1.0, std::max(cdg.A.inf_norm(), ldg.A.inf_norm()));
  CHECK(diff.lpNorm<Eigen::Infinity>() <= 1e-9 * scale);
}

TEST_CASE("flux reconstruction is exact for polynomial solutions") {
  const NodalBasis basis(2);
  const Exact exact = exact_quadratic();
  const ProblemSpec prob = poly_problem(exact);
  const Mesh mesh = build_structured_mesh(2, false);
  const SwitchAssignment sw =
      assign_switches(mesh, SwitchStrategy::Consistent);
  for (Scheme scheme : {Scheme::CDG, Scheme::LDG, Scheme::BR2}) {
    SchemeConfig config;
    config.scheme = scheme;
    config.c11_boundary = scheme == Scheme::BR2 ? 0.0 : 1.0;
    const AssembledSystem sys = assemble(mesh, basis, sw, prob, config, 0);
    const Eigen::VectorXd u = solve_dense(sys);
    DGField uh;
    uh.arity = 1;
    uh.num_elements = mesh.num_elements();
    uh.block_size = basis.size();
    uh.coeff.assign(u.data(), u.data() + u.size());
    const DGField sigma =
        reconstruct_flux(uh, mesh, basis, sw, prob, config);
    double worst = 0.0;
    for (int e = 0; e < mesh.num_elements(); ++e) {
      const ElementGeometry geom = mesh.element_geometry(e);
      for (int i = 0; i < basis.size(); ++i) {
        const Vec2 x = geom.to_physical(basis.nodes()[i]);
        worst = std::max(worst,
                         std::abs(sigma.at(e, i, 0) - exact.ux(x.x, x.y)));
        worst = std::max(worst,
                         std::abs(sigma.at(e, i, 1) - exact.uy(x.x, x.y)));
      }
    }
    CAPTURE(int(scheme));
    CHECK(worst <= 1e-8);
  }
}
