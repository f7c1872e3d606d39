#include "cdglab/assembly.hpp"

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cdglab {

int default_threads() {
  if (const char* env = std::getenv("CDGLAB_THREADS")) {
    const int v = std::atoi(env);
    return v < 0 ? 0 : v;
  }
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

int assembly_quadrature_degree(int p) { return std::max(2 * p + 4, 10); }

namespace {

struct ElementCtx {
  ElementGeometry geom;
  Eigen::MatrixXd mass;    // plain element mass
  Eigen::MatrixXd mass_k;  // kappa-weighted element mass
  Eigen::LLT<Eigen::MatrixXd> llt;  // Cholesky of the plain mass
};

std::vector<ElementCtx> build_contexts(const Mesh& mesh,
                                       const NodalBasis& basis,
                                       const ScalarFn& kappa,
                                       const TriangleRule& vol) {
  const int T = mesh.num_elements();
  const int S = basis.size();
  std::vector<ElementCtx> ctx(T);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int e = 0; e < T; ++e) {
    ElementCtx& c = ctx[e];
    c.geom = mesh.element_geometry(e);
    const RefEval ev = basis.eval(vol.points, false);
    c.mass = Eigen::MatrixXd::Zero(S, S);
    c.mass_k = Eigen::MatrixXd::Zero(S, S);
    for (std::size_t q = 0; q < vol.points.size(); ++q) {
      const Vec2 xp = c.geom.to_physical(vol.points[q]);
      const double w = vol.weights[q] * c.geom.det;
      const Eigen::MatrixXd outer =
          ev.values.col(q) * ev.values.col(q).transpose();
      c.mass += w * outer;
      c.mass_k += (w * kappa(xp.x, xp.y)) * outer;
    }
    c.llt = Eigen::LLT<Eigen::MatrixXd>(c.mass);
    if (c.llt.info() != Eigen::Success)
      throw std::runtime_error("element mass matrix is not positive definite");
  }
  return ctx;
}

struct BlockContrib {
  int row, col;
  Eigen::MatrixXd m;
};
struct VecContrib {
  int elem;
  Eigen::VectorXd v;
};
struct TaskOut {
  std::vector<BlockContrib> blocks;
  std::vector<VecContrib> vecs;
};

Eigen::MatrixXd& block_slot(TaskOut& out, int row, int col, int S) {
  for (BlockContrib& b : out.blocks)
    if (b.row == row && b.col == col) return b.m;
  out.blocks.push_back({row, col, Eigen::MatrixXd::Zero(S, S)});
  return out.blocks.back().m;
}

Eigen::VectorXd& vec_slot(TaskOut& out, int elem, int S) {
  for (VecContrib& v : out.vecs)
    if (v.elem == elem) return v.v;
  out.vecs.push_back({elem, Eigen::VectorXd::Zero(S)});
  return out.vecs.back().v;
}

// Values and normal derivatives of one element's basis along a face, at the
// face-rule points.  Value rows off the face's node set are exactly zero
// (they vanish analytically; zeroing removes round-off so that the compact
// scheme's couplings have an exact sparsity footprint).
struct SideTrace {
  const std::vector<int>* fnodes = nullptr;
  Eigen::MatrixXd tr;  // S x Q basis values
  Eigen::MatrixXd gn;  // S x Q rows of n_plus . kappa grad phi_i
};

SideTrace make_side_trace(const NodalBasis& basis, const ElementCtx& ctx,
                          int local_face, const std::vector<Vec2>& phys,
                          Vec2 n_plus, const ScalarFn& kappa) {
  SideTrace st;
  st.fnodes = &basis.face_nodes()[local_face];
  std::vector<Vec2> ref(phys.size());
  for (std::size_t q = 0; q < phys.size(); ++q)
    ref[q] = ctx.geom.to_reference(phys[q]);
  const ElementEval ev = evaluate_on_element(basis, ctx.geom, ref, true);
  const int S = basis.size();
  const int Q = int(phys.size());
  st.tr = Eigen::MatrixXd::Zero(S, Q);
  for (int id : *st.fnodes) st.tr.row(id) = ev.values.row(id);
  st.gn.resize(S, Q);
  for (int q = 0; q < Q; ++q) {
    const double k = kappa(phys[q].x, phys[q].y);
    st.gn.col(q) =
        k * (n_plus.x * ev.grad_x.col(q) + n_plus.y * ev.grad_y.col(q));
  }
  return st;
}

// One face's lifting data inside its supporting element: X maps the face
// degrees of freedom (columns, identified by cols) to the polynomial
// coefficients of the lifted field per normal component, i.e. the lifted
// field is  -n_k * (X u_face)  in component k.
struct LiftFace {
  Vec2 n;
  Eigen::MatrixXd X;                       // S x C
  std::vector<std::pair<int, int>> cols;   // (element, local node) per column
  Eigen::VectorXd xg;                      // Dirichlet data coefficients
  bool dirichlet = false;
};

// Combined one-sided lifting r^e([u]) + l^e(C12.[u]) of an interior face:
// it is supported entirely on the switch-one element and satisfies
// integral_W R(u) . tau = -integral_e (u+ - u-) tau . n_plus for all tau.
LiftFace make_interior_lift(const Mesh& mesh, const NodalBasis& basis,
                            const std::vector<ElementCtx>& ctx,
                            const SwitchAssignment& sw, int f,
                            const FaceRule& rule, const ScalarFn& kappa) {
  const InteriorFace& face = mesh.interior_faces[f];
  const bool plus_is_support = sw.s_plus[f] != 0;
  const int w = plus_is_support ? face.elem_plus : face.elem_minus;
  const int z = plus_is_support ? face.elem_minus : face.elem_plus;
  const int wface =
      plus_is_support ? face.local_face_plus : face.local_face_minus;
  const int zface =
      plus_is_support ? face.local_face_minus : face.local_face_plus;

  const int Q = int(rule.points.size());
  std::vector<Vec2> phys_w(Q), phys_z(Q);
  for (int q = 0; q < Q; ++q) {
    phys_w[q] = plus_is_support ? face.x_plus(rule.points[q])
                                : face.x_minus(rule.points[q]);
    phys_z[q] = plus_is_support ? face.x_minus(rule.points[q])
                                : face.x_plus(rule.points[q]);
  }
  const SideTrace tw =
      make_side_trace(basis, ctx[w], wface, phys_w, face.normal, kappa);
  const SideTrace tz =
      make_side_trace(basis, ctx[z], zface, phys_z, face.normal, kappa);

  const int S = basis.size();
  const int Se = basis.face_size();
  Eigen::VectorXd wq(Q);
  for (int q = 0; q < Q; ++q) wq[q] = rule.weights[q] * face.length;

  // jump = (+1) * support side - (-1) * other side when support is plus;
  // the jump u+ - u- keeps its sign regardless of which side supports.
  const double sign_w = plus_is_support ? 1.0 : -1.0;
  LiftFace lf;
  lf.n = face.normal;
  lf.X.resize(S, 2 * Se);
  Eigen::MatrixXd wmat = Eigen::MatrixXd::Zero(S, 2 * Se);
  const std::vector<int>& wfn = *tw.fnodes;
  const std::vector<int>& zfn = *tz.fnodes;
  for (int j = 0; j < Se; ++j) {
    wmat.col(j) = sign_w * (tw.tr * wq.cwiseProduct(tw.tr.row(wfn[j]).transpose()));
    wmat.col(Se + j) =
        -sign_w * (tw.tr * wq.cwiseProduct(tz.tr.row(zfn[j]).transpose()));
  }
  lf.X = ctx[w].llt.solve(wmat);
  lf.cols.reserve(2 * Se);
  for (int j = 0; j < Se; ++j) lf.cols.emplace_back(w, wfn[j]);
  for (int j = 0; j < Se; ++j) lf.cols.emplace_back(z, zfn[j]);
  return lf;
}

// One-sided half-weight lifting r^e([u]) restricted to a single element side
// (used by the BR2 stabilization, which keeps both halves).
LiftFace make_side_lift(const Mesh& mesh, const NodalBasis& basis,
                        const std::vector<ElementCtx>& ctx, int f,
                        bool on_plus, const FaceRule& rule,
                        const ScalarFn& kappa) {
  const InteriorFace& face = mesh.interior_faces[f];
  const int s = on_plus ? face.elem_plus : face.elem_minus;
  const int o = on_plus ? face.elem_minus : face.elem_plus;
  const int sface = on_plus ? face.local_face_plus : face.local_face_minus;
  const int oface = on_plus ? face.local_face_minus : face.local_face_plus;

  const int Q = int(rule.points.size());
  std::vector<Vec2> phys_s(Q), phys_o(Q);
  for (int q = 0; q < Q; ++q) {
    phys_s[q] =
        on_plus ? face.x_plus(rule.points[q]) : face.x_minus(rule.points[q]);
    phys_o[q] =
        on_plus ? face.x_minus(rule.points[q]) : face.x_plus(rule.points[q]);
  }
  const SideTrace ts =
      make_side_trace(basis, ctx[s], sface, phys_s, face.normal, kappa);
  const SideTrace to =
      make_side_trace(basis, ctx[o], oface, phys_o, face.normal, kappa);

  const int S = basis.size();
  const int Se = basis.face_size();
  Eigen::VectorXd wq(Q);
  for (int q = 0; q < Q; ++q) wq[q] = rule.weights[q] * face.length;

  const double sign_s = on_plus ? 1.0 : -1.0;  // jump stays u+ - u-
  LiftFace lf;
  lf.n = face.normal;
  Eigen::MatrixXd wmat = Eigen::MatrixXd::Zero(S, 2 * Se);
  const std::vector<int>& sfn = *ts.fnodes;
  const std::vector<int>& ofn = *to.fnodes;
  // columns ordered (plus face dofs, minus face dofs) regardless of side
  const int col_s = on_plus ? 0 : Se;
  const int col_o = on_plus ? Se : 0;
  for (int j = 0; j < Se; ++j) {
    wmat.col(col_s + j) =
        sign_s * (ts.tr * wq.cwiseProduct(ts.tr.row(sfn[j]).transpose()));
    wmat.col(col_o + j) =
        -sign_s * (ts.tr * wq.cwiseProduct(to.tr.row(ofn[j]).transpose()));
  }
  lf.X = ctx[s].llt.solve(wmat);
  const std::vector<int>& pfn =
      basis.face_nodes()[face.local_face_plus];
  const std::vector<int>& mfn =
      basis.face_nodes()[face.local_face_minus];
  for (int j = 0; j < Se; ++j) lf.cols.emplace_back(face.elem_plus, pfn[j]);
  for (int j = 0; j < Se; ++j) lf.cols.emplace_back(face.elem_minus, mfn[j]);
  return lf;
}

LiftFace make_dirichlet_lift(const Mesh& mesh, const NodalBasis& basis,
                             const std::vector<ElementCtx>& ctx, int bf,
                             const FaceRule& rule, const ScalarFn& kappa,
                             const ScalarFn& g_dirichlet) {
  const BoundaryFace& face = mesh.boundary_faces[bf];
  const int Q = int(rule.points.size());
  std::vector<Vec2> phys(Q);
  for (int q = 0; q < Q; ++q) phys[q] = face.at(rule.points[q]);
  const SideTrace ts = make_side_trace(basis, ctx[face.elem], face.local_face,
                                       phys, face.normal, kappa);
  const int S = basis.size();
  const int Se = basis.face_size();
  Eigen::VectorXd wq(Q);
  for (int q = 0; q < Q; ++q) wq[q] = rule.weights[q] * face.length;

  LiftFace lf;
  lf.dirichlet = true;
  lf.n = face.normal;
  Eigen::MatrixXd wmat = Eigen::MatrixXd::Zero(S, Se);
  const std::vector<int>& fn = *ts.fnodes;
  for (int j = 0; j < Se; ++j)
    wmat.col(j) = ts.tr * wq.cwiseProduct(ts.tr.row(fn[j]).transpose());
  lf.X = ctx[face.elem].llt.solve(wmat);
  for (int j = 0; j < Se; ++j) lf.cols.emplace_back(face.elem, fn[j]);

  Eigen::VectorXd wg = Eigen::VectorXd::Zero(S);
  for (int q = 0; q < Q; ++q)
    wg += (wq[q] * g_dirichlet(phys[q].x, phys[q].y)) * ts.tr.col(q);
  lf.xg = ctx[face.elem].llt.solve(wg);
  return lf;
}

// Adds coef * integral_K kappa R_row(v) . R_col(u) dx to the output blocks.
void add_lift_pair(TaskOut& out, const LiftFace& row, const LiftFace& col,
                   double coef, const Eigen::MatrixXd& mass_k, int S) {
  const double scale = coef * dot(row.n, col.n);
  const Eigen::MatrixXd p = scale * (row.X.transpose() * mass_k * col.X);
  for (int i = 0; i < int(row.cols.size()); ++i)
    for (int j = 0; j < int(col.cols.size()); ++j)
      block_slot(out, row.cols[i].first, col.cols[j].first, S)(
          row.cols[i].second, col.cols[j].second) += p(i, j);
}

// Adds coef * integral_K kappa R_row(v) . rD(g) dx to the output vectors.
void add_lift_data(TaskOut& out, const LiftFace& row, const LiftFace& data,
                   double coef, const Eigen::MatrixXd& mass_k, int S) {
  const double scale = coef * dot(row.n, data.n);
  const Eigen::VectorXd y = scale * (row.X.transpose() * (mass_k * data.xg));
  for (int i = 0; i < int(row.cols.size()); ++i)
    vec_slot(out, row.cols[i].first, S)[row.cols[i].second] += y[i];
}

}  // namespace

AssembledSystem assemble(const Mesh& mesh, const NodalBasis& basis,
                         const SwitchAssignment& sw, const ProblemSpec& problem,
                         const SchemeConfig& config, int threads) {
  const int T = mesh.num_elements();
  const int S = basis.size();
  const bool br2 = config.scheme == Scheme::BR2;

  AssembledSystem sys{BlockSparseMatrix(T, S),
                      Eigen::VectorXd::Zero(std::int64_t(T) * S),
                      {}};

  bool any_dirichlet = false;
  for (const BoundaryFace& f : mesh.boundary_faces)
    any_dirichlet = any_dirichlet || f.tag == BoundaryTag::Dirichlet;
  if (!mesh.periodic && !any_dirichlet)
    throw std::invalid_argument(
        "a non-periodic problem needs at least one dirichlet face");

  if (br2 && (config.c11_interior != 0.0 || config.c11_boundary != 0.0))
    sys.warnings.push_back(
        "br2 has no c11 penalty terms; the configured values are ignored");
  if (br2 && config.switch_strategy == SwitchStrategy::Natural)
    sys.warnings.push_back(
        "br2 does not use switches; the switch strategy has no effect");

  const int deg = assembly_quadrature_degree(basis.p());
  const TriangleRule vol = triangle_quadrature(deg);
  const FaceRule line = face_quadrature(deg);
  const std::vector<ElementCtx> ctx =
      build_contexts(mesh, basis, problem.kappa, vol);

  const double c11_int = br2 ? 0.0 : config.c11_interior;
  const double c11_bnd = br2 ? 0.0 : config.c11_boundary;

  std::vector<std::function<TaskOut()>> tasks;

  // volume terms: broken stiffness and the source functional
  for (int e = 0; e < T; ++e)
    tasks.push_back([&, e] {
      TaskOut out;
      Eigen::MatrixXd& stiff = block_slot(out, e, e, S);
      Eigen::VectorXd& load = vec_slot(out, e, S);
      const ElementEval ev =
          evaluate_on_element(basis, ctx[e].geom, vol.points, true);
      for (std::size_t q = 0; q < vol.points.size(); ++q) {
        const Vec2 xp = ctx[e].geom.to_physical(vol.points[q]);
        const double w = vol.weights[q] * ctx[e].geom.det;
        stiff += (w * problem.kappa(xp.x, xp.y)) *
                 (ev.grad_x.col(q) * ev.grad_x.col(q).transpose() +
                  ev.grad_y.col(q) * ev.grad_y.col(q).transpose());
        load += (w * problem.f(xp.x, xp.y)) * ev.values.col(q);
      }
      return out;
    });

  // interior faces: consistency, switch, and penalty terms
  for (int f = 0; f < int(mesh.interior_faces.size()); ++f)
    tasks.push_back([&, f] {
      const InteriorFace& face = mesh.interior_faces[f];
      const int Q = int(line.points.size());
      std::vector<Vec2> phys_p(Q), phys_m(Q);
      for (int q = 0; q < Q; ++q) {
        phys_p[q] = face.x_plus(line.points[q]);
        phys_m[q] = face.x_minus(line.points[q]);
      }
      const SideTrace tp =
          make_side_trace(basis, ctx[face.elem_plus], face.local_face_plus,
                          phys_p, face.normal, problem.kappa);
      const SideTrace tm =
          make_side_trace(basis, ctx[face.elem_minus], face.local_face_minus,
                          phys_m, face.normal, problem.kappa);
      Eigen::VectorXd wq(Q);
      for (int q = 0; q < Q; ++q) wq[q] = line.weights[q] * face.length;

      // gradient weights: the flux gradient is taken entirely from the
      // switch-one side for CDG/LDG and centrally for BR2
      const double c = br2 ? 0.0 : (sw.s_plus[f] ? 0.5 : -0.5);
      const double wp = 0.5 + c, wm = 0.5 - c;

      // rows generating the jump u+ - u- and the weighted normal gradient
      const Eigen::MatrixXd jp = tp.tr, jm = -tm.tr;
      const Eigen::MatrixXd gp =
          wp == 0.0 ? Eigen::MatrixXd::Zero(S, Q) : (wp * tp.gn).eval();
      const Eigen::MatrixXd gm =
          wm == 0.0 ? Eigen::MatrixXd::Zero(S, Q) : (wm * tm.gn).eval();

      TaskOut out;
      const int elems[2] = {face.elem_plus, face.elem_minus};
      const Eigen::MatrixXd* jrows[2] = {&jp, &jm};
      const Eigen::MatrixXd* grows[2] = {&gp, &gm};
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          Eigen::MatrixXd& blk = block_slot(out, elems[a], elems[b], S);
          const Eigen::MatrixXd ju = wq.asDiagonal() * jrows[b]->transpose();
          blk -= *grows[a] * ju;
          blk -= *jrows[a] * (wq.asDiagonal() * grows[b]->transpose());
          if (c11_int != 0.0) blk += c11_int * (*jrows[a] * ju);
        }
      return out;
    });

  // boundary faces: Dirichlet consistency/penalty terms and Neumann data
  for (int bf = 0; bf < int(mesh.boundary_faces.size()); ++bf)
    tasks.push_back([&, bf] {
      const BoundaryFace& face = mesh.boundary_faces[bf];
      const int Q = int(line.points.size());
      std::vector<Vec2> phys(Q);
      for (int q = 0; q < Q; ++q) phys[q] = face.at(line.points[q]);
      const SideTrace ts =
          make_side_trace(basis, ctx[face.elem], face.local_face, phys,
                          face.normal, problem.kappa);
      Eigen::VectorXd wq(Q);
      for (int q = 0; q < Q; ++q) wq[q] = line.weights[q] * face.length;

      TaskOut out;
      Eigen::VectorXd& load = vec_slot(out, face.elem, S);
      if (face.tag == BoundaryTag::Neumann) {
        for (int q = 0; q < Q; ++q)
          load += (wq[q] * problem.g_neumann(phys[q].x, phys[q].y)) *
                  ts.tr.col(q);
        return out;
      }
      Eigen::MatrixXd& blk = block_slot(out, face.elem, face.elem, S);
      const Eigen::MatrixXd ju = wq.asDiagonal() * ts.tr.transpose();
      blk -= ts.gn * ju;
      blk -= ts.tr * (wq.asDiagonal() * ts.gn.transpose());
      if (c11_bnd != 0.0) blk += c11_bnd * (ts.tr * ju);
      for (int q = 0; q < Q; ++q) {
        const double g = problem.g_dirichlet(phys[q].x, phys[q].y);
        load -= (wq[q] * g) * ts.gn.col(q);
        if (c11_bnd != 0.0) load += (c11_bnd * wq[q] * g) * ts.tr.col(q);
      }
      return out;
    });

  // lifting stabilization
  if (config.scheme == Scheme::LDG) {
    // full double sum: all lifting pairs sharing a support element
    struct Entry {
      bool interior;
      int index;
    };
    std::vector<std::vector<Entry>> support(T);
    for (int f = 0; f < int(mesh.interior_faces.size()); ++f) {
      const InteriorFace& face = mesh.interior_faces[f];
      support[sw.s_plus[f] ? face.elem_plus : face.elem_minus].push_back(
          {true, f});
    }
    for (int bf = 0; bf < int(mesh.boundary_faces.size()); ++bf)
      if (mesh.boundary_faces[bf].tag == BoundaryTag::Dirichlet)
        support[mesh.boundary_faces[bf].elem].push_back({false, bf});

    for (int e = 0; e < T; ++e) {
      if (support[e].empty()) continue;
      tasks.push_back([&, e, list = support[e]] {
        TaskOut out;
        std::vector<LiftFace> lifts;
        lifts.reserve(list.size());
        for (const Entry& entry : list)
          lifts.push_back(entry.interior
                              ? make_interior_lift(mesh, basis, ctx, sw,
                                                   entry.index, line,
                                                   problem.kappa)
                              : make_dirichlet_lift(mesh, basis, ctx,
                                                    entry.index, line,
                                                    problem.kappa,
                                                    problem.g_dirichlet));
        for (const LiftFace& row : lifts)
          for (const LiftFace& col : lifts)
            add_lift_pair(out, row, col, 1.0, ctx[e].mass_k, S);
        for (const LiftFace& data : lifts) {
          if (!data.dirichlet) continue;
          for (const LiftFace& row : lifts)
            add_lift_data(out, row, data, 1.0, ctx[e].mass_k, S);
        }
        return out;
      });
    }
  } else if (config.scheme == Scheme::CDG) {
    // facewise products only (the Kronecker-delta structure)
    for (int f = 0; f < int(mesh.interior_faces.size()); ++f)
      tasks.push_back([&, f] {
        TaskOut out;
        const LiftFace lf =
            make_interior_lift(mesh, basis, ctx, sw, f, line, problem.kappa);
        const int supp = cdg_face_sigma_support(mesh, sw, f);
        add_lift_pair(out, lf, lf, 1.0, ctx[supp].mass_k, S);
        return out;
      });
    for (int bf = 0; bf < int(mesh.boundary_faces.size()); ++bf) {
      if (mesh.boundary_faces[bf].tag != BoundaryTag::Dirichlet) continue;
      tasks.push_back([&, bf] {
        TaskOut out;
        const LiftFace lf = make_dirichlet_lift(
            mesh, basis, ctx, bf, line, problem.kappa, problem.g_dirichlet);
        const Eigen::MatrixXd& mk = ctx[mesh.boundary_faces[bf].elem].mass_k;
        add_lift_pair(out, lf, lf, 1.0, mk, S);
        add_lift_data(out, lf, lf, 1.0, mk, S);
        return out;
      });
    }
  } else {
    // BR2: both one-sided halves of the face lifting, scaled by eta
    for (int f = 0; f < int(mesh.interior_faces.size()); ++f)
      tasks.push_back([&, f] {
        TaskOut out;
        for (bool on_plus : {true, false}) {
          const LiftFace lf =
              make_side_lift(mesh, basis, ctx, f, on_plus, line,
                             problem.kappa);
          const int s = on_plus ? mesh.interior_faces[f].elem_plus
                                : mesh.interior_faces[f].elem_minus;
          add_lift_pair(out, lf, lf, config.eta / 4.0, ctx[s].mass_k, S);
        }
        return out;
      });
    for (int bf = 0; bf < int(mesh.boundary_faces.size()); ++bf) {
      if (mesh.boundary_faces[bf].tag != BoundaryTag::Dirichlet) continue;
      tasks.push_back([&, bf] {
        TaskOut out;
        const LiftFace lf = make_dirichlet_lift(
            mesh, basis, ctx, bf, line, problem.kappa, problem.g_dirichlet);
        const Eigen::MatrixXd& mk = ctx[mesh.boundary_faces[bf].elem].mass_k;
        add_lift_pair(out, lf, lf, config.eta, mk, S);
        add_lift_data(out, lf, lf, config.eta, mk, S);
        return out;
      });
    }
  }

  // compute (parallel or serial), then merge in fixed task order
  std::vector<TaskOut> outs(tasks.size());
  if (threads == 0) {
    for (std::size_t i = 0; i < tasks.size(); ++i) outs[i] = tasks[i]();
  } else {
    const std::int64_t n = std::int64_t(tasks.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 8) num_threads(threads)
#endif
    for (std::int64_t i = 0; i < n; ++i) outs[i] = tasks[i]();
  }
  for (const TaskOut& out : outs) {
    for (const BlockContrib& bc : out.blocks) {
      if (bc.row == bc.col)
        sys.A.diag(bc.row) += bc.m;
      else
        sys.A.off(bc.row, bc.col) += bc.m;
    }
    for (const VecContrib& vc : out.vecs)
      sys.b.segment(std::int64_t(vc.elem) * S, S) += vc.v;
  }
  return sys;
}

namespace {

// shared scaffolding for the standalone lifting operators
struct LocalMass {
  ElementGeometry geom;
  Eigen::LLT<Eigen::MatrixXd> llt;
};

LocalMass local_mass(const Mesh& mesh, const NodalBasis& basis, int e) {
  LocalMass lm;
  lm.geom = mesh.element_geometry(e);
  const TriangleRule vol = triangle_quadrature(2 * basis.p());
  const RefEval ev = basis.eval(vol.points, false);
  Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(basis.size(), basis.size());
  for (std::size_t q = 0; q < vol.points.size(); ++q)
    mass += (vol.weights[q] * lm.geom.det) * ev.values.col(q) *
            ev.values.col(q).transpose();
  lm.llt = Eigen::LLT<Eigen::MatrixXd>(mass);
  return lm;
}

DGField zero_vector_field(const Mesh& mesh, const NodalBasis& basis) {
  DGField f;
  f.arity = 2;
  f.num_elements = mesh.num_elements();
  f.block_size = basis.size();
  f.coeff.assign(std::size_t(f.num_elements) * f.block_size * 2, 0.0);
  return f;
}

// solves M x_k = rhs_k per component and writes -x into the field on element e
void write_lift(DGField& out, const LocalMass& lm, int e,
                const Eigen::MatrixXd& rhs_xy) {
  const Eigen::MatrixXd x = lm.llt.solve(rhs_xy);
  for (int i = 0; i < x.rows(); ++i) {
    out.at(e, i, 0) += x(i, 0);
    out.at(e, i, 1) += x(i, 1);
  }
}

Eigen::MatrixXd face_values(const NodalBasis& basis, const ElementGeometry& g,
                            const std::vector<Vec2>& phys, int local_face) {
  std::vector<Vec2> ref(phys.size());
  for (std::size_t q = 0; q < phys.size(); ++q)
    ref[q] = g.to_reference(phys[q]);
  const RefEval ev = basis.eval(ref, false);
  Eigen::MatrixXd tr = Eigen::MatrixXd::Zero(basis.size(), phys.size());
  for (int id : basis.face_nodes()[local_face]) tr.row(id) = ev.values.row(id);
  return tr;
}

}  // namespace

DGField lift_r_face(const Mesh& mesh, const NodalBasis& basis,
                    int interior_face, const std::vector<Vec2>& phi_at_qp,
                    const FaceRule& rule) {
  const InteriorFace& face = mesh.interior_faces.at(interior_face);
  DGField out = zero_vector_field(mesh, basis);
  const int Q = int(rule.points.size());
  for (int side = 0; side < 2; ++side) {
    const int e = side == 0 ? face.elem_plus : face.elem_minus;
    const int lf = side == 0 ? face.local_face_plus : face.local_face_minus;
    const LocalMass lm = local_mass(mesh, basis, e);
    std::vector<Vec2> phys(Q);
    for (int q = 0; q < Q; ++q)
      phys[q] =
          side == 0 ? face.x_plus(rule.points[q]) : face.x_minus(rule.points[q]);
    const Eigen::MatrixXd tr = face_values(basis, lm.geom, phys, lf);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(basis.size(), 2);
    for (int q = 0; q < Q; ++q) {
      const double w = rule.weights[q] * face.length;
      // {tau} = tau_side / 2 when tau vanishes on the other side
      rhs.col(0) -= (0.5 * w * phi_at_qp[q].x) * tr.col(q);
      rhs.col(1) -= (0.5 * w * phi_at_qp[q].y) * tr.col(q);
    }
    write_lift(out, lm, e, rhs);
  }
  return out;
}

DGField lift_l_face(const Mesh& mesh, const NodalBasis& basis,
                    int interior_face, const std::vector<double>& q_at_qp,
                    const FaceRule& rule) {
  const InteriorFace& face = mesh.interior_faces.at(interior_face);
  DGField out = zero_vector_field(mesh, basis);
  const int Q = int(rule.points.size());
  for (int side = 0; side < 2; ++side) {
    const int e = side == 0 ? face.elem_plus : face.elem_minus;
    const int lf = side == 0 ? face.local_face_plus : face.local_face_minus;
    const Vec2 ns = side == 0 ? face.normal : -1.0 * face.normal;
    const LocalMass lm = local_mass(mesh, basis, e);
    std::vector<Vec2> phys(Q);
    for (int q = 0; q < Q; ++q)
      phys[q] =
          side == 0 ? face.x_plus(rule.points[q]) : face.x_minus(rule.points[q]);
    const Eigen::MatrixXd tr = face_values(basis, lm.geom, phys, lf);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(basis.size(), 2);
    for (int q = 0; q < Q; ++q) {
      const double w = rule.weights[q] * face.length;
      // [tau] = tau_side . n_side when tau vanishes on the other side
      rhs.col(0) -= (w * q_at_qp[q] * ns.x) * tr.col(q);
      rhs.col(1) -= (w * q_at_qp[q] * ns.y) * tr.col(q);
    }
    write_lift(out, lm, e, rhs);
  }
  return out;
}

DGField lift_rD_face(const Mesh& mesh, const NodalBasis& basis,
                     int dirichlet_boundary_face,
                     const std::vector<double>& q_at_qp, const FaceRule& rule) {
  const BoundaryFace& face = mesh.boundary_faces.at(dirichlet_boundary_face);
  if (face.tag != BoundaryTag::Dirichlet)
    throw std::invalid_argument("lifting requires a dirichlet face");
  DGField out = zero_vector_field(mesh, basis);
  const int Q = int(rule.points.size());
  const LocalMass lm = local_mass(mesh, basis, face.elem);
  std::vector<Vec2> phys(Q);
  for (int q = 0; q < Q; ++q) phys[q] = face.at(rule.points[q]);
  const Eigen::MatrixXd tr =
      face_values(basis, lm.geom, phys, face.local_face);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(basis.size(), 2);
  for (int q = 0; q < Q; ++q) {
    const double w = rule.weights[q] * face.length;
    rhs.col(0) -= (w * q_at_qp[q] * face.normal.x) * tr.col(q);
    rhs.col(1) -= (w * q_at_qp[q] * face.normal.y) * tr.col(q);
  }
  write_lift(out, lm, face.elem, rhs);
  return out;
}

DGField reconstruct_flux(const DGField& u_h, const Mesh& mesh,
                         const NodalBasis& basis, const SwitchAssignment& sw,
                         const ProblemSpec& problem,
                         const SchemeConfig& config) {
  const int S = basis.size();
  const int deg = assembly_quadrature_degree(basis.p());
  const TriangleRule vol = triangle_quadrature(deg);
  const FaceRule line = face_quadrature(deg);
  const std::vector<ElementCtx> ctx =
      build_contexts(mesh, basis, problem.kappa, vol);
  const bool br2 = config.scheme == Scheme::BR2;
  const int Q = int(line.points.size());

  // accumulate the lifted perturbation field (nodal coefficients)
  DGField lift = zero_vector_field(mesh, basis);
  auto add_solved = [&](int e, const Eigen::VectorXd& w, Vec2 n, double coef) {
    const Eigen::VectorXd x = ctx[e].llt.solve(w);
    for (int i = 0; i < S; ++i) {
      lift.at(e, i, 0) += coef * -n.x * x[i];
      lift.at(e, i, 1) += coef * -n.y * x[i];
    }
  };

  for (int f = 0; f < int(mesh.interior_faces.size()); ++f) {
    const InteriorFace& face = mesh.interior_faces[f];
    std::vector<Vec2> phys_p(Q), phys_m(Q);
    for (int q = 0; q < Q; ++q) {
      phys_p[q] = face.x_plus(line.points[q]);
      phys_m[q] = face.x_minus(line.points[q]);
    }
    const Eigen::MatrixXd trp = face_values(
        basis, ctx[face.elem_plus].geom, phys_p, face.local_face_plus);
    const Eigen::MatrixXd trm = face_values(
        basis, ctx[face.elem_minus].geom, phys_m, face.local_face_minus);
    Eigen::VectorXd jump(Q);
    for (int q = 0; q < Q; ++q) {
      double up = 0.0, um = 0.0;
      for (int i = 0; i < S; ++i) {
        up += u_h.at(face.elem_plus, i) * trp(i, q);
        um += u_h.at(face.elem_minus, i) * trm(i, q);
      }
      jump[q] = up - um;
    }
    if (!br2) {
      // combined r + l collapses onto the switch-one element
      const bool plus_is_support = sw.s_plus[f] != 0;
      const int w = plus_is_support ? face.elem_plus : face.elem_minus;
      const Eigen::MatrixXd& trw = plus_is_support ? trp : trm;
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(S);
      for (int q = 0; q < Q; ++q)
        rhs += (line.weights[q] * face.length * jump[q]) * trw.col(q);
      add_solved(w, rhs, face.normal, 1.0);
    } else {
      // C12 = 0: plain two-sided lifting, half weight per side
      for (int side = 0; side < 2; ++side) {
        const int e = side == 0 ? face.elem_plus : face.elem_minus;
        const Eigen::MatrixXd& tr = side == 0 ? trp : trm;
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(S);
        for (int q = 0; q < Q; ++q)
          rhs += (line.weights[q] * face.length * jump[q]) * tr.col(q);
        add_solved(e, rhs, face.normal, 0.5);
      }
    }
  }
  for (int bf = 0; bf < int(mesh.boundary_faces.size()); ++bf) {
    const BoundaryFace& face = mesh.boundary_faces[bf];
    if (face.tag != BoundaryTag::Dirichlet) continue;
    std::vector<Vec2> phys(Q);
    for (int q = 0; q < Q; ++q) phys[q] = face.at(line.points[q]);
    const Eigen::MatrixXd tr =
        face_values(basis, ctx[face.elem].geom, phys, face.local_face);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(S);
    for (int q = 0; q < Q; ++q) {
      double u = 0.0;
      for (int i = 0; i < S; ++i) u += u_h.at(face.elem, i) * tr(i, q);
      const double mismatch = u - problem.g_dirichlet(phys[q].x, phys[q].y);
      rhs += (line.weights[q] * face.length * mismatch) * tr.col(q);
    }
    add_solved(face.elem, rhs, face.normal, 1.0);
  }

  // sigma = kappa (grad u_h + lifted perturbation), sampled nodally
  DGField sigma = zero_vector_field(mesh, basis);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementEval ev =
        evaluate_on_element(basis, ctx[e].geom, basis.nodes(), true);
    for (int i = 0; i < S; ++i) {
      double gx = 0.0, gy = 0.0;
      for (int j = 0; j < S; ++j) {
        gx += u_h.at(e, j) * ev.grad_x(j, i);
        gy += u_h.at(e, j) * ev.grad_y(j, i);
      }
      const Vec2 xp = ctx[e].geom.to_physical(basis.nodes()[i]);
      const double k = problem.kappa(xp.x, xp.y);
      sigma.at(e, i, 0) = k * (gx + lift.at(e, i, 0));
      sigma.at(e, i, 1) = k * (gy + lift.at(e, i, 1));
    }
  }
  return sigma;
}

}  // namespace cdglab
