#include "cdglab/pattern.hpp"

#include <vector>

namespace cdglab {

namespace {

void mark_all_by_face(Eigen::MatrixXd& block, const std::vector<int>& cols) {
  for (int i = 0; i < block.rows(); ++i)
    for (int id : cols) block(i, id) = 1.0;
}

void mark_face_by_all(Eigen::MatrixXd& block, const std::vector<int>& rows) {
  for (int id : rows)
    for (int j = 0; j < block.cols(); ++j) block(id, j) = 1.0;
}

void mark_face_by_face(Eigen::MatrixXd& block, const std::vector<int>& rows,
                       const std::vector<int>& cols) {
  for (int r : rows)
    for (int c : cols) block(r, c) = 1.0;
}

}  // namespace

BlockSparseMatrix structural_pattern(const Mesh& mesh, const NodalBasis& basis,
                                     const SwitchAssignment& sw,
                                     Scheme scheme) {
  const int T = mesh.num_elements();
  const int S = basis.size();
  BlockSparseMatrix mask(T, S);
  for (int e = 0; e < T; ++e) mask.diag(e).setOnes();

  const auto& fn = basis.face_nodes();
  for (int f = 0; f < int(mesh.interior_faces.size()); ++f) {
    const InteriorFace& face = mesh.interior_faces[f];
    if (scheme == Scheme::BR2) {
      // cross shape on both off-diagonal blocks
      for (int side = 0; side < 2; ++side) {
        const int r = side == 0 ? face.elem_plus : face.elem_minus;
        const int c = side == 0 ? face.elem_minus : face.elem_plus;
        const int rface =
            side == 0 ? face.local_face_plus : face.local_face_minus;
        const int cface =
            side == 0 ? face.local_face_minus : face.local_face_plus;
        Eigen::MatrixXd& block = mask.off(r, c);
        mark_all_by_face(block, fn[cface]);
        mark_face_by_all(block, fn[rface]);
      }
    } else {
      const bool plus = sw.s_plus[f] != 0;
      const int w = plus ? face.elem_plus : face.elem_minus;
      const int z = plus ? face.elem_minus : face.elem_plus;
      const int zface = plus ? face.local_face_minus : face.local_face_plus;
      mark_all_by_face(mask.off(w, z), fn[zface]);
      mark_face_by_all(mask.off(z, w), fn[zface]);
    }
  }

  if (scheme == Scheme::LDG) {
    // faces lifted onto a shared support element couple their far sides
    std::vector<std::vector<int>> supported(T);
    for (int f = 0; f < int(mesh.interior_faces.size()); ++f) {
      const InteriorFace& face = mesh.interior_faces[f];
      supported[sw.s_plus[f] ? face.elem_plus : face.elem_minus].push_back(f);
    }
    for (int e = 0; e < T; ++e)
      for (int fr : supported[e])
        for (int fc : supported[e]) {
          if (fr == fc) continue;
          const InteriorFace& fa = mesh.interior_faces[fr];
          const InteriorFace& fb = mesh.interior_faces[fc];
          const int zr = sw.s_plus[fr] ? fa.elem_minus : fa.elem_plus;
          const int zrf =
              sw.s_plus[fr] ? fa.local_face_minus : fa.local_face_plus;
          const int zc = sw.s_plus[fc] ? fb.elem_minus : fb.elem_plus;
          const int zcf =
              sw.s_plus[fc] ? fb.local_face_minus : fb.local_face_plus;
          if (zr == zc) continue;  // lands in the (full) diagonal block
          mark_face_by_face(mask.off(zr, zc), fn[zrf], fn[zcf]);
        }
  }
  return mask;
}

}  // namespace cdglab
