#include "cdglab/block_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "cdglab/basis.hpp"

namespace cdglab {

BlockSparseMatrix::BlockSparseMatrix(int num_blocks, int block_size)
    : T_(num_blocks), S_(block_size), diag_(num_blocks), off_(num_blocks) {
  for (auto& d : diag_) d = Eigen::MatrixXd::Zero(S_, S_);
}

Eigen::MatrixXd& BlockSparseMatrix::off(int row, int col) {
  auto& list = off_[row];
  auto it = std::lower_bound(
      list.begin(), list.end(), col,
      [](const auto& entry, int c) { return entry.first < c; });
  if (it == list.end() || it->first != col)
    it = list.insert(it, {col, Eigen::MatrixXd::Zero(S_, S_)});
  return it->second;
}

const Eigen::MatrixXd* BlockSparseMatrix::find_off(int row, int col) const {
  const auto& list = off_[row];
  auto it = std::lower_bound(
      list.begin(), list.end(), col,
      [](const auto& entry, int c) { return entry.first < c; });
  if (it == list.end() || it->first != col) return nullptr;
  return &it->second;
}

std::int64_t BlockSparseMatrix::stored_blocks() const {
  std::int64_t count = T_;
  for (const auto& list : off_) count += std::int64_t(list.size());
  return count;
}

void BlockSparseMatrix::matvec(const double* x, double* y) const {
#pragma omp parallel for schedule(static)
  for (int e = 0; e < T_; ++e) {
    Eigen::Map<const Eigen::VectorXd> xe(x + std::size_t(e) * S_, S_);
    Eigen::Map<Eigen::VectorXd> ye(y + std::size_t(e) * S_, S_);
    ye.noalias() = diag_[e] * xe;
    for (const auto& [col, block] : off_[e]) {
      Eigen::Map<const Eigen::VectorXd> xc(x + std::size_t(col) * S_, S_);
      ye.noalias() += block * xc;
    }
  }
}

Eigen::VectorXd BlockSparseMatrix::apply(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y(rows());
  matvec(x.data(), y.data());
  return y;
}

Eigen::MatrixXd BlockSparseMatrix::to_dense() const {
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(rows(), rows());
  for (int e = 0; e < T_; ++e) {
    dense.block(std::int64_t(e) * S_, std::int64_t(e) * S_, S_, S_) = diag_[e];
    for (const auto& [col, block] : off_[e])
      dense.block(std::int64_t(e) * S_, std::int64_t(col) * S_, S_, S_) =
          block;
  }
  return dense;
}

double BlockSparseMatrix::inf_norm() const {
  double worst = 0.0;
  for (int e = 0; e < T_; ++e) {
    Eigen::VectorXd row_sum = diag_[e].cwiseAbs().rowwise().sum();
    for (const auto& [col, block] : off_[e])
      row_sum += block.cwiseAbs().rowwise().sum();
    worst = std::max(worst, row_sum.maxCoeff());
  }
  return worst;
}

double BlockSparseMatrix::symmetry_error() const {
  double worst = 0.0;
  for (int e = 0; e < T_; ++e) {
    worst = std::max(worst,
                     (diag_[e] - diag_[e].transpose()).cwiseAbs().maxCoeff());
    for (const auto& [col, block] : off_[e]) {
      const Eigen::MatrixXd* partner = find_off(col, e);
      if (partner)
        worst = std::max(
            worst, (block - partner->transpose()).cwiseAbs().maxCoeff());
      else
        worst = std::max(worst, block.cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

void BlockSparseMatrix::write_coordinate(std::ostream& out) const {
  char line[128];
  auto emit = [&](std::int64_t i, std::int64_t j, double v) {
    std::snprintf(line, sizeof line, "%lld %lld %.17g\n",
                  static_cast<long long>(i), static_cast<long long>(j), v);
    out << line;
  };
  for (int e = 0; e < T_; ++e)
    for (int i = 0; i < S_; ++i)
      for (int j = 0; j < S_; ++j)
        if (diag_[e](i, j) != 0.0)
          emit(std::int64_t(e) * S_ + i, std::int64_t(e) * S_ + j,
               diag_[e](i, j));
  for (int e = 0; e < T_; ++e)
    for (const auto& [col, block] : off_[e])
      for (int i = 0; i < S_; ++i)
        for (int j = 0; j < S_; ++j)
          if (block(i, j) != 0.0)
            emit(std::int64_t(e) * S_ + i, std::int64_t(col) * S_ + j,
                 block(i, j));
}

void BlockSparseMatrix::write_pbm(std::ostream& out) const {
  const std::int64_t n = rows();
  out << "P1\n" << n << " " << n << "\n";
  std::vector<char> row(n);
  for (int e = 0; e < T_; ++e)
    for (int i = 0; i < S_; ++i) {
      std::fill(row.begin(), row.end(), 0);
      for (int j = 0; j < S_; ++j)
        if (diag_[e](i, j) != 0.0) row[std::int64_t(e) * S_ + j] = 1;
      for (const auto& [col, block] : off_[e])
        for (int j = 0; j < S_; ++j)
          if (block(i, j) != 0.0) row[std::int64_t(col) * S_ + j] = 1;
      for (std::int64_t j = 0; j < n; ++j)
        out << (row[j] ? '1' : '0') << (j + 1 == n ? '\n' : ' ');
    }
}

BlockDiagMatrix::BlockDiagMatrix(int num_blocks, int block_size)
    : S_(block_size), blocks_(num_blocks) {
  for (auto& b : blocks_) b = Eigen::MatrixXd::Zero(S_, S_);
}

void BlockDiagMatrix::factorize() {
  llt_.clear();
  llt_.reserve(blocks_.size());
  for (std::size_t e = 0; e < blocks_.size(); ++e) {
    llt_.emplace_back(blocks_[e]);
    if (llt_.back().info() != Eigen::Success)
      throw std::runtime_error("block " + std::to_string(e) +
                               " is not symmetric positive definite");
  }
}

Eigen::VectorXd BlockDiagMatrix::solve(const Eigen::VectorXd& rhs) const {
  Eigen::VectorXd out(rhs.size());
  const int T = num_blocks();
#pragma omp parallel for schedule(static)
  for (int e = 0; e < T; ++e)
    out.segment(std::int64_t(e) * S_, S_) =
        llt_[e].solve(rhs.segment(std::int64_t(e) * S_, S_));
  return out;
}

Eigen::VectorXd BlockDiagMatrix::apply(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out(x.size());
  const int T = num_blocks();
#pragma omp parallel for schedule(static)
  for (int e = 0; e < T; ++e)
    out.segment(std::int64_t(e) * S_, S_).noalias() =
        blocks_[e] * x.segment(std::int64_t(e) * S_, S_);
  return out;
}

CdgCompactMatrix CdgCompactMatrix::pack(const BlockSparseMatrix& a,
                                        const Mesh& mesh,
                                        const NodalBasis& basis,
                                        const SwitchAssignment& sw) {
  CdgCompactMatrix m;
  m.T_ = a.num_blocks();
  m.S_ = a.block_size();
  m.Se_ = basis.face_size();
  if (m.T_ != mesh.num_elements())
    throw std::invalid_argument("matrix/mesh size mismatch");
  m.diag_.assign(std::size_t(m.T_) * m.S_ * m.S_, 0.0);
  m.slab_.assign(std::size_t(m.T_) * 3 * m.S_ * m.Se_, 0.0);
  m.neighbor_.assign(m.T_, {-1, -1, -1});
  m.zface_.assign(m.T_, {-1, -1, -1});
  m.row_is_support_.assign(m.T_, {0, 0, 0});
  for (int k = 0; k < 3; ++k) m.face_nodes_[k] = basis.face_nodes()[k];

  for (int e = 0; e < m.T_; ++e) {
    Eigen::Map<Eigen::MatrixXd>(m.diag_.data() + std::size_t(e) * m.S_ * m.S_,
                                m.S_, m.S_) = a.diag(e);
  }

  // Every off-diagonal block must belong to an interior face and respect the
  // face-node footprint of the switch-zero side.
  std::vector<int> claimed(m.T_, 0);
  for (std::size_t f = 0; f < mesh.interior_faces.size(); ++f) {
    const InteriorFace& face = mesh.interior_faces[f];
    const bool plus_is_support = sw.s_plus[f] != 0;
    const int w = plus_is_support ? face.elem_plus : face.elem_minus;
    const int z = plus_is_support ? face.elem_minus : face.elem_plus;
    const int wface =
        plus_is_support ? face.local_face_plus : face.local_face_minus;
    const int zface =
        plus_is_support ? face.local_face_minus : face.local_face_plus;
    const std::vector<int>& zn = m.face_nodes_[zface];
    std::vector<char> on_face(m.S_, 0);
    for (int id : zn) on_face[id] = 1;

    m.neighbor_[w][wface] = z;
    m.zface_[w][wface] = static_cast<signed char>(zface);
    m.row_is_support_[w][wface] = 1;
    m.neighbor_[z][zface] = w;
    m.zface_[z][zface] = static_cast<signed char>(zface);
    m.row_is_support_[z][zface] = 0;

    if (const Eigen::MatrixXd* block = a.find_off(w, z)) {
      for (int i = 0; i < m.S_; ++i)
        for (int j = 0; j < m.S_; ++j)
          if (!on_face[j] && (*block)(i, j) != 0.0)
            throw std::invalid_argument(
                "entry outside the face-node footprint");
      double* slab = m.slab_at(w, wface);
      for (int i = 0; i < m.S_; ++i)
        for (int j = 0; j < m.Se_; ++j)
          slab[std::size_t(i) * m.Se_ + j] = (*block)(i, zn[j]);
      ++claimed[w];
    }
    if (const Eigen::MatrixXd* block = a.find_off(z, w)) {
      for (int i = 0; i < m.S_; ++i)
        for (int j = 0; j < m.S_; ++j)
          if (!on_face[i] && (*block)(i, j) != 0.0)
            throw std::invalid_argument(
                "entry outside the face-node footprint");
      double* slab = m.slab_at(z, zface);
      for (int j = 0; j < m.Se_; ++j)
        for (int i = 0; i < m.S_; ++i)
          slab[std::size_t(j) * m.S_ + i] = (*block)(zn[j], i);
      ++claimed[z];
    }
  }
  for (int e = 0; e < m.T_; ++e)
    if (std::int64_t(claimed[e]) < std::int64_t(a.row_blocks(e).size()))
      throw std::invalid_argument(
          "off-diagonal block between non-adjacent elements");
  return m;
}

BlockSparseMatrix CdgCompactMatrix::unpack() const {
  BlockSparseMatrix a(T_, S_);
  for (int e = 0; e < T_; ++e)
    a.diag(e) = Eigen::Map<const Eigen::MatrixXd>(
        diag_.data() + std::size_t(e) * S_ * S_, S_, S_);
  for (int e = 0; e < T_; ++e)
    for (int k = 0; k < 3; ++k) {
      const int nb = neighbor_[e][k];
      if (nb < 0) continue;
      const std::vector<int>& zn = face_nodes_[zface_[e][k]];
      Eigen::MatrixXd& block = a.off(e, nb);
      const double* slab = slab_at(e, k);
      if (row_is_support_[e][k]) {
        for (int i = 0; i < S_; ++i)
          for (int j = 0; j < Se_; ++j)
            block(i, zn[j]) = slab[std::size_t(i) * Se_ + j];
      } else {
        for (int j = 0; j < Se_; ++j)
          for (int i = 0; i < S_; ++i)
            block(zn[j], i) = slab[std::size_t(j) * S_ + i];
      }
    }
  return a;
}

void CdgCompactMatrix::matvec(const double* x, double* y) const {
#pragma omp parallel for schedule(static)
  for (int e = 0; e < T_; ++e) {
    Eigen::Map<const Eigen::MatrixXd> de(
        diag_.data() + std::size_t(e) * S_ * S_, S_, S_);
    Eigen::Map<const Eigen::VectorXd> xe(x + std::size_t(e) * S_, S_);
    Eigen::Map<Eigen::VectorXd> ye(y + std::size_t(e) * S_, S_);
    ye.noalias() = de * xe;
    for (int k = 0; k < 3; ++k) {
      const int nb = neighbor_[e][k];
      if (nb < 0) continue;
      const std::vector<int>& zn = face_nodes_[zface_[e][k]];
      const double* slab = slab_at(e, k);
      const double* xn = x + std::size_t(nb) * S_;
      if (row_is_support_[e][k]) {
        for (int i = 0; i < S_; ++i) {
          double acc = 0.0;
          for (int j = 0; j < Se_; ++j)
            acc += slab[std::size_t(i) * Se_ + j] * xn[zn[j]];
          ye[i] += acc;
        }
      } else {
        for (int j = 0; j < Se_; ++j) {
          double acc = 0.0;
          for (int i = 0; i < S_; ++i)
            acc += slab[std::size_t(j) * S_ + i] * xn[i];
          ye[zn[j]] += acc;
        }
      }
    }
  }
}

Eigen::VectorXd CdgCompactMatrix::apply(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y(rows());
  matvec(x.data(), y.data());
  return y;
}

std::int64_t CdgCompactMatrix::stored_doubles() const {
  std::int64_t used = std::int64_t(T_) * S_ * S_;
  for (int e = 0; e < T_; ++e)
    for (int k = 0; k < 3; ++k)
      if (neighbor_[e][k] >= 0) used += std::int64_t(S_) * Se_;
  return used;
}

}  // namespace cdglab
