#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "cdglab/mesh.hpp"

namespace cdglab {

class NodalBasis;
struct SwitchAssignment;

// Symmetric-structure block sparse matrix: T diagonal blocks of size S x S
// plus, per block row, a column-sorted list of off-diagonal S x S blocks.
// Insertion order does not affect the stored layout, and the matrix-vector
// product accumulates each row in ascending column order, so results are
// reproducible bit for bit regardless of thread count.
class BlockSparseMatrix {
 public:
  BlockSparseMatrix() = default;
  BlockSparseMatrix(int num_blocks, int block_size);

  int num_blocks() const { return T_; }
  int block_size() const { return S_; }
  std::int64_t rows() const { return std::int64_t(T_) * S_; }

  Eigen::MatrixXd& diag(int e) { return diag_[e]; }
  const Eigen::MatrixXd& diag(int e) const { return diag_[e]; }

  // Find-or-insert the block at (row, col), keeping the row list sorted.
  Eigen::MatrixXd& off(int row, int col);
  // nullptr when the block is absent.
  const Eigen::MatrixXd* find_off(int row, int col) const;
  const std::vector<std::pair<int, Eigen::MatrixXd>>& row_blocks(
      int row) const {
    return off_[row];
  }

  std::int64_t stored_blocks() const;  // diagonal + off-diagonal

  // y = A x (row-parallel, deterministic).
  void matvec(const double* x, double* y) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;

  Eigen::MatrixXd to_dense() const;
  double inf_norm() const;  // max absolute row sum
  // max |A_ij - A_ji| over all stored entries (blocks missing their
  // transposed partner count with the full entry magnitude).
  double symmetry_error() const;

  // "row col value" per line, zero-based indices, 17 significant digits,
  // diagonal-block entries first, then off-diagonal blocks by (row, col).
  void write_coordinate(std::ostream& out) const;
  // Portable bitmap (P1) of the scalar nonzero pattern: 1 = stored entry
  // with a nonzero value.
  void write_pbm(std::ostream& out) const;

 private:
  int T_ = 0, S_ = 0;
  std::vector<Eigen::MatrixXd> diag_;
  std::vector<std::vector<std::pair<int, Eigen::MatrixXd>>> off_;
};

// Block diagonal matrix with a Cholesky solve per block (mass matrices).
class BlockDiagMatrix {
 public:
  BlockDiagMatrix() = default;
  BlockDiagMatrix(int num_blocks, int block_size);

  int num_blocks() const { return int(blocks_.size()); }
  int block_size() const { return S_; }
  Eigen::MatrixXd& block(int e) { return blocks_[e]; }
  const Eigen::MatrixXd& block(int e) const { return blocks_[e]; }

  void factorize();  // throws std::runtime_error if a block is not SPD
  bool factorized() const { return !llt_.empty(); }
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;

 private:
  int S_ = 0;
  std::vector<Eigen::MatrixXd> blocks_;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> llt_;
};

// Compact storage exploiting the coupling structure of the compact scheme:
// along every interior face exactly one side (the switch-one "support"
// element W) carries the flux correction, and the cross block A[W, Z]
// is nonzero only on the face-node columns of the switch-zero element Z
// (and A[Z, W] only on those face-node rows).  Per element this stores the
// S x S diagonal block plus one S x Se slab per local face.
class CdgCompactMatrix {
 public:
  // Restructures a block sparse matrix; throws std::invalid_argument if the
  // matrix couples non-adjacent elements or has entries outside the
  // face-node footprint (i.e. was not assembled by the compact scheme).
  static CdgCompactMatrix pack(const BlockSparseMatrix& a, const Mesh& mesh,
                               const NodalBasis& basis,
                               const SwitchAssignment& sw);

  BlockSparseMatrix unpack() const;  // exact (bitwise) reconstruction

  void matvec(const double* x, double* y) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;

  std::int64_t rows() const { return std::int64_t(T_) * S_; }
  // doubles held for the diagonal blocks and the per-face slabs in use
  std::int64_t stored_doubles() const;

 private:
  int T_ = 0, S_ = 0, Se_ = 0;
  std::vector<double> diag_;             // T * S * S
  std::vector<double> slab_;             // T * 3 * S * Se
  std::vector<std::array<int, 3>> neighbor_;        // -1 when no interior face
  std::vector<std::array<signed char, 3>> zface_;   // switch-zero local face
  std::vector<std::array<signed char, 3>> row_is_support_;
  std::array<std::vector<int>, 3> face_nodes_;      // copied from the basis

  double* slab_at(int e, int k) {
    return slab_.data() + (std::size_t(e) * 3 + k) * S_ * Se_;
  }
  const double* slab_at(int e, int k) const {
    return slab_.data() + (std::size_t(e) * 3 + k) * S_ * Se_;
  }
};

}  // namespace cdglab
