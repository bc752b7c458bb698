#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "spinid/errors.hpp"
#include "spinid/scalar.hpp"

namespace spinid {

// Almost-block-diagonal matrix of a two-point collocation system with n nodes
// and state dimension m. Row block i < n-1 couples y_i and y_{i+1}:
//   left[i] * y_i + right[i] * y_{i+1}
// and the trailing boundary block couples the end points:
//   bc_left * y_0 + bc_right * y_{n-1}.
// Global row order: interval blocks first, boundary block last.
template <class Scalar>
struct AbdMatrix {
  Index block_size = 0;
  std::vector<Mat<Scalar>> left;
  std::vector<Mat<Scalar>> right;
  Mat<Scalar> bc_left;
  Mat<Scalar> bc_right;

  AbdMatrix() = default;
  AbdMatrix(Index m, Index nodes)
      : block_size(m),
        left(nodes - 1, Mat<Scalar>::Zero(m, m)),
        right(nodes - 1, Mat<Scalar>::Zero(m, m)),
        bc_left(Mat<Scalar>::Zero(m, m)),
        bc_right(Mat<Scalar>::Zero(m, m)) {}

  Index num_nodes() const { return static_cast<Index>(left.size()) + 1; }
  Index rows() const { return block_size * num_nodes(); }

  Mat<Scalar> to_dense() const {
    const Index m = block_size;
    const Index n = num_nodes();
    Mat<Scalar> a = Mat<Scalar>::Zero(rows(), rows());
    for (Index i = 0; i + 1 < n; ++i) {
      a.block(i * m, i * m, m, m) = left[i];
      a.block(i * m, (i + 1) * m, m, m) = right[i];
    }
    a.block((n - 1) * m, 0, m, m) += bc_left;
    a.block((n - 1) * m, (n - 1) * m, m, m) += bc_right;
    return a;
  }

  Mat<Scalar> multiply(const Mat<Scalar>& x) const {
    const Index m = block_size;
    const Index n = num_nodes();
    Mat<Scalar> out(rows(), x.cols());
    for (Index i = 0; i + 1 < n; ++i) {
      out.middleRows(i * m, m) =
          left[i] * x.middleRows(i * m, m) + right[i] * x.middleRows((i + 1) * m, m);
    }
    out.middleRows((n - 1) * m, m) =
        bc_left * x.topRows(m) + bc_right * x.middleRows((n - 1) * m, m);
    return out;
  }

  double max_abs() const {
    double v = 0.0;
    for (const auto& b : left) v = std::max(v, b.cwiseAbs().maxCoeff());
    for (const auto& b : right) v = std::max(v, b.cwiseAbs().maxCoeff());
    v = std::max(v, bc_left.cwiseAbs().maxCoeff());
    v = std::max(v, bc_right.cwiseAbs().maxCoeff());
    return v;
  }
};

// Structured Gaussian elimination with partial pivoting for AbdMatrix.
//
// Column block j is eliminated from the only rows that touch it: the carried
// boundary rows and interval block j. Fill is confined to column block j+1 and
// the last column block, so storage and work are linear in the node count.
// The factorization is immutable and serves any number of right-hand sides.
template <class Scalar>
class AbdLu {
 public:
  explicit AbdLu(const AbdMatrix<Scalar>& a) : m_(a.block_size), n_(a.num_nodes()) {
    if (n_ < 2 || m_ < 1) throw Error("AbdLu: need at least two nodes");
    threshold_ = 64.0 * std::numeric_limits<double>::epsilon() * a.max_abs();

    Mat<Scalar> carry_cur = a.bc_left;
    Mat<Scalar> carry_last = a.bc_right;
    stages_.reserve(n_ - 1);
    for (Index j = 0; j + 1 < n_; ++j) {
      Mat<Scalar> w = Mat<Scalar>::Zero(2 * m_, 3 * m_);
      w.block(0, 0, m_, m_) = carry_cur;
      w.block(0, 2 * m_, m_, m_) = carry_last;
      w.block(m_, 0, m_, m_) = a.left[j];
      w.block(m_, m_, m_, m_) = a.right[j];
      if (j + 2 == n_) {
        // Next column block is the last one.
        w.middleCols(m_, m_) += w.rightCols(m_);
        w.rightCols(m_).setZero();
      }
      Stage st;
      st.swaps = eliminate(w, j * m_);
      st.lu = w.leftCols(m_);
      st.next = w.block(0, m_, m_, m_);
      st.last = w.block(0, 2 * m_, m_, m_);
      carry_cur = w.block(m_, m_, m_, m_);
      carry_last = w.block(m_, 2 * m_, m_, m_);
      stages_.push_back(std::move(st));
    }
    final_lu_ = carry_cur;
    final_swaps_ = eliminate(final_lu_, (n_ - 1) * m_);
  }

  Index rows() const { return m_ * n_; }

  Mat<Scalar> solve(const Mat<Scalar>& b) const {
    if (b.rows() != rows()) throw Error("AbdLu::solve: right-hand side has wrong row count");
    const Index k = b.cols();
    std::vector<Mat<Scalar>> z(stages_.size());
    Mat<Scalar> carry = b.bottomRows(m_);
    for (std::size_t j = 0; j < stages_.size(); ++j) {
      Mat<Scalar> stack(2 * m_, k);
      stack.topRows(m_) = carry;
      stack.bottomRows(m_) = b.middleRows(static_cast<Index>(j) * m_, m_);
      apply_lower(stages_[j].lu, stages_[j].swaps, stack);
      z[j] = stack.topRows(m_);
      carry = stack.bottomRows(m_);
    }
    apply_lower(final_lu_, final_swaps_, carry);

    Mat<Scalar> x(rows(), k);
    const Index last = (n_ - 1) * m_;
    x.middleRows(last, m_) = final_lu_.template triangularView<Eigen::Upper>().solve(carry);
    for (Index j = n_ - 2; j >= 0; --j) {
      const Stage& st = stages_[j];
      Mat<Scalar> r = z[j] - st.next * x.middleRows((j + 1) * m_, m_);
      if (j + 2 != n_) r -= st.last * x.middleRows(last, m_);
      x.middleRows(j * m_, m_) =
          st.lu.topRows(m_).template triangularView<Eigen::Upper>().solve(r);
    }
    return x;
  }

 private:
  struct Stage {
    Mat<Scalar> lu;
    std::vector<Index> swaps;
    Mat<Scalar> next;
    Mat<Scalar> last;
  };

  // Eliminates the first m_ columns of w in place: U above the diagonal,
  // multipliers below. Returns the pivot row chosen at each step.
  std::vector<Index> eliminate(Mat<Scalar>& w, Index global_col) const {
    std::vector<Index> swaps(m_);
    const Index rows = w.rows();
    for (Index k = 0; k < m_; ++k) {
      Index p = k;
      double best = std::abs(w(k, k));
      for (Index r = k + 1; r < rows; ++r) {
        if (std::abs(w(r, k)) > best) {
          best = std::abs(w(r, k));
          p = r;
        }
      }
      if (!(best > threshold_)) {
        throw SingularMatrixError(global_col + k, "collocation matrix is singular");
      }
      swaps[k] = p;
      // Multipliers stay where they were computed so that apply_lower can
      // replay swaps and eliminations step by step.
      if (p != k) w.row(k).tail(w.cols() - k).swap(w.row(p).tail(w.cols() - k));
      const Index tail = w.cols() - k - 1;
      for (Index r = k + 1; r < rows; ++r) {
        const Scalar l = w(r, k) / w(k, k);
        w(r, k) = l;
        if (l != Scalar(0)) w.row(r).tail(tail) -= l * w.row(k).tail(tail);
      }
    }
    return swaps;
  }

  void apply_lower(const Mat<Scalar>& lu, const std::vector<Index>& swaps,
                   Mat<Scalar>& z) const {
    for (Index k = 0; k < m_; ++k) {
      if (swaps[k] != k) z.row(k).swap(z.row(swaps[k]));
      for (Index r = k + 1; r < z.rows(); ++r) {
        const Scalar l = lu(r, k);
        if (l != Scalar(0)) z.row(r) -= l * z.row(k);
      }
    }
  }

  Index m_;
  Index n_;
  double threshold_ = 0.0;
  std::vector<Stage> stages_;
  Mat<Scalar> final_lu_;
  std::vector<Index> final_swaps_;
};

// Block-diagonal collection of independent factorizations, one per
// experiment, for the stacked multi-experiment sensitivity system.
template <class Scalar>
class BlockDiagonalSolver {
 public:
  void add(AbdLu<Scalar> block) { blocks_.push_back(std::move(block)); }
  std::size_t size() const { return blocks_.size(); }
  Mat<Scalar> solve(std::size_t k, const Mat<Scalar>& b) const { return blocks_.at(k).solve(b); }

 private:
  std::vector<AbdLu<Scalar>> blocks_;
};

using AbdMatrixd = AbdMatrix<double>;
using AbdLud = AbdLu<double>;

}  // namespace spinid
