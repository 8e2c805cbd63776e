// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace uwmmse {

using cplx = std::complex<double>;

/// Dense row-major complex matrix sized for beamforming problems (a handful
/// of antennas and users). Value type; copies are deep.
class CMatrix {
 public:
  CMatrix() = default;
  CMatrix(std::size_t rows, std::size_t cols);
  CMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> entries);

  static CMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool square() const noexcept { return rows_ == cols_; }

  cplx& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const cplx& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<cplx> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const cplx> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<cplx> entries() noexcept { return data_; }
  std::span<const cplx> entries() const noexcept { return data_; }

  CMatrix adjoint() const;

  CMatrix& operator+=(const CMatrix& other);
  CMatrix& operator-=(const CMatrix& other);
  CMatrix& operator*=(cplx s);

  friend CMatrix operator+(CMatrix a, const CMatrix& b) { return a += b; }
  friend CMatrix operator-(CMatrix a, const CMatrix& b) { return a -= b; }
  friend CMatrix operator*(CMatrix a, cplx s) { return a *= s; }
  friend CMatrix operator*(cplx s, CMatrix a) { return a *= s; }

  bool operator==(const CMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cplx> data_;
};

CMatrix matmul(const CMatrix& a, const CMatrix& b);

/// Σ conj(a_k) b_k.
cplx dot_conj(std::span<const cplx> a, std::span<const cplx> b);

double frob_norm(const CMatrix& m);

/// Tr(V Vᴴ); equal to frob_norm(V)² but accumulated directly.
double trace_gram(const CMatrix& v);

double max_abs_diff(const CMatrix& a, const CMatrix& b);

/// Largest |A_ij − conj(A_ji)|.
double hermitian_defect(const CMatrix& a);

struct EigResult {
  CMatrix eigvecs;              // unitary, columns are eigenvectors
  std::vector<double> eigvals;  // ascending
};

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Sweeps until the off-diagonal Frobenius mass drops to
/// 1e-12 ‖A‖_F; throws kConvergence after 100 sweeps and kDimension on a
/// non-square input. Only the upper triangle's Hermitian part is trusted,
/// so callers symmetrize first.
EigResult herm_eig(const CMatrix& a);

}  // namespace uwmmse
