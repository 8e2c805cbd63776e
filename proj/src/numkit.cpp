// SPDX-License-Identifier: Apache-2.0
#include "uwmmse/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "uwmmse/error.hpp"

namespace uwmmse {

namespace {

constexpr double kJacobiTolerance = 1e-12;
constexpr int kJacobiMaxSweeps = 100;

double off_diagonal_norm(const CMatrix& a) {
  double s = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c)
      if (r != c) s += std::norm(a(r, c));
  return std::sqrt(s);
}

void require_same_shape(const CMatrix& a, const CMatrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(ErrorCode::kDimension,
                std::string(op) + ": shape mismatch " + std::to_string(a.rows()) +
                    "x" + std::to_string(a.cols()) + " vs " +
                    std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

}  // namespace

CMatrix::CMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, cplx{0.0, 0.0}) {}

CMatrix::CMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (data_.size() != rows * cols)
    throw Error(ErrorCode::kDimension,
                "CMatrix: " + std::to_string(data_.size()) +
                    " entries for a " + std::to_string(rows) + "x" +
                    std::to_string(cols) + " matrix");
}

CMatrix CMatrix::identity(std::size_t n) {
  CMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

CMatrix CMatrix::adjoint() const {
  CMatrix out(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) out(c, r) = std::conj((*this)(r, c));
  return out;
}

CMatrix& CMatrix::operator+=(const CMatrix& other) {
  require_same_shape(*this, other, "operator+=");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
  return *this;
}

CMatrix& CMatrix::operator-=(const CMatrix& other) {
  require_same_shape(*this, other, "operator-=");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
  return *this;
}

CMatrix& CMatrix::operator*=(cplx s) {
  for (auto& x : data_) x *= s;
  return *this;
}

CMatrix matmul(const CMatrix& a, const CMatrix& b) {
  if (a.cols() != b.rows())
    throw Error(ErrorCode::kDimension, "matmul: inner dimensions differ");
  CMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const cplx aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

cplx dot_conj(std::span<const cplx> a, std::span<const cplx> b) {
  cplx s{0.0, 0.0};
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t k = 0; k < n; ++k) s += std::conj(a[k]) * b[k];
  return s;
}

double frob_norm(const CMatrix& m) { return std::sqrt(trace_gram(m)); }

double trace_gram(const CMatrix& v) {
  double s = 0.0;
  for (const cplx& x : v.entries()) s += std::norm(x);
  return s;
}

double max_abs_diff(const CMatrix& a, const CMatrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    d = std::max(d, std::abs(a.entries()[k] - b.entries()[k]));
  return d;
}

double hermitian_defect(const CMatrix& a) {
  if (!a.square()) throw Error(ErrorCode::kDimension, "hermitian_defect: non-square");
  double d = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = r; c < a.cols(); ++c)
      d = std::max(d, std::abs(a(r, c) - std::conj(a(c, r))));
  return d;
}

EigResult herm_eig(const CMatrix& input) {
  if (!input.square())
    throw Error(ErrorCode::kDimension,
                "herm_eig: expected a square matrix, got " +
                    std::to_string(input.rows()) + "x" + std::to_string(input.cols()));
  const std::size_t n = input.rows();

  // Work on the Hermitian part so that tiny asymmetries from roundoff never
  // leak into the rotations.
  CMatrix a(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    a(r, r) = input(r, r).real();
    for (std::size_t c = r + 1; c < n; ++c) {
      const cplx h = 0.5 * (input(r, c) + std::conj(input(c, r)));
      a(r, c) = h;
      a(c, r) = std::conj(h);
    }
  }
  CMatrix u = CMatrix::identity(n);
  const double threshold = kJacobiTolerance * frob_norm(a);

  int sweep = 0;
  while (off_diagonal_norm(a) > threshold) {
    if (++sweep > kJacobiMaxSweeps)
      throw Error(ErrorCode::kConvergence,
                  "herm_eig: no convergence after " +
                      std::to_string(kJacobiMaxSweeps) + " sweeps");
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double r = std::abs(a(p, q));
        if (r == 0.0) continue;
        // Strip the phase of a_pq, then apply the real symmetric rotation.
        const cplx phase = a(p, q) / r;  // e^{iφ}
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double theta = (aqq - app) / (2.0 * r);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // G = diag(1, e^{-iφ}) · [[c, s], [-s, c]] restricted to (p, q).
        const cplx gpp = c;
        const cplx gpq = s;
        const cplx gqp = -s * std::conj(phase);
        const cplx gqq = c * std::conj(phase);

        for (std::size_t k = 0; k < n; ++k) {  // A ← A G
          const cplx akp = a(k, p);
          const cplx akq = a(k, q);
          a(k, p) = akp * gpp + akq * gqp;
          a(k, q) = akp * gpq + akq * gqq;
        }
        for (std::size_t k = 0; k < n; ++k) {  // A ← Gᴴ A
          const cplx apk = a(p, k);
          const cplx aqk = a(q, k);
          a(p, k) = std::conj(gpp) * apk + std::conj(gqp) * aqk;
          a(q, k) = std::conj(gpq) * apk + std::conj(gqq) * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
        for (std::size_t k = 0; k < n; ++k) {  // U ← U G
          const cplx ukp = u(k, p);
          const cplx ukq = u(k, q);
          u(k, p) = ukp * gpp + ukq * gqp;
          u(k, q) = ukp * gpq + ukq * gqq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return a(i, i).real() < a(j, j).real();
  });

  EigResult out{CMatrix(n, n), std::vector<double>(n)};
  for (std::size_t j = 0; j < n; ++j) {
    out.eigvals[j] = a(order[j], order[j]).real();
    for (std::size_t k = 0; k < n; ++k) out.eigvecs(k, j) = u(k, order[j]);
  }
  return out;
}

}  // namespace uwmmse
