#pragma once

// Dense symmetric linear algebra shared by every estimator in the library.

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>

#include "cargo/error.hpp"

namespace cargo {

// Dense symmetric p x p matrix. Every write is mirrored, so entry(i,j) and
// entry(j,i) are the same value bit for bit. Entries are always finite.
class SymMatrix {
public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t dim);

  static SymMatrix identity(std::size_t dim);
  static SymMatrix diagonal(std::span<const double> values);

  // Averages m with its transpose. Throws if m is not square or not finite.
  static SymMatrix symmetrized(const Eigen::MatrixXd& m);
  // Requires |m(i,j) - m(j,i)| <= tol for all pairs, then symmetrizes.
  static SymMatrix from_dense(const Eigen::MatrixXd& m, double tol = 1e-9);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }
  double operator()(std::size_t i, std::size_t j) const { return m_(index(i), index(j)); }
  void set(std::size_t i, std::size_t j, double value);
  void add(std::size_t i, std::size_t j, double value);

  const Eigen::MatrixXd& dense() const noexcept { return m_; }

  SymMatrix& operator+=(const SymMatrix& other);
  SymMatrix& operator-=(const SymMatrix& other);
  SymMatrix& operator*=(double s);
  friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
  friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
  friend SymMatrix operator*(SymMatrix a, double s) { return a *= s; }
  friend SymMatrix operator*(double s, SymMatrix a) { return a *= s; }

  bool operator==(const SymMatrix& other) const { return m_ == other.m_; }

private:
  Eigen::Index index(std::size_t i) const;
  Eigen::MatrixXd m_;
};

// Eigenvalues in nondecreasing order, eigenvectors as orthonormal columns.
struct SpectralDecomposition {
  Eigen::VectorXd eigvals;
  Eigen::MatrixXd eigvecs;

  // V diag(values) V^T for a caller-supplied spectrum.
  SymMatrix reconstruct(const Eigen::VectorXd& values) const;
  SymMatrix reconstruct() const { return reconstruct(eigvals); }
};

SpectralDecomposition eigh(const SymMatrix& z);
double min_eig(const SymMatrix& z);
double max_eig(const SymMatrix& z);

// Cholesky factor with the positive-definiteness rule used across the
// library: every pivot must exceed 1e-12 * max diagonal entry.
Eigen::MatrixXd cholesky_lower(const SymMatrix& z);
bool is_positive_definite(const SymMatrix& z);

double logdet_pd(const SymMatrix& z);
SymMatrix inverse_pd(const SymMatrix& z);

// sum_ij a_ij x_ij, which equals tr(A X) for symmetric arguments.
double trace_prod(const SymMatrix& a, const SymMatrix& x);
double frobenius_norm(const SymMatrix& a);
double frobenius_distance(const SymMatrix& a, const SymMatrix& b);

void require_same_dim(const SymMatrix& a, const SymMatrix& b, const char* what);

// Plain CSV, p rows by p columns, no header. Reading rejects asymmetry above
// 1e-9 and stores (Z + Z^T) / 2.
SymMatrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const SymMatrix& z, const std::filesystem::path& path);

}  // namespace cargo
