#include "cargo/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace cargo {

namespace {

void require_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) {
    throw InvalidArgument(std::string(what) + ": matrix has non-finite entries");
  }
}

std::string condition_report(const SymMatrix& z) {
  const auto& d = z.dense();
  std::ostringstream os;
  os << "p=" << z.dim() << " |Z|_F=" << d.norm() << " max|Z_ij|=" << d.cwiseAbs().maxCoeff()
     << " diag range=[" << d.diagonal().minCoeff() << ", " << d.diagonal().maxCoeff() << "]";
  return os.str();
}

}  // namespace

SymMatrix::SymMatrix(std::size_t dim) : m_(Eigen::MatrixXd::Zero(dim, dim)) {}

SymMatrix SymMatrix::identity(std::size_t dim) {
  SymMatrix out(dim);
  out.m_.setIdentity();
  return out;
}

SymMatrix SymMatrix::diagonal(std::span<const double> values) {
  SymMatrix out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out.set(i, i, values[i]);
  return out;
}

SymMatrix SymMatrix::symmetrized(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) {
    throw DimensionMismatch("symmetric matrix must be square, got " + std::to_string(m.rows()) +
                            "x" + std::to_string(m.cols()));
  }
  require_finite(m, "SymMatrix");
  SymMatrix out;
  out.m_ = 0.5 * (m + m.transpose());
  return out;
}

SymMatrix SymMatrix::from_dense(const Eigen::MatrixXd& m, double tol) {
  if (m.rows() != m.cols()) {
    throw DimensionMismatch("symmetric matrix must be square, got " + std::to_string(m.rows()) +
                            "x" + std::to_string(m.cols()));
  }
  require_finite(m, "SymMatrix");
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > tol) {
    std::ostringstream os;
    os << "matrix is not symmetric: max |Z_ij - Z_ji| = " << asym << " > " << tol;
    throw InvalidArgument(os.str());
  }
  return symmetrized(m);
}

Eigen::Index SymMatrix::index(std::size_t i) const {
  if (i >= dim()) {
    throw InvalidArgument("index " + std::to_string(i) + " out of range for dim " +
                          std::to_string(dim()));
  }
  return static_cast<Eigen::Index>(i);
}

void SymMatrix::set(std::size_t i, std::size_t j, double value) {
  if (!std::isfinite(value)) throw InvalidArgument("SymMatrix::set: non-finite value");
  m_(index(i), index(j)) = value;
  m_(index(j), index(i)) = value;
}

void SymMatrix::add(std::size_t i, std::size_t j, double value) {
  set(i, j, (*this)(i, j) + value);
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& other) {
  require_same_dim(*this, other, "operator+=");
  m_ += other.m_;
  return *this;
}

SymMatrix& SymMatrix::operator-=(const SymMatrix& other) {
  require_same_dim(*this, other, "operator-=");
  m_ -= other.m_;
  return *this;
}

SymMatrix& SymMatrix::operator*=(double s) {
  m_ *= s;
  return *this;
}

SymMatrix SpectralDecomposition::reconstruct(const Eigen::VectorXd& values) const {
  if (values.size() != eigvals.size()) {
    throw DimensionMismatch("reconstruct: spectrum length does not match decomposition");
  }
  const Eigen::MatrixXd scaled = eigvecs * values.asDiagonal();
  // Product of V diag(z) and V^T is symmetric up to rounding; symmetrize.
  return SymMatrix::symmetrized(scaled * eigvecs.transpose());
}

SpectralDecomposition eigh(const SymMatrix& z) {
  require_finite(z.dense(), "eigh");
  SpectralDecomposition out;
  if (z.dim() == 0) return out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(z.dense(), Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) {
    throw EigensolverFailure("symmetric eigensolver did not converge: " + condition_report(z));
  }
  out.eigvals = es.eigenvalues();
  out.eigvecs = es.eigenvectors();
  return out;
}

double min_eig(const SymMatrix& z) {
  const auto dec = eigh(z);
  if (dec.eigvals.size() == 0) throw InvalidArgument("min_eig: empty matrix");
  return dec.eigvals(0);
}

double max_eig(const SymMatrix& z) {
  const auto dec = eigh(z);
  if (dec.eigvals.size() == 0) throw InvalidArgument("max_eig: empty matrix");
  return dec.eigvals(dec.eigvals.size() - 1);
}

Eigen::MatrixXd cholesky_lower(const SymMatrix& z) {
  const auto& d = z.dense();
  if (d.rows() == 0) throw InvalidArgument("cholesky: empty matrix");
  const double pivot_tol = 1e-12 * d.diagonal().cwiseAbs().maxCoeff();
  Eigen::LLT<Eigen::MatrixXd> llt(d);
  Eigen::MatrixXd l = llt.matrixL();
  // LLT only rejects nonpositive pivots; squared diagonal entries of L are
  // the pivots, which must also clear the relative tolerance.
  for (Eigen::Index j = 0; j < d.rows(); ++j) {
    const double pivot = l(j, j) * l(j, j);
    if (llt.info() != Eigen::Success || !(pivot > pivot_tol)) {
      std::ostringstream os;
      os << "Cholesky failed at pivot " << j << " (tolerance " << pivot_tol << "; "
         << condition_report(z) << ")";
      throw NotPositiveDefinite(os.str());
    }
  }
  return l;
}

bool is_positive_definite(const SymMatrix& z) {
  try {
    (void)cholesky_lower(z);
    return true;
  } catch (const NotPositiveDefinite&) {
    return false;
  }
}

double logdet_pd(const SymMatrix& z) {
  const Eigen::MatrixXd l = cholesky_lower(z);
  return 2.0 * l.diagonal().array().log().sum();
}

SymMatrix inverse_pd(const SymMatrix& z) {
  const Eigen::MatrixXd l = cholesky_lower(z);
  const auto n = l.rows();
  Eigen::MatrixXd inv = Eigen::MatrixXd::Identity(n, n);
  l.triangularView<Eigen::Lower>().solveInPlace(inv);
  l.transpose().triangularView<Eigen::Upper>().solveInPlace(inv);
  return SymMatrix::symmetrized(inv);
}

double trace_prod(const SymMatrix& a, const SymMatrix& x) {
  require_same_dim(a, x, "trace_prod");
  // Summation order is fixed by the loop, and a_ij x_ij = x_ij a_ij, so the
  // result is symmetric in its arguments bit for bit.
  const auto& da = a.dense();
  const auto& dx = x.dense();
  double sum = 0.0;
  for (Eigen::Index j = 0; j < da.cols(); ++j) {
    for (Eigen::Index i = 0; i < da.rows(); ++i) sum += da(i, j) * dx(i, j);
  }
  return sum;
}

double frobenius_norm(const SymMatrix& a) { return a.dense().norm(); }

double frobenius_distance(const SymMatrix& a, const SymMatrix& b) {
  require_same_dim(a, b, "frobenius_distance");
  return (a.dense() - b.dense()).norm();
}

void require_same_dim(const SymMatrix& a, const SymMatrix& b, const char* what) {
  if (a.dim() != b.dim()) {
    throw DimensionMismatch(std::string(what) + ": dimension mismatch (" +
                            std::to_string(a.dim()) + " vs " + std::to_string(b.dim()) + ")");
  }
}

SymMatrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open matrix file " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": not a number: '" + cell +
                         "'");
      }
    }
    rows.push_back(std::move(row));
  }
  const std::size_t p = rows.size();
  if (p == 0) throw ParseError(path.string() + ": empty matrix file");
  Eigen::MatrixXd m(p, p);
  for (std::size_t i = 0; i < p; ++i) {
    if (rows[i].size() != p) {
      throw ParseError(path.string() + ": row " + std::to_string(i + 1) + " has " +
                       std::to_string(rows[i].size()) + " columns, expected " + std::to_string(p));
    }
    for (std::size_t j = 0; j < p; ++j) m(i, j) = rows[i][j];
  }
  return SymMatrix::from_dense(m, 1e-9);
}

void write_matrix_csv(const SymMatrix& z, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write matrix file " + path.string());
  out << std::setprecision(17);
  for (std::size_t i = 0; i < z.dim(); ++i) {
    for (std::size_t j = 0; j < z.dim(); ++j) {
      if (j) out << ',';
      out << z(i, j);
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing matrix file " + path.string());
}

}  // namespace cargo
