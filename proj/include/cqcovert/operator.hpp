#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "cqcovert/errors.hpp"

namespace cqcovert {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kHermitianTolerance = 1e-12;
inline constexpr double kPsdTolerance = 1e-10;
inline constexpr double kTraceTolerance = 1e-10;
inline constexpr double kDefaultRankTolerance = 1e-10;
// Eigenvalues inside [-kZeroWindow, kZeroWindow] are treated as zero by the
// sign projections.
inline constexpr double kZeroWindow = 1e-12;
inline constexpr double kClusterTolerance = 1e-9;
inline constexpr std::size_t kDefaultDimensionCap = 16384;

// Maximum matrix dimension any tensor construction may produce. Reads
// CQCOVERT_DIM_CAP on every call; falls back to kDefaultDimensionCap.
std::size_t dimension_cap();

// A square complex matrix equal to its conjugate transpose.
class HermitianMatrix {
 public:
  // Validates squareness and hermiticity (max |A_ij - conj(A_ji)| <= 1e-12),
  // then stores the exactly symmetrized matrix.
  explicit HermitianMatrix(const Matrix& entries);

  // For matrices produced by trusted algebra where only rounding noise can
  // break symmetry; no validation, symmetrizes.
  static HermitianMatrix symmetrized(const Matrix& entries);
  static HermitianMatrix zero(Index dim);
  static HermitianMatrix identity(Index dim);
  static HermitianMatrix diagonal(const RealVector& diag);

  Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  double trace() const { return m_.trace().real(); }

  HermitianMatrix operator+(const HermitianMatrix& other) const;
  HermitianMatrix operator-(const HermitianMatrix& other) const;
  HermitianMatrix operator*(double s) const;

 private:
  struct Trusted {};
  HermitianMatrix(Matrix m, Trusted) : m_(std::move(m)) {}
  Matrix m_;
};

// Eigenvalues sorted descending, eigenvectors as columns in the same order.
struct Spectrum {
  RealVector values;
  Matrix vectors;

  Index dim() const { return values.size(); }
  Matrix reconstruct() const;
};

Spectrum eigh(const HermitianMatrix& a);
// Eigenvalues only, descending. Cheaper than eigh for large matrices.
RealVector eigvalsh(const HermitianMatrix& a);

// Unit-trace positive semidefinite Hermitian matrix. Immutable; copies share
// storage.
class DensityOperator {
 public:
  DensityOperator(const HermitianMatrix& m, double rank_tolerance = kDefaultRankTolerance);

  // Trusted construction from an already-valid spectral decomposition. The
  // second form takes the matrix as well when it is known exactly.
  static DensityOperator from_spectrum(Spectrum spectrum,
                                       double rank_tolerance = kDefaultRankTolerance);
  static DensityOperator from_parts(HermitianMatrix m, Spectrum spectrum,
                                    double rank_tolerance = kDefaultRankTolerance);

  Index dim() const { return data_->matrix.dim(); }
  const HermitianMatrix& hermitian() const { return data_->matrix; }
  const Matrix& matrix() const { return data_->matrix.matrix(); }
  const Spectrum& spectrum() const { return data_->spectrum; }
  double rank_tolerance() const { return data_->rank_tolerance; }
  Index rank() const;

 private:
  struct Data {
    HermitianMatrix matrix;
    Spectrum spectrum;
    double rank_tolerance;
  };
  explicit DensityOperator(std::shared_ptr<const Data> data) : data_(std::move(data)) {}
  std::shared_ptr<const Data> data_;
};

DensityOperator make_density(const Matrix& entries, double rank_tolerance = kDefaultRankTolerance);

// Orthogonal projector P = P^2 = P^dagger.
class Projector {
 public:
  // Projector onto the span of the given orthonormal columns.
  static Projector onto_columns(const Matrix& orthonormal_columns, Index dim);
  // Validates P^2 = P within 1e-9 Frobenius.
  explicit Projector(const HermitianMatrix& p);

  Index dim() const { return p_.dim(); }
  const HermitianMatrix& hermitian() const { return p_; }
  const Matrix& matrix() const { return p_.matrix(); }
  Index rank() const { return rank_; }
  Projector complement() const;

 private:
  Projector(HermitianMatrix p, Index rank) : p_(std::move(p)), rank_(rank) {}
  HermitianMatrix p_;
  Index rank_;
};

Matrix kron(const Matrix& a, const Matrix& b);

// Subsystem order is channel-use major: the left factor is use 1.
DensityOperator tensor(const DensityOperator& a, const DensityOperator& b,
                       std::size_t cap = dimension_cap());
DensityOperator kron_power(const DensityOperator& a, int n, std::size_t cap = dimension_cap());

enum class Subsystem { A, B };
DensityOperator partial_trace(const DensityOperator& joint, Index dim_a, Index dim_b,
                              Subsystem keep);

Projector support_projector(const DensityOperator& a);

namespace fn {
struct Log {};
struct Pow {
  double exponent;
};
struct Pinv {};
struct SqrtPinv {};
}  // namespace fn
using MatrixFunction = std::variant<fn::Log, fn::Pow, fn::Pinv, fn::SqrtPinv>;

// Pseudo-function convention: f is applied to eigenvalues above
// rank_tolerance and every other eigenvalue maps to 0.
HermitianMatrix matrix_function(const HermitianMatrix& a, const MatrixFunction& f,
                                double rank_tolerance = kDefaultRankTolerance);
HermitianMatrix matrix_function(const Spectrum& s, const MatrixFunction& f,
                                double rank_tolerance = kDefaultRankTolerance);

// {A >= 0} (strict = false) or {A > 0} (strict = true).
Projector spectral_projection_nonneg(const HermitianMatrix& a, bool strict);
// {A < 0} (strict = true) or {A <= 0} (strict = false). Complements the
// nonnegative projection with the opposite strictness.
Projector spectral_projection_negative(const HermitianMatrix& a, bool strict);

// Groups descending-sorted eigenvalues into clusters of numerically equal
// values: neighbours merge when their gap is within rel_tol of the larger
// magnitude, or within abs_floor.
std::vector<std::vector<Index>> eigenvalue_clusters(const RealVector& sorted_desc,
                                                    double rel_tol = kClusterTolerance,
                                                    double abs_floor = 0.0);

// E_A(B) = sum_i E_i B E_i over the eigenspace projectors E_i of A.
HermitianMatrix pinching(const HermitianMatrix& a, const HermitianMatrix& b);

// Tr{A B} for Hermitian A, B without forming the product.
double trace_product(const Matrix& a, const Matrix& b);

}  // namespace cqcovert
