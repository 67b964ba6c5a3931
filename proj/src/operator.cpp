#include "cqcovert/operator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <sstream>

#include <unsupported/Eigen/KroneckerProduct>

namespace cqcovert {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotHermitian: return "NotHermitian";
    case ErrorKind::NotPSD: return "NotPSD";
    case ErrorKind::TraceNotOne: return "TraceNotOne";
    case ErrorKind::NotSquare: return "NotSquare";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::DimensionCapExceeded: return "DimensionCapExceeded";
    case ErrorKind::SupportViolation: return "SupportViolation";
    case ErrorKind::SupportViolationClassical: return "SupportViolationClassical";
    case ErrorKind::InvalidPovm: return "InvalidPovm";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::AlphaOutOfRange: return "AlphaOutOfRange";
    case ErrorKind::IndexMismatch: return "IndexMismatch";
    case ErrorKind::WrongRegime: return "WrongRegime";
    case ErrorKind::ZeroChiSquared: return "ZeroChiSquared";
    case ErrorKind::DegenerateChannel: return "DegenerateChannel";
    case ErrorKind::AlphaOutOfRadius: return "AlphaOutOfRadius";
    case ErrorKind::NoLeakage: return "NoLeakage";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

std::size_t dimension_cap() {
  if (const char* env = std::getenv("CQCOVERT_DIM_CAP")) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return kDefaultDimensionCap;
}

// ---------------------------------------------------------------------------
// HermitianMatrix

HermitianMatrix::HermitianMatrix(const Matrix& entries) {
  if (entries.rows() != entries.cols() || entries.rows() < 1) {
    throw Error(ErrorKind::NotSquare, "matrix must be square with dim >= 1");
  }
  double dev = (entries - entries.adjoint()).cwiseAbs().maxCoeff();
  if (dev > kHermitianTolerance) {
    std::ostringstream os;
    os << "max |A - A^dagger| = " << dev;
    throw Error(ErrorKind::NotHermitian, os.str());
  }
  m_ = 0.5 * (entries + entries.adjoint());
}

HermitianMatrix HermitianMatrix::symmetrized(const Matrix& entries) {
  return HermitianMatrix(Matrix(0.5 * (entries + entries.adjoint())), Trusted{});
}

HermitianMatrix HermitianMatrix::zero(Index dim) {
  return HermitianMatrix(Matrix::Zero(dim, dim), Trusted{});
}

HermitianMatrix HermitianMatrix::identity(Index dim) {
  return HermitianMatrix(Matrix::Identity(dim, dim), Trusted{});
}

HermitianMatrix HermitianMatrix::diagonal(const RealVector& diag) {
  Matrix m = Matrix::Zero(diag.size(), diag.size());
  m.diagonal() = diag.cast<Complex>();
  return HermitianMatrix(std::move(m), Trusted{});
}

HermitianMatrix HermitianMatrix::operator+(const HermitianMatrix& other) const {
  if (dim() != other.dim()) throw Error(ErrorKind::DimensionMismatch, "operator+");
  return HermitianMatrix(Matrix(m_ + other.m_), Trusted{});
}

HermitianMatrix HermitianMatrix::operator-(const HermitianMatrix& other) const {
  if (dim() != other.dim()) throw Error(ErrorKind::DimensionMismatch, "operator-");
  return HermitianMatrix(Matrix(m_ - other.m_), Trusted{});
}

HermitianMatrix HermitianMatrix::operator*(double s) const {
  return HermitianMatrix(Matrix(m_ * s), Trusted{});
}

// ---------------------------------------------------------------------------
// Spectrum

Matrix Spectrum::reconstruct() const {
  return vectors * values.cast<Complex>().asDiagonal() * vectors.adjoint();
}

namespace {

bool is_diagonal(const Matrix& m) {
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      if (i != j && m(i, j) != Complex(0.0, 0.0)) return false;
    }
  }
  return true;
}

Spectrum sorted_descending(const RealVector& values, const Matrix& vectors) {
  std::vector<Index> order(values.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return values(a) > values(b); });
  Spectrum s;
  s.values.resize(values.size());
  s.vectors.resize(vectors.rows(), vectors.cols());
  for (Index k = 0; k < values.size(); ++k) {
    s.values(k) = values(order[k]);
    s.vectors.col(k) = vectors.col(order[k]);
  }
  return s;
}

}  // namespace

Spectrum eigh(const HermitianMatrix& a) {
  const Matrix& m = a.matrix();
  if (is_diagonal(m)) {
    return sorted_descending(m.diagonal().real(), Matrix::Identity(m.rows(), m.cols()));
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::InvalidArgument, "eigendecomposition did not converge");
  }
  // Eigen returns ascending order; reverse it.
  Spectrum s;
  s.values = solver.eigenvalues().reverse();
  s.vectors = solver.eigenvectors().rowwise().reverse();
  return s;
}

RealVector eigvalsh(const HermitianMatrix& a) {
  const Matrix& m = a.matrix();
  RealVector v;
  if (is_diagonal(m)) {
    v = m.diagonal().real();
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
      throw Error(ErrorKind::InvalidArgument, "eigendecomposition did not converge");
    }
    v = solver.eigenvalues();
  }
  std::sort(v.data(), v.data() + v.size(), std::greater<double>());
  return v;
}

// ---------------------------------------------------------------------------
// DensityOperator

DensityOperator make_density(const Matrix& entries, double rank_tolerance) {
  return DensityOperator(HermitianMatrix(entries), rank_tolerance);
}

DensityOperator::DensityOperator(const HermitianMatrix& m, double rank_tolerance) {
  if (rank_tolerance < 0.0) {
    throw Error(ErrorKind::InvalidArgument, "rank tolerance must be nonnegative");
  }
  Spectrum s = eigh(m);
  double min_eig = s.values(s.dim() - 1);
  if (min_eig < -kPsdTolerance) {
    std::ostringstream os;
    os << "smallest eigenvalue " << min_eig;
    throw Error(ErrorKind::NotPSD, os.str());
  }
  double tr = m.trace();
  if (std::abs(tr - 1.0) > kTraceTolerance) {
    std::ostringstream os;
    os << "trace " << tr;
    throw Error(ErrorKind::TraceNotOne, os.str());
  }
  bool clipped = false;
  for (Index i = 0; i < s.dim(); ++i) {
    if (s.values(i) < rank_tolerance && s.values(i) != 0.0) {
      s.values(i) = 0.0;
      clipped = true;
    }
  }
  HermitianMatrix stored = clipped ? HermitianMatrix::symmetrized(s.reconstruct()) : m;
  data_ = std::make_shared<const Data>(Data{std::move(stored), std::move(s), rank_tolerance});
}

DensityOperator DensityOperator::from_spectrum(Spectrum spectrum, double rank_tolerance) {
  HermitianMatrix m = HermitianMatrix::symmetrized(spectrum.reconstruct());
  return from_parts(std::move(m), std::move(spectrum), rank_tolerance);
}

DensityOperator DensityOperator::from_parts(HermitianMatrix m, Spectrum spectrum,
                                            double rank_tolerance) {
  return DensityOperator(
      std::make_shared<const Data>(Data{std::move(m), std::move(spectrum), rank_tolerance}));
}

Index DensityOperator::rank() const {
  const RealVector& v = spectrum().values;
  return static_cast<Index>((v.array() > rank_tolerance()).count());
}

// ---------------------------------------------------------------------------
// Projector

Projector Projector::onto_columns(const Matrix& cols, Index dim) {
  if (cols.cols() == 0) return Projector(HermitianMatrix::zero(dim), 0);
  return Projector(HermitianMatrix::symmetrized(cols * cols.adjoint()), cols.cols());
}

Projector::Projector(const HermitianMatrix& p) : p_(p), rank_(0) {
  const Matrix& m = p.matrix();
  double err = (m * m - m).norm();
  if (err > 1e-9) {
    std::ostringstream os;
    os << "||P^2 - P||_F = " << err;
    throw Error(ErrorKind::InvalidArgument, os.str());
  }
  rank_ = static_cast<Index>(std::llround(p.trace()));
}

Projector Projector::complement() const {
  return Projector(HermitianMatrix::identity(dim()) - p_, dim() - rank_);
}

// ---------------------------------------------------------------------------
// Tensor structure

Matrix kron(const Matrix& a, const Matrix& b) {
  return Eigen::kroneckerProduct(a, b).eval();
}

namespace {

void check_cap(Index dim, std::size_t cap) {
  if (static_cast<std::size_t>(dim) > cap) {
    std::ostringstream os;
    os << "dimension " << dim << " exceeds cap " << cap;
    throw Error(ErrorKind::DimensionCapExceeded, os.str());
  }
}

}  // namespace

DensityOperator tensor(const DensityOperator& a, const DensityOperator& b, std::size_t cap) {
  check_cap(a.dim() * b.dim(), cap);
  RealVector values(a.dim() * b.dim());
  for (Index i = 0; i < a.dim(); ++i) {
    for (Index j = 0; j < b.dim(); ++j) {
      values(i * b.dim() + j) = a.spectrum().values(i) * b.spectrum().values(j);
    }
  }
  Spectrum s = sorted_descending(values, kron(a.spectrum().vectors, b.spectrum().vectors));
  HermitianMatrix m = HermitianMatrix::symmetrized(kron(a.matrix(), b.matrix()));
  return DensityOperator::from_parts(std::move(m), std::move(s),
                                     std::max(a.rank_tolerance(), b.rank_tolerance()));
}

DensityOperator kron_power(const DensityOperator& a, int n, std::size_t cap) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "kron_power needs n >= 1");
  double total = std::pow(static_cast<double>(a.dim()), n);
  if (total > static_cast<double>(cap)) {
    std::ostringstream os;
    os << "dimension " << a.dim() << "^" << n << " exceeds cap " << cap;
    throw Error(ErrorKind::DimensionCapExceeded, os.str());
  }
  DensityOperator out = a;
  for (int i = 1; i < n; ++i) out = tensor(out, a, cap);
  return out;
}

DensityOperator partial_trace(const DensityOperator& joint, Index dim_a, Index dim_b,
                              Subsystem keep) {
  if (dim_a < 1 || dim_b < 1 || dim_a * dim_b != joint.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "joint dimension must equal dA * dB");
  }
  const Matrix& j = joint.matrix();
  Matrix out;
  if (keep == Subsystem::A) {
    out = Matrix::Zero(dim_a, dim_a);
    for (Index a = 0; a < dim_a; ++a)
      for (Index ap = 0; ap < dim_a; ++ap)
        for (Index b = 0; b < dim_b; ++b) out(a, ap) += j(a * dim_b + b, ap * dim_b + b);
  } else {
    out = Matrix::Zero(dim_b, dim_b);
    for (Index b = 0; b < dim_b; ++b)
      for (Index bp = 0; bp < dim_b; ++bp)
        for (Index a = 0; a < dim_a; ++a) out(b, bp) += j(a * dim_b + b, a * dim_b + bp);
  }
  return DensityOperator(HermitianMatrix::symmetrized(out), joint.rank_tolerance());
}

Projector support_projector(const DensityOperator& a) {
  const Spectrum& s = a.spectrum();
  Index r = a.rank();  // values are sorted, so the support is the leading block
  return Projector::onto_columns(s.vectors.leftCols(r), a.dim());
}

// ---------------------------------------------------------------------------
// Functional calculus

namespace {

double apply_scalar(const MatrixFunction& f, double x) {
  return std::visit(
      [x](const auto& g) -> double {
        using G = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<G, fn::Log>) return std::log(x);
        else if constexpr (std::is_same_v<G, fn::Pow>) return std::pow(x, g.exponent);
        else if constexpr (std::is_same_v<G, fn::Pinv>) return 1.0 / x;
        else return 1.0 / std::sqrt(x);
      },
      f);
}

}  // namespace

HermitianMatrix matrix_function(const Spectrum& s, const MatrixFunction& f,
                                double rank_tolerance) {
  Index d = s.dim();
  std::vector<Index> keep;
  for (Index i = 0; i < d; ++i)
    if (s.values(i) > rank_tolerance) keep.push_back(i);
  Matrix v(d, static_cast<Index>(keep.size()));
  RealVector fv(static_cast<Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    v.col(static_cast<Index>(k)) = s.vectors.col(keep[k]);
    fv(static_cast<Index>(k)) = apply_scalar(f, s.values(keep[k]));
  }
  return HermitianMatrix::symmetrized(v * fv.cast<Complex>().asDiagonal() * v.adjoint());
}

HermitianMatrix matrix_function(const HermitianMatrix& a, const MatrixFunction& f,
                                double rank_tolerance) {
  return matrix_function(eigh(a), f, rank_tolerance);
}

namespace {

Projector select_eigenspaces(const HermitianMatrix& a, bool (*pred)(double)) {
  Spectrum s = eigh(a);
  std::vector<Index> cols;
  for (Index i = 0; i < s.dim(); ++i)
    if (pred(s.values(i))) cols.push_back(i);
  Matrix v(a.dim(), static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) v.col(static_cast<Index>(k)) = s.vectors.col(cols[k]);
  return Projector::onto_columns(v, a.dim());
}

}  // namespace

Projector spectral_projection_nonneg(const HermitianMatrix& a, bool strict) {
  if (strict) return select_eigenspaces(a, [](double x) { return x > kZeroWindow; });
  return select_eigenspaces(a, [](double x) { return x >= -kZeroWindow; });
}

Projector spectral_projection_negative(const HermitianMatrix& a, bool strict) {
  if (strict) return select_eigenspaces(a, [](double x) { return x < -kZeroWindow; });
  return select_eigenspaces(a, [](double x) { return x <= kZeroWindow; });
}

std::vector<std::vector<Index>> eigenvalue_clusters(const RealVector& v, double rel_tol,
                                                    double abs_floor) {
  std::vector<std::vector<Index>> clusters;
  for (Index i = 0; i < v.size(); ++i) {
    if (!clusters.empty()) {
      double prev = v(clusters.back().back());
      double gap = std::abs(prev - v(i));
      double scale = std::max(std::abs(prev), std::abs(v(i)));
      if (gap <= rel_tol * scale || gap <= abs_floor) {
        clusters.back().push_back(i);
        continue;
      }
    }
    clusters.push_back({i});
  }
  return clusters;
}

HermitianMatrix pinching(const HermitianMatrix& a, const HermitianMatrix& b) {
  if (a.dim() != b.dim()) throw Error(ErrorKind::DimensionMismatch, "pinching");
  Spectrum s = eigh(a);
  double norm = s.values.cwiseAbs().maxCoeff();
  auto clusters = eigenvalue_clusters(s.values, kClusterTolerance, 1e-14 * norm);
  std::vector<Index> label(static_cast<std::size_t>(a.dim()));
  for (std::size_t c = 0; c < clusters.size(); ++c)
    for (Index i : clusters[c]) label[static_cast<std::size_t>(i)] = static_cast<Index>(c);
  Matrix rotated = s.vectors.adjoint() * b.matrix() * s.vectors;
  for (Index j = 0; j < a.dim(); ++j)
    for (Index i = 0; i < a.dim(); ++i)
      if (label[static_cast<std::size_t>(i)] != label[static_cast<std::size_t>(j)])
        rotated(i, j) = 0.0;
  return HermitianMatrix::symmetrized(s.vectors * rotated * s.vectors.adjoint());
}

double trace_product(const Matrix& a, const Matrix& b) {
  return a.cwiseProduct(b.transpose()).sum().real();
}

}  // namespace cqcovert
