#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace isabc {

using cplx = std::complex<double>;

struct NumericsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DimensionMismatch : NumericsError {
    using NumericsError::NumericsError;
};
struct NotHermitian : NumericsError {
    using NumericsError::NumericsError;
};
struct NotPositiveDefinite : NumericsError {
    using NumericsError::NumericsError;
};
struct NoConvergence : NumericsError {
    using NumericsError::NumericsError;
};

/// Dense row-major complex matrix. Small sizes only (beamformers,
/// covariance blocks); everything is value-semantic.
class CMatrix {
public:
    CMatrix() = default;
    CMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols) {}

    static CMatrix identity(std::size_t n);
    static CMatrix zeros(std::size_t rows, std::size_t cols) { return CMatrix(rows, cols); }
    static CMatrix column(const std::vector<cplx>& entries);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    cplx& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const cplx& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    std::vector<cplx>& entries() { return data_; }
    const std::vector<cplx>& entries() const { return data_; }

    CMatrix adjoint() const;
    CMatrix transpose() const;
    cplx trace() const;
    double frobenius_norm() const;
    double max_abs() const;
    bool is_hermitian(double rel_tol = 1e-12) const;

    CMatrix& operator+=(const CMatrix& other);
    CMatrix& operator-=(const CMatrix& other);
    CMatrix& operator*=(cplx scale);
    CMatrix& operator*=(double scale) { return (*this) *= cplx(scale, 0.0); }

    friend CMatrix operator+(CMatrix a, const CMatrix& b) { return a += b; }
    friend CMatrix operator-(CMatrix a, const CMatrix& b) { return a -= b; }
    friend CMatrix operator*(CMatrix a, cplx s) { return a *= s; }
    friend CMatrix operator*(cplx s, CMatrix a) { return a *= s; }
    friend CMatrix operator*(CMatrix a, double s) { return a *= s; }
    friend CMatrix operator*(double s, CMatrix a) { return a *= s; }
    friend CMatrix operator*(const CMatrix& a, const CMatrix& b);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<cplx> data_;
};

/// a^H b for column vectors.
cplx dot(const CMatrix& a, const CMatrix& b);
/// Euclidean norm of a column vector (or Frobenius norm in general).
double norm(const CMatrix& a);
/// v v^H for a column vector.
CMatrix outer(const CMatrix& v);
/// Re tr(A^H B); the PSD-cone inner product for Hermitian arguments.
double inner(const CMatrix& a, const CMatrix& b);
/// (A + A^H)/2
CMatrix hermitian_part(const CMatrix& a);

struct EigenPair {
    std::vector<double> values;  // descending
    CMatrix vectors;             // unit-norm columns, phase-normalized
};

/// Cyclic Jacobi eigendecomposition of a Hermitian matrix.
/// Eigenvalues sorted descending; eigenvector phases fixed so the first
/// entry of significant magnitude is real non-negative.
EigenPair hermitian_eig(const CMatrix& a);

/// Solves A X = B for Hermitian positive-definite A via Cholesky.
CMatrix solve_hermitian(const CMatrix& a, const CMatrix& b);

/// Lower-triangular L with A = L L^H.
CMatrix cholesky_factor(const CMatrix& a);

struct PrincipalComponent {
    CMatrix vector;        // sqrt(lambda_max) * v_max
    double residual_ratio; // lambda2 / lambda1, 0 for the zero matrix
};

/// Dominant rank-one factor of a Hermitian PSD matrix.
PrincipalComponent principal_component(const CMatrix& w);

/// Deterministic random stream with independent sub-streams for
/// parallel trials.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Derives a statistically independent stream; (seed, index) keyed.
    static Rng split(std::uint64_t seed, std::uint64_t stream);

    double uniform();               // U(0,1)
    double gaussian();              // N(0,1)
    cplx circular_gaussian();       // CN(0,1): re/im each N(0, 1/2)
    std::uint64_t integer();

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// dim x 1 vector with i.i.d. CN(0,1) entries.
CMatrix sample_gaussian_vector(std::size_t dim, Rng& rng);

}  // namespace isabc
