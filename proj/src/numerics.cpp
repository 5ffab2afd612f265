#include "isabc/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace isabc {

CMatrix CMatrix::identity(std::size_t n) {
    CMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

CMatrix CMatrix::column(const std::vector<cplx>& entries) {
    CMatrix m(entries.size(), 1);
    m.data_ = entries;
    return m;
}

CMatrix CMatrix::adjoint() const {
    CMatrix out(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) out(j, i) = std::conj((*this)(i, j));
    return out;
}

CMatrix CMatrix::transpose() const {
    CMatrix out(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) out(j, i) = (*this)(i, j);
    return out;
}

cplx CMatrix::trace() const {
    if (rows_ != cols_) throw DimensionMismatch("trace of non-square matrix");
    cplx t = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) t += (*this)(i, i);
    return t;
}

double CMatrix::frobenius_norm() const {
    double s = 0.0;
    for (const cplx& v : data_) s += std::norm(v);
    return std::sqrt(s);
}

double CMatrix::max_abs() const {
    double m = 0.0;
    for (const cplx& v : data_) m = std::max(m, std::abs(v));
    return m;
}

bool CMatrix::is_hermitian(double rel_tol) const {
    if (rows_ != cols_) return false;
    const double scale = max_abs();
    const double tol = rel_tol * std::max(scale, 1e-300);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = i; j < cols_; ++j)
            if (std::abs((*this)(i, j) - std::conj((*this)(j, i))) > tol) return false;
    return true;
}

CMatrix& CMatrix::operator+=(const CMatrix& other) {
    if (rows_ != other.rows_ || cols_ != other.cols_)
        throw DimensionMismatch("matrix addition shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

CMatrix& CMatrix::operator-=(const CMatrix& other) {
    if (rows_ != other.rows_ || cols_ != other.cols_)
        throw DimensionMismatch("matrix subtraction shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

CMatrix& CMatrix::operator*=(cplx scale) {
    for (cplx& v : data_) v *= scale;
    return *this;
}

CMatrix operator*(const CMatrix& a, const CMatrix& b) {
    if (a.cols() != b.rows()) throw DimensionMismatch("matrix product shape mismatch");
    CMatrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const cplx aik = a(i, k);
            if (aik == cplx(0.0, 0.0)) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
        }
    }
    return out;
}

cplx dot(const CMatrix& a, const CMatrix& b) {
    if (a.size() != b.size()) throw DimensionMismatch("dot shape mismatch");
    cplx s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a.entries()[i]) * b.entries()[i];
    return s;
}

double norm(const CMatrix& a) { return a.frobenius_norm(); }

CMatrix outer(const CMatrix& v) {
    CMatrix out(v.rows(), v.rows());
    for (std::size_t i = 0; i < v.rows(); ++i)
        for (std::size_t j = 0; j < v.rows(); ++j)
            out(i, j) = v.entries()[i] * std::conj(v.entries()[j]);
    return out;
}

double inner(const CMatrix& a, const CMatrix& b) {
    if (a.size() != b.size()) throw DimensionMismatch("inner shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += std::real(std::conj(a.entries()[i]) * b.entries()[i]);
    return s;
}

CMatrix hermitian_part(const CMatrix& a) {
    CMatrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            out(i, j) = 0.5 * (a(i, j) + std::conj(a(j, i)));
    return out;
}

namespace {

// Fixes the global phase so the first entry with non-negligible
// magnitude becomes real non-negative.
void normalize_phase(CMatrix& vectors, std::size_t col) {
    const std::size_t n = vectors.rows();
    double colnorm = 0.0;
    for (std::size_t i = 0; i < n; ++i) colnorm += std::norm(vectors(i, col));
    colnorm = std::sqrt(colnorm);
    for (std::size_t i = 0; i < n; ++i) {
        const cplx v = vectors(i, col);
        if (std::abs(v) > 1e-12 * std::max(colnorm, 1e-300)) {
            const cplx phase = std::conj(v) / std::abs(v);
            for (std::size_t r = 0; r < n; ++r) vectors(r, col) *= phase;
            return;
        }
    }
}

double off_diagonal_norm(const CMatrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (i != j) s += std::norm(a(i, j));
    return std::sqrt(s);
}

}  // namespace

EigenPair hermitian_eig(const CMatrix& input) {
    if (input.rows() != input.cols()) throw DimensionMismatch("hermitian_eig needs square input");
    if (!input.is_hermitian(1e-10)) throw NotHermitian("hermitian_eig: symmetry check failed");

    const std::size_t n = input.rows();
    CMatrix a = hermitian_part(input);
    CMatrix v = CMatrix::identity(n);

    if (n == 1) {
        EigenPair out;
        out.values = {std::real(a(0, 0))};
        out.vectors = v;
        return out;
    }

    const double scale = std::max(a.max_abs(), 1e-300);
    const double stop = 1e-15 * scale * static_cast<double>(n);
    const std::size_t max_sweeps = 100 * n;
    bool converged = false;

    for (std::size_t sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const cplx apq = a(p, q);
                const double mag = std::abs(apq);
                if (mag <= stop) continue;

                // Phase the pivot to real, then a real Givens rotation
                // annihilates it: U = diag(1, e^{-i phi}) * R(theta).
                const double app = std::real(a(p, p));
                const double aqq = std::real(a(q, q));
                const cplx phase = apq / mag;  // e^{i phi}
                const double theta = 0.5 * std::atan2(2.0 * mag, app - aqq);
                const double c = std::cos(theta);
                const double s = std::sin(theta);
                const cplx sp = s * std::conj(phase);   // s e^{-i phi}
                const cplx cp = c * std::conj(phase);   // c e^{-i phi}

                for (std::size_t r = 0; r < n; ++r) {
                    const cplx arp = a(r, p), arq = a(r, q);
                    a(r, p) = c * arp + sp * arq;
                    a(r, q) = -s * arp + cp * arq;
                }
                for (std::size_t col = 0; col < n; ++col) {
                    const cplx apc = a(p, col), aqc = a(q, col);
                    a(p, col) = c * apc + std::conj(sp) * aqc;
                    a(q, col) = -s * apc + std::conj(cp) * aqc;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                a(p, p) = cplx(std::real(a(p, p)), 0.0);
                a(q, q) = cplx(std::real(a(q, q)), 0.0);

                for (std::size_t r = 0; r < n; ++r) {
                    const cplx vrp = v(r, p), vrq = v(r, q);
                    v(r, p) = c * vrp + sp * vrq;
                    v(r, q) = -s * vrp + cp * vrq;
                }
            }
        }
        converged = off_diagonal_norm(a) <= stop * static_cast<double>(n);
    }
    if (!converged && off_diagonal_norm(a) > 1e-9 * scale)
        throw NoConvergence("hermitian_eig: Jacobi sweep cap exceeded");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return std::real(a(i, i)) > std::real(a(j, j));
    });

    EigenPair out;
    out.values.resize(n);
    out.vectors = CMatrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = std::real(a(order[k], order[k]));
        for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = v(r, order[k]);
        normalize_phase(out.vectors, k);
    }
    return out;
}

namespace {

// In-place LL^H factorization; returns false on a non-positive pivot.
bool cholesky(CMatrix& a, double pivot_floor) {
    const std::size_t n = a.rows();
    for (std::size_t j = 0; j < n; ++j) {
        double d = std::real(a(j, j));
        for (std::size_t k = 0; k < j; ++k) d -= std::norm(a(j, k));
        if (d <= pivot_floor) return false;
        const double ljj = std::sqrt(d);
        a(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            cplx s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= a(i, k) * std::conj(a(j, k));
            a(i, j) = s / ljj;
        }
        for (std::size_t k = j + 1; k < n; ++k) a(j, k) = 0.0;
    }
    return true;
}

}  // namespace

CMatrix cholesky_factor(const CMatrix& a) {
    if (a.rows() != a.cols()) throw DimensionMismatch("cholesky_factor needs square input");
    CMatrix l = hermitian_part(a);
    const double pivot_floor = 1e-14 * std::max(std::real(a.trace()), 0.0) /
                               std::max<std::size_t>(a.rows(), 1);
    if (!cholesky(l, pivot_floor))
        throw NotPositiveDefinite("cholesky_factor: pivot below floor");
    return l;
}

CMatrix solve_hermitian(const CMatrix& a, const CMatrix& b) {
    if (a.rows() != a.cols() || a.rows() != b.rows())
        throw DimensionMismatch("solve_hermitian shape mismatch");
    const std::size_t n = a.rows();
    CMatrix l = hermitian_part(a);
    const double pivot_floor = 1e-14 * std::max(std::real(a.trace()), 0.0) /
                               std::max<std::size_t>(n, 1);
    if (!cholesky(l, pivot_floor))
        throw NotPositiveDefinite("solve_hermitian: Cholesky pivot below floor");

    CMatrix x = b;
    // L y = b
    for (std::size_t col = 0; col < x.cols(); ++col) {
        for (std::size_t i = 0; i < n; ++i) {
            cplx s = x(i, col);
            for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x(k, col);
            x(i, col) = s / std::real(l(i, i));
        }
        // L^H x = y
        for (std::size_t ii = n; ii-- > 0;) {
            cplx s = x(ii, col);
            for (std::size_t k = ii + 1; k < n; ++k) s -= std::conj(l(k, ii)) * x(k, col);
            x(ii, col) = s / std::real(l(ii, ii));
        }
    }
    return x;
}

PrincipalComponent principal_component(const CMatrix& w) {
    EigenPair eig = hermitian_eig(w);
    PrincipalComponent out;
    const std::size_t n = w.rows();
    out.vector = CMatrix(n, 1);
    const double l1 = std::max(eig.values.empty() ? 0.0 : eig.values[0], 0.0);
    if (l1 <= 0.0) {
        out.residual_ratio = 0.0;
        return out;
    }
    const double l2 = eig.values.size() > 1 ? std::max(eig.values[1], 0.0) : 0.0;
    out.residual_ratio = l2 / l1;
    const double amp = std::sqrt(l1);
    for (std::size_t i = 0; i < n; ++i) out.vector(i, 0) = amp * eig.vectors(i, 0);
    return out;
}

Rng Rng::split(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 over the (seed, stream) pair keeps per-trial streams
    // decorrelated without coordination.
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z = z ^ (z >> 31);
    return Rng(z);
}

double Rng::uniform() {
    return std::generate_canonical<double, 53>(engine_);
}

double Rng::gaussian() {
    // Box-Muller keeps the stream layout implementation-independent.
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = 0.0;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * M_PI * u2;
    spare_ = r * std::sin(phi);
    have_spare_ = true;
    return r * std::cos(phi);
}

cplx Rng::circular_gaussian() {
    const double inv_sqrt2 = 0.7071067811865475244;
    return cplx(gaussian() * inv_sqrt2, gaussian() * inv_sqrt2);
}

std::uint64_t Rng::integer() { return engine_(); }

CMatrix sample_gaussian_vector(std::size_t dim, Rng& rng) {
    if (dim < 1) throw DimensionMismatch("sample_gaussian_vector: dim must be >= 1");
    CMatrix v(dim, 1);
    for (std::size_t i = 0; i < dim; ++i) v(i, 0) = rng.circular_gaussian();
    return v;
}

}  // namespace isabc
