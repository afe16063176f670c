#pragma once

// Small dense symmetric-matrix toolkit. Everything spectral goes through one
// self-adjoint eigensolver so that expm, sqrt and norms agree numerically.

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace driftfilter {

/// Upper bound on the number of stocks (and return noise dimensions).
inline constexpr int kMaxDim = 10;

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor, kMaxDim, kMaxDim>;
using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NotPsdError : public NumericError {
public:
    using NumericError::NumericError;
};

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Dense symmetric matrix. The stored entries are symmetrized on
/// construction, so (i,j) and (j,i) compare equal bit for bit.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(const Matrix& m);

    static SymMatrix zero(int dim);
    static SymMatrix identity(int dim);
    static SymMatrix diagonal(const Vector& diag);

    int dim() const { return static_cast<int>(m_.rows()); }
    bool empty() const { return m_.size() == 0; }
    const Matrix& mat() const { return m_; }
    double operator()(int i, int j) const { return m_(i, j); }

    SymMatrix operator+(const SymMatrix& o) const;
    SymMatrix operator-(const SymMatrix& o) const;
    SymMatrix operator*(double s) const;
    SymMatrix& operator+=(const SymMatrix& o);

private:
    Matrix m_;
};

inline SymMatrix operator*(double s, const SymMatrix& a) { return a * s; }

/// X A X^T, which stays symmetric.
SymMatrix congruence(const Matrix& x, const SymMatrix& a);

/// X X^T.
SymMatrix gram(const Matrix& x);

struct SymEigen {
    Vector values;   // ascending
    Matrix vectors;  // columns are orthonormal eigenvectors
};

SymEigen sym_eigen(const SymMatrix& a);

/// Rebuild Q diag(f(lambda)) Q^T from a decomposition.
template <class F>
SymMatrix spectral_apply(const SymEigen& e, F&& f) {
    const int n = static_cast<int>(e.values.size());
    Vector fv(n);
    for (int i = 0; i < n; ++i) fv(i) = f(e.values(i));
    Matrix out = e.vectors * fv.asDiagonal() * e.vectors.transpose();
    return SymMatrix(out);
}

/// e^{tA} for symmetric A.
SymMatrix sym_expm(const SymMatrix& a, double t);

double spectral_norm(const SymMatrix& a);
double min_eig(const SymMatrix& a);
double max_eig(const SymMatrix& a);
double trace(const SymMatrix& a);

/// Round-off allowance for PSD checks: 1e-10 (1 + ||A||).
double psd_tolerance(const SymMatrix& a);

/// Unique PSD square root. Eigenvalues in [-psd_tolerance, 0) are clipped to
/// zero; anything more negative throws NotPsdError.
SymMatrix psd_sqrt(const SymMatrix& a);

/// Same clipping rule as psd_sqrt, returning the projected matrix itself.
SymMatrix psd_clip(const SymMatrix& a);

/// A <= B in the Loewner order: lambda_min(B - A) >= -tol.
bool loewner_leq(const SymMatrix& a, const SymMatrix& b, double tol);

bool is_positive_definite(const SymMatrix& a);

/// Solve A X = B for symmetric positive definite A (Cholesky).
Matrix spd_solve(const SymMatrix& a, const Matrix& b);

/// Inverse of a symmetric positive definite matrix.
SymMatrix spd_inverse(const SymMatrix& a);

}  // namespace driftfilter
