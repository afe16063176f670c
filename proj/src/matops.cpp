#include "driftfilter/matops.hpp"

#include <algorithm>
#include <cmath>

namespace driftfilter {

SymMatrix::SymMatrix(const Matrix& m) {
    if (m.rows() != m.cols()) {
        throw DimensionError("symmetric matrix must be square, got " + std::to_string(m.rows()) + "x" +
                             std::to_string(m.cols()));
    }
    if (m.rows() < 1) throw DimensionError("symmetric matrix must have dimension >= 1");
    m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::zero(int dim) { return SymMatrix(Matrix::Zero(dim, dim)); }

SymMatrix SymMatrix::identity(int dim) { return SymMatrix(Matrix::Identity(dim, dim)); }

SymMatrix SymMatrix::diagonal(const Vector& diag) {
    Matrix m = Matrix::Zero(diag.size(), diag.size());
    m.diagonal() = diag;
    return SymMatrix(m);
}

namespace {
void require_same_dim(const SymMatrix& a, const SymMatrix& b, const char* what) {
    if (a.dim() != b.dim()) {
        throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(a.dim()) + " vs " +
                             std::to_string(b.dim()) + ")");
    }
}
}  // namespace

SymMatrix SymMatrix::operator+(const SymMatrix& o) const {
    require_same_dim(*this, o, "operator+");
    SymMatrix r;
    r.m_ = m_ + o.m_;
    return r;
}

SymMatrix SymMatrix::operator-(const SymMatrix& o) const {
    require_same_dim(*this, o, "operator-");
    SymMatrix r;
    r.m_ = m_ - o.m_;
    return r;
}

SymMatrix SymMatrix::operator*(double s) const {
    SymMatrix r;
    r.m_ = s * m_;
    return r;
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& o) {
    require_same_dim(*this, o, "operator+=");
    m_ += o.m_;
    return *this;
}

SymMatrix congruence(const Matrix& x, const SymMatrix& a) {
    if (x.cols() != a.dim()) throw DimensionError("congruence: shape mismatch");
    return SymMatrix(x * a.mat() * x.transpose());
}

SymMatrix gram(const Matrix& x) { return SymMatrix(x * x.transpose()); }

SymEigen sym_eigen(const SymMatrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(a.mat());
    if (solver.info() != Eigen::Success) {
        throw NumericError("symmetric eigen-decomposition did not converge");
    }
    return {solver.eigenvalues(), solver.eigenvectors()};
}

SymMatrix sym_expm(const SymMatrix& a, double t) {
    return spectral_apply(sym_eigen(a), [t](double l) { return std::exp(l * t); });
}

double spectral_norm(const SymMatrix& a) {
    const Vector ev = sym_eigen(a).values;
    return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

double min_eig(const SymMatrix& a) { return sym_eigen(a).values(0); }

double max_eig(const SymMatrix& a) {
    const Vector ev = sym_eigen(a).values;
    return ev(ev.size() - 1);
}

double trace(const SymMatrix& a) { return a.mat().trace(); }

double psd_tolerance(const SymMatrix& a) { return 1e-10 * (1.0 + spectral_norm(a)); }

namespace {
SymEigen clipped_eigen(const SymMatrix& a, const char* what) {
    SymEigen e = sym_eigen(a);
    const double norm = std::max(std::abs(e.values(0)), std::abs(e.values(e.values.size() - 1)));
    const double eps = 1e-10 * (1.0 + norm);
    if (e.values(0) < -eps) {
        throw NotPsdError(std::string(what) + ": matrix is not positive semidefinite (min eigenvalue " +
                          std::to_string(e.values(0)) + ")");
    }
    for (int i = 0; i < e.values.size(); ++i) e.values(i) = std::max(e.values(i), 0.0);
    return e;
}
}  // namespace

SymMatrix psd_sqrt(const SymMatrix& a) {
    return spectral_apply(clipped_eigen(a, "psd_sqrt"), [](double l) { return std::sqrt(l); });
}

SymMatrix psd_clip(const SymMatrix& a) {
    SymEigen e = sym_eigen(a);
    if (e.values(0) >= 0.0) return a;
    const double norm = std::max(std::abs(e.values(0)), std::abs(e.values(e.values.size() - 1)));
    if (e.values(0) < -1e-10 * (1.0 + norm)) {
        throw NotPsdError("psd_clip: matrix is not positive semidefinite (min eigenvalue " +
                          std::to_string(e.values(0)) + ")");
    }
    return spectral_apply(e, [](double l) { return std::max(l, 0.0); });
}

bool loewner_leq(const SymMatrix& a, const SymMatrix& b, double tol) {
    require_same_dim(a, b, "loewner_leq");
    return min_eig(b - a) >= -tol;
}

bool is_positive_definite(const SymMatrix& a) {
    Eigen::LLT<Matrix> llt(a.mat());
    return llt.info() == Eigen::Success && min_eig(a) > 0.0;
}

Matrix spd_solve(const SymMatrix& a, const Matrix& b) {
    if (b.rows() != a.dim()) throw DimensionError("spd_solve: shape mismatch");
    Eigen::LLT<Matrix> llt(a.mat());
    if (llt.info() != Eigen::Success) throw NumericError("spd_solve: matrix is not positive definite");
    return llt.solve(b);
}

SymMatrix spd_inverse(const SymMatrix& a) { return SymMatrix(spd_solve(a, Matrix::Identity(a.dim(), a.dim()))); }

}  // namespace driftfilter
