#include "graphdeconv/graph.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace graphdeconv {

namespace {

constexpr double kReconstructionTol = 1e-10;
constexpr double kConditionLimit = 1e12;

bool is_symmetric(const MatrixXd& s) {
    return (s - s.transpose()).norm() == 0.0;
}

Spectrum symmetric_spectrum(const MatrixXd& s) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(s);
    if (es.info() != Eigen::Success) throw NotDiagonalizable("symmetric eigensolver failed");
    const int n = static_cast<int>(s.rows());
    Spectrum spec;
    spec.lambda = VectorXd(n);
    spec.v = MatrixXd(n, n);
    // SelfAdjointEigenSolver sorts ascending; the convention here is descending.
    for (int i = 0; i < n; ++i) {
        spec.lambda(i) = es.eigenvalues()(n - 1 - i);
        spec.v.col(i) = es.eigenvectors().col(n - 1 - i);
    }
    spec.u = spec.v.transpose();
    return spec;
}

Spectrum general_spectrum(const MatrixXd& s) {
    Eigen::EigenSolver<MatrixXd> es(s);
    if (es.info() != Eigen::Success) throw NotDiagonalizable("eigensolver failed");
    const int n = static_cast<int>(s.rows());
    const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
    for (int i = 0; i < n; ++i) {
        if (std::abs(es.eigenvalues()(i).imag()) > 1e-9 * scale)
            throw NotDiagonalizable("complex eigenvalues; only real-spectral shifts are supported");
    }
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return es.eigenvalues()(a).real() > es.eigenvalues()(b).real();
    });
    Spectrum spec;
    spec.lambda = VectorXd(n);
    spec.v = MatrixXd(n, n);
    for (int i = 0; i < n; ++i) {
        spec.lambda(i) = es.eigenvalues()(order[i]).real();
        spec.v.col(i) = es.eigenvectors().col(order[i]).real();
        const double norm = spec.v.col(i).norm();
        if (norm > 0) spec.v.col(i) /= norm;
    }
    Eigen::JacobiSVD<MatrixXd> svd(spec.v);
    const double smin = svd.singularValues()(n - 1);
    const double smax = svd.singularValues()(0);
    if (smin <= 0 || smax / smin > kConditionLimit)
        throw NotDiagonalizable("eigenvector matrix is numerically singular");
    spec.u = spec.v.partialPivLu().solve(MatrixXd::Identity(n, n));
    return spec;
}

}  // namespace

GraphShift GraphShift::without_spectrum(MatrixXd s) {
    if (s.rows() != s.cols()) throw DimensionMismatch("shift matrix must be square");
    const bool sym = is_symmetric(s);
    return GraphShift(std::move(s), sym, std::nullopt);
}

GraphShift eigendecompose(const MatrixXd& s) {
    if (s.rows() != s.cols()) throw DimensionMismatch("shift matrix must be square");
    if (!s.allFinite()) throw Error("shift matrix has non-finite entries");
    const bool sym = is_symmetric(s);
    Spectrum spec = sym ? symmetric_spectrum(s) : general_spectrum(s);
    const MatrixXd rebuilt = spec.v * spec.lambda.asDiagonal() * spec.u;
    const double denom = std::max(s.norm(), 1e-300);
    if ((s - rebuilt).norm() / denom > kReconstructionTol)
        throw NotDiagonalizable("eigendecomposition residual above tolerance");
    return GraphShift(s, sym, std::move(spec));
}

Dictionary make_dictionary(MatrixXd d, DictionaryKind kind) {
    if (!d.allFinite()) throw Error("dictionary has non-finite entries");
    for (int j = 0; j < d.cols(); ++j) {
        if (d.col(j).norm() <= 1e-12) throw Error("dictionary has a zero column");
    }
    return Dictionary{std::move(d), kind};
}

MatrixXd vandermonde(const GraphShift& shift, int l) {
    if (l < 1) throw DimensionMismatch("filter length must be >= 1");
    const VectorXd& lambda = shift.lambda();
    const int n = shift.n();
    MatrixXd psi(n, l);
    psi.col(0).setOnes();
    for (int j = 1; j < l; ++j) psi.col(j) = psi.col(j - 1).cwiseProduct(lambda);
    return psi;
}

VectorXd apply_filter(const GraphShift& shift, const GraphFilter& filter, const VectorXd& x) {
    if (x.size() != shift.n()) throw DimensionMismatch("signal length != node count");
    if (filter.length() < 1) throw DimensionMismatch("empty filter");
    VectorXd shifted = x;
    VectorXd y = filter.h(0) * x;
    for (int l = 1; l < filter.length(); ++l) {
        shifted = shift.s() * shifted;
        y += filter.h(l) * shifted;
    }
    return y;
}

MatrixXd filter_matrix(const GraphShift& shift, const GraphFilter& filter) {
    const int n = shift.n();
    MatrixXd power = MatrixXd::Identity(n, n);
    MatrixXd h = filter.h(0) * power;
    for (int l = 1; l < filter.length(); ++l) {
        power = shift.s() * power;
        h += filter.h(l) * power;
    }
    return h;
}

MatrixXd lifted_operator_p(const GraphShift& shift, int l) {
    if (l < 1) throw DimensionMismatch("filter length must be >= 1");
    const int n = shift.n();
    const MatrixXd psi = vandermonde(shift, l);
    // Column i + j*N of P equals V diag(lambda^j) U e_i, assembled blockwise.
    MatrixXd p(n, n * l);
    for (int j = 0; j < l; ++j)
        p.middleCols(j * n, n) = shift.v() * psi.col(j).asDiagonal() * shift.u();
    return p;
}

MatrixXd lifted_operator_t(const GraphShift& shift, const Dictionary& dict, int l) {
    if (dict.kind != DictionaryKind::input)
        throw DimensionMismatch("lifted_operator_t needs an input dictionary");
    if (dict.d.rows() != shift.n())
        throw DimensionMismatch("dictionary row count != node count");
    const int n = shift.n();
    const int dx = dict.atoms();
    const MatrixXd psi = vandermonde(shift, l);
    const MatrixXd ud = shift.u() * dict.d;
    MatrixXd t(n, dx * l);
    for (int j = 0; j < l; ++j)
        t.middleCols(j * dx, dx) = shift.v() * psi.col(j).asDiagonal() * ud;
    return t;
}

}  // namespace graphdeconv
