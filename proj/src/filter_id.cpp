#include "graphdeconv/filter_id.hpp"

#include <Eigen/QR>
#include <cmath>

#include "graphdeconv/cone_program.hpp"

namespace graphdeconv {

namespace {

bool solve_usable(const SolveResult& r) {
    if (r.status == SolveStatus::optimal) return true;
    if (r.status != SolveStatus::max_iters) return false;
    return r.primal_residual <= 1e-6 && r.dual_residual <= 1e-6;
}

// reweighted l1 loop over the coefficient vector of a_eff
VectorXd reweighted_solve(const MatrixXd& a_eff, const VectorXd& y, const VectorXd& base_weights,
                          double eps, const FilterIdOptions& opts, FilterEstimate& est) {
    const int nv = static_cast<int>(a_eff.cols());
    VectorXd coeff = VectorXd::Zero(nv);
    VectorXd reweight = VectorXd::Ones(nv);
    const int iters = opts.surrogate == Surrogate::l1 ? 1 : opts.max_iters;
    const std::optional<double> noise = eps > 0 ? std::optional<double>(eps) : std::nullopt;
    for (int it = 0; it < iters; ++it) {
        const VectorXd weights = base_weights.cwiseProduct(reweight);
        const WeightedL1Program prog = build_weighted_l1(a_eff, y, weights, noise);
        const SolveResult sol = solve(prog.program);
        if (sol.status == SolveStatus::infeasible)
            throw Infeasible("observations admit no filter under the model");
        if (!solve_usable(sol)) throw NumericalBreakdown("filter subproblem solve failed");
        const VectorXd next = prog.extract_x(sol.z);
        double surrogate_value = 0.0;
        for (int i = 0; i < nv; ++i)
            surrogate_value += base_weights(i) * std::log(std::abs(next(i)) + opts.eps0);
        est.history.push_back(surrogate_value);
        est.iterations = it + 1;
        const double change = (next - coeff).norm();
        const double scale = std::max(coeff.norm(), 1e-12);
        coeff = next;
        if (it > 0 && change / scale < opts.rel_tol) break;
        for (int i = 0; i < nv; ++i) reweight(i) = 1.0 / (std::abs(coeff(i)) + opts.eps0);
    }
    return coeff;
}

int numeric_rank(const MatrixXd& a) {
    Eigen::ColPivHouseholderQR<MatrixXd> qr(a);
    qr.setThreshold(1e-10);
    return static_cast<int>(qr.rank());
}

}  // namespace

MatrixXd input_response_matrix(const GraphShift& shift, const VectorXd& x, int l) {
    if (x.size() != shift.n()) throw DimensionMismatch("input length != node count");
    if (l < 1) throw DimensionMismatch("filter length must be >= 1");
    MatrixXd k(shift.n(), l);
    k.col(0) = x;
    for (int j = 1; j < l; ++j) k.col(j) = shift.s() * k.col(j - 1);
    return k;
}

VectorXd exponential_weights(int l_len, double beta) {
    if (l_len < 1) throw DimensionMismatch("filter length must be >= 1");
    if (beta <= 0) throw InvalidConfig("beta must be positive");
    VectorXd w(l_len);
    const double denom = 1.0 - std::exp(-beta * l_len);
    for (int l = 1; l <= l_len; ++l) w(l - 1) = (1.0 - std::exp(-beta * l)) / denom;
    return w;
}

FilterEstimate identify_sparse_filter(const KnownInputProblem& p, const FilterIdOptions& opts) {
    if (p.x.norm() < 1e-12) throw ZeroInput("input signal is numerically zero");
    if (p.l < 1) throw DimensionMismatch("filter length must be >= 1");
    if (p.obs.y_m.size() != p.obs.m.size()) throw DimensionMismatch("|y_M| != |M|");
    const VectorXd weights = p.w_l.size() ? p.w_l : VectorXd::Ones(p.l);
    if (weights.size() != p.l) throw DimensionMismatch("weight count != filter length");
    if (weights.minCoeff() <= 0) throw InvalidConfig("tap weights must be positive");

    const MatrixXd krylov = input_response_matrix(p.shift, p.x, p.l);
    const MatrixXd phi_m = p.obs.m.select_rows(krylov);

    FilterEstimate est;
    est.rank_deficient = numeric_rank(phi_m) < p.l;
    est.h_hat = reweighted_solve(phi_m, p.obs.y_m, weights, p.obs.eps, opts, est);
    est.y_hat = krylov * est.h_hat;
    return est;
}

FilterEstimate identify_subspace_filter(const KnownInputProblem& p, const FilterIdOptions& opts) {
    if (!p.dict) throw DimensionMismatch("subspace identification requires a filter dictionary");
    if (p.dict->kind != DictionaryKind::filter)
        throw DimensionMismatch("dictionary must be a filter dictionary");
    if (p.x.norm() < 1e-12) throw ZeroInput("input signal is numerically zero");
    const int l = static_cast<int>(p.dict->d.rows());
    const MatrixXd krylov = input_response_matrix(p.shift, p.x, l);
    const MatrixXd phi_d = krylov * p.dict->d;
    const MatrixXd phi_m = p.obs.m.select_rows(phi_d);
    const int dh = p.dict->atoms();

    FilterEstimate est;
    if (p.sparse_alpha) {
        est.rank_deficient = numeric_rank(phi_m) < dh;
        est.alpha_hat = reweighted_solve(phi_m, p.obs.y_m, VectorXd::Ones(dh), p.obs.eps, opts, est);
    } else {
        Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(phi_m);
        cod.setThreshold(1e-10);
        est.rank_deficient = static_cast<int>(cod.rank()) < dh;
        est.alpha_hat = cod.solve(p.obs.y_m);  // minimum-norm least squares
        const double resid = (phi_m * est.alpha_hat - p.obs.y_m).norm();
        const double limit = p.obs.eps > 0 ? std::sqrt(p.obs.eps) + 1e-9
                                           : 1e-6 * std::max(1.0, p.obs.y_m.norm());
        if (resid > limit) throw Infeasible("observations are inconsistent with the filter subspace");
        est.iterations = 1;
    }
    est.h_hat = p.dict->d * est.alpha_hat;
    est.y_hat = krylov * est.h_hat;
    return est;
}

}  // namespace graphdeconv
