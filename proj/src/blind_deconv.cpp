#include "graphdeconv/blind_deconv.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "graphdeconv/cone_program.hpp"

namespace graphdeconv {

namespace {

bool solve_usable(const SolveResult& r) {
    if (r.status == SolveStatus::optimal) return true;
    if (r.status != SolveStatus::max_iters) return false;
    return r.primal_residual <= 1e-6 && r.dual_residual <= 1e-6;
}

double logdet_shifted(const MatrixXd& theta, double eps) {
    MatrixXd shifted = 0.5 * (theta + theta.transpose());
    shifted.diagonal().array() += eps;
    Eigen::LLT<MatrixXd> llt(shifted);
    if (llt.info() != Eigen::Success) throw NumericalBreakdown("logdet of an indefinite block");
    const MatrixXd l = llt.matrixL();
    double value = 0.0;
    for (int i = 0; i < l.rows(); ++i) value += std::log(l(i, i));
    return 2.0 * value;
}

MatrixXd shifted_inverse(const MatrixXd& theta, double eps) {
    MatrixXd shifted = 0.5 * (theta + theta.transpose());
    shifted.diagonal().array() += eps;
    Eigen::LLT<MatrixXd> llt(shifted);
    if (llt.info() != Eigen::Success) throw NumericalBreakdown("MM weight inverse failed");
    MatrixXd inv = llt.solve(MatrixXd::Identity(theta.rows(), theta.cols()));
    return 0.5 * (inv + inv.transpose());
}

// sign convention: first filter entry with magnitude > 1e-9 made positive
void apply_sign_convention(VectorXd& x, VectorXd& h) {
    for (int i = 0; i < h.size(); ++i) {
        if (std::abs(h(i)) > 1e-9) {
            if (h(i) < 0) {
                h = -h;
                x = -x;
            }
            return;
        }
    }
}

struct MmLoopResult {
    MatrixXd z;
    MatrixXd theta1;
    MatrixXd theta2;
    int iterations = 0;
    std::vector<double> history;
};

// Shared MM iteration over the lifted SDP. `rows` is N (or D_x); tau terms
// are absent in the subspace model.
MmLoopResult run_mm(const MatrixXd& op_m, const VectorXd& y_m, int rows, int l, double tau_x,
                    double tau_h, const VectorXd& w_l, const std::optional<MatrixXd>& extra_eq,
                    double eps, const MmOptions& mm) {
    MmLoopResult out;
    MmSdpWeights weights;
    weights.delta1 = MatrixXd::Identity(rows, rows);
    weights.delta2 = MatrixXd::Identity(l, l);
    weights.a_n = VectorXd::Ones(rows);
    weights.b_l = VectorXd::Ones(l);
    weights.w_l = w_l;
    weights.tau_x = tau_x;
    weights.tau_h = tau_h;
    const std::optional<double> noise = eps > 0 ? std::optional<double>(eps) : std::nullopt;

    const int iters = mm.surrogate == RankSurrogate::nuclear ? 1 : mm.max_iters;
    MatrixXd z_prev = MatrixXd::Zero(rows, l);
    for (int it = 0; it < iters; ++it) {
        const MmSdpProgram prog = build_mm_sdp(op_m, y_m, weights, extra_eq, noise);
        const SolveResult sol = solve(prog.program);
        if (sol.status == SolveStatus::infeasible)
            throw Infeasible("observations admit no lifted matrix");
        if (!solve_usable(sol)) throw NumericalBreakdown("lifted subproblem solve failed");
        out.z = prog.extract_z(sol.z);
        out.theta1 = prog.extract_theta1(sol.z);
        out.theta2 = prog.extract_theta2(sol.z);
        out.iterations = it + 1;

        double surrogate = logdet_shifted(out.theta1, mm.eps1) + logdet_shifted(out.theta2, mm.eps1);
        if (tau_x > 0)
            for (int i = 0; i < rows; ++i)
                surrogate += tau_x * std::log(out.z.row(i).norm() + mm.eps2);
        if (tau_h > 0)
            for (int j = 0; j < l; ++j)
                surrogate += tau_h * w_l(j) * std::log(out.z.col(j).norm() + mm.eps3);
        out.history.push_back(surrogate);

        const double change = (out.z - z_prev).norm();
        const double scale = std::max(z_prev.norm(), 1e-12);
        z_prev = out.z;
        if (it > 0 && change / scale < mm.rel_tol) break;

        weights.delta1 = shifted_inverse(out.theta1, mm.eps1);
        weights.delta2 = shifted_inverse(out.theta2, mm.eps1);
        for (int i = 0; i < rows; ++i) weights.a_n(i) = 1.0 / (out.z.row(i).norm() + mm.eps2);
        for (int j = 0; j < l; ++j) weights.b_l(j) = 1.0 / (out.z.col(j).norm() + mm.eps3);
    }
    return out;
}

VectorXd singular_values_of(const MatrixXd& z) {
    Eigen::JacobiSVD<MatrixXd> svd(z);
    return svd.singularValues();
}

}  // namespace

std::pair<VectorXd, VectorXd> rank_one_plain(const MatrixXd& z_hat) {
    if (z_hat.norm() <= 1e-14) throw ZeroMatrix("lifted estimate is numerically zero");
    Eigen::JacobiSVD<MatrixXd> svd(z_hat, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double s1 = svd.singularValues()(0);
    VectorXd x = std::sqrt(s1) * svd.matrixU().col(0);
    VectorXd h = std::sqrt(s1) * svd.matrixV().col(0);
    apply_sign_convention(x, h);
    return {x, h};
}

std::pair<VectorXd, VectorXd> rank_one_known_inputs(const MatrixXd& z_hat, const SelectionSet& k,
                                                    const VectorXd& x_k) {
    const int n = static_cast<int>(z_hat.rows());
    const int l = static_cast<int>(z_hat.cols());
    if (k.ambient() != n) throw DimensionMismatch("selection ambient != row count");
    if (x_k.size() != k.size() || k.size() < 1) throw DimensionMismatch("known value count mismatch");
    const double xk_sq = x_k.squaredNorm();
    if (xk_sq <= 0) throw Error("known input values are all zero");

    const SelectionSet kc = k.complement();
    const MatrixXd z_k = k.select_rows(z_hat);
    const MatrixXd z_kc = kc.select_rows(z_hat);

    MatrixXd m = z_kc.transpose() * z_kc;
    const VectorXd zk_xk = z_k.transpose() * x_k;
    m.noalias() += zk_xk * zk_xk.transpose() / xk_sq;

    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
    if (es.info() != Eigen::Success) throw NumericalBreakdown("rank-one eigensolver failed");
    if (es.eigenvalues()(l - 1) <= 1e-14) throw ZeroFilter("degenerate filter direction");
    const VectorXd h_check = es.eigenvectors().col(l - 1);

    const double c_h = h_check.dot(zk_xk) / xk_sq;
    const VectorXd h = c_h * h_check;
    const double h_sq = h.squaredNorm();

    VectorXd x = VectorXd::Zero(n);
    for (int i = 0; i < k.size(); ++i) x(k.indices()[i]) = x_k(i);
    if (kc.size() > 0 && h_sq > 0) {
        const VectorXd x_rest = z_kc * h / h_sq;
        for (int i = 0; i < kc.size(); ++i) x(kc.indices()[i]) = x_rest(i);
    }
    return {x, h};
}

SubspaceRankOne rank_one_subspace_known_inputs(const MatrixXd& w_hat, const MatrixXd& d_x,
                                               const SelectionSet& k, const VectorXd& x_k) {
    const int ds = static_cast<int>(w_hat.rows());
    if (d_x.cols() != ds) throw DimensionMismatch("dictionary atom count != lifted rows");
    if (k.ambient() != d_x.rows()) throw DimensionMismatch("selection ambient != node count");
    if (k.size() < 2) throw DimensionMismatch("subspace rank-one update needs K >= 2");
    if (x_k.size() != k.size()) throw DimensionMismatch("known value count mismatch");
    const double xk_sq = x_k.squaredNorm();
    if (xk_sq <= 0) throw Error("known input values are all zero");

    const int kk = k.size();
    const MatrixXd d_k = k.select_rows(d_x);
    const MatrixXd proj_xk = MatrixXd::Identity(kk, kk) - x_k * x_k.transpose() / xk_sq;
    const MatrixXd b = (proj_xk * d_k).topRows(kk - 1);

    SubspaceRankOne out;
    const MatrixXd bbt = b * b.transpose();
    MatrixXd bbt_inv;
    Eigen::LLT<MatrixXd> llt(bbt);
    if (llt.info() == Eigen::Success &&
        bbt.diagonal().minCoeff() > 1e-12 * std::max(1.0, bbt.norm())) {
        bbt_inv = llt.solve(MatrixXd::Identity(kk - 1, kk - 1));
    } else {
        out.singular_b = true;
        bbt_inv = bbt.completeOrthogonalDecomposition().pseudoInverse();
    }
    const MatrixXd proj_b = MatrixXd::Identity(ds, ds) - b.transpose() * bbt_inv * b;

    const MatrixXd quad = proj_b.transpose() * w_hat * w_hat.transpose() * proj_b;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (quad + quad.transpose()));
    if (es.info() != Eigen::Success) throw NumericalBreakdown("subspace rank-one eigensolver failed");
    VectorXd alpha = es.eigenvectors().col(ds - 1);

    // the eigenvector fixes alpha up to scale; pin it on the known rows
    const VectorXd d_alpha = d_k * alpha;
    const double denom = d_alpha.squaredNorm();
    if (denom <= 1e-14) throw InconsistentSideInfo("known rows cannot be matched by any scaling");
    const double gamma = d_alpha.dot(x_k) / denom;
    alpha *= gamma;
    if ((d_k * alpha - x_k).norm() > 1e-6 * std::max(1.0, x_k.norm()))
        throw InconsistentSideInfo("no scaling of the principal direction satisfies D_K alpha = x_K");

    out.alpha = alpha;
    out.h = w_hat.transpose() * alpha / alpha.squaredNorm();
    return out;
}

double metric_rmse_blind(const VectorXd& x_true, const VectorXd& h_true, const VectorXd& x_hat,
                         const VectorXd& h_hat, int k) {
    if (x_true.size() != x_hat.size() || h_true.size() != h_hat.size())
        throw DimensionMismatch("mismatched estimate dimensions");
    const long rows = x_true.size();
    const long l = h_true.size();
    const double denom = static_cast<double>(rows - k) * static_cast<double>(l);
    if (denom <= 0) throw DimensionMismatch("metric undefined for K >= rows");
    return (x_hat * h_hat.transpose() - x_true * h_true.transpose()).norm() / denom;
}

namespace {

struct SideInfoSplit {
    std::vector<int> kept_rows;          // rows remaining in the reduced problem
    std::vector<int> nonzero_k_reduced;  // reduced indices of nonzero knowns
    VectorXd nonzero_values;
};

SideInfoSplit split_side_info(int n, const std::optional<KnownValues>& known) {
    SideInfoSplit s;
    std::vector<char> zero_known(n, 0);
    std::vector<std::pair<int, double>> nonzero;
    if (known) {
        for (int i = 0; i < known->k.size(); ++i) {
            const int idx = known->k.indices()[i];
            const double value = known->x_k(i);
            if (value == 0.0)
                zero_known[idx] = 1;
            else
                nonzero.emplace_back(idx, value);
        }
    }
    std::vector<int> reduced_of(n, -1);
    for (int i = 0; i < n; ++i) {
        if (zero_known[i]) continue;
        reduced_of[i] = static_cast<int>(s.kept_rows.size());
        s.kept_rows.push_back(i);
    }
    s.nonzero_values = VectorXd(nonzero.size());
    for (std::size_t i = 0; i < nonzero.size(); ++i) {
        s.nonzero_k_reduced.push_back(reduced_of[nonzero[i].first]);
        s.nonzero_values(static_cast<long>(i)) = nonzero[i].second;
    }
    return s;
}

// proportional-row constraints z_{k_i}^T x_{k_{i+1}} = z_{k_{i+1}}^T x_{k_i}
// as rows over vec(Z), Z of shape rows x l
std::optional<MatrixXd> proportional_row_constraints(const std::vector<int>& k_rows,
                                                     const VectorXd& x_k, int rows, int l) {
    const int kk = static_cast<int>(k_rows.size());
    if (kk < 2) return std::nullopt;
    MatrixXd eq = MatrixXd::Zero((kk - 1) * l, rows * l);
    int row = 0;
    for (int i = 0; i + 1 < kk; ++i) {
        for (int j = 0; j < l; ++j) {
            eq(row, k_rows[i] + j * rows) = x_k(i + 1);
            eq(row, k_rows[i + 1] + j * rows) = -x_k(i);
            ++row;
        }
    }
    return eq;
}

}  // namespace

BlindResult blind_recover(const BlindProblem& p) {
    const int n = p.shift.n();
    if (p.l < 1) throw DimensionMismatch("filter length must be >= 1");
    if (p.obs.y_m.size() != p.obs.m.size()) throw DimensionMismatch("|y_M| != |M|");
    if (p.obs.m.ambient() != n) throw DimensionMismatch("sampling ambient != node count");
    if (p.tau_x < 0 || p.tau_h < 0) throw InvalidConfig("negative regularization weight");
    const VectorXd w_l = p.w_l.size() ? p.w_l : VectorXd::Ones(p.l);
    if (w_l.size() != p.l) throw DimensionMismatch("weight count != filter length");

    const SideInfoSplit side = split_side_info(n, p.obs.known);
    const int n_red = static_cast<int>(side.kept_rows.size());
    if (n_red == 0) throw InvalidConfig("all inputs are known to be zero");

    const MatrixXd p_full = lifted_operator_p(p.shift, p.l);
    MatrixXd p_m(p.obs.m.size(), n_red * p.l);
    for (int r = 0; r < p.obs.m.size(); ++r) {
        const int node = p.obs.m.indices()[r];
        for (int j = 0; j < p.l; ++j)
            for (int i = 0; i < n_red; ++i)
                p_m(r, i + j * n_red) = p_full(node, side.kept_rows[i] + j * n);
    }

    const auto extra = proportional_row_constraints(side.nonzero_k_reduced, side.nonzero_values,
                                                    n_red, p.l);
    const MmLoopResult mm = run_mm(p_m, p.obs.y_m, n_red, p.l, p.tau_x, p.tau_h, w_l, extra,
                                   p.obs.eps, p.mm);

    VectorXd x_red, h;
    if (!side.nonzero_k_reduced.empty()) {
        SelectionSet k_red(side.nonzero_k_reduced, n_red);
        std::tie(x_red, h) = rank_one_known_inputs(mm.z, k_red, side.nonzero_values);
    } else {
        std::tie(x_red, h) = rank_one_plain(mm.z);
        const double norm = x_red.norm();
        if (norm > 0) {
            h *= norm;
            x_red /= norm;
        }
    }

    BlindResult out;
    out.z_hat = MatrixXd::Zero(n, p.l);
    out.x_hat = VectorXd::Zero(n);
    for (int i = 0; i < n_red; ++i) {
        out.z_hat.row(side.kept_rows[i]) = mm.z.row(i);
        out.x_hat(side.kept_rows[i]) = x_red(i);
    }
    out.h_hat = h;
    out.iterations = mm.iterations;
    out.history = mm.history;
    out.singular_values = singular_values_of(out.z_hat);
    out.y_hat = apply_filter(p.shift, GraphFilter{out.h_hat}, out.x_hat);
    return out;
}

BlindResult blind_recover_subspace(const BlindProblem& p) {
    if (!p.dict) throw DimensionMismatch("subspace recovery requires an input dictionary");
    if (p.dict->kind != DictionaryKind::input) throw DimensionMismatch("need an input dictionary");
    const int n = p.shift.n();
    const int ds = p.dict->atoms();
    if (p.dict->d.rows() != n) throw DimensionMismatch("dictionary rows != node count");
    if (p.obs.y_m.size() != p.obs.m.size()) throw DimensionMismatch("|y_M| != |M|");

    const MatrixXd t_full = lifted_operator_t(p.shift, *p.dict, p.l);
    const MatrixXd t_m = p.obs.m.select_rows(t_full);

    // zero-valued knowns pin d_k' W = 0; nonzero pairs give proportionality rows
    std::vector<int> nonzero_nodes;
    std::vector<double> nonzero_values;
    std::vector<int> zero_nodes;
    if (p.obs.known) {
        for (int i = 0; i < p.obs.known->k.size(); ++i) {
            const int node = p.obs.known->k.indices()[i];
            const double value = p.obs.known->x_k(i);
            if (value == 0.0)
                zero_nodes.push_back(node);
            else {
                nonzero_nodes.push_back(node);
                nonzero_values.push_back(value);
            }
        }
    }
    const int kk = static_cast<int>(nonzero_nodes.size());
    std::optional<MatrixXd> extra;
    {
        const int pair_rows = kk >= 2 ? (kk - 1) * p.l : 0;
        const int zero_rows = static_cast<int>(zero_nodes.size()) * p.l;
        if (pair_rows + zero_rows > 0) {
            MatrixXd eq = MatrixXd::Zero(pair_rows + zero_rows, ds * p.l);
            int row = 0;
            for (int i = 0; i + 1 < kk; ++i)
                for (int j = 0; j < p.l; ++j) {
                    for (int a = 0; a < ds; ++a)
                        eq(row, a + j * ds) = p.dict->d(nonzero_nodes[i], a) * nonzero_values[i + 1] -
                                              p.dict->d(nonzero_nodes[i + 1], a) * nonzero_values[i];
                    ++row;
                }
            for (int node : zero_nodes)
                for (int j = 0; j < p.l; ++j) {
                    for (int a = 0; a < ds; ++a) eq(row, a + j * ds) = p.dict->d(node, a);
                    ++row;
                }
            extra = std::move(eq);
        }
    }

    const MmLoopResult mm = run_mm(t_m, p.obs.y_m, ds, p.l, 0.0, 0.0, VectorXd::Ones(p.l), extra,
                                   p.obs.eps, p.mm);

    BlindResult out;
    out.z_hat = mm.z;
    out.iterations = mm.iterations;
    out.history = mm.history;
    out.singular_values = singular_values_of(mm.z);

    if (kk >= 2) {
        std::vector<int> k_sorted = nonzero_nodes;
        VectorXd values(kk);
        // selection sets are sorted; reorder the values to match
        std::vector<int> order(kk);
        for (int i = 0; i < kk; ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](int a, int b) { return nonzero_nodes[a] < nonzero_nodes[b]; });
        for (int i = 0; i < kk; ++i) {
            k_sorted[i] = nonzero_nodes[order[i]];
            values(i) = nonzero_values[order[i]];
        }
        const SubspaceRankOne fit =
            rank_one_subspace_known_inputs(mm.z, p.dict->d, SelectionSet(k_sorted, n), values);
        out.alpha_hat = fit.alpha;
        out.h_hat = fit.h;
    } else {
        auto [alpha, h] = rank_one_plain(mm.z);
        if (kk == 1) {
            // a single known value fixes the scale
            const double pred = p.dict->d.row(nonzero_nodes[0]).dot(alpha);
            if (std::abs(pred) <= 1e-14)
                throw InconsistentSideInfo("known row is orthogonal to the recovered direction");
            const double gamma = nonzero_values[0] / pred;
            alpha *= gamma;
            h /= gamma;
        } else {
            const double norm = alpha.norm();
            if (norm > 0) {
                h *= norm;
                alpha /= norm;
            }
        }
        out.alpha_hat = alpha;
        out.h_hat = h;
    }
    out.x_hat = p.dict->d * out.alpha_hat;
    out.y_hat = apply_filter(p.shift, GraphFilter{out.h_hat}, out.x_hat);
    return out;
}

}  // namespace graphdeconv
