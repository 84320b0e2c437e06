#include "graphdeconv/sparse_recovery.hpp"

#include <algorithm>
#include <cmath>

#include "graphdeconv/cone_program.hpp"

namespace graphdeconv {

namespace {

void check_observations(const ObservationModel& obs, int n) {
    if (obs.m.ambient() != n) throw DimensionMismatch("sampling set ambient != node count");
    if (obs.y_m.size() != obs.m.size()) throw DimensionMismatch("|y_M| != |M|");
    if (obs.eps < 0) throw InvalidConfig("negative noise budget");
}

// columns of a restricted to a selection over its column index space
MatrixXd select_columns(const MatrixXd& a, const SelectionSet& sel) {
    MatrixXd out(a.rows(), sel.size());
    for (int c = 0; c < sel.size(); ++c) out.col(c) = a.col(sel.indices()[c]);
    return out;
}

bool solve_usable(const SolveResult& r) {
    if (r.status == SolveStatus::optimal) return true;
    if (r.status != SolveStatus::max_iters) return false;
    return r.primal_residual <= 1e-6 && r.dual_residual <= 1e-6;
}

RecoveryResult recover_core(const KnownFilterProblem& p, Surrogate surrogate,
                            const ReweightOptions& opts) {
    if (p.obs.known) {
        const KnownFilterProblem reduced = reduce_known_inputs(p);
        RecoveryResult res = recover_core(reduced, surrogate, opts);
        // reinsert the known values and refresh the dependent fields
        VectorXd x_model = p.dict ? res.alpha_hat : res.x_hat;
        const KnownValues& kv = *p.obs.known;
        for (int i = 0; i < kv.k.size(); ++i) x_model(kv.k.indices()[i]) = kv.x_k(i);
        if (p.dict) {
            res.alpha_hat = x_model;
            res.x_hat = p.dict->d * x_model;
        } else {
            res.x_hat = x_model;
        }
        res.y_hat = apply_filter(p.shift, p.filter, res.x_hat);
        res.support_hat = localize_support(res);
        return res;
    }

    const int n = p.shift.n();
    check_observations(p.obs, n);
    const int model_dim = p.input_dim();
    if (p.variables.ambient() != model_dim)
        throw DimensionMismatch("variable set does not match the input model");

    const MatrixXd h_full = filter_matrix(p.shift, p.filter);
    const MatrixXd h_m = p.obs.m.select_rows(h_full);
    const MatrixXd a_model = p.dict ? MatrixXd(h_m * p.dict->d) : h_m;
    const MatrixXd a_eff = select_columns(a_model, p.variables);
    const int nv = p.variables.size();

    RecoveryResult res;
    VectorXd x_v = VectorXd::Zero(nv);

    if (nv == 0) {
        // everything known; only feasibility remains
        const double resid = p.obs.y_m.norm();
        const bool ok = p.obs.eps > 0 ? resid * resid <= p.obs.eps + 1e-9 : resid <= 1e-8;
        if (!ok) throw Infeasible("known values are inconsistent with the observations");
        res.iterations = 0;
    } else {
        VectorXd weights = VectorXd::Ones(nv);
        const int iters = surrogate == Surrogate::l1 ? 1 : opts.max_iters;
        std::optional<double> noise =
            p.obs.eps > 0 ? std::optional<double>(p.obs.eps) : std::nullopt;
        for (int it = 0; it < iters; ++it) {
            const WeightedL1Program prog = build_weighted_l1(a_eff, p.obs.y_m, weights, noise);
            const SolveResult sol = solve(prog.program);
            if (sol.status == SolveStatus::infeasible)
                throw Infeasible("observations admit no input under the model");
            if (!solve_usable(sol)) throw NumericalBreakdown("recovery subproblem solve failed");
            const VectorXd x_new = prog.extract_x(sol.z);
            double surrogate_value = 0.0;
            for (int i = 0; i < nv; ++i) surrogate_value += std::log(std::abs(x_new(i)) + opts.eps0);
            res.history.push_back(surrogate_value);
            res.iterations = it + 1;
            const double change = (x_new - x_v).norm();
            const double scale = std::max(x_v.norm(), 1e-12);
            x_v = x_new;
            if (it > 0 && change / scale < opts.rel_tol) break;
            for (int i = 0; i < nv; ++i) weights(i) = 1.0 / (std::abs(x_v(i)) + opts.eps0);
        }
    }

    VectorXd x_model = VectorXd::Zero(model_dim);
    for (int i = 0; i < nv; ++i) x_model(p.variables.indices()[i]) = x_v(i);
    if (p.dict) {
        res.alpha_hat = x_model;
        res.x_hat = p.dict->d * x_model;
    } else {
        res.x_hat = x_model;
    }
    res.y_hat = apply_filter(p.shift, p.filter, res.x_hat);
    res.support_hat = localize_support(res);
    return res;
}

}  // namespace

KnownFilterProblem make_known_filter_problem(GraphShift shift, GraphFilter filter,
                                             ObservationModel obs, std::optional<Dictionary> dict) {
    if (dict && dict->kind != DictionaryKind::input)
        throw DimensionMismatch("known-filter problems take an input dictionary");
    if (dict && dict->d.rows() != shift.n())
        throw DimensionMismatch("dictionary rows != node count");
    if (dict && obs.known)
        throw InvalidConfig("known input values are not supported together with a subspace model");
    const int dim = dict ? dict->atoms() : shift.n();
    KnownFilterProblem p{std::move(shift), std::move(filter), std::move(obs), std::move(dict),
                         SelectionSet::full(dim)};
    check_observations(p.obs, p.shift.n());
    if (p.obs.known) {
        if (p.obs.known->k.ambient() != dim) throw DimensionMismatch("known set ambient mismatch");
        if (p.obs.known->x_k.size() != p.obs.known->k.size())
            throw DimensionMismatch("known value count mismatch");
    }
    return p;
}

RecoveryResult recover_l1(const KnownFilterProblem& p) {
    return recover_core(p, Surrogate::l1, ReweightOptions{});
}

RecoveryResult recover_reweighted(const KnownFilterProblem& p, const ReweightOptions& opts) {
    return recover_core(p, Surrogate::log, opts);
}

KnownFilterProblem reduce_known_inputs(const KnownFilterProblem& p) {
    if (!p.obs.known) return p;
    if (p.dict) throw InvalidConfig("known input values are not supported together with a subspace model");
    const KnownValues& kv = *p.obs.known;
    KnownFilterProblem out = p;
    if (kv.k.size() > 0) {
        const MatrixXd h_full = filter_matrix(p.shift, p.filter);
        const MatrixXd h_m = p.obs.m.select_rows(h_full);
        const MatrixXd h_mk = select_columns(h_m, kv.k);
        out.obs.y_m = p.obs.y_m - h_mk * kv.x_k;
    }
    out.obs.known.reset();
    out.variables = kv.k.complement();
    return out;
}

KnownFilterProblem subspace_input_wrap(const KnownFilterProblem& p) {
    if (!p.dict) throw DimensionMismatch("subspace wrap requires a dictionary");
    if (p.dict->d.rows() != p.shift.n()) throw DimensionMismatch("dictionary rows != node count");
    KnownFilterProblem out = p;
    out.variables = SelectionSet::full(p.dict->atoms());
    return out;
}

std::vector<int> localize_support(const RecoveryResult& result, double rel_threshold) {
    const VectorXd& v = result.alpha_hat.size() ? result.alpha_hat : result.x_hat;
    std::vector<int> support;
    if (v.size() == 0) return support;
    const double top = v.cwiseAbs().maxCoeff();
    if (top <= 0) return support;
    const double cut = rel_threshold * top;
    for (int i = 0; i < v.size(); ++i)
        if (std::abs(v(i)) > cut) support.push_back(i);
    return support;
}

}  // namespace graphdeconv
