#ifndef GRAPHDECONV_SPARSE_RECOVERY_HPP
#define GRAPHDECONV_SPARSE_RECOVERY_HPP

#include <optional>
#include <vector>

#include "graphdeconv/graph.hpp"
#include "graphdeconv/sampling.hpp"

namespace graphdeconv {

struct KnownValues {
    SelectionSet k;  // input entries with known values
    VectorXd x_k;
};

struct ObservationModel {
    SelectionSet m;  // observed output nodes
    VectorXd y_m;
    std::optional<KnownValues> known;
    double eps = 0.0;  // when > 0: ||y_M - H_M x||_2^2 <= eps replaces equality
};

enum class Surrogate { l1, log };

// Recovery of a sparse (or subspace) input when the diffusing filter is known.
// `variables` lists the input entries still being solved for; it shrinks when
// known values are eliminated. For the subspace model it indexes atoms.
struct KnownFilterProblem {
    GraphShift shift;
    GraphFilter filter;
    ObservationModel obs;
    std::optional<Dictionary> dict;  // input subspace model
    SelectionSet variables;

    int input_dim() const { return dict ? dict->atoms() : shift.n(); }
};

KnownFilterProblem make_known_filter_problem(GraphShift shift, GraphFilter filter,
                                             ObservationModel obs,
                                             std::optional<Dictionary> dict = std::nullopt);

struct RecoveryResult {
    VectorXd x_hat;      // length N
    VectorXd alpha_hat;  // atom coefficients (subspace model only)
    VectorXd y_hat;      // H x_hat on all nodes
    std::vector<int> support_hat;
    int iterations = 0;
    std::vector<double> history;  // sum_n log(|x_n| + eps0) per accepted iterate
};

struct ReweightOptions {
    double eps0 = 1e-3;
    int max_iters = 10;
    double rel_tol = 1e-4;
};

// plain l1 surrogate (one iteration)
RecoveryResult recover_l1(const KnownFilterProblem& p);

// reweighted (log-surrogate) recovery via majorization-minimization
RecoveryResult recover_reweighted(const KnownFilterProblem& p, const ReweightOptions& opts = {});

// Eliminates the known input values: adjusts observations, clears `known`,
// and restricts `variables` to the complement of K.
KnownFilterProblem reduce_known_inputs(const KnownFilterProblem& p);

// Validates and normalizes a subspace-model problem so that recovery runs
// over the atom coefficients.
KnownFilterProblem subspace_input_wrap(const KnownFilterProblem& p);

// Thresholded support of the model-sparse vector (alpha for the subspace
// model, x otherwise). Threshold is relative to the largest magnitude.
std::vector<int> localize_support(const RecoveryResult& result, double rel_threshold = 1e-6);

}  // namespace graphdeconv

#endif
