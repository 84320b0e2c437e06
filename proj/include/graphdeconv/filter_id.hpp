#ifndef GRAPHDECONV_FILTER_ID_HPP
#define GRAPHDECONV_FILTER_ID_HPP

#include <optional>
#include <vector>

#include "graphdeconv/graph.hpp"
#include "graphdeconv/sparse_recovery.hpp"

namespace graphdeconv {

// Filter identification when the input signal is known: the observations obey
// y_M = C_M [x, Sx, ..., S^{L-1}x] h.
struct KnownInputProblem {
    GraphShift shift;
    VectorXd x;
    ObservationModel obs;
    int l = 0;                       // coefficient count (sparse model)
    VectorXd w_l;                    // positive tap weights (empty = uniform)
    std::optional<Dictionary> dict;  // filter subspace D_h (L x D_h)
    bool sparse_alpha = false;       // subspace model: treat alpha as sparse
};

struct FilterEstimate {
    VectorXd h_hat;
    VectorXd alpha_hat;  // subspace model only
    VectorXd y_hat;      // full reconstructed output
    bool rank_deficient = false;
    int iterations = 0;
    std::vector<double> history;  // sum_l w_l log(|h_l| + eps0) per iterate
};

struct FilterIdOptions {
    double eps0 = 1e-3;
    int max_iters = 10;
    double rel_tol = 1e-4;
    Surrogate surrogate = Surrogate::log;
};

// Krylov columns [x, Sx, ..., S^{l-1}x]; equals P (I_L kron x).
MatrixXd input_response_matrix(const GraphShift& shift, const VectorXd& x, int l);

// w_l = (1 - exp(-beta l)) / (1 - exp(-beta L)), l = 1..L (tap h_{l-1} gets w_l).
VectorXd exponential_weights(int l_len, double beta);

FilterEstimate identify_sparse_filter(const KnownInputProblem& p, const FilterIdOptions& opts = {});

FilterEstimate identify_subspace_filter(const KnownInputProblem& p, const FilterIdOptions& opts = {});

}  // namespace graphdeconv

#endif
