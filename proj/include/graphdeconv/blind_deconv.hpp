#ifndef GRAPHDECONV_BLIND_DECONV_HPP
#define GRAPHDECONV_BLIND_DECONV_HPP

#include <optional>
#include <utility>
#include <vector>

#include "graphdeconv/graph.hpp"
#include "graphdeconv/sampling.hpp"
#include "graphdeconv/sparse_recovery.hpp"

namespace graphdeconv {

enum class RankSurrogate { logdet, nuclear };

struct MmOptions {
    double eps1 = 1e-2;  // logdet shift
    double eps2 = 1e-2;  // row-norm shift
    double eps3 = 1e-2;  // column-norm shift
    int max_iters = 10;
    double rel_tol = 1e-4;
    RankSurrogate surrogate = RankSurrogate::logdet;
};

// Joint input/filter recovery: only the shift and the filter length are
// known. Lifted variable Z = x h^T (or W = alpha h^T under the subspace
// model), estimated through a logdet/nuclear rank surrogate.
struct BlindProblem {
    GraphShift shift;
    int l = 0;
    ObservationModel obs;                 // `known` carries x_K side information
    double tau_x = 0.0;
    double tau_h = 0.0;
    VectorXd w_l;                         // tap weights (empty = uniform)
    std::optional<Dictionary> dict;       // input subspace model
    MmOptions mm;
};

struct BlindResult {
    MatrixXd z_hat;        // N x L (or D_x x L in the subspace model)
    VectorXd x_hat;        // length N
    VectorXd alpha_hat;    // subspace model only
    VectorXd h_hat;
    VectorXd y_hat;
    int iterations = 0;
    std::vector<double> history;  // surrogate value per MM iterate
    VectorXd singular_values;     // of z_hat
};

BlindResult blind_recover(const BlindProblem& p);

// subspace variant over W = alpha_x h^T (requires p.dict)
BlindResult blind_recover_subspace(const BlindProblem& p);

// best rank-one factorization from the principal singular pair
std::pair<VectorXd, VectorXd> rank_one_plain(const MatrixXd& z_hat);

// best rank-one factorization consistent with known input values x_K
std::pair<VectorXd, VectorXd> rank_one_known_inputs(const MatrixXd& z_hat, const SelectionSet& k,
                                                    const VectorXd& x_k);

struct SubspaceRankOne {
    VectorXd alpha;
    VectorXd h;
    bool singular_b = false;  // BB' was rank deficient; pseudo-inverse used
};

// subspace analogue: best rank-one W = alpha h^T with D_K alpha = x_K (K >= 2)
SubspaceRankOne rank_one_subspace_known_inputs(const MatrixXd& w_hat, const MatrixXd& d_x,
                                               const SelectionSet& k, const VectorXd& x_k);

// ||x_hat h_hat' - x h'||_F / ((rows - k) * L)
double metric_rmse_blind(const VectorXd& x_true, const VectorXd& h_true, const VectorXd& x_hat,
                         const VectorXd& h_hat, int k);

}  // namespace graphdeconv

#endif
