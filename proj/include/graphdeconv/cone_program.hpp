#ifndef GRAPHDECONV_CONE_PROGRAM_HPP
#define GRAPHDECONV_CONE_PROGRAM_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <optional>
#include <string>
#include <vector>

#include "graphdeconv/errors.hpp"

namespace graphdeconv {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using SparseMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

enum class ConeType { free_slice, nonneg, soc, psd };

// Cone membership of a contiguous slice of the variable vector. PSD slices
// hold svec(X): column-major lower triangle with off-diagonal entries scaled
// by sqrt(2), so the Euclidean inner product equals Tr(XY).
struct ConeSlice {
    ConeType type = ConeType::free_slice;
    int start = 0;
    int dim = 0;   // slice length (svec length for psd)
    int side = 0;  // matrix side for psd slices

    static ConeSlice free(int start, int dim) { return {ConeType::free_slice, start, dim, 0}; }
    static ConeSlice nonneg(int start, int dim) { return {ConeType::nonneg, start, dim, 0}; }
    static ConeSlice soc(int start, int dim) { return {ConeType::soc, start, dim, 0}; }
    static ConeSlice psd(int start, int side) { return {ConeType::psd, start, side * (side + 1) / 2, side}; }
};

// min c'z  s.t.  A z = b,  slice_k(z) in K_k.
struct ConeProgram {
    VectorXd c;
    SparseMat a;  // p x n
    VectorXd b;
    std::vector<ConeSlice> cones;

    int num_vars() const { return static_cast<int>(c.size()); }
    int num_eq() const { return static_cast<int>(b.size()); }

    void validate() const;

    // Debug dump: objective, equality triplets, cone list.
    std::string dump_json() const;
};

enum class SolveStatus { optimal, infeasible, unbounded, max_iters };

std::string to_string(SolveStatus status);

struct SolveResult {
    VectorXd z;
    SolveStatus status = SolveStatus::max_iters;
    double objective_value = 0.0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double gap = 0.0;
    int iterations = 0;
};

struct SolveOptions {
    double feas_tol = 1e-8;
    double gap_tol = 1e-8;
    int max_iters = 100;
};

// Primal-dual interior-point solve; infeasible/unbounded are reported via
// status, NumericalBreakdown is thrown on factorization failure.
SolveResult solve(const ConeProgram& program, const SolveOptions& opts = {});

// ---- svec helpers (shared by the builders and the solver) ----

inline int svec_dim(int side) { return side * (side + 1) / 2; }

// index of entry (i, j), i >= j, in column-major lower-triangular packing
inline int svec_index(int i, int j, int side) {
    return j * side - j * (j - 1) / 2 + (i - j);
}

VectorXd svec(const MatrixXd& x);
MatrixXd smat(const VectorXd& v);

// ---- builders ----

// Epigraph form of  min sum_n w_n |x_n|  s.t. a_eq x = b_eq, via the split
// x = u - v with u, v >= 0. Variable layout: [u(n), v(n), (t0, r(m)) when
// noise_eps is set], where ||r||_2 <= t0 = sqrt(noise_eps) relaxes the
// equalities to a norm ball.
struct WeightedL1Program {
    ConeProgram program;
    int n = 0;

    VectorXd extract_x(const VectorXd& z) const {
        return z.head(n) - z.segment(n, n);
    }
};

WeightedL1Program build_weighted_l1(const MatrixXd& a_eq, const VectorXd& b_eq,
                                    const VectorXd& weights,
                                    std::optional<double> noise_eps = std::nullopt);

// One majorization step of the lifted rank surrogate:
//   min Tr(D1 T1) + Tr(D2 T2) + tau_x sum_n a_n ||row_n(Z)|| + tau_h sum_l w_l b_l ||col_l(Z)||
//   s.t. y = P_M vec(Z) (or ||y - P_M vec(Z)||^2 <= eps), [[T1, Z],[Z', T2]] >= 0,
// plus optional extra equality rows over vec(Z).
struct MmSdpWeights {
    MatrixXd delta1;  // rows x rows
    MatrixXd delta2;  // l x l
    VectorXd a_n;     // rows
    VectorXd b_l;     // l
    VectorXd w_l;     // l
    double tau_x = 0.0;
    double tau_h = 0.0;
};

struct MmSdpProgram {
    ConeProgram program;
    int rows = 0;  // N (or D_x)
    int l = 0;
    int side = 0;  // rows + l

    MatrixXd extract_z(const VectorXd& z) const;
    MatrixXd extract_theta1(const VectorXd& z) const;
    MatrixXd extract_theta2(const VectorXd& z) const;
};

MmSdpProgram build_mm_sdp(const MatrixXd& lifted_op_m, const VectorXd& y_obs,
                          const MmSdpWeights& weights,
                          const std::optional<MatrixXd>& extra_eq = std::nullopt,
                          std::optional<double> noise_eps = std::nullopt);

}  // namespace graphdeconv

#endif
