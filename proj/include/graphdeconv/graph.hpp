#ifndef GRAPHDECONV_GRAPH_HPP
#define GRAPHDECONV_GRAPH_HPP

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

#include "graphdeconv/errors.hpp"

namespace graphdeconv {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Spectral data of a shift operator: S = V diag(lambda) U with U = V^{-1},
// eigenvalues sorted non-increasing.
struct Spectrum {
    MatrixXd v;
    MatrixXd u;
    VectorXd lambda;
};

// Graph shift operator. The spectral part is optional so that purely local
// operations (filtering) remain usable on shifts with complex spectra.
class GraphShift {
public:
    static GraphShift without_spectrum(MatrixXd s);

    int n() const { return static_cast<int>(s_.rows()); }
    const MatrixXd& s() const { return s_; }
    bool symmetric() const { return symmetric_; }
    bool has_spectrum() const { return spectrum_.has_value(); }

    const MatrixXd& v() const { return spectrum().v; }
    const MatrixXd& u() const { return spectrum().u; }
    const VectorXd& lambda() const { return spectrum().lambda; }

    const Spectrum& spectrum() const {
        if (!spectrum_) throw Error("GraphShift: spectral decomposition not available");
        return *spectrum_;
    }

    friend GraphShift eigendecompose(const MatrixXd& s);

private:
    GraphShift(MatrixXd s, bool symmetric, std::optional<Spectrum> spec)
        : s_(std::move(s)), symmetric_(symmetric), spectrum_(std::move(spec)) {}

    MatrixXd s_;
    bool symmetric_ = false;
    std::optional<Spectrum> spectrum_;
};

struct GraphFilter {
    VectorXd h;

    int length() const { return static_cast<int>(h.size()); }
    int order() const { return length() - 1; }
};

enum class DictionaryKind { input, filter };

// Dense dictionary: N x D_x for input subspaces, L x D_h for filter subspaces.
struct Dictionary {
    MatrixXd d;
    DictionaryKind kind = DictionaryKind::input;

    int atoms() const { return static_cast<int>(d.cols()); }
};

Dictionary make_dictionary(MatrixXd d, DictionaryKind kind);

struct DiffusedSignal {
    VectorXd x;
    VectorXd y;
    std::vector<int> support;  // indices of nonzeros of x
};

// S = V diag(lambda) V^{-1}; throws NotDiagonalizable on complex spectra,
// large reconstruction residual, or cond(V) > 1e12.
GraphShift eigendecompose(const MatrixXd& s);

// Psi[i, l] = lambda_i^l, N x L.
MatrixXd vandermonde(const GraphShift& shift, int l);

// y = sum_l h_l S^l x via the shift recursion; S^l never formed.
VectorXd apply_filter(const GraphShift& shift, const GraphFilter& filter, const VectorXd& x);

// Dense H = sum_l h_l S^l.
MatrixXd filter_matrix(const GraphShift& shift, const GraphFilter& filter);

// P = V (Psi^T kr U^T)^T, N x (N*L); satisfies P vec(x h^T) = H x with
// column-major vec.
MatrixXd lifted_operator_p(const GraphShift& shift, int l);

// T = V (Psi^T kr (U D_x)^T)^T, N x (D_x*L); T vec(a h^T) = H D_x a.
MatrixXd lifted_operator_t(const GraphShift& shift, const Dictionary& dict, int l);

}  // namespace graphdeconv

#endif
