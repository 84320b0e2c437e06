#ifndef GRAPHDECONV_SAMPLING_HPP
#define GRAPHDECONV_SAMPLING_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "graphdeconv/graph.hpp"

namespace graphdeconv {

// Ordered index set acting as the binary selection matrix C (rows are
// canonical vectors).
class SelectionSet {
public:
    SelectionSet() = default;
    SelectionSet(std::vector<int> indices, int n);

    static SelectionSet full(int n);

    const std::vector<int>& indices() const { return indices_; }
    int size() const { return static_cast<int>(indices_.size()); }
    int ambient() const { return n_; }
    bool contains(int i) const;

    SelectionSet complement() const;

    // C A: selected rows of a matrix / entries of a vector.
    MatrixXd select_rows(const MatrixXd& a) const;
    VectorXd select(const VectorXd& v) const;

private:
    std::vector<int> indices_;
    int n_ = 0;
};

struct CoherenceReport {
    double rho = 0.0;
    double xi = 0.0;
    int reduced_columns = 0;  // columns dropped as numerically zero
};

// rho/xi over the Gram matrix Q = A^T A, after dropping columns whose norm is
// below 1e-12 relative to the largest column norm. Throws AllColumnsZero when
// fewer than two columns survive.
CoherenceReport coherence_rho(const MatrixXd& a);

enum class GreedyInit { exhaustive_pair, random_pair };

// Greedy forward selection of m rows of a_full minimizing rho of the grown
// row submatrix; ties broken by lowest index.
SelectionSet greedy_sample(const MatrixXd& a_full, int m,
                           GreedyInit init = GreedyInit::exhaustive_pair,
                           std::uint64_t seed = 0);

// Global minimizer of rho over all size-m row subsets (guarded brute force).
SelectionSet exhaustive_sample(const MatrixXd& a_full, int m);

// True iff every 2s-column submatrix of a has full rank 2s.
bool spark_check(const MatrixXd& a, int s);

}  // namespace graphdeconv

#endif
