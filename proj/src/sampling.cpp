#include "graphdeconv/sampling.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>

#include "graphdeconv/rng.hpp"

namespace graphdeconv {

SelectionSet::SelectionSet(std::vector<int> indices, int n) : indices_(std::move(indices)), n_(n) {
    for (std::size_t i = 0; i < indices_.size(); ++i) {
        if (indices_[i] < 0 || indices_[i] >= n_) throw DimensionMismatch("selection index out of range");
        if (i > 0 && indices_[i] <= indices_[i - 1])
            throw DimensionMismatch("selection indices must be strictly increasing");
    }
}

SelectionSet SelectionSet::full(int n) {
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    return SelectionSet(std::move(idx), n);
}

bool SelectionSet::contains(int i) const {
    return std::binary_search(indices_.begin(), indices_.end(), i);
}

SelectionSet SelectionSet::complement() const {
    std::vector<int> rest;
    rest.reserve(n_ - size());
    for (int i = 0; i < n_; ++i)
        if (!contains(i)) rest.push_back(i);
    return SelectionSet(std::move(rest), n_);
}

MatrixXd SelectionSet::select_rows(const MatrixXd& a) const {
    if (a.rows() != n_) throw DimensionMismatch("selection ambient dimension mismatch");
    MatrixXd out(size(), a.cols());
    for (int r = 0; r < size(); ++r) out.row(r) = a.row(indices_[r]);
    return out;
}

VectorXd SelectionSet::select(const VectorXd& v) const {
    if (v.size() != n_) throw DimensionMismatch("selection ambient dimension mismatch");
    VectorXd out(size());
    for (int r = 0; r < size(); ++r) out(r) = v(indices_[r]);
    return out;
}

namespace {

constexpr double kZeroColumnTol = 1e-12;

// rho/xi evaluated from a precomputed Gram matrix.
CoherenceReport report_from_gram(const MatrixXd& q) {
    const int n = static_cast<int>(q.rows());
    double max_diag = 0.0;
    for (int i = 0; i < n; ++i) max_diag = std::max(max_diag, q(i, i));
    const double cutoff = kZeroColumnTol * kZeroColumnTol * max_diag;  // threshold on squared norms

    std::vector<int> keep;
    keep.reserve(n);
    for (int i = 0; i < n; ++i)
        if (q(i, i) > cutoff) keep.push_back(i);

    CoherenceReport rep;
    rep.reduced_columns = n - static_cast<int>(keep.size());
    const int nc = static_cast<int>(keep.size());
    if (nc < 2) throw AllColumnsZero("fewer than two nonzero columns");

    double sum = 0.0;
    double worst = 0.0;
    for (int a = 0; a < nc; ++a) {
        const int i = keep[a];
        for (int b = a + 1; b < nc; ++b) {
            const int j = keep[b];
            const double term = q(i, j) * q(i, j) / (q(i, i) * q(j, j));
            sum += term;
            worst = std::max(worst, term);
        }
    }
    rep.rho = sum / (static_cast<double>(nc) * (nc - 1));
    rep.xi = worst;
    return rep;
}

double rho_or_inf(const MatrixXd& q) {
    try {
        return report_from_gram(q).rho;
    } catch (const AllColumnsZero&) {
        return std::numeric_limits<double>::infinity();
    }
}

// rho of the two-row submatrix (r1, r2) in O(cols) using normalized rows.
double pair_rho(const MatrixXd& a_full, int r1, int r2) {
    const int n = static_cast<int>(a_full.cols());
    double max_u = 0.0;
    std::vector<double> ah(n), bh(n);
    for (int i = 0; i < n; ++i) {
        const double ai = a_full(r1, i);
        const double bi = a_full(r2, i);
        const double u = ai * ai + bi * bi;
        max_u = std::max(max_u, u);
        ah[i] = ai;
        bh[i] = bi;
    }
    const double cutoff = kZeroColumnTol * kZeroColumnTol * max_u;
    int nc = 0;
    double saa = 0.0, sbb = 0.0, sab = 0.0, sdiag = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = ah[i] * ah[i] + bh[i] * bh[i];
        if (u <= cutoff) continue;
        ++nc;
        const double inv = 1.0 / std::sqrt(u);
        const double na = ah[i] * inv;
        const double nb = bh[i] * inv;
        saa += na * na;
        sbb += nb * nb;
        sab += na * nb;
        const double d = na * na + nb * nb;  // == 1, kept for clarity of the identity
        sdiag += d * d;
    }
    if (nc < 2) return std::numeric_limits<double>::infinity();
    // sum_{i<j} (na_i na_j + nb_i nb_j)^2 via the separable expansion
    const double total = saa * saa + 2.0 * sab * sab + sbb * sbb;
    const double sum = 0.5 * (total - sdiag);
    return sum / (static_cast<double>(nc) * (nc - 1));
}

std::pair<int, int> best_pair_exhaustive(const MatrixXd& a_full) {
    const int rows = static_cast<int>(a_full.rows());
    double best = std::numeric_limits<double>::infinity();
    std::pair<int, int> arg{0, 1};
    for (int i = 0; i < rows; ++i) {
        for (int j = i + 1; j < rows; ++j) {
            const double value = pair_rho(a_full, i, j);
            if (value < best) {
                best = value;
                arg = {i, j};
            }
        }
    }
    return arg;
}

}  // namespace

CoherenceReport coherence_rho(const MatrixXd& a) {
    if (a.size() == 0) throw DimensionMismatch("empty matrix");
    return report_from_gram(a.transpose() * a);
}

SelectionSet greedy_sample(const MatrixXd& a_full, int m, GreedyInit init, std::uint64_t seed) {
    const int rows = static_cast<int>(a_full.rows());
    const int cols = static_cast<int>(a_full.cols());
    if (m < 2 || m > rows) throw DimensionMismatch("sample budget must satisfy 2 <= m <= N");
    if (m == rows) return SelectionSet::full(rows);

    std::vector<int> chosen;
    if (init == GreedyInit::exhaustive_pair) {
        const auto [i, j] = best_pair_exhaustive(a_full);
        chosen = {i, j};
    } else {
        Rng rng(seed);
        auto pick = rng.sample_without_replacement(rows, 2);
        chosen = {pick[0], pick[1]};
    }

    std::vector<char> used(rows, 0);
    used[chosen[0]] = used[chosen[1]] = 1;
    MatrixXd q = a_full.row(chosen[0]).transpose() * a_full.row(chosen[0]) +
                 a_full.row(chosen[1]).transpose() * a_full.row(chosen[1]);

    MatrixXd q_cand(cols, cols);
    while (static_cast<int>(chosen.size()) < m) {
        double best = std::numeric_limits<double>::infinity();
        int arg = -1;
        for (int r = 0; r < rows; ++r) {
            if (used[r]) continue;
            q_cand = q;
            q_cand.noalias() += a_full.row(r).transpose() * a_full.row(r);
            const double value = rho_or_inf(q_cand);
            if (value < best) {  // strict: ties keep the lowest index
                best = value;
                arg = r;
            }
        }
        if (arg < 0) {
            for (int r = 0; r < rows && arg < 0; ++r)
                if (!used[r]) arg = r;
        }
        used[arg] = 1;
        chosen.push_back(arg);
        q.noalias() += a_full.row(arg).transpose() * a_full.row(arg);
    }
    std::sort(chosen.begin(), chosen.end());
    return SelectionSet(std::move(chosen), rows);
}

namespace {

double binomial_guarded(int n, int k, double limit) {
    double c = 1.0;
    for (int i = 0; i < k; ++i) {
        c *= static_cast<double>(n - i) / static_cast<double>(i + 1);
        if (c > limit) return c;
    }
    return c;
}

}  // namespace

SelectionSet exhaustive_sample(const MatrixXd& a_full, int m) {
    const int rows = static_cast<int>(a_full.rows());
    if (m < 1 || m > rows) throw DimensionMismatch("invalid subset size");
    if (m == rows) return SelectionSet::full(rows);
    if (binomial_guarded(rows, m, 2e6) > 2e6) throw TooLarge("C(N, m) exceeds the exhaustive-search guard");

    std::vector<int> comb(m);
    for (int i = 0; i < m; ++i) comb[i] = i;
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> arg = comb;
    while (true) {
        MatrixXd sub(m, a_full.cols());
        for (int r = 0; r < m; ++r) sub.row(r) = a_full.row(comb[r]);
        const double value = rho_or_inf(sub.transpose() * sub);
        if (value < best) {  // lexicographic enumeration => first minimizer wins ties
            best = value;
            arg = comb;
        }
        int i = m - 1;
        while (i >= 0 && comb[i] == rows - m + i) --i;
        if (i < 0) break;
        ++comb[i];
        for (int j = i + 1; j < m; ++j) comb[j] = comb[j - 1] + 1;
    }
    return SelectionSet(std::move(arg), rows);
}

bool spark_check(const MatrixXd& a, int s) {
    const int cols = static_cast<int>(a.cols());
    const int need = 2 * s;
    if (s < 1) throw DimensionMismatch("sparsity must be >= 1");
    if (need > cols) return true;  // no 2s-column subset exists
    if (need > a.rows()) return false;
    if (binomial_guarded(cols, need, 1e5) > 1e5) throw TooLarge("C(n, 2s) exceeds the spark guard");

    std::vector<int> comb(need);
    for (int i = 0; i < need; ++i) comb[i] = i;
    while (true) {
        MatrixXd sub(a.rows(), need);
        for (int c = 0; c < need; ++c) sub.col(c) = a.col(comb[c]);
        Eigen::JacobiSVD<MatrixXd> svd(sub);
        const auto& sv = svd.singularValues();
        if (sv(need - 1) <= 1e-8 * sv(0)) return false;
        int i = need - 1;
        while (i >= 0 && comb[i] == cols - need + i) --i;
        if (i < 0) break;
        ++comb[i];
        for (int j = i + 1; j < need; ++j) comb[j] = comb[j - 1] + 1;
    }
    return true;
}

}  // namespace graphdeconv
