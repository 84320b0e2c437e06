#include "graphdeconv/generate.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>
#include <vector>

#include "graphdeconv/rng.hpp"

namespace graphdeconv {

GraphModel parse_graph_model(const std::string& name) {
    if (name == "er") return GraphModel::er;
    if (name == "ba") return GraphModel::ba;
    if (name == "ws") return GraphModel::ws;
    throw InvalidConfig("unknown graph model: " + name);
}

std::string graph_model_name(GraphModel model) {
    switch (model) {
        case GraphModel::er: return "er";
        case GraphModel::ba: return "ba";
        case GraphModel::ws: return "ws";
    }
    return "er";
}

namespace {

using EdgeSet = std::set<std::pair<int, int>>;

std::pair<int, int> ordered(int a, int b) { return a < b ? std::make_pair(a, b) : std::make_pair(b, a); }

EdgeSet erdos_renyi(int n, double p, Rng& rng) {
    EdgeSet edges;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (rng.uniform() < p) edges.insert({i, j});
    return edges;
}

// Seed network: ring on m0 nodes. New nodes attach to m distinct existing
// nodes drawn with probability proportional to degree, without replacement.
EdgeSet barabasi_albert(int n, int m0, int m, Rng& rng) {
    if (m0 < 3 || m > m0 || n < m0) throw InvalidConfig("invalid BA parameters");
    EdgeSet edges;
    std::vector<int> degree(n, 0);
    for (int i = 0; i < m0; ++i) {
        const int j = (i + 1) % m0;
        edges.insert(ordered(i, j));
        degree[i]++;
        degree[j]++;
    }
    for (int v = m0; v < n; ++v) {
        std::vector<int> chosen;
        std::vector<char> taken(v, 0);
        for (int e = 0; e < m; ++e) {
            long long total = 0;
            for (int u = 0; u < v; ++u)
                if (!taken[u]) total += degree[u];
            int pick = -1;
            if (total <= 0) {
                // all remaining candidates have zero degree; fall back to uniform
                int alive = 0;
                for (int u = 0; u < v; ++u) alive += !taken[u];
                int idx = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(alive)));
                for (int u = 0; u < v; ++u) {
                    if (taken[u]) continue;
                    if (idx-- == 0) { pick = u; break; }
                }
            } else {
                long long r = static_cast<long long>(rng.uniform() * static_cast<double>(total));
                if (r >= total) r = total - 1;
                long long acc = 0;
                for (int u = 0; u < v; ++u) {
                    if (taken[u]) continue;
                    acc += degree[u];
                    if (r < acc) { pick = u; break; }
                }
            }
            taken[pick] = 1;
            chosen.push_back(pick);
        }
        for (int u : chosen) {
            edges.insert(ordered(u, v));
            degree[u]++;
            degree[v]++;
        }
    }
    return edges;
}

// Ring lattice with k/2 neighbours per side; each (i, i+off) edge is rewired
// with probability beta, avoiding self-loops and duplicates, preserving the
// edge count.
EdgeSet watts_strogatz(int n, int k, double beta, Rng& rng) {
    if (k % 2 != 0 || k >= n || k < 2) throw InvalidConfig("invalid WS parameters");
    EdgeSet edges;
    for (int i = 0; i < n; ++i)
        for (int off = 1; off <= k / 2; ++off) edges.insert(ordered(i, (i + off) % n));
    for (int off = 1; off <= k / 2; ++off) {
        for (int i = 0; i < n; ++i) {
            const auto old_edge = ordered(i, (i + off) % n);
            if (!edges.count(old_edge)) continue;  // already rewired away
            if (rng.uniform() >= beta) continue;
            // draw a new endpoint for i; give up after n tries (dense node)
            for (int attempt = 0; attempt < n; ++attempt) {
                const int t = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n)));
                if (t == i) continue;
                const auto candidate = ordered(i, t);
                if (edges.count(candidate)) continue;
                edges.erase(old_edge);
                edges.insert(candidate);
                break;
            }
        }
    }
    return edges;
}

MatrixXd adjacency_from_edges(int n, const EdgeSet& edges) {
    MatrixXd a = MatrixXd::Zero(n, n);
    for (const auto& [i, j] : edges) {
        a(i, j) = 1.0;
        a(j, i) = 1.0;
    }
    return a;
}

}  // namespace

MatrixXd generate_adjacency(const GraphParams& params, std::uint64_t seed) {
    if (params.n < 1) throw InvalidConfig("graph size must be positive");
    Rng rng(seed);
    EdgeSet edges;
    switch (params.model) {
        case GraphModel::er: edges = erdos_renyi(params.n, params.p, rng); break;
        case GraphModel::ba: edges = barabasi_albert(params.n, params.m0, params.m, rng); break;
        case GraphModel::ws: edges = watts_strogatz(params.n, params.k, params.beta, rng); break;
    }
    return adjacency_from_edges(params.n, edges);
}

GraphShift generate_graph(const GraphParams& params, std::uint64_t seed) {
    for (int attempt = 0; attempt < 100; ++attempt) {
        const std::uint64_t attempt_seed = attempt == 0 ? seed : derive_seed(seed, static_cast<std::uint64_t>(attempt));
        const MatrixXd a = generate_adjacency(params, attempt_seed);
        try {
            return eigendecompose(a);
        } catch (const NotDiagonalizable&) {
            continue;
        }
    }
    throw GenerationFailed("could not generate a diagonalizable graph in 100 attempts");
}

ProblemInstance generate_problem_instance(const GraphShift& shift, int l, int s_x,
                                          std::uint64_t seed, InputModel model,
                                          const std::optional<Dictionary>& dict, int s_h) {
    const int n = shift.n();
    Rng rng(seed);
    ProblemInstance inst;

    if (model == InputModel::sparse) {
        if (s_x < 0 || s_x > n) throw InvalidConfig("sparsity out of range");
        inst.signal.support = rng.sample_without_replacement(n, s_x);
        VectorXd x = VectorXd::Zero(n);
        for (int idx : inst.signal.support) x(idx) = rng.gaussian();
        const double norm = x.norm();
        if (norm > 0) x /= norm;
        inst.signal.x = x;
    } else {
        if (!dict) throw InvalidConfig("subspace model requires a dictionary");
        const int dx = dict->atoms();
        if (s_x < 0 || s_x > dx) throw InvalidConfig("atom sparsity out of range");
        std::vector<int> atom_support = rng.sample_without_replacement(dx, s_x);
        VectorXd alpha = VectorXd::Zero(dx);
        for (int idx : atom_support) alpha(idx) = rng.gaussian();
        const double norm = alpha.norm();
        if (norm > 0) alpha /= norm;
        inst.alpha = alpha;
        inst.signal.x = dict->d * alpha;
        inst.signal.support.clear();
        for (int i = 0; i < n; ++i)
            if (inst.signal.x(i) != 0.0) inst.signal.support.push_back(i);
    }

    if (s_h < 0 || s_h > l) s_h = l;
    VectorXd h = VectorXd::Zero(l);
    for (int i = 0; i < s_h; ++i) h(i) = rng.gaussian();
    const double hnorm = h.norm();
    if (hnorm > 0) h /= hnorm;
    inst.filter = GraphFilter{h};

    inst.signal.y = apply_filter(shift, inst.filter, inst.signal.x);
    return inst;
}

Dictionary random_dictionary(int n, int atoms, std::uint64_t seed, DictionaryKind kind) {
    Rng rng(seed);
    for (int attempt = 0; attempt < 100; ++attempt) {
        MatrixXd d(n, atoms);
        for (int j = 0; j < atoms; ++j)
            for (int i = 0; i < n; ++i) d(i, j) = rng.gaussian();
        d /= d.norm();
        bool ok = true;
        for (int j = 0; j < atoms && ok; ++j) ok = d.col(j).norm() > 1e-12;
        if (ok) return make_dictionary(std::move(d), kind);
    }
    throw GenerationFailed("random dictionary kept producing zero columns");
}

}  // namespace graphdeconv
