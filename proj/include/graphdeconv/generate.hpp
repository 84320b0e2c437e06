#ifndef GRAPHDECONV_GENERATE_HPP
#define GRAPHDECONV_GENERATE_HPP

#include <cstdint>
#include <optional>
#include <string>

#include "graphdeconv/graph.hpp"

namespace graphdeconv {

enum class GraphModel { er, ba, ws };

GraphModel parse_graph_model(const std::string& name);
std::string graph_model_name(GraphModel model);

struct GraphParams {
    GraphModel model = GraphModel::er;
    int n = 0;
    double p = 0.1;    // er: edge-presence probability
    int m0 = 7;        // ba: seed ring size
    int m = 3;         // ba: links per new node
    int k = 6;         // ws: mean degree (even)
    double beta = 1.0; // ws: rewiring probability
};

// Undirected simple graph, adjacency used as the (symmetric) shift.
// Deterministic in (params, seed); resamples on eigendecomposition failure.
GraphShift generate_graph(const GraphParams& params, std::uint64_t seed);

// Adjacency only (no spectral work); exposed for tests of the edge rules.
MatrixXd generate_adjacency(const GraphParams& params, std::uint64_t seed);

enum class InputModel { sparse, subspace };

struct ProblemInstance {
    DiffusedSignal signal;       // x (length N), y = H x, support of x
    GraphFilter filter;          // unit-norm h
    VectorXd alpha;              // subspace coefficients (empty in sparse model)
};

// Random instance of y = H x per the experiment protocol: support uniform at
// random, nonzeros standard Gaussian, x (or alpha) and h normalized to unit
// norm. s_h < l restricts the filter support to the first s_h taps.
ProblemInstance generate_problem_instance(const GraphShift& shift, int l, int s_x,
                                          std::uint64_t seed, InputModel model,
                                          const std::optional<Dictionary>& dict = std::nullopt,
                                          int s_h = -1);

// Gaussian dictionary with unit Frobenius norm.
Dictionary random_dictionary(int n, int atoms, std::uint64_t seed,
                             DictionaryKind kind = DictionaryKind::input);

}  // namespace graphdeconv

#endif
