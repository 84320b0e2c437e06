#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "graphdeconv/generate.hpp"
#include "graphdeconv/graph.hpp"
#include "graphdeconv/rng.hpp"
#include "test_util.hpp"

using namespace graphdeconv;
using gdtest::directed_cycle;
using gdtest::er_shift;
using gdtest::random_vector;

namespace {

int count_edges(const MatrixXd& a) {
    int edges = 0;
    for (int i = 0; i < a.rows(); ++i)
        for (int j = i + 1; j < a.cols(); ++j)
            if (a(i, j) != 0.0) ++edges;
    return edges;
}

}  // namespace

TEST_CASE("eigendecompose identity") {
    const GraphShift g = eigendecompose(MatrixXd::Identity(3, 3));
    CHECK(g.lambda().isApproxToConstant(1.0, 1e-14));
    CHECK((g.v() * g.u() - MatrixXd::Identity(3, 3)).norm() < 1e-12);
}

TEST_CASE("eigendecompose two-node path") {
    MatrixXd s(2, 2);
    s << 0, 1, 1, 0;
    const GraphShift g = eigendecompose(s);
    CHECK(g.lambda()(0) == doctest::Approx(1.0));
    CHECK(g.lambda()(1) == doctest::Approx(-1.0));
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(std::abs(g.v()(0, 0)) - r) < 1e-12);
    CHECK(std::abs(std::abs(g.v()(1, 0)) - r) < 1e-12);
    CHECK(g.v()(0, 0) * g.v()(1, 0) > 0);   // same sign on the top eigenvector
    CHECK(g.v()(0, 1) * g.v()(1, 1) < 0);   // opposite sign on the second
}

TEST_CASE("eigendecompose reconstruction residual on ER graph") {
    const GraphShift g = er_shift(20, 0.3, 7);
    const MatrixXd rebuilt = g.v() * g.lambda().asDiagonal() * g.u();
    CHECK((g.s() - rebuilt).norm() <= 1e-10 * g.s().norm());
    for (int i = 1; i < g.n(); ++i) CHECK(g.lambda()(i - 1) >= g.lambda()(i));
}

TEST_CASE("eigendecompose rejects complex spectra") {
    CHECK_THROWS_AS(eigendecompose(directed_cycle(4)), NotDiagonalizable);
}

TEST_CASE("vandermonde") {
    SUBCASE("hand values") {
        MatrixXd s(2, 2);
        s << 2, 0, 0, 1;
        const GraphShift g = eigendecompose(s);
        const MatrixXd psi = vandermonde(g, 3);
        MatrixXd expected(2, 3);
        expected << 1, 2, 4, 1, 1, 1;
        CHECK((psi - expected).norm() < 1e-14);
    }
    SUBCASE("length one is all ones") {
        const GraphShift g = er_shift(6, 0.4, 3);
        CHECK(vandermonde(g, 1).isApproxToConstant(1.0, 1e-14));
    }
    SUBCASE("rows are geometric progressions") {
        const GraphShift g = er_shift(10, 0.3, 1);
        const MatrixXd psi = vandermonde(g, 4);
        for (int i = 0; i < g.n(); ++i)
            for (int l = 0; l < 4; ++l)
                CHECK(psi(i, l) == doctest::Approx(std::pow(g.lambda()(i), l)).epsilon(1e-12));
    }
}

TEST_CASE("apply_filter basics") {
    SUBCASE("identity filter") {
        const GraphShift g = er_shift(8, 0.4, 2);
        Rng rng(5);
        const VectorXd x = random_vector(8, rng);
        CHECK((apply_filter(g, GraphFilter{VectorXd::Ones(1)}, x) - x).norm() < 1e-14);
    }
    SUBCASE("one cyclic shift on the directed 4-cycle") {
        const GraphShift g = GraphShift::without_spectrum(directed_cycle(4));
        VectorXd h(2);
        h << 0, 1;
        VectorXd x(4);
        x << 1, 0, 0, 0;
        VectorXd expected(4);
        expected << 0, 1, 0, 0;
        CHECK((apply_filter(g, GraphFilter{h}, x) - expected).norm() < 1e-14);
    }
    SUBCASE("two-node path by hand") {
        MatrixXd s(2, 2);
        s << 0, 1, 1, 0;
        const GraphShift g = eigendecompose(s);
        VectorXd h(2);
        h << 1, 2;
        VectorXd x(2);
        x << 1, 0;
        VectorXd expected(2);
        expected << 1, 2;
        CHECK((apply_filter(g, GraphFilter{h}, x) - expected).norm() < 1e-14);
    }
}

TEST_CASE("filter application on the directed cycle is a circular shift") {
    const int n = 7;
    const GraphShift g = GraphShift::without_spectrum(directed_cycle(n));
    Rng rng(11);
    const VectorXd x = random_vector(n, rng);
    for (int k = 0; k < 4; ++k) {
        VectorXd h = VectorXd::Zero(k + 1);
        h(k) = 1.0;
        const VectorXd y = apply_filter(g, GraphFilter{h}, x);
        for (int i = 0; i < n; ++i) CHECK(y((i + k) % n) == doctest::Approx(x(i)).epsilon(1e-13));
    }
}

TEST_CASE("apply_filter is linear") {
    const GraphShift g = er_shift(12, 0.3, 9);
    Rng rng(3);
    const VectorXd x = random_vector(12, rng);
    const VectorXd z = random_vector(12, rng);
    VectorXd h(3);
    h << 0.3, -1.2, 0.5;
    const GraphFilter f{h};
    const VectorXd lhs = apply_filter(g, f, 2.5 * x - 1.5 * z);
    const VectorXd rhs = 2.5 * apply_filter(g, f, x) - 1.5 * apply_filter(g, f, z);
    CHECK((lhs - rhs).norm() < 1e-12 * std::max(1.0, rhs.norm()));
}

TEST_CASE("filter_matrix") {
    const GraphShift g = er_shift(15, 0.2, 3);
    SUBCASE("identity and shift") {
        CHECK((filter_matrix(g, GraphFilter{VectorXd::Ones(1)}) - MatrixXd::Identity(15, 15)).norm() < 1e-14);
        VectorXd h(2);
        h << 0, 1;
        CHECK((filter_matrix(g, GraphFilter{h}) - g.s()).norm() < 1e-14);
    }
    SUBCASE("columns agree with apply_filter") {
        Rng rng(4);
        const GraphFilter f{random_vector(3, rng)};
        const MatrixXd hm = filter_matrix(g, f);
        for (int j = 0; j < g.n(); ++j) {
            VectorXd ej = VectorXd::Zero(g.n());
            ej(j) = 1.0;
            CHECK((hm.col(j) - apply_filter(g, f, ej)).norm() < 1e-12);
        }
    }
}

TEST_CASE("lifted operator P") {
    SUBCASE("L=1 reduces to scaling") {
        const GraphShift g = er_shift(6, 0.5, 8);
        const MatrixXd p = lifted_operator_p(g, 1);
        Rng rng(2);
        const VectorXd x = random_vector(6, rng);
        const double h0 = 1.7;
        CHECK((p * (h0 * x) - h0 * x).norm() < 1e-10);
    }
    SUBCASE("two-node path against filter_matrix") {
        MatrixXd s(2, 2);
        s << 0, 1, 1, 0;
        const GraphShift g = eigendecompose(s);
        const MatrixXd p = lifted_operator_p(g, 2);
        Rng rng(6);
        const VectorXd x = random_vector(2, rng);
        const VectorXd h = random_vector(2, rng);
        const MatrixXd z = x * h.transpose();
        const VectorXd vec_z = Eigen::Map<const VectorXd>(z.data(), z.size());
        const VectorXd hx = filter_matrix(g, GraphFilter{h}) * x;
        CHECK((p * vec_z - hx).norm() <= 1e-10);
    }
    SUBCASE("randomized Khatri-Rao identity") {
        const GraphShift g = er_shift(12, 0.3, 5);
        const MatrixXd p = lifted_operator_p(g, 3);
        Rng rng(7);
        for (int trial = 0; trial < 100; ++trial) {
            const VectorXd x = random_vector(12, rng);
            const VectorXd h = random_vector(3, rng);
            const MatrixXd z = x * h.transpose();
            const VectorXd vec_z = Eigen::Map<const VectorXd>(z.data(), z.size());
            const VectorXd hx = apply_filter(g, GraphFilter{h}, x);
            CHECK((p * vec_z - hx).norm() <= 1e-9 * std::max(1.0, hx.norm()));
        }
    }
}

TEST_CASE("Khatri-Rao identity across graphs") {
    Rng rng(123);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 6 + static_cast<int>(rng.uniform_index(10));
        const int l = 1 + static_cast<int>(rng.uniform_index(4));
        const GraphShift g = er_shift(n, 0.4, 1000 + trial);
        const MatrixXd p = lifted_operator_p(g, l);
        const VectorXd x = random_vector(n, rng);
        const VectorXd h = random_vector(l, rng);
        const MatrixXd z = x * h.transpose();
        const VectorXd vec_z = Eigen::Map<const VectorXd>(z.data(), z.size());
        const VectorXd hx = apply_filter(g, GraphFilter{h}, x);
        CHECK((p * vec_z - hx).norm() <= 1e-9 * std::max(1.0, hx.norm()));
    }
}

TEST_CASE("frequency-domain filtering identity") {
    Rng rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        const GraphShift g = er_shift(10, 0.4, 400 + trial);
        const int l = 3;
        const VectorXd h = random_vector(l, rng);
        const VectorXd x = random_vector(10, rng);
        const VectorXd y = apply_filter(g, GraphFilter{h}, x);
        const VectorXd lhs = g.u() * y;
        const VectorXd rhs = (vandermonde(g, l) * h).cwiseProduct(g.u() * x);
        CHECK((lhs - rhs).norm() <= 1e-9 * std::max(1.0, rhs.norm()));
    }
}

TEST_CASE("lifted operator T") {
    const GraphShift g = er_shift(10, 0.4, 14);
    SUBCASE("identity dictionary reduces to P") {
        const Dictionary dict = make_dictionary(MatrixXd::Identity(10, 10), DictionaryKind::input);
        CHECK((lifted_operator_t(g, dict, 3) - lifted_operator_p(g, 3)).norm() < 1e-9);
    }
    SUBCASE("single-column dictionary") {
        Rng rng(9);
        const VectorXd d1 = random_vector(10, rng);
        const Dictionary dict = make_dictionary(d1, DictionaryKind::input);
        const MatrixXd t = lifted_operator_t(g, dict, 2);
        const VectorXd h = random_vector(2, rng);
        const double alpha = 0.83;
        const MatrixXd w = VectorXd::Constant(1, alpha) * h.transpose();
        const VectorXd vec_w = Eigen::Map<const VectorXd>(w.data(), w.size());
        const VectorXd expected = alpha * (filter_matrix(g, GraphFilter{h}) * d1);
        CHECK((t * vec_w - expected).norm() <= 1e-9 * std::max(1.0, expected.norm()));
    }
    SUBCASE("random dictionary identity") {
        Rng rng(10);
        const Dictionary dict = random_dictionary(10, 4, 77);
        const MatrixXd t = lifted_operator_t(g, dict, 3);
        for (int trial = 0; trial < 50; ++trial) {
            const VectorXd alpha = random_vector(4, rng);
            const VectorXd h = random_vector(3, rng);
            const MatrixXd w = alpha * h.transpose();
            const VectorXd vec_w = Eigen::Map<const VectorXd>(w.data(), w.size());
            const VectorXd expected = filter_matrix(g, GraphFilter{h}) * (dict.d * alpha);
            CHECK((t * vec_w - expected).norm() <= 1e-9 * std::max(1.0, expected.norm()));
        }
    }
}

TEST_CASE("generate_graph") {
    SUBCASE("empty ER graph") {
        GraphParams params;
        params.model = GraphModel::er;
        params.n = 50;
        params.p = 0.0;
        const GraphShift g = generate_graph(params, 3);
        CHECK(g.s().norm() == 0.0);
        CHECK(g.lambda().cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("WS edge count is exactly 3N") {
        GraphParams params;
        params.model = GraphModel::ws;
        params.n = 50;
        params.k = 6;
        params.beta = 1.0;
        for (std::uint64_t seed : {1ULL, 2ULL, 9ULL}) {
            const MatrixXd a = generate_adjacency(params, seed);
            CHECK(count_edges(a) == 150);
        }
    }
    SUBCASE("BA edge count follows the construction rule") {
        GraphParams params;
        params.model = GraphModel::ba;
        params.n = 50;
        params.m0 = 7;
        params.m = 3;
        for (std::uint64_t seed : {1ULL, 5ULL}) {
            const MatrixXd a = generate_adjacency(params, seed);
            CHECK(count_edges(a) == 7 + 3 * 43);
        }
    }
    SUBCASE("determinism: identical seeds give identical edge sets") {
        GraphParams params;
        params.model = GraphModel::er;
        params.n = 30;
        params.p = 0.2;
        const MatrixXd a = generate_adjacency(params, 42);
        const MatrixXd b = generate_adjacency(params, 42);
        CHECK((a - b).norm() == 0.0);
        const MatrixXd c = generate_adjacency(params, 43);
        CHECK((a - c).norm() != 0.0);
    }
}

TEST_CASE("generate_problem_instance") {
    const GraphShift g = er_shift(50, 0.1, 2);
    SUBCASE("unit norms and consistency") {
        const ProblemInstance inst = generate_problem_instance(g, 3, 8, 17, InputModel::sparse);
        CHECK(inst.signal.x.norm() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(inst.filter.h.norm() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(static_cast<int>(inst.signal.support.size()) == 8);
        const VectorXd hx = filter_matrix(g, inst.filter) * inst.signal.x;
        CHECK((inst.signal.y - hx).norm() <= 1e-10);
    }
    SUBCASE("identity filter makes output equal input") {
        ProblemInstance inst = generate_problem_instance(g, 3, 50, 18, InputModel::sparse);
        VectorXd e0 = VectorXd::Zero(3);
        e0(0) = 1.0;
        inst.filter.h = e0;
        const VectorXd y = apply_filter(g, inst.filter, inst.signal.x);
        CHECK((y - inst.signal.x).norm() < 1e-14);
    }
    SUBCASE("sparse filters occupy the leading taps") {
        const ProblemInstance inst = generate_problem_instance(g, 4, 8, 19, InputModel::sparse, std::nullopt, 2);
        CHECK(inst.filter.h.tail(2).norm() == 0.0);
        CHECK(inst.filter.h.head(2).norm() == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("subspace model") {
        const Dictionary dict = random_dictionary(50, 10, 5);
        const ProblemInstance inst =
            generate_problem_instance(g, 3, 10, 20, InputModel::subspace, dict);
        CHECK(inst.alpha.norm() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK((inst.signal.x - dict.d * inst.alpha).norm() < 1e-12);
    }
}

TEST_CASE("random dictionary has unit Frobenius norm") {
    const Dictionary dict = random_dictionary(40, 12, 99);
    CHECK(dict.d.norm() == doctest::Approx(1.0).epsilon(1e-12));
}
