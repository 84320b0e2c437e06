#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/SVD>

#include "graphdeconv/blind_deconv.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace graphdeconv;
using gdtest::er_shift;
using gdtest::random_matrix;
using gdtest::random_vector;

namespace {

BlindProblem make_blind(const GraphShift& g, int l, const VectorXd& y, const std::vector<int>& m_idx) {
    BlindProblem p{g, l, {}, 0.0, 0.0, {}, std::nullopt, {}};
    p.obs.m = SelectionSet(m_idx, g.n());
    p.obs.y_m = p.obs.m.select(y);
    return p;
}

std::vector<int> range_idx(int n) {
    std::vector<int> v(n);
    for (int i = 0; i < n; ++i) v[i] = i;
    return v;
}

}  // namespace

TEST_CASE("rank_one_plain") {
    Rng rng(3);
    SUBCASE("exact rank-one input") {
        const VectorXd x = random_vector(6, rng);
        const VectorXd h = random_vector(3, rng);
        const auto [xh, hh] = rank_one_plain(x * h.transpose());
        CHECK((xh * hh.transpose() - x * h.transpose()).norm() <= 1e-12);
    }
    SUBCASE("diagonal matrix keeps the dominant direction") {
        MatrixXd z = MatrixXd::Zero(2, 2);
        z(0, 0) = 2.0;
        z(1, 1) = 1.0;
        const auto [xh, hh] = rank_one_plain(z);
        MatrixXd fit = xh * hh.transpose();
        CHECK(fit(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(std::abs(fit(1, 1)) <= 1e-12);
    }
    SUBCASE("fit error equals the Eckart-Young tail") {
        const MatrixXd z = random_matrix(6, 3, rng);
        const auto [xh, hh] = rank_one_plain(z);
        Eigen::JacobiSVD<MatrixXd> svd(z);
        const auto& sv = svd.singularValues();
        const double tail = std::sqrt(sv(1) * sv(1) + sv(2) * sv(2));
        CHECK((z - xh * hh.transpose()).norm() == doctest::Approx(tail).epsilon(1e-10));
    }
    SUBCASE("zero matrix is rejected") {
        CHECK_THROWS_AS(rank_one_plain(MatrixXd::Zero(3, 2)), ZeroMatrix);
    }
    SUBCASE("sign convention leaves the outer product unchanged") {
        const MatrixXd z = random_matrix(5, 2, rng);
        const auto [xh, hh] = rank_one_plain(z);
        bool found = false;
        for (int i = 0; i < hh.size() && !found; ++i) {
            if (std::abs(hh(i)) > 1e-9) {
                CHECK(hh(i) > 0);
                found = true;
            }
        }
        CHECK(found);
    }
}

TEST_CASE("rank_one_known_inputs") {
    Rng rng(7);
    SUBCASE("consistent exact data is reproduced") {
        const VectorXd x = random_vector(6, rng);
        const VectorXd h = random_vector(3, rng);
        const SelectionSet k({1, 4}, 6);
        const auto [xh, hh] = rank_one_known_inputs(x * h.transpose(), k, k.select(x));
        CHECK((xh - x).norm() <= 1e-10);
        CHECK((hh - h).norm() <= 1e-10);
    }
    SUBCASE("K = N reduces to a least-squares row fit") {
        const MatrixXd z = random_matrix(4, 2, rng);
        const VectorXd x = random_vector(4, rng);
        const auto [xh, hh] = rank_one_known_inputs(z, SelectionSet::full(4), x);
        CHECK((xh - x).norm() == 0.0);
        const VectorXd expected = z.transpose() * x / x.squaredNorm();
        CHECK((hh - expected).norm() <= 1e-10);
    }
    SUBCASE("beats random candidates and the alternating oracle") {
        for (int trial = 0; trial < 50; ++trial) {
            Rng local(100 + trial);
            const MatrixXd z = random_matrix(5, 3, local);
            const std::vector<int> k_idx = {0, 3};
            VectorXd x_k(2);
            x_k << 0.5 + local.uniform(), -0.4 - local.uniform();
            const auto [xh, hh] = rank_one_known_inputs(z, SelectionSet(k_idx, 5), x_k);
            const double fit = (z - xh * hh.transpose()).norm();

            double best_random = std::numeric_limits<double>::infinity();
            for (int c = 0; c < 10000; ++c) {
                VectorXd x_cand = random_vector(5, local);
                x_cand(0) = x_k(0);
                x_cand(3) = x_k(1);
                const VectorXd h_cand = random_vector(3, local);
                best_random = std::min(best_random, (z - x_cand * h_cand.transpose()).norm());
            }
            CHECK(fit <= best_random + 1e-8);
            const double alt = gdtest::alternating_fit_known_inputs(z, k_idx, x_k, 6, 400,
                                                                    1234u + trial);
            CHECK(fit <= alt + 1e-8);
        }
    }
    SUBCASE("degenerate zero filter is flagged") {
        const MatrixXd z = MatrixXd::Zero(4, 2);
        VectorXd x_k(1);
        x_k << 1.0;
        CHECK_THROWS_AS(rank_one_known_inputs(z, SelectionSet({2}, 4), x_k), ZeroFilter);
    }
}

TEST_CASE("rank_one_subspace_known_inputs") {
    Rng rng(11);
    SUBCASE("consistent exact data is reproduced") {
        const int n = 10, ds = 4, l = 3;
        const MatrixXd d = random_matrix(n, ds, rng);
        const VectorXd alpha = random_vector(ds, rng);
        const VectorXd h = random_vector(l, rng);
        const SelectionSet k({2, 6, 7}, n);
        const VectorXd x_k = k.select_rows(d) * alpha;
        const SubspaceRankOne fit = rank_one_subspace_known_inputs(alpha * h.transpose(), d, k, x_k);
        CHECK((fit.alpha - alpha).norm() <= 1e-9);
        CHECK((fit.h - h).norm() <= 1e-9);
    }
    SUBCASE("identity dictionary matches the sparse proposition") {
        const MatrixXd z = random_matrix(5, 3, rng);
        const SelectionSet k({1, 3}, 5);
        VectorXd x_k(2);
        x_k << 0.9, -0.6;
        const auto [xs, hs] = rank_one_known_inputs(z, k, x_k);
        const SubspaceRankOne fit =
            rank_one_subspace_known_inputs(z, MatrixXd::Identity(5, 5), k, x_k);
        CHECK((fit.alpha - xs).cwiseAbs().maxCoeff() <= 1e-8);
        CHECK((fit.h - hs).cwiseAbs().maxCoeff() <= 1e-8);
    }
    SUBCASE("beats the projected alternating oracle") {
        for (int trial = 0; trial < 50; ++trial) {
            Rng local(500 + trial);
            const int n = 9, ds = 4, l = 3;
            const MatrixXd w = random_matrix(ds, l, local);
            const MatrixXd d = random_matrix(n, ds, local);
            const SelectionSet k({1, 5}, n);
            VectorXd x_k(2);
            x_k << 1.0 + local.uniform(), -0.8 - local.uniform();
            const SubspaceRankOne fit = rank_one_subspace_known_inputs(w, d, k, x_k);
            CHECK((k.select_rows(d) * fit.alpha - x_k).norm() <= 1e-8);
            const double err = (w - fit.alpha * fit.h.transpose()).norm();
            const double alt = gdtest::alternating_fit_subspace(w, k.select_rows(d), x_k, 6, 400,
                                                                77u + trial);
            CHECK(err <= alt + 1e-8);
        }
    }
    SUBCASE("needs at least two known values") {
        const MatrixXd w = random_matrix(3, 2, rng);
        const MatrixXd d = random_matrix(6, 3, rng);
        VectorXd x_k(1);
        x_k << 1.0;
        CHECK_THROWS_AS(rank_one_subspace_known_inputs(w, d, SelectionSet({2}, 6), x_k),
                        DimensionMismatch);
    }
}

TEST_CASE("metric_rmse_blind") {
    Rng rng(13);
    const VectorXd x = random_vector(4, rng);
    const VectorXd h = random_vector(2, rng);
    CHECK(metric_rmse_blind(x, h, x, h, 0) == 0.0);
    CHECK(metric_rmse_blind(x, h, -x, -h, 0) <= 1e-15);
    VectorXd x2(2), h2(2), xt(2), ht(2);
    xt << 1, 0;
    ht << 1, 0;
    x2 << 0, 1;
    h2 << 0, 1;
    // || e2 e2' - e1 e1' ||_F / (2*2) = sqrt(2)/4
    CHECK(metric_rmse_blind(xt, ht, x2, h2, 0) == doctest::Approx(std::sqrt(2.0) / 4.0));
}

TEST_CASE("blind recovery on a fully determined instance") {
    const GraphShift g = er_shift(6, 0.5, 51);
    Rng rng(21);
    VectorXd x = random_vector(6, rng);
    VectorXd h(1);
    h << 1.3;
    const VectorXd y = apply_filter(g, GraphFilter{h}, x);
    auto p = make_blind(g, 1, y, range_idx(6));

    SUBCASE("logdet iteration pins the lifted matrix") {
        const BlindResult r = blind_recover(p);
        CHECK((r.z_hat - x * h.transpose()).norm() <= 1e-6);
        CHECK((r.x_hat * r.h_hat.transpose() - x * h.transpose()).norm() <= 1e-6);
        CHECK((r.y_hat - y).norm() <= 1e-6);
    }
    SUBCASE("nuclear mode gives the same first iterate") {
        auto p2 = p;
        p2.mm.surrogate = RankSurrogate::nuclear;
        auto p3 = p;
        p3.mm.max_iters = 1;
        const BlindResult a = blind_recover(p2);
        const BlindResult b = blind_recover(p3);
        CHECK(a.iterations == 1);
        CHECK(b.iterations == 1);
        CHECK((a.z_hat - b.z_hat).norm() <= 1e-9);
    }
}

TEST_CASE("one MM step from identity weights matches the SVD rank-one oracle") {
    const GraphShift g = er_shift(4, 0.6, 61);
    const ProblemInstance inst = generate_problem_instance(g, 2, 2, 5, InputModel::sparse);
    auto p = make_blind(g, 2, inst.signal.y, range_idx(4));
    p.mm.max_iters = 1;
    const BlindResult r = blind_recover(p);

    Eigen::JacobiSVD<MatrixXd> svd(r.z_hat, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const MatrixXd oracle = svd.singularValues()(0) * svd.matrixU().col(0) * svd.matrixV().col(0).transpose();
    const MatrixXd fit = r.x_hat * r.h_hat.transpose();
    CHECK((fit - oracle).norm() <= 1e-5);
}

TEST_CASE("blind recovery of a sparse instance with regularization") {
    const GraphShift g = er_shift(16, 0.3, 71);
    const ProblemInstance inst = generate_problem_instance(g, 2, 3, 9, InputModel::sparse);
    Rng rng(31);
    const auto m_idx = rng.sample_without_replacement(16, 14);
    auto p = make_blind(g, 2, inst.signal.y, m_idx);
    p.tau_x = 0.1;
    const BlindResult r = blind_recover(p);
    const double rmse = metric_rmse_blind(inst.signal.x, inst.filter.h, r.x_hat, r.h_hat, 0);
    CHECK(rmse <= 1e-5);
    for (std::size_t i = 1; i < r.history.size(); ++i)
        CHECK(r.history[i] <= r.history[i - 1] + 1e-5);
    CHECK(std::abs(r.x_hat.norm() - 1.0) <= 1e-9);  // reported scale convention
}

TEST_CASE("side information constraint rows hold for the true lifted matrix") {
    Rng rng(41);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 5 + static_cast<int>(rng.uniform_index(6));
        const int l = 1 + static_cast<int>(rng.uniform_index(3));
        VectorXd x = random_vector(n, rng);
        const VectorXd h = random_vector(l, rng);
        const MatrixXd z = x * h.transpose();
        const int kk = 2 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n - 2)));
        Rng pick(trial);
        const auto k_idx = pick.sample_without_replacement(n, kk);
        // rows z_{k_i}^T x_{k_{i+1}} - z_{k_{i+1}}^T x_{k_i} must vanish
        for (int i = 0; i + 1 < kk; ++i) {
            const VectorXd lhs = z.row(k_idx[i]) * x(k_idx[i + 1]) - z.row(k_idx[i + 1]) * x(k_idx[i]);
            CHECK(lhs.cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
}

TEST_CASE("known inputs are honored by blind recovery") {
    const GraphShift g = er_shift(14, 0.3, 81);
    const ProblemInstance inst = generate_problem_instance(g, 2, 4, 3, InputModel::sparse);
    Rng rng(17);
    const auto m_idx = rng.sample_without_replacement(14, 12);
    auto p = make_blind(g, 2, inst.signal.y, m_idx);
    p.tau_x = 0.1;

    // pick two support nodes and one zero node as side information
    std::vector<int> k_idx = {inst.signal.support[0], inst.signal.support[1]};
    int zero_node = 0;
    while (std::find(inst.signal.support.begin(), inst.signal.support.end(), zero_node) !=
           inst.signal.support.end())
        ++zero_node;
    k_idx.push_back(zero_node);
    std::sort(k_idx.begin(), k_idx.end());
    SelectionSet k(k_idx, 14);
    p.obs.known = KnownValues{k, k.select(inst.signal.x)};

    const BlindResult r = blind_recover(p);
    for (int i = 0; i < k.size(); ++i)
        CHECK(r.x_hat(k_idx[i]) == doctest::Approx(inst.signal.x(k_idx[i])).epsilon(1e-9));
    CHECK(r.x_hat(zero_node) == 0.0);
    const double rmse = metric_rmse_blind(inst.signal.x, inst.filter.h, r.x_hat, r.h_hat, 3);
    CHECK(rmse <= 1e-5);
}

TEST_CASE("single known value still fixes the scale") {
    const GraphShift g = er_shift(12, 0.35, 91);
    const ProblemInstance inst = generate_problem_instance(g, 2, 3, 13, InputModel::sparse);
    auto p = make_blind(g, 2, inst.signal.y, range_idx(12));
    p.tau_x = 0.1;
    const int anchor = inst.signal.support[0];
    SelectionSet k({anchor}, 12);
    p.obs.known = KnownValues{k, k.select(inst.signal.x)};
    const BlindResult r = blind_recover(p);
    CHECK(r.x_hat(anchor) == doctest::Approx(inst.signal.x(anchor)).epsilon(1e-9));
}

TEST_CASE("subspace blind recovery") {
    const GraphShift g = er_shift(12, 0.4, 101);
    SUBCASE("identity dictionary reproduces the sparse trajectory") {
        const ProblemInstance inst = generate_problem_instance(g, 2, 3, 7, InputModel::sparse);
        Rng rng(9);
        const auto m_idx = rng.sample_without_replacement(12, 10);
        auto ps = make_blind(g, 2, inst.signal.y, m_idx);
        auto pd = ps;
        pd.dict = make_dictionary(MatrixXd::Identity(12, 12), DictionaryKind::input);
        const BlindResult a = blind_recover(ps);
        const BlindResult b = blind_recover_subspace(pd);
        CHECK(a.iterations == b.iterations);
        CHECK((a.z_hat - b.z_hat).norm() <= 1e-7 * std::max(1.0, a.z_hat.norm()));
    }
    SUBCASE("full observation pins the lifted matrix") {
        const Dictionary dict = random_dictionary(12, 4, 31);
        const ProblemInstance inst = generate_problem_instance(g, 2, 4, 11, InputModel::subspace, dict);
        auto p = make_blind(g, 2, inst.signal.y, range_idx(12));
        p.dict = dict;
        const BlindResult r = blind_recover_subspace(p);
        const MatrixXd w_true = inst.alpha * inst.filter.h.transpose();
        CHECK((r.z_hat - w_true).norm() <= 1e-6);
        const double rmse = metric_rmse_blind(inst.alpha, inst.filter.h, r.alpha_hat, r.h_hat, 0);
        CHECK(rmse <= 1e-6);
    }
    SUBCASE("known input values flow through the subspace pipeline") {
        const Dictionary dict = random_dictionary(12, 4, 33);
        const ProblemInstance inst = generate_problem_instance(g, 2, 4, 13, InputModel::subspace, dict);
        Rng rng(3);
        const auto m_idx = rng.sample_without_replacement(12, 11);
        auto p = make_blind(g, 2, inst.signal.y, m_idx);
        p.dict = dict;
        SelectionSet k({2, 7, 9}, 12);
        p.obs.known = KnownValues{k, k.select(inst.signal.x)};
        const BlindResult r = blind_recover_subspace(p);
        CHECK((k.select(r.x_hat) - k.select(inst.signal.x)).cwiseAbs().maxCoeff() <= 1e-6);
        const double rmse = metric_rmse_blind(inst.alpha, inst.filter.h, r.alpha_hat, r.h_hat, 3);
        CHECK(rmse <= 1e-4);
    }
}
