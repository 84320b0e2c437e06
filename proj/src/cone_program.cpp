#include "graphdeconv/cone_program.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

namespace graphdeconv {

namespace {
constexpr double kSqrt2 = 1.4142135623730950488;
}

void ConeProgram::validate() const {
    const int n = num_vars();
    if (a.cols() != n) throw InvalidProgram("equality matrix column count != variable count");
    if (a.rows() != b.size()) throw InvalidProgram("equality rhs size mismatch");
    std::vector<char> covered(n, 0);
    for (const auto& cone : cones) {
        if (cone.dim <= 0 || cone.start < 0 || cone.start + cone.dim > n)
            throw InvalidProgram("cone slice out of range");
        if (cone.type == ConeType::psd && cone.dim != svec_dim(cone.side))
            throw InvalidProgram("psd slice length inconsistent with declared side");
        for (int i = cone.start; i < cone.start + cone.dim; ++i) {
            if (covered[i]) throw InvalidProgram("overlapping cone slices");
            covered[i] = 1;
        }
    }
    if (!c.allFinite() || !b.allFinite()) throw InvalidProgram("non-finite program data");
}

std::string to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::unbounded: return "unbounded";
        case SolveStatus::max_iters: return "max-iters";
    }
    return "unknown";
}

std::string ConeProgram::dump_json() const {
    nlohmann::json j;
    j["objective"] = std::vector<double>(c.data(), c.data() + c.size());
    nlohmann::json triplets = nlohmann::json::array();
    for (int k = 0; k < a.outerSize(); ++k)
        for (SparseMat::InnerIterator it(a, k); it; ++it)
            triplets.push_back({it.row(), it.col(), it.value()});
    j["equalities"] = {{"triplets", triplets},
                       {"rhs", std::vector<double>(b.data(), b.data() + b.size())}};
    nlohmann::json cone_list = nlohmann::json::array();
    for (const auto& cone : cones) {
        nlohmann::json entry;
        switch (cone.type) {
            case ConeType::free_slice: entry["type"] = "free"; break;
            case ConeType::nonneg: entry["type"] = "nonneg"; break;
            case ConeType::soc: entry["type"] = "soc"; break;
            case ConeType::psd: entry["type"] = "psd"; break;
        }
        entry["start"] = cone.start;
        entry["dim"] = cone.dim;
        if (cone.type == ConeType::psd) entry["side"] = cone.side;
        cone_list.push_back(entry);
    }
    j["cones"] = cone_list;
    return j.dump();
}

VectorXd svec(const MatrixXd& x) {
    const int side = static_cast<int>(x.rows());
    VectorXd v(svec_dim(side));
    int k = 0;
    for (int j = 0; j < side; ++j) {
        v(k++) = x(j, j);
        for (int i = j + 1; i < side; ++i) v(k++) = kSqrt2 * x(i, j);
    }
    return v;
}

MatrixXd smat(const VectorXd& v) {
    const int side = static_cast<int>((std::sqrt(8.0 * static_cast<double>(v.size()) + 1.0) - 1.0) / 2.0 + 0.5);
    if (svec_dim(side) != v.size()) throw DimensionMismatch("svec length is not triangular");
    MatrixXd x(side, side);
    int k = 0;
    for (int j = 0; j < side; ++j) {
        x(j, j) = v(k++);
        for (int i = j + 1; i < side; ++i) {
            const double value = v(k++) / kSqrt2;
            x(i, j) = value;
            x(j, i) = value;
        }
    }
    return x;
}

WeightedL1Program build_weighted_l1(const MatrixXd& a_eq, const VectorXd& b_eq,
                                    const VectorXd& weights, std::optional<double> noise_eps) {
    const int n = static_cast<int>(a_eq.cols());
    const int m = static_cast<int>(a_eq.rows());
    if (b_eq.size() != m) throw DimensionMismatch("rhs size mismatch");
    if (weights.size() != n) throw DimensionMismatch("weight size mismatch");
    if (weights.minCoeff() < 0) throw InvalidProgram("negative l1 weights");
    const bool noisy = noise_eps.has_value() && *noise_eps > 0;

    WeightedL1Program out;
    out.n = n;
    const int num_vars = 2 * n + (noisy ? m + 1 : 0);
    ConeProgram& p = out.program;
    p.c = VectorXd::Zero(num_vars);
    p.c.head(n) = weights;
    p.c.segment(n, n) = weights;

    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(a_eq.size()) * 2 + m + 1);
    for (int r = 0; r < m; ++r) {
        for (int ccol = 0; ccol < n; ++ccol) {
            const double value = a_eq(r, ccol);
            if (value == 0.0) continue;
            trip.emplace_back(r, ccol, value);
            trip.emplace_back(r, n + ccol, -value);
        }
    }
    int rows = m;
    if (noisy) {
        // A(u - v) + r = b, ||r|| <= t0, t0 = sqrt(eps)
        for (int r = 0; r < m; ++r) trip.emplace_back(r, 2 * n + 1 + r, 1.0);
        trip.emplace_back(rows, 2 * n, 1.0);
        p.b = VectorXd(m + 1);
        p.b.head(m) = b_eq;
        p.b(m) = std::sqrt(*noise_eps);
        rows += 1;
    } else {
        p.b = b_eq;
    }
    p.a = SparseMat(rows, num_vars);
    p.a.setFromTriplets(trip.begin(), trip.end());

    p.cones.push_back(ConeSlice::nonneg(0, 2 * n));
    if (noisy) p.cones.push_back(ConeSlice::soc(2 * n, m + 1));
    p.validate();
    return out;
}

MatrixXd MmSdpProgram::extract_z(const VectorXd& z) const {
    const MatrixXd big = smat(z.head(svec_dim(side)));
    return big.block(0, rows, rows, l);
}

MatrixXd MmSdpProgram::extract_theta1(const VectorXd& z) const {
    const MatrixXd big = smat(z.head(svec_dim(side)));
    return big.topLeftCorner(rows, rows);
}

MatrixXd MmSdpProgram::extract_theta2(const VectorXd& z) const {
    const MatrixXd big = smat(z.head(svec_dim(side)));
    return big.bottomRightCorner(l, l);
}

MmSdpProgram build_mm_sdp(const MatrixXd& lifted_op_m, const VectorXd& y_obs,
                          const MmSdpWeights& weights, const std::optional<MatrixXd>& extra_eq,
                          std::optional<double> noise_eps) {
    const int m_obs = static_cast<int>(lifted_op_m.rows());
    const int rows = static_cast<int>(weights.delta1.rows());
    const int l = static_cast<int>(weights.delta2.rows());
    if (lifted_op_m.cols() != static_cast<long>(rows) * l)
        throw DimensionMismatch("lifted operator width != rows*l");
    if (y_obs.size() != m_obs) throw DimensionMismatch("observation size mismatch");
    if (weights.a_n.size() != rows || weights.b_l.size() != l || weights.w_l.size() != l)
        throw DimensionMismatch("weight vector size mismatch");
    if (weights.tau_x < 0 || weights.tau_h < 0) throw InvalidProgram("negative regularization weight");
    const bool noisy = noise_eps.has_value() && *noise_eps > 0;
    const bool row_cones = weights.tau_x > 0;
    const bool col_cones = weights.tau_h > 0;

    MmSdpProgram out;
    out.rows = rows;
    out.l = l;
    out.side = rows + l;
    const int side = out.side;
    const int ns = svec_dim(side);

    const int off_row = ns;
    const int off_col = off_row + (row_cones ? rows * (l + 1) : 0);
    const int off_res = off_col + (col_cones ? l * (rows + 1) : 0);
    const int num_vars = off_res + (noisy ? m_obs + 1 : 0);

    ConeProgram& p = out.program;
    p.c = VectorXd::Zero(num_vars);
    {
        MatrixXd block = MatrixXd::Zero(side, side);
        block.topLeftCorner(rows, rows) = 0.5 * (weights.delta1 + weights.delta1.transpose());
        block.bottomRightCorner(l, l) = 0.5 * (weights.delta2 + weights.delta2.transpose());
        p.c.head(ns) = svec(block);
    }
    if (row_cones)
        for (int i = 0; i < rows; ++i) p.c(off_row + i * (l + 1)) = weights.tau_x * weights.a_n(i);
    if (col_cones)
        for (int j = 0; j < l; ++j) p.c(off_col + j * (rows + 1)) = weights.tau_h * weights.w_l(j) * weights.b_l(j);

    // svec coordinate carrying Z(i,j) holds sqrt(2) * Z(i,j)
    auto z_coord = [&](int i, int j) { return svec_index(rows + j, i, side); };
    const double inv_sqrt2 = 1.0 / kSqrt2;

    std::vector<Triplet> trip;
    int eq_rows = 0;
    // observation rows: sum_{ij} P(r, i + j*rows) Z(i,j) [+ res_r] = y_r
    for (int r = 0; r < m_obs; ++r) {
        for (int j = 0; j < l; ++j)
            for (int i = 0; i < rows; ++i) {
                const double coeff = lifted_op_m(r, i + j * rows);
                if (coeff != 0.0) trip.emplace_back(eq_rows, z_coord(i, j), coeff * inv_sqrt2);
            }
        if (noisy) trip.emplace_back(eq_rows, off_res + 1 + r, 1.0);
        ++eq_rows;
    }
    std::vector<double> rhs(y_obs.data(), y_obs.data() + y_obs.size());
    if (noisy) {
        trip.emplace_back(eq_rows, off_res, 1.0);
        rhs.push_back(std::sqrt(*noise_eps));
        ++eq_rows;
    }
    if (extra_eq) {
        if (extra_eq->cols() != static_cast<long>(rows) * l)
            throw DimensionMismatch("extra equality width != rows*l");
        for (int r = 0; r < extra_eq->rows(); ++r) {
            for (int j = 0; j < l; ++j)
                for (int i = 0; i < rows; ++i) {
                    const double coeff = (*extra_eq)(r, i + j * rows);
                    if (coeff != 0.0) trip.emplace_back(eq_rows, z_coord(i, j), coeff * inv_sqrt2);
                }
            rhs.push_back(0.0);
            ++eq_rows;
        }
    }
    // epigraph ties: g = Z row / f = Z column copies
    if (row_cones) {
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < l; ++j) {
                trip.emplace_back(eq_rows, off_row + i * (l + 1) + 1 + j, 1.0);
                trip.emplace_back(eq_rows, z_coord(i, j), -inv_sqrt2);
                rhs.push_back(0.0);
                ++eq_rows;
            }
    }
    if (col_cones) {
        for (int j = 0; j < l; ++j)
            for (int i = 0; i < rows; ++i) {
                trip.emplace_back(eq_rows, off_col + j * (rows + 1) + 1 + i, 1.0);
                trip.emplace_back(eq_rows, z_coord(i, j), -inv_sqrt2);
                rhs.push_back(0.0);
                ++eq_rows;
            }
    }

    p.a = SparseMat(eq_rows, num_vars);
    p.a.setFromTriplets(trip.begin(), trip.end());
    p.b = Eigen::Map<VectorXd>(rhs.data(), static_cast<long>(rhs.size()));

    p.cones.push_back(ConeSlice::psd(0, side));
    if (row_cones)
        for (int i = 0; i < rows; ++i) p.cones.push_back(ConeSlice::soc(off_row + i * (l + 1), l + 1));
    if (col_cones)
        for (int j = 0; j < l; ++j) p.cones.push_back(ConeSlice::soc(off_col + j * (rows + 1), rows + 1));
    if (noisy) p.cones.push_back(ConeSlice::soc(off_res, m_obs + 1));
    p.validate();
    return out;
}

}  // namespace graphdeconv
