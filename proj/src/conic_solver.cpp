#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <limits>
#include <memory>
#include <utility>
#include <vector>

#include "graphdeconv/cone_program.hpp"

// Primal-dual predictor-corrector interior-point method with Nesterov-Todd
// scaling, in the conelp formulation
//     min c'x  s.t.  A x = b,  E x in K,
// where E selects the coned coordinates (G = -E, h = 0). When the cone
// slices cover every variable, the KKT system reduces to the p x p Schur
// complement A (W'W) A'; programs with free slices use a dense saddle
// factorization instead.

namespace graphdeconv {

namespace {

constexpr double kStepScale = 0.99;
constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct Block {
    ConeType type;
    int cone_start;  // offset in cone space
    int var_start;   // offset in variable space
    int dim;
    int side;
};

int block_degree(const Block& b) {
    switch (b.type) {
        case ConeType::nonneg: return b.dim;
        case ConeType::soc: return 1;
        case ConeType::psd: return b.side;
        default: return 0;
    }
}

double jdot(const Eigen::Ref<const VectorXd>& u) {
    return u(0) * u(0) - u.tail(u.size() - 1).squaredNorm();
}

std::pair<int, int> svec_coords(int k, int side) {
    int j = 0;
    int len = side;
    while (k >= len) {
        k -= len;
        --len;
        ++j;
    }
    return {j + k, j};
}

class Cones {
public:
    explicit Cones(const ConeProgram& p) : n_(p.num_vars()) {
        int cone_off = 0;
        for (const auto& slice : p.cones) {
            if (slice.type == ConeType::free_slice) continue;
            if (slice.type == ConeType::soc && slice.dim < 2)
                throw InvalidProgram("second-order cone slices need dimension >= 2");
            blocks_.push_back({slice.type, cone_off, slice.start, slice.dim, slice.side});
            cone_off += slice.dim;
        }
        m_ = cone_off;
        degree_ = 0;
        for (const auto& b : blocks_) degree_ += block_degree(b);
        cone_to_var_.resize(m_);
        for (const auto& b : blocks_)
            for (int i = 0; i < b.dim; ++i) cone_to_var_[b.cone_start + i] = b.var_start + i;
        var_to_cone_.assign(n_, -1);
        for (int k = 0; k < m_; ++k) var_to_cone_[cone_to_var_[k]] = k;
        full_cover_ = (m_ == n_);
    }

    int n() const { return n_; }
    int m() const { return m_; }
    int degree() const { return degree_; }
    bool full_cover() const { return full_cover_; }
    const std::vector<Block>& blocks() const { return blocks_; }
    int var_to_cone(int v) const { return var_to_cone_[v]; }

    VectorXd gather(const VectorXd& var_vec) const {
        VectorXd out(m_);
        for (int k = 0; k < m_; ++k) out(k) = var_vec(cone_to_var_[k]);
        return out;
    }

    VectorXd scatter(const VectorXd& cone_vec) const {
        VectorXd out = VectorXd::Zero(n_);
        for (int k = 0; k < m_; ++k) out(cone_to_var_[k]) = cone_vec(k);
        return out;
    }

    VectorXd identity() const {
        VectorXd e = VectorXd::Zero(m_);
        for (const auto& b : blocks_) {
            switch (b.type) {
                case ConeType::nonneg:
                    e.segment(b.cone_start, b.dim).setOnes();
                    break;
                case ConeType::soc:
                    e(b.cone_start) = 1.0;
                    break;
                case ConeType::psd:
                    for (int j = 0; j < b.side; ++j) e(b.cone_start + svec_index(j, j, b.side)) = 1.0;
                    break;
                default:
                    break;
            }
        }
        return e;
    }

    // min t such that u + t*e is in the cone
    double max_shift(const VectorXd& u) const {
        double t = -kInfinity;
        for (const auto& b : blocks_) {
            const auto seg = u.segment(b.cone_start, b.dim);
            switch (b.type) {
                case ConeType::nonneg:
                    t = std::max(t, -seg.minCoeff());
                    break;
                case ConeType::soc:
                    t = std::max(t, seg.tail(b.dim - 1).norm() - seg(0));
                    break;
                case ConeType::psd: {
                    Eigen::SelfAdjointEigenSolver<MatrixXd> es(smat(seg), Eigen::EigenvaluesOnly);
                    t = std::max(t, -es.eigenvalues().minCoeff());
                    break;
                }
                default:
                    break;
            }
        }
        return t;
    }

    // sup { alpha >= 0 : point + alpha*dir in K }; point must be interior.
    // For psd blocks `point` must be the diagonal NT-scaled lambda.
    double max_step(const VectorXd& point, const VectorXd& dir) const {
        double best = kInfinity;
        for (const auto& b : blocks_) {
            const auto lam = point.segment(b.cone_start, b.dim);
            const auto d = dir.segment(b.cone_start, b.dim);
            switch (b.type) {
                case ConeType::nonneg: {
                    for (int i = 0; i < b.dim; ++i)
                        if (d(i) < 0) best = std::min(best, -lam(i) / d(i));
                    break;
                }
                case ConeType::soc: {
                    const double a2 = jdot(d);
                    const double a1 = 2.0 * (lam(0) * d(0) - lam.tail(b.dim - 1).dot(d.tail(b.dim - 1)));
                    const double a0 = jdot(lam);
                    auto consider = [&](double alpha) {
                        if (alpha > 0) best = std::min(best, alpha);
                    };
                    if (std::abs(a2) < 1e-300) {
                        if (a1 < 0) consider(-a0 / a1);
                    } else {
                        const double disc = a1 * a1 - 4.0 * a2 * a0;
                        if (disc >= 0) {
                            const double root = std::sqrt(disc);
                            const double q = -0.5 * (a1 + (a1 >= 0 ? root : -root));
                            if (q != 0) {
                                consider(q / a2);
                                consider(a0 / q);
                            } else {
                                consider(-a1 / (2.0 * a2));
                            }
                        }
                    }
                    if (d(0) < 0) consider(-lam(0) / d(0));
                    break;
                }
                case ConeType::psd: {
                    MatrixXd t = smat(d);
                    VectorXd scale(b.side);
                    for (int j = 0; j < b.side; ++j)
                        scale(j) = 1.0 / std::sqrt(lam(svec_index(j, j, b.side)));
                    t = scale.asDiagonal() * t * scale.asDiagonal();
                    Eigen::SelfAdjointEigenSolver<MatrixXd> es(t, Eigen::EigenvaluesOnly);
                    const double lo = es.eigenvalues().minCoeff();
                    if (lo < 0) best = std::min(best, -1.0 / lo);
                    break;
                }
                default:
                    break;
            }
        }
        return best;
    }

    VectorXd jprod(const VectorXd& u, const VectorXd& v) const {
        VectorXd out(m_);
        for (const auto& b : blocks_) {
            const auto us = u.segment(b.cone_start, b.dim);
            const auto vs = v.segment(b.cone_start, b.dim);
            switch (b.type) {
                case ConeType::nonneg:
                    out.segment(b.cone_start, b.dim) = us.cwiseProduct(vs);
                    break;
                case ConeType::soc: {
                    out(b.cone_start) = us.dot(vs);
                    out.segment(b.cone_start + 1, b.dim - 1) =
                        us(0) * vs.tail(b.dim - 1) + vs(0) * us.tail(b.dim - 1);
                    break;
                }
                case ConeType::psd: {
                    const MatrixXd mu = smat(us);
                    const MatrixXd mv = smat(vs);
                    out.segment(b.cone_start, b.dim) = svec(0.5 * (mu * mv + mv * mu));
                    break;
                }
                default:
                    break;
            }
        }
        return out;
    }

    // Solve lambda o x = d; psd lambda must be diagonal (NT-scaled point).
    VectorXd jsolve(const VectorXd& lambda, const VectorXd& d) const {
        VectorXd out(m_);
        for (const auto& b : blocks_) {
            const auto lam = lambda.segment(b.cone_start, b.dim);
            const auto ds = d.segment(b.cone_start, b.dim);
            switch (b.type) {
                case ConeType::nonneg:
                    out.segment(b.cone_start, b.dim) = ds.cwiseQuotient(lam);
                    break;
                case ConeType::soc: {
                    const double a = lam(0);
                    const auto bb = lam.tail(b.dim - 1);
                    const double denom = a * a - bb.squaredNorm();
                    const double x0 = (a * ds(0) - bb.dot(ds.tail(b.dim - 1))) / denom;
                    out(b.cone_start) = x0;
                    out.segment(b.cone_start + 1, b.dim - 1) = (ds.tail(b.dim - 1) - x0 * bb) / a;
                    break;
                }
                case ConeType::psd: {
                    VectorXd diag(b.side);
                    for (int j = 0; j < b.side; ++j) diag(j) = lam(svec_index(j, j, b.side));
                    auto seg = out.segment(b.cone_start, b.dim);
                    int k = 0;
                    for (int j = 0; j < b.side; ++j)
                        for (int i = j; i < b.side; ++i, ++k) seg(k) = 2.0 * ds(k) / (diag(i) + diag(j));
                    break;
                }
                default:
                    break;
            }
        }
        return out;
    }

private:
    std::vector<Block> blocks_;
    std::vector<int> cone_to_var_;
    std::vector<int> var_to_cone_;
    int n_ = 0;
    int m_ = 0;
    int degree_ = 0;
    bool full_cover_ = false;
};

struct BlockScaling {
    VectorXd w;                      // nonneg: sqrt(s/z)
    double beta = 1.0;               // soc
    VectorXd vbar;                   // soc: W = beta (2 vbar vbar' - J)
    MatrixXd r, rinv, ww, wwinv;     // psd: W u = R'uR, ww = RR'
    VectorXd lambda;
};

class Scaling {
public:
    explicit Scaling(const Cones& cones) : cones_(&cones), identity_(true) {}

    Scaling(const Cones& cones, const VectorXd& s, const VectorXd& z) : cones_(&cones), identity_(false) {
        lambda_.resize(cones.m());
        blocks_.resize(cones.blocks().size());
        for (std::size_t bi = 0; bi < cones.blocks().size(); ++bi) {
            const Block& b = cones.blocks()[bi];
            BlockScaling& sc = blocks_[bi];
            const auto ss = s.segment(b.cone_start, b.dim);
            const auto zs = z.segment(b.cone_start, b.dim);
            switch (b.type) {
                case ConeType::nonneg: {
                    if (ss.minCoeff() <= 0 || zs.minCoeff() <= 0)
                        throw NumericalBreakdown("nonneg iterate left the cone");
                    sc.w = (ss.cwiseQuotient(zs)).cwiseSqrt();
                    sc.lambda = (ss.cwiseProduct(zs)).cwiseSqrt();
                    break;
                }
                case ConeType::soc: {
                    const double ress = jdot(ss);
                    const double resz = jdot(zs);
                    if (ress <= 0 || resz <= 0 || ss(0) <= 0 || zs(0) <= 0)
                        throw NumericalBreakdown("soc iterate left the cone");
                    const double as = std::sqrt(ress);
                    const double az = std::sqrt(resz);
                    VectorXd sbar = ss / as;
                    VectorXd zbar = zs / az;
                    const double gamma = std::sqrt(0.5 * (1.0 + sbar.dot(zbar)));
                    VectorXd jz = zbar;
                    jz.tail(b.dim - 1) = -jz.tail(b.dim - 1);
                    VectorXd wbar = (sbar + jz) / (2.0 * gamma);
                    // Jordan square root of wbar, so that W = beta (2vv'-J)
                    // satisfies W z = W^{-1} s
                    wbar(0) += 1.0;
                    sc.vbar = wbar / std::sqrt(2.0 * wbar(0));
                    sc.beta = std::sqrt(as / az);
                    sc.lambda = apply_soc(sc, zs, false);
                    break;
                }
                case ConeType::psd: {
                    Eigen::LLT<MatrixXd> ls(smat(ss));
                    Eigen::LLT<MatrixXd> lz(smat(zs));
                    if (ls.info() != Eigen::Success || lz.info() != Eigen::Success)
                        throw NumericalBreakdown("psd iterate lost positive definiteness");
                    const MatrixXd fs = ls.matrixL();
                    const MatrixXd fz = lz.matrixL();
                    Eigen::JacobiSVD<MatrixXd> svd(fz.transpose() * fs,
                                                   Eigen::ComputeFullU | Eigen::ComputeFullV);
                    const VectorXd sigma = svd.singularValues();
                    if (sigma.minCoeff() <= 0) throw NumericalBreakdown("degenerate NT scaling");
                    const VectorXd isq = sigma.cwiseSqrt().cwiseInverse();
                    sc.r = fs * svd.matrixV() * isq.asDiagonal();
                    sc.rinv = isq.asDiagonal() * svd.matrixU().transpose() * fz.transpose();
                    sc.ww = sc.r * sc.r.transpose();
                    sc.wwinv = sc.rinv.transpose() * sc.rinv;
                    MatrixXd lam = MatrixXd::Zero(b.side, b.side);
                    lam.diagonal() = sigma;
                    sc.lambda = svec(lam);
                    break;
                }
                default:
                    break;
            }
            lambda_.segment(b.cone_start, b.dim) = sc.lambda;
        }
    }

    bool is_identity() const { return identity_; }
    const VectorXd& lambda() const { return lambda_; }

    enum class Op { w, wt, winv, wtinv, ww, wwinv };

    VectorXd apply(Op op, const VectorXd& u) const {
        if (identity_) return u;
        VectorXd out(cones_->m());
        for (std::size_t bi = 0; bi < cones_->blocks().size(); ++bi) {
            const Block& b = cones_->blocks()[bi];
            const BlockScaling& sc = blocks_[bi];
            const auto us = u.segment(b.cone_start, b.dim);
            auto seg = out.segment(b.cone_start, b.dim);
            switch (b.type) {
                case ConeType::nonneg:
                    switch (op) {
                        case Op::w:
                        case Op::wt: seg = sc.w.cwiseProduct(us); break;
                        case Op::winv:
                        case Op::wtinv: seg = us.cwiseQuotient(sc.w); break;
                        case Op::ww: seg = sc.w.array().square().matrix().cwiseProduct(us); break;
                        case Op::wwinv: seg = us.cwiseQuotient(sc.w.array().square().matrix()); break;
                    }
                    break;
                case ConeType::soc:
                    switch (op) {
                        case Op::w:
                        case Op::wt: seg = apply_soc(sc, us, false); break;
                        case Op::winv:
                        case Op::wtinv: seg = apply_soc(sc, us, true); break;
                        case Op::ww: seg = apply_soc(sc, apply_soc(sc, us, false), false); break;
                        case Op::wwinv: seg = apply_soc(sc, apply_soc(sc, us, true), true); break;
                    }
                    break;
                case ConeType::psd: {
                    const MatrixXd mu = smat(us);
                    switch (op) {
                        case Op::w: seg = svec(sc.r.transpose() * mu * sc.r); break;
                        case Op::wt: seg = svec(sc.r * mu * sc.r.transpose()); break;
                        case Op::winv: seg = svec(sc.rinv.transpose() * mu * sc.rinv); break;
                        case Op::wtinv: seg = svec(sc.rinv * mu * sc.rinv.transpose()); break;
                        case Op::ww: seg = svec(sc.ww * mu * sc.ww); break;
                        case Op::wwinv: seg = svec(sc.wwinv * mu * sc.wwinv); break;
                    }
                    break;
                }
                default:
                    break;
            }
        }
        return out;
    }

    // (W'W) applied to a sparse cone-space column; entries sorted by index.
    void apply_ww_column(const std::vector<std::pair<int, double>>& entries, VectorXd& out) const {
        out.setZero();
        if (identity_) {
            for (const auto& [k, v] : entries) out(k) = v;
            return;
        }
        std::size_t pos = 0;
        for (std::size_t bi = 0; bi < cones_->blocks().size() && pos < entries.size(); ++bi) {
            const Block& b = cones_->blocks()[bi];
            const int end = b.cone_start + b.dim;
            const std::size_t first = pos;
            while (pos < entries.size() && entries[pos].first < end) ++pos;
            if (pos == first) continue;
            const BlockScaling& sc = blocks_[bi];
            switch (b.type) {
                case ConeType::nonneg:
                    for (std::size_t t = first; t < pos; ++t) {
                        const int local = entries[t].first - b.cone_start;
                        out(entries[t].first) = sc.w(local) * sc.w(local) * entries[t].second;
                    }
                    break;
                case ConeType::soc: {
                    VectorXd us = VectorXd::Zero(b.dim);
                    for (std::size_t t = first; t < pos; ++t)
                        us(entries[t].first - b.cone_start) = entries[t].second;
                    out.segment(b.cone_start, b.dim) = apply_soc(sc, apply_soc(sc, us, false), false);
                    break;
                }
                case ConeType::psd: {
                    const std::size_t nnz = pos - first;
                    if (nnz <= 8) {
                        MatrixXd acc = MatrixXd::Zero(b.side, b.side);
                        for (std::size_t t = first; t < pos; ++t) {
                            const int local = entries[t].first - b.cone_start;
                            const auto [i, j] = svec_coords(local, b.side);
                            if (i == j) {
                                acc.noalias() +=
                                    entries[t].second * sc.ww.col(i) * sc.ww.col(i).transpose();
                            } else {
                                const double v = entries[t].second / std::sqrt(2.0);
                                acc.noalias() += v * sc.ww.col(i) * sc.ww.col(j).transpose();
                                acc.noalias() += v * sc.ww.col(j) * sc.ww.col(i).transpose();
                            }
                        }
                        out.segment(b.cone_start, b.dim) = svec(acc);
                    } else {
                        VectorXd us = VectorXd::Zero(b.dim);
                        for (std::size_t t = first; t < pos; ++t)
                            us(entries[t].first - b.cone_start) = entries[t].second;
                        out.segment(b.cone_start, b.dim) = svec(sc.ww * smat(us) * sc.ww);
                    }
                    break;
                }
                default:
                    break;
            }
        }
    }

private:
    static VectorXd apply_soc(const BlockScaling& sc, const Eigen::Ref<const VectorXd>& u, bool inverse) {
        const int dim = static_cast<int>(u.size());
        VectorXd out(dim);
        if (!inverse) {
            const double dot = sc.vbar.dot(u);
            out = 2.0 * dot * sc.vbar;
            out(0) -= u(0);
            out.tail(dim - 1) += u.tail(dim - 1);
            out *= sc.beta;
        } else {
            VectorXd jv = sc.vbar;
            jv.tail(dim - 1) = -jv.tail(dim - 1);
            const double dot = jv.dot(u);
            out = 2.0 * dot * jv;
            out(0) -= u(0);
            out.tail(dim - 1) += u.tail(dim - 1);
            out /= sc.beta;
        }
        return out;
    }

    const Cones* cones_;
    bool identity_ = true;
    std::vector<BlockScaling> blocks_;
    VectorXd lambda_;
};

struct Directions {
    VectorXd dx, dy, dz;
};

class KktBase {
public:
    virtual ~KktBase() = default;
    virtual void factor(const Scaling& scaling) = 0;
    virtual Directions solve(const VectorXd& bx, const VectorXd& by, const VectorXd& bz) const = 0;
};

// Full-cover path. With every variable in exactly one cone, the reduced
// saddle system has H = (W'W)^{-1} in cone coordinates, so
//   dy solves  A (W'W) A' dy = A (W'W) r1 - by,  r1 = bx_cone - (W'W)^{-1} bz
//   dx = (W'W)(r1 - (A'dy)_cone),  dz = (W'W)^{-1}(-dx_cone - bz).
class SchurKkt : public KktBase {
public:
    SchurKkt(const ConeProgram& p, const Cones& cones) : p_(&p), cones_(&cones) {
        const int rows = p.num_eq();
        at_cols_.resize(rows);
        SparseMat at = SparseMat(p.a.transpose());
        at.makeCompressed();
        for (int r = 0; r < rows; ++r) {
            auto& col = at_cols_[r];
            for (SparseMat::InnerIterator it(at, r); it; ++it)
                col.emplace_back(cones.var_to_cone(static_cast<int>(it.row())), it.value());
            std::sort(col.begin(), col.end());
        }
        y_ = MatrixXd(cones.m(), rows);
    }

    void factor(const Scaling& scaling) override {
        scaling_ = &scaling;
        const int rows = p_->num_eq();
        VectorXd col(cones_->m());
        for (int r = 0; r < rows; ++r) {
            scaling.apply_ww_column(at_cols_[r], col);
            y_.col(r) = col;
        }
        MatrixXd s(rows, rows);
        for (int r = 0; r < rows; ++r) {
            for (int q = r; q < rows; ++q) {
                double acc = 0.0;
                for (const auto& [k, v] : at_cols_[q]) acc += v * y_(k, r);
                s(r, q) = acc;
                s(q, r) = acc;
            }
        }
        llt_.compute(s);
        if (llt_.info() != Eigen::Success) {
            const double ridge = std::max(1e-12, 1e-14 * s.diagonal().cwiseAbs().maxCoeff());
            s.diagonal().array() += ridge;
            llt_.compute(s);
            if (llt_.info() != Eigen::Success)
                throw NumericalBreakdown("Schur complement factorization failed");
        }
    }

    Directions solve(const VectorXd& bx, const VectorXd& by, const VectorXd& bz) const override {
        const VectorXd r1 = bx - cones_->scatter(scaling_->apply(Scaling::Op::wwinv, bz));
        Directions d = solve_reduced(r1, by);
        // iterative refinement on the reduced saddle system, kept while the
        // residual still shrinks
        double best_res = kInfinity;
        Directions best = d;
        for (int round = 0; round < 5; ++round) {
            const VectorXd res1 = r1 - apply_h(d.dx) - p_->a.transpose() * d.dy;
            const VectorXd res2 = by - p_->a * d.dx;
            const double res_norm = std::max(res1.norm(), res2.norm());
            if (res_norm < best_res) {
                best_res = res_norm;
                best = d;
            } else {
                break;
            }
            if (res_norm <= 1e-14 * std::max(1.0, std::max(r1.norm(), by.norm()))) break;
            const Directions corr = solve_reduced(res1, res2);
            d.dx += corr.dx;
            d.dy += corr.dy;
        }
        d = best;
        // dz from KKT row 1 keeps the dual residual exact
        d.dz = cones_->gather(p_->a.transpose() * d.dy - bx);
        return d;
    }

private:
    // H v with H = E'(W'W)^{-1}E
    VectorXd apply_h(const VectorXd& v) const {
        return cones_->scatter(scaling_->apply(Scaling::Op::wwinv, cones_->gather(v)));
    }

    // Solve [H A'; A 0](dx, dy) = (r1, by).
    Directions solve_reduced(const VectorXd& r1, const VectorXd& by) const {
        Directions d;
        const VectorXd hr1 = cones_->scatter(scaling_->apply(Scaling::Op::ww, cones_->gather(r1)));
        d.dy = llt_.solve(p_->a * hr1 - by);
        d.dx = cones_->scatter(scaling_->apply(
            Scaling::Op::ww, cones_->gather(r1 - VectorXd(p_->a.transpose() * d.dy))));
        return d;
    }

    const ConeProgram* p_;
    const Cones* cones_;
    const Scaling* scaling_ = nullptr;
    std::vector<std::vector<std::pair<int, double>>> at_cols_;
    MatrixXd y_;
    Eigen::LLT<MatrixXd> llt_;
};

// General path: dense saddle [[H, A'],[A, 0]] with H = E'(W'W)^{-1}E, LU
// factorized. Used for programs with free slices (small by construction).
class DenseKkt : public KktBase {
public:
    DenseKkt(const ConeProgram& p, const Cones& cones) : p_(&p), cones_(&cones) {
        a_dense_ = MatrixXd(p.a);
    }

    void factor(const Scaling& scaling) override {
        scaling_ = &scaling;
        const int n = p_->num_vars();
        const int pe = p_->num_eq();
        MatrixXd k = MatrixXd::Zero(n + pe, n + pe);
        // H = E'(W'W)^{-1}E, built column by column from cone basis vectors
        VectorXd basis = VectorXd::Zero(cones_->m());
        for (int kk = 0; kk < cones_->m(); ++kk) {
            basis.setZero();
            basis(kk) = 1.0;
            const VectorXd var_col = cones_->scatter(scaling.apply(Scaling::Op::wwinv, basis));
            k.col(cone_var(kk)).head(n) = var_col;
        }
        k.block(n, 0, pe, n) = a_dense_;
        k.block(0, n, n, pe) = a_dense_.transpose();
        lu_.compute(k);
        kkt_ = std::move(k);
    }

    Directions solve(const VectorXd& bx, const VectorXd& by, const VectorXd& bz) const override {
        const int n = p_->num_vars();
        const int pe = p_->num_eq();
        VectorXd rhs(n + pe);
        rhs.head(n) = bx - cones_->scatter(scaling_->apply(Scaling::Op::wwinv, bz));
        rhs.tail(pe) = by;
        VectorXd sol = lu_.solve(rhs);
        // refinement
        const VectorXd res = rhs - kkt_ * sol;
        sol += lu_.solve(res);
        Directions d;
        d.dx = sol.head(n);
        d.dy = sol.tail(pe);
        d.dz = cones_->gather(a_dense_.transpose() * d.dy - bx);
        return d;
    }

private:
    int cone_var(int k) const {
        // variable index of cone coordinate k
        int off = 0;
        for (const auto& b : cones_->blocks()) {
            if (k < off + b.dim) return b.var_start + (k - off);
            off += b.dim;
        }
        throw InvalidProgram("cone coordinate out of range");
    }

    const ConeProgram* p_;
    const Cones* cones_;
    const Scaling* scaling_ = nullptr;
    MatrixXd a_dense_;
    MatrixXd kkt_;
    Eigen::PartialPivLU<MatrixXd> lu_;
};

}  // namespace

SolveResult solve(const ConeProgram& program, const SolveOptions& opts) {
    program.validate();
    const Cones cones(program);
    const int n = program.num_vars();
    const int pe = program.num_eq();
    const int m = cones.m();
    if (m == 0) throw InvalidProgram("program has no cone constraints");

    std::unique_ptr<KktBase> kkt;
    if (cones.full_cover())
        kkt = std::make_unique<SchurKkt>(program, cones);
    else
        kkt = std::make_unique<DenseKkt>(program, cones);

    const VectorXd e = cones.identity();
    const double degree = static_cast<double>(cones.degree());

    // --- initialization (cvxopt-style least-squares start, shifted into K)
    Scaling ident(cones);
    kkt->factor(ident);
    VectorXd x, y, s, z;
    {
        Directions primal = kkt->solve(VectorXd::Zero(n), program.b, VectorXd::Zero(m));
        x = primal.dx;
        s = -primal.dz;
        const double shift_s = cones.max_shift(s);
        if (shift_s >= -1e-8 * std::max(1.0, s.norm())) s += (1.0 + shift_s) * e;

        Directions dual = kkt->solve(-program.c, VectorXd::Zero(pe), VectorXd::Zero(m));
        y = dual.dy;
        z = dual.dz;
        const double shift_z = cones.max_shift(z);
        if (shift_z >= -1e-8 * std::max(1.0, z.norm())) z += (1.0 + shift_z) * e;
    }

    const double norm_b = std::max(1.0, program.b.norm());
    const double norm_c = std::max(1.0, program.c.norm());

    SolveResult result;
    result.status = SolveStatus::max_iters;
    double best_score = kInfinity;
    bool have_best = false;

    for (int iter = 0; iter <= opts.max_iters; ++iter) {
        const VectorXd rx = program.c + program.a.transpose() * y - cones.scatter(z);
        const VectorXd ry = program.a * x - program.b;
        const VectorXd rz = s - cones.gather(x);
        const double gap = s.dot(z);
        const double pcost = program.c.dot(x);
        const double dcost = -program.b.dot(y);

        const double pres = std::max(ry.norm() / norm_b, rz.norm());
        const double dres = rx.norm() / norm_c;
        double relgap = kInfinity;
        if (pcost < 0)
            relgap = gap / (-pcost);
        else if (dcost > 0)
            relgap = gap / dcost;

        const double score = std::max({pres, dres, std::min(std::abs(gap), relgap)});
        if (!have_best || score < best_score) {
            have_best = true;
            best_score = score;
            result.z = x;
            result.objective_value = pcost;
            result.primal_residual = pres;
            result.dual_residual = dres;
            result.gap = gap;
            result.iterations = iter;
        }

        if (std::getenv("GDX_IPM_TRACE") != nullptr)
            std::fprintf(stderr, "it %2d pcost % .6e dcost % .6e gap %.3e pres %.3e dres %.3e\n",
                         iter, pcost, dcost, gap, pres, dres);

        if (pres <= opts.feas_tol && dres <= opts.feas_tol &&
            (gap <= opts.gap_tol || relgap <= opts.gap_tol)) {
            result.z = x;
            result.objective_value = pcost;
            result.primal_residual = pres;
            result.dual_residual = dres;
            result.gap = gap;
            result.iterations = iter;
            result.status = SolveStatus::optimal;
            return result;
        }
        // certificate checks
        if (dcost > 0) {
            const double cert = (program.a.transpose() * y - cones.scatter(z)).norm() / norm_c;
            if (cert / dcost <= opts.feas_tol * 1e-2) {
                result.status = SolveStatus::infeasible;
                return result;
            }
        }
        if (pcost < 0) {
            const double cert = std::max((program.a * x).norm() / norm_b, rz.norm());
            if (cert / (-pcost) <= opts.feas_tol * 1e-2) {
                result.status = SolveStatus::unbounded;
                return result;
            }
        }
        if (iter == opts.max_iters) break;

        // Numerical endgame: once the iterate degrades well past the best
        // point seen, further steps only amplify the ill-conditioning.
        if (have_best && score > 1e3 * best_score && best_score < 1e-5) break;

        try {
            Scaling scaling(cones, s, z);
            const VectorXd& lambda = scaling.lambda();
            kkt->factor(scaling);

            // affine direction
            const VectorXd bz_aff = -rz + s;
            Directions aff = kkt->solve(-rx, -ry, bz_aff);
            // ds from KKT row 3 keeps the slack residual exact
            const VectorXd ds_aff = -rz + cones.gather(aff.dx);

            const VectorXd ds_aff_scaled = scaling.apply(Scaling::Op::wtinv, ds_aff);
            const VectorXd dz_aff_scaled = scaling.apply(Scaling::Op::w, aff.dz);
            const double step_aff = std::min(
                {1.0, cones.max_step(lambda, ds_aff_scaled), cones.max_step(lambda, dz_aff_scaled)});
            const double gap_aff = (s + step_aff * ds_aff).dot(z + step_aff * aff.dz);
            const double sigma = std::pow(std::clamp(gap_aff / gap, 0.0, 1.0), 3.0);
            const double mu = gap / degree;

            // combined direction with Mehrotra correction
            VectorXd dcomb = -cones.jprod(lambda, lambda) -
                             cones.jprod(ds_aff_scaled, dz_aff_scaled) + sigma * mu * e;
            const VectorXd wsol = scaling.apply(Scaling::Op::wt, cones.jsolve(lambda, dcomb));
            const VectorXd bz_comb = -rz - wsol;
            Directions dir = kkt->solve(-rx, -ry, bz_comb);
            const VectorXd ds = -rz + cones.gather(dir.dx);

            const VectorXd ds_scaled = scaling.apply(Scaling::Op::wtinv, ds);
            const VectorXd dz_scaled = scaling.apply(Scaling::Op::w, dir.dz);
            double alpha =
                std::min(cones.max_step(lambda, ds_scaled), cones.max_step(lambda, dz_scaled));
            alpha = std::min(1.0, kStepScale * alpha);
            if (!std::isfinite(alpha) || alpha <= 1e-10) break;

            x += alpha * dir.dx;
            y += alpha * dir.dy;
            s += alpha * ds;
            z += alpha * dir.dz;
            if (!x.allFinite() || !s.allFinite() || !z.allFinite()) break;
        } catch (const NumericalBreakdown&) {
            if (!have_best) throw;
            break;
        }
    }
    return result;
}

}  // namespace graphdeconv
