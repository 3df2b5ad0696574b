#pragma once

// Primal barrier interior-point method for the Problem class. Small dense
// problems only: every Newton system is formed and factorized densely, which
// is the right trade at the dimensions this project produces (tens to a few
// hundred variables, PSD blocks of dimension <= 10).
//
// Phase I minimizes a single relaxation scalar s added to every constraint
// (affine: a.x + b <= s; SOC: ||A x + b|| <= rhs + s; log: the arguments and
// the residual are shifted by s; PSD: W + s I). Any iterate with s < 0 is
// strictly feasible for the original constraints, at which point Phase II
// runs the standard centering path with multiplier 20. The certified
// objective gap at termination is m / t with m the total barrier complexity.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "covertaoi/conic/problem.hpp"

namespace covertaoi::conic {

namespace detail {

// Packed layout: scalar variables first, then per block the diagonal, the
// real parts of the strict upper triangle, then the imaginary parts.
struct Layout {
    int n_scalars = 0;
    std::vector<int> off;  // per block, offset into x
    std::vector<int> dim;
    int total = 0;

    int diag(int b, int i) const { return off[static_cast<size_t>(b)] + i; }
    int re(int b, int i, int j) const {  // i < j
        const int D = dim[static_cast<size_t>(b)];
        return off[static_cast<size_t>(b)] + D + pair_index(D, i, j);
    }
    int im(int b, int i, int j) const {
        const int D = dim[static_cast<size_t>(b)];
        return off[static_cast<size_t>(b)] + D + D * (D - 1) / 2 + pair_index(D, i, j);
    }
    static int pair_index(int D, int i, int j) {
        // enumeration order: (0,1),(0,2),...,(0,D-1),(1,2),...
        return i * D - i * (i + 1) / 2 + (j - i - 1);
    }
};

inline Eigen::MatrixXcd unpack_block(const Layout& lay, int b, const Eigen::VectorXd& x) {
    const int D = lay.dim[static_cast<size_t>(b)];
    Eigen::MatrixXcd W(D, D);
    for (int i = 0; i < D; ++i) {
        W(i, i) = x[lay.diag(b, i)];
        for (int j = i + 1; j < D; ++j) {
            const cplx v(x[lay.re(b, i, j)], x[lay.im(b, i, j)]);
            W(i, j) = v;
            W(j, i) = std::conj(v);
        }
    }
    return W;
}

inline void pack_block(const Layout& lay, int b, const Eigen::MatrixXcd& W,
                       Eigen::VectorXd& x) {
    const int D = lay.dim[static_cast<size_t>(b)];
    for (int i = 0; i < D; ++i) {
        x[lay.diag(b, i)] = W(i, i).real();
        for (int j = i + 1; j < D; ++j) {
            x[lay.re(b, i, j)] = W(i, j).real();
            x[lay.im(b, i, j)] = W(i, j).imag();
        }
    }
}

struct Row {
    Eigen::VectorXd a;
    double b = 0.0;
    double value(Eigen::Ref<const Eigen::VectorXd> x) const { return a.dot(x) + b; }
};

// Flatten a LinExpr into a dense row. Trace terms expand through the
// Hermitian parameter basis: Tr(A W) = sum_i Re(A_ii) w_ii
//   + sum_{i<j} 2 Re(A_ij) re_ij + 2 Im(A_ij) im_ij.
inline Row flatten(const Layout& lay, const LinExpr& e) {
    Row r;
    r.a = Eigen::VectorXd::Zero(lay.total);
    r.b = e.constant;
    for (const auto& [v, c] : e.terms) r.a[v] += c;
    for (const auto& [blk, A] : e.traces) {
        const int D = lay.dim[static_cast<size_t>(blk)];
        for (int i = 0; i < D; ++i) {
            r.a[lay.diag(blk, i)] += A(i, i).real();
            for (int j = i + 1; j < D; ++j) {
                // Hermitian part of A in case the caller passed something slightly off
                const cplx aij = 0.5 * (A(i, j) + std::conj(A(j, i)));
                r.a[lay.re(blk, i, j)] += 2.0 * aij.real();
                r.a[lay.im(blk, i, j)] += 2.0 * aij.imag();
            }
        }
    }
    return r;
}

struct FlatSoc {
    std::vector<Row> z;  // stacked norm arguments
    Row rhs;
    std::string name;
};

struct FlatLog {
    std::vector<double> gamma;
    std::vector<Row> u;
    Row v;
    std::string name;
};

struct Flat {
    Layout lay;
    Row obj;  // minimize sense
    bool maximize = false;
    std::vector<Row> ineq;
    std::vector<std::string> ineq_names;
    std::vector<Row> eq;
    std::vector<std::string> eq_names;
    std::vector<FlatSoc> socs;
    std::vector<FlatLog> logs;
    double m = 0.0;  // barrier complexity
};

inline void scale_row(Row& r) {
    const double s = r.a.lpNorm<Eigen::Infinity>();
    if (s > 0) {
        r.a /= s;
        r.b /= s;
    }
}

inline Flat flatten_problem(const Problem& p) {
    Flat f;
    f.lay.n_scalars = static_cast<int>(p.scalars().size());
    int off = f.lay.n_scalars;
    for (const auto& blk : p.psd_blocks()) {
        f.lay.off.push_back(off);
        f.lay.dim.push_back(blk.dim);
        off += blk.dim * blk.dim;
    }
    f.lay.total = off;

    f.obj = flatten(f.lay, p.objective());
    f.maximize = p.is_maximize();
    if (f.maximize) {
        f.obj.a = -f.obj.a;
        f.obj.b = -f.obj.b;
    }

    auto push_ineq = [&](Row r, const std::string& name) {
        scale_row(r);
        f.ineq.push_back(std::move(r));
        f.ineq_names.push_back(name);
    };

    for (size_t i = 0; i < p.ineqs().size(); ++i) {
        const auto& c = p.ineqs()[i];
        push_ineq(flatten(f.lay, c.expr),
                  c.name.empty() ? "le#" + std::to_string(i) : c.name);
    }
    for (int v = 0; v < f.lay.n_scalars; ++v) {
        const auto& sv = p.scalars()[static_cast<size_t>(v)];
        if (sv.lb > -kInf) {
            Row r;
            r.a = Eigen::VectorXd::Zero(f.lay.total);
            r.a[v] = -1.0;
            r.b = sv.lb;
            push_ineq(std::move(r), sv.name + ">=lb");
        }
        if (sv.ub < kInf) {
            Row r;
            r.a = Eigen::VectorXd::Zero(f.lay.total);
            r.a[v] = 1.0;
            r.b = -sv.ub;
            push_ineq(std::move(r), sv.name + "<=ub");
        }
    }
    for (size_t i = 0; i < p.eqs().size(); ++i) {
        Row r = flatten(f.lay, p.eqs()[i].expr);
        scale_row(r);
        f.eq.push_back(std::move(r));
        f.eq_names.push_back(p.eqs()[i].name.empty() ? "eq#" + std::to_string(i)
                                                     : p.eqs()[i].name);
    }
    for (size_t i = 0; i < p.socs().size(); ++i) {
        const auto& c = p.socs()[i];
        FlatSoc fs;
        double scale = 0.0;
        for (const auto& e : c.norm_args) {
            fs.z.push_back(flatten(f.lay, e));
            scale = std::max(scale, fs.z.back().a.lpNorm<Eigen::Infinity>());
            scale = std::max(scale, std::abs(fs.z.back().b));
        }
        fs.rhs = flatten(f.lay, c.rhs);
        scale = std::max(scale, fs.rhs.a.lpNorm<Eigen::Infinity>());
        if (scale > 0) {
            for (auto& r : fs.z) {
                r.a /= scale;
                r.b /= scale;
            }
            fs.rhs.a /= scale;
            fs.rhs.b /= scale;
        }
        fs.name = c.name.empty() ? "soc#" + std::to_string(i) : c.name;
        f.socs.push_back(std::move(fs));
    }
    for (size_t i = 0; i < p.logcons().size(); ++i) {
        const auto& c = p.logcons()[i];
        FlatLog fl;
        fl.v = flatten(f.lay, c.rest);
        for (const auto& lt : c.logs) {
            Row r = flatten(f.lay, lt.arg);
            const double s = std::max(r.a.lpNorm<Eigen::Infinity>(), std::abs(r.b));
            if (s > 0) {
                r.a /= s;
                r.b /= s;
                fl.v.b += lt.gamma * std::log(s);  // gamma ln(u) = gamma ln(u/s) + gamma ln(s)
            }
            fl.gamma.push_back(lt.gamma);
            fl.u.push_back(std::move(r));
        }
        fl.name = c.name.empty() ? "log#" + std::to_string(i) : c.name;
        f.logs.push_back(std::move(fl));
    }

    f.m = static_cast<double>(f.ineq.size()) + 2.0 * static_cast<double>(f.socs.size());
    for (const auto& lg : f.logs) f.m += 1.0 + static_cast<double>(lg.u.size());
    for (int d : f.lay.dim) f.m += static_cast<double>(d);
    return f;
}

// Trace-basis coefficient extraction used for PSD barrier derivatives: given
// Hermitian S, the derivative of Tr(S W) in the packed parameters.
inline void add_trace_coeffs(const Layout& lay, int b, const Eigen::MatrixXcd& S,
                             double w, Eigen::VectorXd& out) {
    const int D = lay.dim[static_cast<size_t>(b)];
    for (int i = 0; i < D; ++i) {
        out[lay.diag(b, i)] += w * S(i, i).real();
        for (int j = i + 1; j < D; ++j) {
            out[lay.re(b, i, j)] += w * 2.0 * S(i, j).real();
            out[lay.im(b, i, j)] += w * 2.0 * S(i, j).imag();
        }
    }
}

// State of one barrier evaluation. In Phase I the vector has one extra
// coordinate s at index n (the relaxation variable).
struct Eval {
    bool in_domain = false;
    double phi = 0.0;
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
};

class Barrier {
  public:
    Barrier(const Flat& f, bool phase1) : f_(f), phase1_(phase1) {
        nd_ = f.lay.total + (phase1 ? 1 : 0);
    }

    int dim() const { return nd_; }

    double s_of(const Eigen::VectorXd& y) const { return phase1_ ? y[nd_ - 1] : 0.0; }

    // Value-only domain check and barrier value; used by the line search.
    bool value(const Eigen::VectorXd& y, double& phi_out) const {
        const double s = s_of(y);
        double phi = 0.0;
        const auto x = y.head(f_.lay.total);
        for (const auto& r : f_.ineq) {
            const double slack = s - r.value(x);
            if (slack <= 0) return false;
            phi -= std::log(slack);
        }
        for (const auto& c : f_.socs) {
            const double rhs = c.rhs.value(x) + s;
            if (rhs <= 0) return false;
            double zz = 0.0;
            for (const auto& zr : c.z) {
                const double zi = zr.value(x);
                zz += zi * zi;
            }
            const double u = rhs * rhs - zz;
            if (u <= 0) return false;
            phi -= std::log(u);
        }
        for (const auto& c : f_.logs) {
            double G = c.v.value(x) + s;
            for (size_t k = 0; k < c.u.size(); ++k) {
                const double uk = c.u[k].value(x) + s;
                if (uk <= 0) return false;
                G += c.gamma[k] * std::log(uk);
                phi -= std::log(uk);
            }
            if (G <= 0) return false;
            phi -= std::log(G);
        }
        for (size_t b = 0; b < f_.lay.dim.size(); ++b) {
            const int D = f_.lay.dim[b];
            Eigen::MatrixXcd W = unpack_block(f_.lay, static_cast<int>(b), x);
            if (phase1_) W += s * Eigen::MatrixXcd::Identity(D, D);
            Eigen::LLT<Eigen::MatrixXcd> llt(W);
            if (llt.info() != Eigen::Success) return false;
            double logdet = 0.0;
            for (int i = 0; i < D; ++i) logdet += std::log(llt.matrixL()(i, i).real());
            // |det L|^2 = det W for the complex Cholesky factor
            phi -= 2.0 * logdet;
            // reject indefinite matrices that slipped through LLT round-off
            if (!std::isfinite(logdet)) return false;
        }
        phi_out = phi;
        return true;
    }

    Eval full(const Eigen::VectorXd& y) const {
        Eval ev;
        ev.grad = Eigen::VectorXd::Zero(nd_);
        ev.hess = Eigen::MatrixXd::Zero(nd_, nd_);
        if (!value(y, ev.phi)) return ev;
        ev.in_domain = true;

        const double s = s_of(y);
        const auto x = y.head(f_.lay.total);
        const int n = f_.lay.total;
        const int si = nd_ - 1;  // valid only when phase1_

        auto row_grad = [&](const Row& r, double coef) {
            ev.grad.head(n) += coef * r.a;
            if (phase1_) ev.grad[si] -= coef;  // slack = s - r(x): d/ds = +1
        };
        // rank-one update with the extended direction (a, extra_s)
        auto rank1 = [&](const Eigen::VectorXd& a, double as, double coef) {
            ev.hess.topLeftCorner(n, n) += coef * a * a.transpose();
            if (phase1_) {
                ev.hess.block(0, si, n, 1) += coef * as * a;
                ev.hess.block(si, 0, 1, n) += coef * as * a.transpose();
                ev.hess(si, si) += coef * as * as;
            }
        };

        for (const auto& r : f_.ineq) {
            const double slack = s - r.value(x);
            row_grad(r, 1.0 / slack);
            rank1(r.a, -1.0, 1.0 / (slack * slack));
        }

        for (const auto& c : f_.socs) {
            const double rhs = c.rhs.value(x) + s;
            Eigen::VectorXd zvals(static_cast<long>(c.z.size()));
            for (size_t k = 0; k < c.z.size(); ++k) zvals[static_cast<long>(k)] = c.z[k].value(x);
            const double u = rhs * rhs - zvals.squaredNorm();
            // grad u over (x, s): 2*rhs*(c_row incl s) - 2*sum z_k a_k
            Eigen::VectorXd gu = Eigen::VectorXd::Zero(nd_);
            gu.head(n) = 2.0 * rhs * c.rhs.a;
            if (phase1_) gu[si] = 2.0 * rhs;
            for (size_t k = 0; k < c.z.size(); ++k)
                gu.head(n) -= 2.0 * zvals[static_cast<long>(k)] * c.z[k].a;
            ev.grad -= gu / u;
            ev.hess += gu * gu.transpose() / (u * u);
            // -hess(u)/u: hess(u) = 2 c c^T - 2 sum a_k a_k^T (extended)
            rank1(c.rhs.a, 1.0, -2.0 / u);
            for (const auto& zr : c.z) rank1(zr.a, 0.0, 2.0 / u);
        }

        for (const auto& c : f_.logs) {
            // G = v(x) + s + sum gamma_k ln(u_k(x) + s); barrier is
            // -ln(G) - sum ln(u_k + s). Every relaxed argument has slope 1 in s.
            double G = c.v.value(x) + s;
            Eigen::VectorXd gG = Eigen::VectorXd::Zero(nd_);
            gG.head(n) = c.v.a;
            if (phase1_) gG[si] = 1.0;
            std::vector<double> uvals(c.u.size());
            for (size_t k = 0; k < c.u.size(); ++k) {
                uvals[k] = c.u[k].value(x) + s;
                G += c.gamma[k] * std::log(uvals[k]);
                gG.head(n) += c.gamma[k] / uvals[k] * c.u[k].a;
                if (phase1_) gG[si] += c.gamma[k] / uvals[k];
                // domain barrier -ln(u_k + s)
                ev.grad.head(n) -= c.u[k].a / uvals[k];
                if (phase1_) ev.grad[si] -= 1.0 / uvals[k];
                rank1(c.u[k].a, 1.0, 1.0 / (uvals[k] * uvals[k]));
            }
            ev.grad -= gG / G;
            ev.hess += gG * gG.transpose() / (G * G);
            // -hess(G)/G is PSD: hess(G) = -sum gamma_k/u_k^2 (a_k,1)(a_k,1)^T
            for (size_t k = 0; k < c.u.size(); ++k)
                rank1(c.u[k].a, 1.0, c.gamma[k] / (uvals[k] * uvals[k] * G));
        }

        for (size_t b = 0; b < f_.lay.dim.size(); ++b) {
            const int D = f_.lay.dim[b];
            Eigen::MatrixXcd W = unpack_block(f_.lay, static_cast<int>(b), x);
            if (phase1_) W += s * Eigen::MatrixXcd::Identity(D, D);
            const Eigen::MatrixXcd K = W.llt().solve(Eigen::MatrixXcd::Identity(D, D));
            // gradient: -Tr(K E_a)
            Eigen::VectorXd gK = Eigen::VectorXd::Zero(nd_);
            add_trace_coeffs(f_.lay, static_cast<int>(b), K, -1.0, gK);
            if (phase1_) gK[si] = -K.trace().real();
            ev.grad += gK;
            add_psd_hessian(static_cast<int>(b), K, ev.hess);
        }
        return ev;
    }

  private:
    // Hessian of -ln det W in the packed basis, H_ab = Tr(K E_a K E_b),
    // expanded into closed forms over the entries of K.
    void add_psd_hessian(int b, const Eigen::MatrixXcd& K, Eigen::MatrixXd& H) const {
        const int D = f_.lay.dim[static_cast<size_t>(b)];
        const auto& lay = f_.lay;
        auto Z = [&](int i, int j, int k, int l) { return K(j, k) * K(l, i); };

        // parameter descriptors: kind 0 = diag(i), 1 = re(i,j), 2 = im(i,j)
        struct P {
            int kind, i, j, idx;
        };
        std::vector<P> ps;
        for (int i = 0; i < D; ++i) ps.push_back({0, i, i, lay.diag(b, i)});
        for (int i = 0; i < D; ++i)
            for (int j = i + 1; j < D; ++j) ps.push_back({1, i, j, lay.re(b, i, j)});
        for (int i = 0; i < D; ++i)
            for (int j = i + 1; j < D; ++j) ps.push_back({2, i, j, lay.im(b, i, j)});

        auto entry = [&](const P& a, const P& c) -> double {
            // Tr(K E_a K E_c) for the three basis kinds
            if (a.kind == 0 && c.kind == 0) return std::norm(K(a.i, c.i));
            if (a.kind == 0 && c.kind == 1) return 2.0 * (Z(a.i, a.i, c.i, c.j)).real();
            if (a.kind == 0 && c.kind == 2) return -2.0 * (Z(a.i, a.i, c.i, c.j)).imag();
            if (a.kind == 1 && c.kind == 1)
                return 2.0 * Z(a.i, a.j, c.i, c.j).real() + 2.0 * Z(a.i, a.j, c.j, c.i).real();
            if (a.kind == 1 && c.kind == 2)
                return -2.0 * Z(a.i, a.j, c.i, c.j).imag() + 2.0 * Z(a.i, a.j, c.j, c.i).imag();
            if (a.kind == 2 && c.kind == 2)
                return 2.0 * Z(a.i, a.j, c.j, c.i).real() - 2.0 * Z(a.i, a.j, c.i, c.j).real();
            return 0.0;
        };

        for (size_t ai = 0; ai < ps.size(); ++ai) {
            for (size_t ci = ai; ci < ps.size(); ++ci) {
                const P &pa = ps[ai], &pc = ps[ci];
                double v;
                if (pa.kind <= pc.kind) v = entry(pa, pc);
                else v = entry(pc, pa);
                H(pa.idx, pc.idx) += v;
                if (pc.idx != pa.idx) H(pc.idx, pa.idx) += v;
            }
        }
        if (phase1_) {
            // cross terms with s: E_s = I, so H_{a,s} = Tr(K E_a K) = Tr(K^2 E_a)
            const Eigen::MatrixXcd K2 = K * K;
            Eigen::VectorXd cross = Eigen::VectorXd::Zero(nd_);
            add_trace_coeffs(lay, b, K2, 1.0, cross);
            const int si = nd_ - 1;
            for (int i = 0; i < nd_ - 1; ++i) {
                H(i, si) += cross[i];
                H(si, i) += cross[i];
            }
            H(si, si) += K2.trace().real();
        }
    }

    const Flat& f_;
    bool phase1_;
    int nd_;
};

// Exact violations of the original (unrelaxed) constraints at x; returns the
// worst one and its name.
inline std::pair<double, std::string> worst_violation(const Flat& f,
                                                      const Eigen::VectorXd& x) {
    double worst = 0.0;
    std::string name = "none";
    auto consider = [&](double v, const std::string& n) {
        if (v > worst) {
            worst = v;
            name = n;
        }
    };
    for (size_t i = 0; i < f.ineq.size(); ++i)
        consider(f.ineq[i].value(x), f.ineq_names[i]);
    for (size_t i = 0; i < f.eq.size(); ++i)
        consider(std::abs(f.eq[i].value(x)), f.eq_names[i]);
    for (const auto& c : f.socs) {
        double zz = 0.0;
        for (const auto& zr : c.z) {
            const double zi = zr.value(x);
            zz += zi * zi;
        }
        consider(std::sqrt(zz) - c.rhs.value(x), c.name);
    }
    for (const auto& c : f.logs) {
        double G = c.v.value(x);
        bool dom = true;
        double dom_viol = 0.0;
        for (size_t k = 0; k < c.u.size(); ++k) {
            const double uk = c.u[k].value(x);
            if (uk <= 0) {
                dom = false;
                dom_viol = std::max(dom_viol, -uk);
            } else {
                G += c.gamma[k] * std::log(uk);
            }
        }
        consider(dom ? -G : dom_viol + 1.0, c.name);
    }
    for (size_t b = 0; b < f.lay.dim.size(); ++b) {
        const Eigen::MatrixXcd W = unpack_block(f.lay, static_cast<int>(b), x);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(W, Eigen::EigenvaluesOnly);
        consider(-es.eigenvalues().minCoeff(), "psd#" + std::to_string(b));
    }
    return {worst, name};
}

// Smallest s that puts (x, s) strictly inside every relaxed constraint.
inline double needed_relaxation(const Flat& f, const Eigen::VectorXd& x) {
    double s = 0.0;
    for (const auto& r : f.ineq) s = std::max(s, r.value(x));
    for (const auto& c : f.socs) {
        double zz = 0.0;
        for (const auto& zr : c.z) {
            const double zi = zr.value(x);
            zz += zi * zi;
        }
        s = std::max(s, std::sqrt(zz) - c.rhs.value(x));
    }
    for (size_t b = 0; b < f.lay.dim.size(); ++b) {
        const Eigen::MatrixXcd W = unpack_block(f.lay, static_cast<int>(b), x);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(W, Eigen::EigenvaluesOnly);
        s = std::max(s, -es.eigenvalues().minCoeff());
    }
    for (const auto& c : f.logs) {
        double lo = s;
        for (const auto& ur : c.u) lo = std::max(lo, -ur.value(x));
        // G(s) is increasing in s; double an offset until positive
        double cand = lo + 1e-6;
        for (int it = 0; it < 200; ++it) {
            double G = c.v.value(x) + cand;
            for (size_t k = 0; k < c.u.size(); ++k)
                G += c.gamma[k] * std::log(c.u[k].value(x) + cand);
            if (G > 0) break;
            cand = 2.0 * cand + 1.0;
        }
        s = std::max(s, cand);
    }
    return s;
}

struct NewtonReport {
    bool converged = false;
    bool early_exit = false;
    int steps = 0;
};

// Equality-constrained damped Newton centering of t*obj + barrier. Assumes y
// starts inside the barrier domain and on the equality manifold. early_stop
// lets Phase I bail out as soon as the relaxation goes negative.
template <typename EarlyStop>
inline NewtonReport newton_center(const Barrier& bar, const Row& obj, double t,
                                  const std::vector<Row>& eqs, Eigen::VectorXd& y,
                                  int max_steps, EarlyStop early_stop) {
    NewtonReport rep;
    const int nd = bar.dim();
    const int n_eq = static_cast<int>(eqs.size());
    const int nx = static_cast<int>(obj.a.size());  // original variable count

    for (int step = 0; step < max_steps; ++step) {
        if (early_stop(y)) {
            rep.early_exit = true;
            rep.steps = step;
            return rep;
        }
        Eval ev = bar.full(y);
        if (!ev.in_domain) break;  // should not happen; bail defensively
        Eigen::VectorXd g = ev.grad;
        g.head(nx) += t * obj.a;

        // Regularize only when the factorization fails; a blanket shift of
        // the diagonal ruins Newton accuracy once slack scales spread.
        Eigen::VectorXd dy(nd);
        double lambda2 = -1.0;
        double reg = 0.0;
        for (int attempt = 0; attempt < 8; ++attempt) {
            Eigen::MatrixXd H = ev.hess;
            if (reg > 0) H.diagonal().array() += reg;
            bool solved = false;
            if (n_eq == 0) {
                Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
                dy = ldlt.solve(-g);
                solved = ldlt.info() == Eigen::Success && dy.allFinite();
            } else {
                Eigen::MatrixXd KKT = Eigen::MatrixXd::Zero(nd + n_eq, nd + n_eq);
                KKT.topLeftCorner(nd, nd) = H;
                for (int e = 0; e < n_eq; ++e) {
                    KKT.block(nd + e, 0, 1, nx) = eqs[static_cast<size_t>(e)].a.transpose();
                    KKT.block(0, nd + e, nx, 1) = eqs[static_cast<size_t>(e)].a;
                }
                Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nd + n_eq);
                rhs.head(nd) = -g;
                Eigen::VectorXd sol = KKT.fullPivLu().solve(rhs);
                dy = sol.head(nd);
                solved = dy.allFinite();
            }
            if (solved) {
                lambda2 = -g.dot(dy);
                if (lambda2 >= -1e-9 * (1.0 + g.cwiseAbs().maxCoeff())) break;
            }
            reg = (reg == 0) ? 1e-14 * (1.0 + ev.hess.diagonal().cwiseAbs().maxCoeff())
                             : reg * 100.0;
        }
        if (!dy.allFinite()) break;

        ++rep.steps;
        if (lambda2 / 2.0 <= 1e-10) {
            rep.converged = true;
            return rep;
        }

        // backtracking line search keeping the barrier domain
        double f0;
        if (!bar.value(y, f0)) break;
        f0 += t * obj.value(y.head(nx));
        double alpha = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 60; ++ls) {
            Eigen::VectorXd cand = y + alpha * dy;
            double fb;
            if (bar.value(cand, fb)) {
                const double fc = fb + t * obj.value(cand.head(nx));
                if (fc <= f0 - 0.25 * alpha * lambda2) {
                    y = cand;
                    moved = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if (!moved) {
            rep.converged = true;  // stalled at numerical precision
            return rep;
        }
    }
    return rep;
}

}  // namespace detail

/// Solve a conic problem to tolerance. Deterministic: identical problems
/// produce identical solutions. `initial` hints are honored when strictly
/// feasible; otherwise Phase I constructs an interior point or reports
/// infeasibility with the most violated constraint as witness.
inline Solution solve(const Problem& p, double tol_feas = 1e-6, double tol_obj = 1e-6,
                      int max_iters = 2000) {
    using namespace detail;
    Flat f = flatten_problem(p);
    const int n = f.lay.total;

    Solution sol;
    sol.scalars.assign(static_cast<size_t>(std::max(f.lay.n_scalars, 0)), 0.0);

    // --- starting point -------------------------------------------------
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    for (int v = 0; v < f.lay.n_scalars; ++v) {
        const auto& sv = p.scalars()[static_cast<size_t>(v)];
        if (sv.has_initial) x[v] = sv.initial;
        else if (sv.lb > -kInf && sv.ub < kInf) x[v] = 0.5 * (sv.lb + sv.ub);
        else if (sv.lb > -kInf) x[v] = sv.lb + 1.0;
        else if (sv.ub < kInf) x[v] = sv.ub - 1.0;
    }
    for (size_t b = 0; b < f.lay.dim.size(); ++b) {
        const auto& blk = p.psd_blocks()[b];
        Eigen::MatrixXcd W0 = blk.has_initial
                                  ? blk.initial
                                  : Eigen::MatrixXcd(Eigen::MatrixXcd::Identity(blk.dim, blk.dim));
        pack_block(f.lay, static_cast<int>(b), W0, x);
    }

    // project onto the equality manifold
    const int n_eq = static_cast<int>(f.eq.size());
    if (n_eq > 0) {
        Eigen::MatrixXd A(n_eq, n);
        Eigen::VectorXd r(n_eq);
        for (int e = 0; e < n_eq; ++e) {
            A.row(e) = f.eq[static_cast<size_t>(e)].a.transpose();
            r[e] = f.eq[static_cast<size_t>(e)].value(x);
        }
        x -= A.transpose() * (A * A.transpose()).ldlt().solve(r);
        for (int e = 0; e < n_eq; ++e) {
            if (std::abs(f.eq[static_cast<size_t>(e)].value(x)) > 1e-6) {
                sol.status = SolveStatus::infeasible;
                sol.witness = f.eq_names[static_cast<size_t>(e)] + " (inconsistent equalities)";
                return sol;
            }
        }
    }

    int steps_used = 0;

    // --- Phase I (skipped when the start is already strictly interior) ----
    bool need_phase1;
    {
        Barrier probe(f, /*phase1=*/false);
        double phi_probe;
        need_phase1 = !probe.value(x, phi_probe);
    }
    if (need_phase1) {
        const double s_need = needed_relaxation(f, x);
        Barrier bar1(f, /*phase1=*/true);
        Eigen::VectorXd y(n + 1);
        y.head(n) = x;
        y[n] = 1.1 * s_need + 1.0;
        Row sobj;
        sobj.a = Eigen::VectorXd::Zero(n + 1);
        sobj.a[n] = 1.0;
        sobj.b = 0.0;

        // equality rows extended with zero s-coefficient
        std::vector<Row> eqs1 = f.eq;
        for (auto& e : eqs1) {
            Eigen::VectorXd a = Eigen::VectorXd::Zero(n + 1);
            a.head(n) = e.a;
            e.a = a;
        }

        const double s_scale = 1.0 + std::abs(y[n]);
        double t = 1.0;
        bool strictly_feasible = false;
        while (steps_used < max_iters) {
            auto rep = newton_center(
                bar1, sobj, t, eqs1, y, std::min(60, max_iters - steps_used),
                [&](const Eigen::VectorXd& yy) { return yy[n] < -1e-9 * s_scale; });
            steps_used += rep.steps;
            if (rep.early_exit) {
                strictly_feasible = true;
                break;
            }
            if (1.0 / t * (f.m + 1.0) <= 1e-9 * s_scale && rep.converged) break;
            t *= 20.0;
            if (t > 1e16) break;
        }
        x = y.head(n);
        if (!strictly_feasible) {
            auto [viol, name] = worst_violation(f, x);
            if (viol > tol_feas) {
                sol.status = steps_used >= max_iters ? SolveStatus::max_iters
                                                     : SolveStatus::infeasible;
                sol.max_violation = viol;
                sol.witness = name;
                for (int v = 0; v < f.lay.n_scalars; ++v)
                    sol.scalars[static_cast<size_t>(v)] = x[v];
                for (size_t b = 0; b < f.lay.dim.size(); ++b)
                    sol.psd.push_back(unpack_block(f.lay, static_cast<int>(b), x));
                return sol;
            }
            // feasible to tolerance but with empty-looking interior: nudge is
            // not available, keep going with the point we have
        }
    }

    // --- Phase II --------------------------------------------------------
    Barrier bar(f, /*phase1=*/false);
    {
        double phi;
        if (!bar.value(x, phi)) {
            // Phase I left us on the boundary within round-off; report best effort
            auto [viol, name] = worst_violation(f, x);
            sol.status = SolveStatus::max_iters;
            sol.max_violation = viol;
            sol.witness = name + " (no strict interior)";
            for (int v = 0; v < f.lay.n_scalars; ++v)
                sol.scalars[static_cast<size_t>(v)] = x[v];
            for (size_t b = 0; b < f.lay.dim.size(); ++b)
                sol.psd.push_back(unpack_block(f.lay, static_cast<int>(b), x));
            return sol;
        }
    }

    double t = 1.0;
    bool gap_ok = false;
    while (steps_used < max_iters) {
        auto rep = newton_center(bar, f.obj, t, f.eq, x,
                                 std::min(80, max_iters - steps_used),
                                 [](const Eigen::VectorXd&) { return false; });
        steps_used += rep.steps;
        const double obj_now = f.obj.value(x);
        const double gap = f.m / t;
        if (gap <= tol_obj * std::max(1.0, std::abs(obj_now))) {
            gap_ok = rep.converged;
            if (gap_ok) break;
        }
        if (!rep.converged && rep.steps == 0) break;  // no progress possible
        t *= 20.0;
        if (t > 1e18) break;
    }

    for (int v = 0; v < f.lay.n_scalars; ++v) sol.scalars[static_cast<size_t>(v)] = x[v];
    for (size_t b = 0; b < f.lay.dim.size(); ++b)
        sol.psd.push_back(unpack_block(f.lay, static_cast<int>(b), x));
    auto [viol, name] = worst_violation(f, x);
    sol.max_violation = viol;
    sol.witness = name;
    sol.gap_bound = f.m / t;
    const double obj_min = f.obj.value(x);
    sol.objective = f.maximize ? -obj_min : obj_min;
    sol.newton_steps = steps_used;
    sol.status = (gap_ok && viol <= tol_feas) ? SolveStatus::optimal : SolveStatus::max_iters;
    return sol;
}

}  // namespace covertaoi::conic
