#pragma once

#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "covertaoi/common.hpp"

namespace covertaoi::conic {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Linear functional over scalar variables and Hermitian matrix blocks:
///   constant + sum coeff_i * x_i + sum Tr(A_j * W_j)
/// The trace terms are real because every A is Hermitian.
struct LinExpr {
    double constant = 0.0;
    std::vector<std::pair<int, double>> terms;            // (scalar id, coeff)
    std::vector<std::pair<int, Eigen::MatrixXcd>> traces;  // (block id, A)

    LinExpr() = default;
    explicit LinExpr(double c) : constant(c) {}

    LinExpr& add(int var, double coeff) {
        terms.emplace_back(var, coeff);
        return *this;
    }
    LinExpr& add_trace(int block, const Eigen::MatrixXcd& A) {
        traces.emplace_back(block, A);
        return *this;
    }
    LinExpr& operator+=(const LinExpr& o) {
        constant += o.constant;
        terms.insert(terms.end(), o.terms.begin(), o.terms.end());
        traces.insert(traces.end(), o.traces.begin(), o.traces.end());
        return *this;
    }
    LinExpr& operator*=(double s) {
        constant *= s;
        for (auto& t : terms) t.second *= s;
        for (auto& t : traces) t.second *= s;
        return *this;
    }
    friend LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
    friend LinExpr operator*(double s, LinExpr e) { return e *= s; }
    friend LinExpr operator-(LinExpr a, const LinExpr& b) {
        LinExpr nb = b;
        nb *= -1.0;
        return a += nb;
    }
};

inline LinExpr var_expr(int var, double coeff = 1.0) {
    LinExpr e;
    e.add(var, coeff);
    return e;
}

/// One term gamma * ln(arg) of a concave-log constraint.
struct LogTerm {
    double gamma;  // > 0
    LinExpr arg;   // must stay positive
};

/// Convex problem over real scalars and Hermitian PSD blocks with a linear
/// objective. Constraint kinds: affine equality/inequality, second-order
/// cone, concave-log inequality, PSD membership (implicit per block).
class Problem {
  public:
    struct ScalarVar {
        std::string name;
        double lb = -kInf, ub = kInf;
        double initial = 0.0;
        bool has_initial = false;
    };
    struct PsdBlock {
        std::string name;
        int dim = 0;
        Eigen::MatrixXcd initial;
        bool has_initial = false;
    };
    struct AffineCon {
        LinExpr expr;  // expr <= 0 or expr == 0
        std::string name;
    };
    struct SocCon {
        std::vector<LinExpr> norm_args;  // ||(args)|| <= rhs
        LinExpr rhs;
        std::string name;
    };
    struct LogCon {
        std::vector<LogTerm> logs;  // sum gamma ln(arg) + rest >= 0
        LinExpr rest;
        std::string name;
    };

    int add_var(std::string name, double lb = -kInf, double ub = kInf) {
        scalars_.push_back({std::move(name), lb, ub, 0.0, false});
        return static_cast<int>(scalars_.size()) - 1;
    }
    int add_psd(std::string name, int dim) {
        psd_.push_back({std::move(name), dim, Eigen::MatrixXcd(), false});
        return static_cast<int>(psd_.size()) - 1;
    }

    void set_initial(int var, double value) {
        scalars_.at(static_cast<size_t>(var)).initial = value;
        scalars_.at(static_cast<size_t>(var)).has_initial = true;
    }
    void set_initial_psd(int block, const Eigen::MatrixXcd& W) {
        psd_.at(static_cast<size_t>(block)).initial = W;
        psd_.at(static_cast<size_t>(block)).has_initial = true;
    }

    /// Objective is always stored as minimize; `maximize` flips the sign and
    /// the reported value flips back.
    void minimize(LinExpr e) {
        objective_ = std::move(e);
        maximize_ = false;
    }
    void maximize(LinExpr e) {
        objective_ = std::move(e);
        maximize_ = true;
    }

    void add_eq(LinExpr e, std::string name = {}) {
        eqs_.push_back({std::move(e), std::move(name)});
    }
    /// expr <= 0
    void add_le(LinExpr e, std::string name = {}) {
        ineqs_.push_back({std::move(e), std::move(name)});
    }
    /// ||norm_args|| <= rhs
    void add_soc(std::vector<LinExpr> norm_args, LinExpr rhs, std::string name = {}) {
        socs_.push_back({std::move(norm_args), std::move(rhs), std::move(name)});
    }
    /// sum_i gamma_i ln(arg_i) + rest >= 0
    void add_log(std::vector<LogTerm> logs, LinExpr rest, std::string name = {}) {
        logcons_.push_back({std::move(logs), std::move(rest), std::move(name)});
    }

    const std::vector<ScalarVar>& scalars() const { return scalars_; }
    const std::vector<PsdBlock>& psd_blocks() const { return psd_; }
    const std::vector<AffineCon>& eqs() const { return eqs_; }
    const std::vector<AffineCon>& ineqs() const { return ineqs_; }
    const std::vector<SocCon>& socs() const { return socs_; }
    const std::vector<LogCon>& logcons() const { return logcons_; }
    const LinExpr& objective() const { return objective_; }
    bool is_maximize() const { return maximize_; }

    void dump(std::ostream& os) const {
        os << "# conic problem dump v1\n";
        os << (maximize_ ? "maximize " : "minimize ");
        print_expr(os, objective_);
        os << "\n";
        for (size_t i = 0; i < scalars_.size(); ++i)
            os << "var x" << i << " \"" << scalars_[i].name << "\" in [" << scalars_[i].lb
               << ", " << scalars_[i].ub << "]\n";
        for (size_t i = 0; i < psd_.size(); ++i)
            os << "psd W" << i << " \"" << psd_[i].name << "\" dim " << psd_[i].dim << "\n";
        for (const auto& c : eqs_) {
            os << "eq \"" << c.name << "\": ";
            print_expr(os, c.expr);
            os << " == 0\n";
        }
        for (const auto& c : ineqs_) {
            os << "le \"" << c.name << "\": ";
            print_expr(os, c.expr);
            os << " <= 0\n";
        }
        for (const auto& c : socs_) {
            os << "soc \"" << c.name << "\": ||(";
            for (size_t k = 0; k < c.norm_args.size(); ++k) {
                if (k) os << "; ";
                print_expr(os, c.norm_args[k]);
            }
            os << ")|| <= ";
            print_expr(os, c.rhs);
            os << "\n";
        }
        for (const auto& c : logcons_) {
            os << "log \"" << c.name << "\": ";
            for (const auto& lt : c.logs) {
                os << lt.gamma << "*ln(";
                print_expr(os, lt.arg);
                os << ") + ";
            }
            print_expr(os, c.rest);
            os << " >= 0\n";
        }
    }

  private:
    void print_expr(std::ostream& os, const LinExpr& e) const {
        os << e.constant;
        for (const auto& [v, c] : e.terms) os << " + " << c << "*x" << v;
        for (const auto& [b, A] : e.traces) os << " + Tr(A[" << A.rows() << "x" << A.cols()
                                               << "]*W" << b << ")";
    }

    std::vector<ScalarVar> scalars_;
    std::vector<PsdBlock> psd_;
    std::vector<AffineCon> eqs_;
    std::vector<AffineCon> ineqs_;
    std::vector<SocCon> socs_;
    std::vector<LogCon> logcons_;
    LinExpr objective_;
    bool maximize_ = false;
};

enum class SolveStatus { optimal, infeasible, max_iters };

struct Solution {
    SolveStatus status = SolveStatus::max_iters;
    std::vector<double> scalars;
    std::vector<Eigen::MatrixXcd> psd;
    double objective = 0.0;      // in the problem's stated sense
    double gap_bound = kInf;     // certified objective gap at termination
    double max_violation = kInf;
    std::string witness;         // most violated constraint when infeasible
    int newton_steps = 0;

    double value(int var) const { return scalars.at(static_cast<size_t>(var)); }
    const Eigen::MatrixXcd& block(int b) const { return psd.at(static_cast<size_t>(b)); }
    bool ok() const { return status == SolveStatus::optimal; }
};

}  // namespace covertaoi::conic
