#include "conecert/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace conecert::lp {

namespace {

constexpr double kOptTol = 1e-10;    // reduced-cost threshold for entering
constexpr double kPivotTol = 1e-11;  // minimum acceptable pivot magnitude

struct Tableau {
    Eigen::MatrixXd body;      // m x n, maintained as B^-1 * A by pivoting
    Eigen::VectorXd rhs;       // m, maintained as B^-1 * b
    Eigen::RowVectorXd cost;   // n reduced costs of the current objective
    double neg_objective = 0.0;  // negative of the current objective value
    std::vector<int> basis;      // basic column per row
    std::vector<std::uint8_t> in_basis;
};

void pivot(Tableau& t, int row, int col) {
    const double p = t.body(row, col);
    t.body.row(row) /= p;
    t.rhs(row) /= p;
    for (Eigen::Index i = 0; i < t.body.rows(); ++i) {
        if (i == row) continue;
        const double f = t.body(i, col);
        if (f != 0.0) {
            t.body.row(i) -= f * t.body.row(row);
            t.rhs(i) -= f * t.rhs(row);
        }
    }
    const double fc = t.cost(col);
    if (fc != 0.0) {
        t.cost -= fc * t.body.row(row);
        t.neg_objective -= fc * t.rhs(row);
    }
    t.in_basis[static_cast<std::size_t>(t.basis[static_cast<std::size_t>(row)])] = 0;
    t.in_basis[static_cast<std::size_t>(col)] = 1;
    t.basis[static_cast<std::size_t>(row)] = col;
}

enum class IterResult { Optimal, Unbounded };

// Minimizes the objective encoded in t.cost. Bland's rule throughout:
// entering column is the lowest-index improving one, leaving row is the one
// whose basic variable has the lowest index among ratio-test ties.
IterResult run_simplex(Tableau& t, const std::vector<std::uint8_t>& enterable, long max_iter) {
    const int m = static_cast<int>(t.body.rows());
    const int n = static_cast<int>(t.body.cols());
    for (long iter = 0; iter < max_iter; ++iter) {
        int entering = -1;
        for (int j = 0; j < n; ++j) {
            if (!enterable[static_cast<std::size_t>(j)] || t.in_basis[static_cast<std::size_t>(j)]) continue;
            if (t.cost(j) < -kOptTol) {
                entering = j;
                break;
            }
        }
        if (entering < 0) return IterResult::Optimal;

        int leave_row = -1;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (int i = 0; i < m; ++i) {
            const double a = t.body(i, entering);
            if (a <= kPivotTol) continue;
            const double ratio = std::max(t.rhs(i), 0.0) / a;
            if (leave_row < 0) {
                best_ratio = ratio;
                leave_row = i;
                continue;
            }
            const double tie = 1e-9 * (1.0 + std::abs(best_ratio));
            if (ratio < best_ratio - tie) {
                best_ratio = ratio;
                leave_row = i;
            } else if (ratio <= best_ratio + tie &&
                       t.basis[static_cast<std::size_t>(i)] < t.basis[static_cast<std::size_t>(leave_row)]) {
                leave_row = i;
            }
        }
        if (leave_row < 0) return IterResult::Unbounded;
        pivot(t, leave_row, entering);
    }
    throw NumericalFailure("simplex iteration cap exceeded");
}

long iteration_cap(int rows, int cols) {
    return 2000L + 100L * rows + 20L * cols;
}

// min c.x  s.t.  A x = b, x >= 0.
struct StandardOutcome {
    LpStatus status = LpStatus::Infeasible;
    Eigen::VectorXd x;
};

StandardOutcome solve_standard_min(Eigen::MatrixXd a, Eigen::VectorXd b, const Eigen::VectorXd& c,
                                   double feas_tol) {
    const int m = static_cast<int>(a.rows());
    const int n = static_cast<int>(a.cols());
    for (int i = 0; i < m; ++i) {
        if (b(i) < 0.0) {
            a.row(i) = -a.row(i);
            b(i) = -b(i);
        }
    }

    // Phase 1: artificial basis, minimize the total artificial mass. The
    // optimum equals the minimum achievable L1 constraint residual.
    Tableau t;
    t.body.resize(m, n + m);
    t.body.leftCols(n) = a;
    t.body.rightCols(m) = Eigen::MatrixXd::Identity(m, m);
    t.rhs = b;
    t.cost.resize(n + m);
    for (int j = 0; j < n; ++j) t.cost(j) = -a.col(j).sum();
    t.cost.tail(m).setZero();
    t.neg_objective = -b.sum();
    t.basis.resize(static_cast<std::size_t>(m));
    t.in_basis.assign(static_cast<std::size_t>(n + m), 0);
    for (int i = 0; i < m; ++i) {
        t.basis[static_cast<std::size_t>(i)] = n + i;
        t.in_basis[static_cast<std::size_t>(n + i)] = 1;
    }

    std::vector<std::uint8_t> enterable(static_cast<std::size_t>(n + m), 0);
    for (int j = 0; j < n; ++j) enterable[static_cast<std::size_t>(j)] = 1;

    if (m > 0) {
        const IterResult r1 = run_simplex(t, enterable, iteration_cap(m, n + m));
        if (r1 == IterResult::Unbounded) {
            throw NumericalFailure("phase-1 objective unbounded");
        }
        const double residual = -t.neg_objective;
        if (residual > feas_tol) {
            return {LpStatus::Infeasible, {}};
        }
        // Drive leftover artificials out of the basis; rows that offer no real
        // pivot are redundant constraints and get dropped.
        for (int i = 0; i < m; ++i) {
            if (t.basis[static_cast<std::size_t>(i)] < n) continue;
            int col = -1;
            for (int j = 0; j < n; ++j) {
                if (!t.in_basis[static_cast<std::size_t>(j)] && std::abs(t.body(i, j)) > 1e-9) {
                    col = j;
                    break;
                }
            }
            if (col >= 0) pivot(t, i, col);
        }
    }

    std::vector<int> kept_rows;
    std::vector<int> basis_cols;
    for (int i = 0; i < m; ++i) {
        if (t.basis[static_cast<std::size_t>(i)] < n) {
            kept_rows.push_back(i);
            basis_cols.push_back(t.basis[static_cast<std::size_t>(i)]);
        }
    }
    const int mk = static_cast<int>(kept_rows.size());

    auto recompute_x = [&](const std::vector<int>& cols) {
        Eigen::MatrixXd basis_mat(mk, mk);
        Eigen::VectorXd rhs_k(mk);
        for (int i = 0; i < mk; ++i) {
            rhs_k(i) = b(kept_rows[static_cast<std::size_t>(i)]);
            for (int j = 0; j < mk; ++j) {
                basis_mat(i, j) = a(kept_rows[static_cast<std::size_t>(i)], cols[static_cast<std::size_t>(j)]);
            }
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(basis_mat);
        if (!lu.isInvertible()) {
            throw NumericalFailure("singular simplex basis");
        }
        const Eigen::VectorXd xb = lu.solve(rhs_k);
        Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
        for (int j = 0; j < mk; ++j) {
            x(cols[static_cast<std::size_t>(j)]) = std::max(xb(j), 0.0);
        }
        return x;
    };

    // Phase 2: rebuild the tableau from the phase-1 basis by direct solves so
    // phase-1 round-off does not carry over.
    Tableau t2;
    t2.basis = basis_cols;
    t2.in_basis.assign(static_cast<std::size_t>(n), 0);
    for (int col : basis_cols) t2.in_basis[static_cast<std::size_t>(col)] = 1;
    if (mk > 0) {
        Eigen::MatrixXd basis_mat(mk, mk);
        Eigen::MatrixXd a_k(mk, n);
        Eigen::VectorXd b_k(mk);
        for (int i = 0; i < mk; ++i) {
            a_k.row(i) = a.row(kept_rows[static_cast<std::size_t>(i)]);
            b_k(i) = b(kept_rows[static_cast<std::size_t>(i)]);
            for (int j = 0; j < mk; ++j) {
                basis_mat(i, j) = a_k(i, basis_cols[static_cast<std::size_t>(j)]);
            }
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(basis_mat);
        if (!lu.isInvertible()) {
            throw NumericalFailure("singular phase-2 basis");
        }
        t2.body = lu.solve(a_k);
        t2.rhs = lu.solve(b_k);
        Eigen::VectorXd cb(mk);
        for (int j = 0; j < mk; ++j) cb(j) = c(basis_cols[static_cast<std::size_t>(j)]);
        t2.cost = c.transpose() - cb.transpose() * t2.body;
        t2.neg_objective = -cb.dot(t2.rhs);
    } else {
        t2.body.resize(0, n);
        t2.rhs.resize(0);
        t2.cost = c.transpose();
        t2.neg_objective = 0.0;
    }

    std::vector<std::uint8_t> enterable2(static_cast<std::size_t>(n), 1);
    const IterResult r2 = run_simplex(t2, enterable2, iteration_cap(mk, n));
    if (r2 == IterResult::Unbounded) {
        return {LpStatus::Unbounded, {}};
    }
    return {LpStatus::Optimal, recompute_x(t2.basis)};
}

void require_finite(const Eigen::MatrixXd& m, const char* what) {
    if (!m.allFinite()) {
        throw std::invalid_argument(std::string("non-finite coefficients in ") + what);
    }
}

}  // namespace

const char* to_string(LpStatus s) {
    switch (s) {
        case LpStatus::Optimal: return "optimal";
        case LpStatus::Infeasible: return "infeasible";
        case LpStatus::Unbounded: return "unbounded";
    }
    return "unknown";
}

LpOutcome solve_equality_form(const EqualityForm& p, double feas_tol) {
    const int n = static_cast<int>(p.constraints.cols());
    const int m = static_cast<int>(p.constraints.rows());
    if (static_cast<int>(p.nonneg.size()) != n || p.objective.size() != n || p.rhs.size() != m) {
        throw std::invalid_argument("equality-form dimensions disagree");
    }
    require_finite(p.constraints, "constraints");
    require_finite(p.rhs, "rhs");
    require_finite(p.objective, "objective");

    // Free variables split into positive/negative parts for the standard form.
    int cols = 0;
    std::vector<int> pos_col(static_cast<std::size_t>(n));
    std::vector<int> neg_col(static_cast<std::size_t>(n), -1);
    for (int j = 0; j < n; ++j) {
        pos_col[static_cast<std::size_t>(j)] = cols++;
        if (!p.nonneg[static_cast<std::size_t>(j)]) neg_col[static_cast<std::size_t>(j)] = cols++;
    }
    Eigen::MatrixXd a(m, cols);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(cols);
    for (int j = 0; j < n; ++j) {
        a.col(pos_col[static_cast<std::size_t>(j)]) = p.constraints.col(j);
        c(pos_col[static_cast<std::size_t>(j)]) = -p.objective(j);  // maximize -> minimize
        if (neg_col[static_cast<std::size_t>(j)] >= 0) {
            a.col(neg_col[static_cast<std::size_t>(j)]) = -p.constraints.col(j);
            c(neg_col[static_cast<std::size_t>(j)]) = p.objective(j);
        }
    }

    const StandardOutcome std_out = solve_standard_min(a, p.rhs, c, feas_tol);
    LpOutcome out;
    out.status = std_out.status;
    if (std_out.status == LpStatus::Optimal) {
        out.solution.resize(n);
        for (int j = 0; j < n; ++j) {
            double v = std_out.x(pos_col[static_cast<std::size_t>(j)]);
            if (neg_col[static_cast<std::size_t>(j)] >= 0) v -= std_out.x(neg_col[static_cast<std::size_t>(j)]);
            out.solution(j) = v;
        }
        out.objective_value = p.objective.dot(out.solution);
    }
    return out;
}

bool feasible_equality_form(const Eigen::MatrixXd& constraints, const Eigen::VectorXd& rhs,
                            const std::vector<std::uint8_t>& nonneg, double feas_tol) {
    EqualityForm p;
    p.objective = Eigen::VectorXd::Zero(constraints.cols());
    p.constraints = constraints;
    p.rhs = rhs;
    p.nonneg = nonneg;
    return solve_equality_form(p, feas_tol).status == LpStatus::Optimal;
}

LpOutcome solve(const LinearProgram& lp, double feas_tol) {
    const int n = lp.num_vars;
    if (n <= 0) throw std::invalid_argument("num_vars must be positive");
    if (lp.objective.size() != n) throw std::invalid_argument("objective length != num_vars");
    const int me = static_cast<int>(lp.eq_lhs.rows());
    const int mi = static_cast<int>(lp.ineq_lhs.rows());
    if (me > 0 && lp.eq_lhs.cols() != n) throw std::invalid_argument("eq_lhs column count != num_vars");
    if (mi > 0 && lp.ineq_lhs.cols() != n) throw std::invalid_argument("ineq_lhs column count != num_vars");
    if (lp.eq_rhs.size() != me) throw std::invalid_argument("eq_rhs length != eq row count");
    if (lp.ineq_rhs.size() != mi) throw std::invalid_argument("ineq_rhs length != ineq row count");
    require_finite(lp.objective, "objective");
    if (me > 0) { require_finite(lp.eq_lhs, "eq_lhs"); require_finite(lp.eq_rhs, "eq_rhs"); }
    if (mi > 0) { require_finite(lp.ineq_lhs, "ineq_lhs"); require_finite(lp.ineq_rhs, "ineq_rhs"); }

    // Surplus variable per inequality row turns ax >= b into ax - s = b.
    EqualityForm p;
    p.constraints = Eigen::MatrixXd::Zero(me + mi, n + mi);
    p.rhs.resize(me + mi);
    if (me > 0) {
        p.constraints.topLeftCorner(me, n) = lp.eq_lhs;
        p.rhs.head(me) = lp.eq_rhs;
    }
    if (mi > 0) {
        p.constraints.bottomLeftCorner(mi, n) = lp.ineq_lhs;
        p.constraints.bottomRightCorner(mi, mi) = -Eigen::MatrixXd::Identity(mi, mi);
        p.rhs.tail(mi) = lp.ineq_rhs;
    }
    p.objective = Eigen::VectorXd::Zero(n + mi);
    p.objective.head(n) = lp.objective;
    p.nonneg.assign(static_cast<std::size_t>(n + mi), 1);
    for (int j = 0; j < n; ++j) p.nonneg[static_cast<std::size_t>(j)] = 0;

    LpOutcome out = solve_equality_form(p, feas_tol);
    if (out.status == LpStatus::Optimal) {
        out.solution.conservativeResize(n);
        out.objective_value = lp.objective.dot(out.solution);
    }
    return out;
}

}  // namespace conecert::lp
