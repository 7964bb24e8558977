#pragma once

#include "conecert/common.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace conecert::lp {

enum class LpStatus { Optimal, Infeasible, Unbounded };

const char* to_string(LpStatus s);

/// maximize objective.x
/// subject to  eq_lhs x == eq_rhs
///             ineq_lhs x >= ineq_rhs
/// with x free (sign constraints are expressed as inequality rows).
struct LinearProgram {
    Eigen::VectorXd objective;
    Eigen::MatrixXd eq_lhs;
    Eigen::VectorXd eq_rhs;
    Eigen::MatrixXd ineq_lhs;
    Eigen::VectorXd ineq_rhs;
    int num_vars = 0;
};

struct LpOutcome {
    LpStatus status = LpStatus::Infeasible;
    Eigen::VectorXd solution;        // valid when Optimal
    double objective_value = 0.0;    // valid when Optimal
};

/// Dense two-phase primal simplex with Bland's pivoting rule. Deterministic
/// for a fixed input. When Optimal, the solution satisfies every constraint
/// with residual at most feas_tol; the solution is recomputed from the final
/// basis by LU against the original data, so tableau round-off does not
/// accumulate into it.
LpOutcome solve(const LinearProgram& lp, double feas_tol = 1e-9);

/// maximize objective.x  subject to  constraints x == rhs,
/// with x_i >= 0 where nonneg[i] != 0 and x_i free otherwise.
///
/// The form every cone test lowers to; keeping non-negative variables native
/// (instead of split into differences) keeps the tableaus small.
struct EqualityForm {
    Eigen::VectorXd objective;
    Eigen::MatrixXd constraints;
    Eigen::VectorXd rhs;
    std::vector<std::uint8_t> nonneg;
};

LpOutcome solve_equality_form(const EqualityForm& p, double feas_tol = 1e-9);

/// Feasibility probe: true iff constraints x == rhs admits x >= 0 (per flags)
/// with L1 residual <= feas_tol.
bool feasible_equality_form(const Eigen::MatrixXd& constraints, const Eigen::VectorXd& rhs,
                            const std::vector<std::uint8_t>& nonneg, double feas_tol);

}  // namespace conecert::lp
