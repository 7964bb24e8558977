#pragma once

#include "conecert/common.hpp"

#include <Eigen/Dense>

#include <string>

namespace conecert::cone {

struct ZeroRay : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Thrown by predicates that require a proper (solid and pointed) cone.
struct NotProper : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Cone in generator form: the conic hull of the columns of `rays`.
/// Columns have unit Euclidean norm and pairwise cosine below the dedup
/// threshold once built through from_rays.
struct PolyhedralCone {
    Eigen::MatrixXd rays;  // n x m

    int dim() const { return static_cast<int>(rays.rows()); }
    int num_rays() const { return static_cast<int>(rays.cols()); }
};

/// Cone in half-space form: { r : normals * r >= 0 }, unit-norm rows.
struct HalfspaceCone {
    Eigen::MatrixXd normals;  // l x n

    int dim() const { return static_cast<int>(normals.cols()); }
    int num_halfspaces() const { return static_cast<int>(normals.rows()); }
};

/// Cosine above which two unit rays count as the same direction.
inline constexpr double kDedupCosine = 1.0 - 1e-9;

/// Normalizes columns and drops duplicate directions, keeping the first
/// occurrence. Throws ZeroRay for columns with norm below 1e-12.
PolyhedralCone from_rays(const Eigen::MatrixXd& raw);

HalfspaceCone from_normals(const Eigen::MatrixXd& raw);

/// Numerical rank of the ray matrix (singular values above 1e-10 * sigma_max).
int rank(const PolyhedralCone& k);

/// r in the cone: exists p >= 0 with R p = r, residual at most delta.
bool member(const PolyhedralCone& k, const Eigen::VectorXd& r, double delta);

/// Sufficient interior test: maximize t subject to R p = r, p >= t * 1;
/// reports true iff the optimum exceeds t_tol. With full row rank this
/// certifies r in int(K); it can conservatively reject borderline points
/// whose representations need zero coefficients. Throws NotProper when
/// rank(R) < n or the program is unbounded (cone not pointed).
bool interior_member(const PolyhedralCone& k, const Eigen::VectorXd& r, double t_tol);

/// Every generator of k_r strictly inside every half-space of k_h:
/// all entries of H * R exceed tol.
bool strict_inclusion_in_halfspaces(const PolyhedralCone& k_r, const HalfspaceCone& k_h, double tol);

/// Every generator of `inner` passes interior_member against `outer`.
bool strict_inclusion_rays(const PolyhedralCone& inner, const PolyhedralCone& outer, double t_tol);

/// Drops rays expressible as non-negative combinations of the surviving set.
/// Columns are processed in order and survivors keep their order; the conic
/// hull is unchanged and the operation is idempotent.
PolyhedralCone remove_redundant_rays(const PolyhedralCone& k, double delta);

/// Solid (rank n) and pointed (no non-trivial non-negative kernel of R).
bool is_proper(const PolyhedralCone& k, double delta);

std::string cone_hash(const PolyhedralCone& k);

std::string cone_to_json(const PolyhedralCone& k);
PolyhedralCone cone_from_json_text(const std::string& text);

}  // namespace conecert::cone
