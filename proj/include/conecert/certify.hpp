#pragma once

#include "conecert/common.hpp"
#include "conecert/cone.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace conecert::certify {

struct EmptyFamily : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DimensionMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// The certification program came back unbounded, which only happens when the
/// cone fails pointedness.
struct NotPointed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SeedInfeasible : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Finite vertex set whose conic hull over-approximates the Jacobians of the
/// system under study. Optionally carries the affine parametrization the
/// vertices were generated from: A(theta) = base + sum_j theta_j * direction_j.
struct MatrixFamily {
    std::vector<Eigen::MatrixXd> vertices;

    struct Parametrization {
        Eigen::MatrixXd base;
        std::vector<Eigen::MatrixXd> directions;
        std::vector<std::string> direction_names;
        std::vector<Eigen::VectorXd> param_vertices;
    };
    std::optional<Parametrization> parametrization;

    int dim() const { return vertices.empty() ? 0 : static_cast<int>(vertices.front().rows()); }
};

/// Builds the vertex list from an affine parametrization, so the two stay
/// consistent by construction.
MatrixFamily make_parametrized_family(Eigen::MatrixXd base, std::vector<Eigen::MatrixXd> directions,
                                      std::vector<Eigen::VectorXd> param_vertices,
                                      std::vector<std::string> direction_names = {});

/// Witness that (alpha*I + A) maps the cone strictly inside itself:
/// (alpha*I + A) R = R P with every entry of P at least `margin` > 0.
struct VertexCertificate {
    int vertex = 0;
    double alpha = 0.0;
    Eigen::MatrixXd p;
    double margin = 0.0;
};

struct Certificate {
    std::string cone_hash;
    std::vector<VertexCertificate> vertices;
};

/// Margin-maximizing certification of a single matrix against the cone:
/// maximize t over alpha, P subject to (alpha*I + A) R = R P and P >= t
/// entrywise. Succeeds iff the optimum exceeds t_tol. The program separates
/// by columns of P (alpha only lifts the diagonal), so it is solved as one
/// small LP per ray instead of one program with m^2 variables; the combined
/// optimum is identical. Throws NotPointed when the program is unbounded in
/// every column, the signature of a non-pointed cone.
std::optional<VertexCertificate> certify_vertex(const Eigen::MatrixXd& a,
                                                const cone::PolyhedralCone& k, double t_tol,
                                                double feas_tol = 1e-9);

struct FamilyCertification {
    std::optional<Certificate> certificate;
    int first_failed_vertex = -1;
};

/// Certifies every vertex independently; rejection reports the first failed
/// vertex index. Vertices may be solved across `threads` workers; results
/// merge by vertex index.
FamilyCertification certify_family(const MatrixFamily& family, const cone::PolyhedralCone& k,
                                   double t_tol, double feas_tol = 1e-9, int threads = 1);

/// Re-checks a stored certificate by direct matrix arithmetic (no LP):
/// residual of every equality within resid_tol * (1 + |A_i|) and every
/// margin positive and consistent with min entry of P_i.
bool replay(const Certificate& cert, const MatrixFamily& family, const cone::PolyhedralCone& k,
            double resid_tol = 1e-8);

/// True iff J = sum_i p_i A_i for some p >= 0 with sum p >= delta.
bool check_relaxation_membership(const Eigen::MatrixXd& j, const MatrixFamily& family, double delta);

struct RobustnessOptions {
    double resolution = 0.05;
    double lo_cap = -1e6;   // sentinel bounds when the free direction has no effect
    double hi_cap = 1e6;
    double t_tol = 1e-7;
    double feas_tol = 1e-9;
};

/// Widest interval of the free parameter over which the family, with the
/// other parameters held at their existing polytope values, stays certified
/// against k. Expands outward from the seed interval by doubling steps and
/// resolves each endpoint by bisection; only the moving endpoint matrices are
/// re-solved. Throws SeedInfeasible when the seed interval itself fails.
std::pair<double, double> robustness_range(const MatrixFamily& family, int free_direction,
                                           const cone::PolyhedralCone& k,
                                           const RobustnessOptions& options,
                                           std::optional<double> seed_override = std::nullopt);

std::string certificate_to_json(const Certificate& cert);
Certificate certificate_from_json_text(const std::string& text);

}  // namespace conecert::certify
