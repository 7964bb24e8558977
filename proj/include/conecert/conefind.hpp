#pragma once

#include "conecert/certify.hpp"
#include "conecert/common.hpp"
#include "conecert/cone.hpp"
#include "conecert/spectral.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace conecert::conefind {

struct InitFail : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Necessary-condition report for a matrix family.
///
/// Spectral: every vertex needs a strictly dominant eigenvalue. Geometric:
/// after fixing eigenvector orientations against the first left eigenvector,
/// every oriented left/right pair must have positive inner product, i.e. the
/// eigenvector cone K_inner must sit strictly inside the half-space cone
/// K_outer. Both are cheap rejections run before any search.
struct Prescreen {
    enum class Status { Ok, SpectralFail, OrientationDegenerate };

    Status status = Status::Ok;
    std::vector<bool> spectral_ok;
    std::vector<int> failed_vertices;
    /// Dominant eigenpairs with orientations fixed (only meaningful when
    /// status == Ok).
    std::vector<spectral::SpectralData> oriented;
    cone::PolyhedralCone inner;   // oriented right eigenvectors, deduplicated
    cone::HalfspaceCone outer;    // oriented left eigenvectors, unit rows
    bool geometric_ok = false;

    bool spectral_passed() const { return status == Status::Ok; }
    bool passed() const { return status == Status::Ok && geometric_ok; }
};

Prescreen prescreen(const certify::MatrixFamily& family, double gap_tol_rel = 1e-7);

/// Grows a proper cone between the eigenvector cones: starts from the inner
/// rays and appends noise-perturbed copies until every inner ray is strictly
/// interior, restarting with half the noise magnitude whenever a candidate
/// escapes the outer cone. Deterministic for a fixed seed. Throws InitFail
/// after 20 restarts.
cone::PolyhedralCone initialize_cone(const Prescreen& pre, std::uint64_t rng_seed, double t_tol);

struct SearchConfig {
    std::vector<double> tau;     // per-vertex time-steps; empty = tau_scale * T_i
    std::vector<double> widen;   // per-vertex widening; empty = widen_scale * w_max_i
    double tau_scale = 0.5;
    double widen_scale = 0.5;
    int max_iter = 50;
    int test_interval = 1;       // prune + certify every N iterations
    double t_tol = 1e-7;
    double feas_tol = 1e-9;
    double gap_tol_rel = 1e-7;
    std::uint64_t rng_seed = 0;
    int max_rays = 20000;
    int threads = 1;
};

enum class SearchOutcome {
    Certified,
    PrescreenSpectral,
    PrescreenGeometric,
    PrescreenDegenerate,
    InitFailed,
    WideningDegenerate,
    EscapedOuter,
    FixedPointUncertified,
    RayBudgetExceeded,
    MaxIterations,
};

const char* to_string(SearchOutcome o);

struct IterationRecord {
    int k = 0;
    int rays = 0;
    bool certified = false;  // whether this iteration's certification attempt passed
    double elapsed_s = 0.0;
};

struct SearchReport {
    SearchOutcome outcome = SearchOutcome::MaxIterations;
    std::string message;
    std::vector<IterationRecord> iterations;
    int final_rays = 0;
    double total_s = 0.0;
    std::vector<double> tau_used;
    std::vector<double> widen_used;
    std::vector<double> max_timestep_values;
    std::vector<double> max_widening_values;
};

struct SearchResult {
    std::optional<cone::PolyhedralCone> cone;
    std::optional<certify::Certificate> certificate;
    SearchReport report;

    bool succeeded() const { return cone.has_value(); }
};

/// The cone-finding iteration: builds one widening operator per family
/// vertex, then repeatedly appends the operator images of the current rays,
/// deduplicates, prunes redundant rays, and certifies — until certification
/// succeeds, the cone escapes the outer cone, the ray budget or the iteration
/// budget runs out, or the ray set reaches a fixed point.
SearchResult find_cone(const certify::MatrixFamily& family, const SearchConfig& config);

std::string report_to_json(const SearchReport& report);

}  // namespace conecert::conefind
