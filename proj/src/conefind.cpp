#include "conecert/conefind.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <random>

namespace conecert::conefind {

namespace {

constexpr double kOrientationTie = 1e-12;
constexpr double kOuterStrictTol = 0.0;  // literal H*R > 0
constexpr int kMaxRestarts = 20;
constexpr int kMaxRoundsPerAttempt = 60;

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

const char* to_string(SearchOutcome o) {
    switch (o) {
        case SearchOutcome::Certified: return "certified";
        case SearchOutcome::PrescreenSpectral: return "prescreen-spectral";
        case SearchOutcome::PrescreenGeometric: return "prescreen-geometric";
        case SearchOutcome::PrescreenDegenerate: return "prescreen-degenerate";
        case SearchOutcome::InitFailed: return "init-failed";
        case SearchOutcome::WideningDegenerate: return "widening-degenerate";
        case SearchOutcome::EscapedOuter: return "escaped-outer";
        case SearchOutcome::FixedPointUncertified: return "fixed-point-uncertified";
        case SearchOutcome::RayBudgetExceeded: return "ray-budget-exceeded";
        case SearchOutcome::MaxIterations: return "max-iterations";
    }
    return "unknown";
}

Prescreen prescreen(const certify::MatrixFamily& family, double gap_tol_rel) {
    if (family.vertices.empty()) throw certify::EmptyFamily("family has no vertices");
    const int count = static_cast<int>(family.vertices.size());
    const int n = family.dim();

    Prescreen pre;
    pre.spectral_ok.assign(static_cast<std::size_t>(count), false);
    std::vector<spectral::SpectralData> raw(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const auto& a = family.vertices[static_cast<std::size_t>(i)];
        if (a.rows() != n || a.cols() != n) throw certify::DimensionMismatch("vertex dimension mismatch");
        const double gap_tol = spectral::relative_gap_tol(a, gap_tol_rel);
        auto sd = spectral::strictly_dominant(a, gap_tol);
        if (sd) {
            pre.spectral_ok[static_cast<std::size_t>(i)] = true;
            raw[static_cast<std::size_t>(i)] = std::move(*sd);
        } else {
            pre.failed_vertices.push_back(i);
        }
    }
    if (!pre.failed_vertices.empty()) {
        pre.status = Prescreen::Status::SpectralFail;
        return pre;
    }

    // Orientation pass: anchor on the first left eigenvector, flip each right
    // eigenvector onto its positive side, then flip each remaining left
    // eigenvector to agree with its own right one.
    pre.oriented = raw;
    const Eigen::VectorXd& anchor = pre.oriented[0].h_dom;
    for (int i = 0; i < count; ++i) {
        auto& sd = pre.oriented[static_cast<std::size_t>(i)];
        const double side = anchor.dot(sd.r_dom);
        if (std::abs(side) <= kOrientationTie) {
            pre.status = Prescreen::Status::OrientationDegenerate;
            pre.failed_vertices.push_back(i);
            return pre;
        }
        if (side < 0.0) sd.r_dom = -sd.r_dom;
        if (i > 0 && sd.h_dom.dot(sd.r_dom) < 0.0) sd.h_dom = -sd.h_dom;
    }

    Eigen::MatrixXd r_tilde(n, count);
    Eigen::MatrixXd h_tilde(count, n);
    for (int i = 0; i < count; ++i) {
        r_tilde.col(i) = pre.oriented[static_cast<std::size_t>(i)].r_dom;
        h_tilde.row(i) = pre.oriented[static_cast<std::size_t>(i)].h_dom.transpose();
    }
    pre.geometric_ok = ((h_tilde * r_tilde).array() > kOuterStrictTol).all();
    pre.inner = cone::from_rays(r_tilde);
    pre.outer = cone::from_normals(h_tilde);
    return pre;
}

cone::PolyhedralCone initialize_cone(const Prescreen& pre, std::uint64_t rng_seed, double t_tol) {
    if (!pre.passed()) {
        throw std::invalid_argument("initialize_cone requires a passing prescreen");
    }
    const int n = pre.inner.dim();
    const int l = pre.inner.num_rays();

    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    double eps = 0.1;
    for (int attempt = 0; attempt < kMaxRestarts; ++attempt, eps *= 0.5) {
        Eigen::MatrixXd cols = pre.inner.rays;
        bool escaped = false;
        for (int round = 0; round < kMaxRoundsPerAttempt && !escaped; ++round) {
            for (int i = 0; i < l; ++i) {
                Eigen::VectorXd noise(n);
                for (int c = 0; c < n; ++c) noise(c) = gauss(rng);
                Eigen::VectorXd candidate = pre.inner.rays.col(i) + eps * noise;
                if (candidate.norm() < 1e-9) continue;
                cols.conservativeResize(Eigen::NoChange, cols.cols() + 1);
                cols.col(cols.cols() - 1) = candidate;
            }
            const cone::PolyhedralCone k = cone::from_rays(cols);
            if (!cone::strict_inclusion_in_halfspaces(k, pre.outer, kOuterStrictTol)) {
                escaped = true;
                break;
            }
            if (cone::rank(k) == n && cone::strict_inclusion_rays(pre.inner, k, t_tol)) {
                return k;
            }
        }
    }
    throw InitFail("could not initialize a cone between the eigenvector cones");
}

SearchResult find_cone(const certify::MatrixFamily& family, const SearchConfig& config) {
    const auto t0 = std::chrono::steady_clock::now();
    SearchResult result;
    SearchReport& report = result.report;

    const Prescreen pre = prescreen(family, config.gap_tol_rel);
    if (pre.status == Prescreen::Status::SpectralFail) {
        report.outcome = SearchOutcome::PrescreenSpectral;
        report.message = "some vertices lack a strictly dominant eigenvalue";
        report.total_s = seconds_since(t0);
        return result;
    }
    if (pre.status == Prescreen::Status::OrientationDegenerate) {
        report.outcome = SearchOutcome::PrescreenDegenerate;
        report.message = "eigenvector orientation tie";
        report.total_s = seconds_since(t0);
        return result;
    }
    if (!pre.geometric_ok) {
        report.outcome = SearchOutcome::PrescreenGeometric;
        report.message = "eigenvector cones are incompatible";
        report.total_s = seconds_since(t0);
        return result;
    }

    const int count = static_cast<int>(family.vertices.size());
    report.tau_used.resize(static_cast<std::size_t>(count));
    report.widen_used.resize(static_cast<std::size_t>(count));
    report.max_timestep_values.resize(static_cast<std::size_t>(count));
    report.max_widening_values.resize(static_cast<std::size_t>(count));

    std::vector<Eigen::MatrixXd> operators;
    operators.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const auto& a = family.vertices[static_cast<std::size_t>(i)];
        const auto& sd = pre.oriented[static_cast<std::size_t>(i)];
        const double gap_tol = spectral::relative_gap_tol(a, config.gap_tol_rel);
        const double t_max = spectral::max_timestep(a, sd);
        double tau;
        if (!config.tau.empty()) {
            tau = config.tau[static_cast<std::size_t>(i) % config.tau.size()];
        } else {
            tau = std::isfinite(t_max) ? config.tau_scale * t_max : config.tau_scale;
        }
        if (!(tau > 0.0) || !(tau < t_max)) {
            throw std::invalid_argument("time-step outside (0, T) for vertex " + std::to_string(i));
        }
        const double w_max = spectral::max_widening(a, sd, tau, sd.r_dom, sd.h_dom, gap_tol);
        double widen;
        if (!config.widen.empty()) {
            widen = config.widen[static_cast<std::size_t>(i) % config.widen.size()];
            if (!(widen > 0.0) || !(widen < w_max)) {
                throw std::invalid_argument("widening outside (0, w_max) for vertex " + std::to_string(i));
            }
        } else {
            widen = config.widen_scale * w_max;
        }
        report.tau_used[static_cast<std::size_t>(i)] = tau;
        report.widen_used[static_cast<std::size_t>(i)] = widen;
        report.max_timestep_values[static_cast<std::size_t>(i)] = t_max;
        report.max_widening_values[static_cast<std::size_t>(i)] = w_max;
        if (!(w_max > 0.0) || !(widen > 0.0)) {
            report.outcome = SearchOutcome::WideningDegenerate;
            report.message = "no admissible widening for vertex " + std::to_string(i);
            report.total_s = seconds_since(t0);
            return result;
        }
        operators.push_back(spectral::widening_operator(a, sd, tau, widen, sd.r_dom, sd.h_dom));
    }

    cone::PolyhedralCone current;
    try {
        current = initialize_cone(pre, config.rng_seed, config.t_tol);
    } catch (const InitFail& e) {
        report.outcome = SearchOutcome::InitFailed;
        report.message = e.what();
        report.total_s = seconds_since(t0);
        return result;
    }

    const int test_interval = std::max(1, config.test_interval);

    auto try_certify = [&](const cone::PolyhedralCone& k) -> std::optional<certify::Certificate> {
        auto fc = certify::certify_family(family, k, config.t_tol, config.feas_tol, config.threads);
        return fc.certificate;
    };

    for (int k = 0; k < config.max_iter; ++k) {
        const auto iter_t0 = std::chrono::steady_clock::now();
        IterationRecord record;
        record.k = k;

        // Candidate rays: the widening-operator images of the current rays,
        // deduplicated against the current set and among themselves.
        Eigen::MatrixXd combined = current.rays;
        int appended = 0;
        for (const auto& w : operators) {
            const Eigen::MatrixXd image = w * current.rays;
            for (Eigen::Index c = 0; c < image.cols(); ++c) {
                const double norm = image.col(c).norm();
                if (norm < 1e-12) continue;
                const Eigen::VectorXd unit = image.col(c) / norm;
                bool duplicate = false;
                for (Eigen::Index e = 0; e < combined.cols(); ++e) {
                    if (unit.dot(combined.col(e)) > cone::kDedupCosine) {
                        duplicate = true;
                        break;
                    }
                }
                if (duplicate) continue;
                combined.conservativeResize(Eigen::NoChange, combined.cols() + 1);
                combined.col(combined.cols() - 1) = unit;
                ++appended;
            }
        }

        if (appended == 0) {
            // Fixed point of the iteration: certify now; no further iteration
            // can change the answer.
            auto cert = try_certify(current);
            record.rays = current.num_rays();
            record.certified = cert.has_value();
            record.elapsed_s = seconds_since(iter_t0);
            report.iterations.push_back(record);
            if (cert) {
                result.cone = current;
                result.certificate = std::move(cert);
                report.outcome = SearchOutcome::Certified;
            } else {
                report.outcome = SearchOutcome::FixedPointUncertified;
                report.message = "ray set reached a fixed point without certifying";
            }
            break;
        }

        cone::PolyhedralCone next{std::move(combined)};
        if (!cone::strict_inclusion_in_halfspaces(next, pre.outer, kOuterStrictTol)) {
            record.rays = next.num_rays();
            record.elapsed_s = seconds_since(iter_t0);
            report.iterations.push_back(record);
            report.outcome = SearchOutcome::EscapedOuter;
            report.message = "iterate left the interior of the outer cone at iteration " + std::to_string(k);
            break;
        }

        const bool test_now = ((k + 1) % test_interval) == 0;
        if (test_now) {
            next = cone::remove_redundant_rays(next, config.feas_tol);
            auto cert = try_certify(next);
            record.certified = cert.has_value();
            if (cert) {
                record.rays = next.num_rays();
                record.elapsed_s = seconds_since(iter_t0);
                report.iterations.push_back(record);
                result.cone = std::move(next);
                result.certificate = std::move(cert);
                report.outcome = SearchOutcome::Certified;
                break;
            }
        }
        record.rays = next.num_rays();
        record.elapsed_s = seconds_since(iter_t0);
        report.iterations.push_back(record);

        if (next.num_rays() > config.max_rays) {
            report.outcome = SearchOutcome::RayBudgetExceeded;
            report.message = "ray count exceeded max_rays";
            current = std::move(next);
            break;
        }
        current = std::move(next);
        if (k + 1 == config.max_iter) {
            report.outcome = SearchOutcome::MaxIterations;
            report.message = "iteration budget exhausted";
        }
    }

    report.final_rays = result.cone ? result.cone->num_rays() : current.num_rays();
    report.total_s = seconds_since(t0);
    return result;
}

std::string report_to_json(const SearchReport& report) {
    nlohmann::json j;
    j["outcome"] = to_string(report.outcome);
    j["message"] = report.message;
    j["final_rays"] = report.final_rays;
    j["total_s"] = report.total_s;
    j["tau"] = report.tau_used;
    j["widen"] = report.widen_used;
    j["max_timestep"] = report.max_timestep_values;
    j["max_widening"] = report.max_widening_values;
    nlohmann::json iters = nlohmann::json::array();
    for (const auto& it : report.iterations) {
        iters.push_back({{"k", it.k}, {"rays", it.rays}, {"certified", it.certified}, {"elapsed_s", it.elapsed_s}});
    }
    j["iterations"] = std::move(iters);
    return j.dump(2) + "\n";
}

}  // namespace conecert::conefind
