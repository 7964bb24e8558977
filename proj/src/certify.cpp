#include "conecert/certify.hpp"

#include "conecert/lp.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <limits>

namespace conecert::certify {

namespace {

// One column of the certification program: for ray j,
//   maximize t  s.t.  R q = A r_j,  q_k >= t for k != j  (q_j free).
// alpha later absorbs the diagonal entry, so it does not constrain t here.
struct ColumnSolve {
    bool feasible = false;
    bool unbounded = false;
    double t = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd q;  // full coefficient column
};

Eigen::VectorXd assemble_q(int m, int j, double t, double diag, const Eigen::VectorXd& slack) {
    Eigen::VectorXd q(m);
    int s = 0;
    for (int k = 0; k < m; ++k) {
        if (k == j) {
            q(k) = diag;
        } else {
            q(k) = t + slack(s++);
        }
    }
    return q;
}

ColumnSolve solve_column(const Eigen::MatrixXd& a, const cone::PolyhedralCone& k, int j,
                         double feas_tol) {
    const int n = k.dim();
    const int m = k.num_rays();
    const Eigen::VectorXd target = a * k.rays.col(j);
    const Eigen::VectorXd ray_sum = k.rays.rowwise().sum();

    // Variables: [t, diag, s_0..s_{m-2}] with q = t*(1 - e_j) + diag*e_j + s.
    lp::EqualityForm p;
    p.constraints.resize(n, m + 1);
    p.constraints.col(0) = ray_sum - k.rays.col(j);
    p.constraints.col(1) = k.rays.col(j);
    int col = 2;
    for (int c = 0; c < m; ++c) {
        if (c == j) continue;
        p.constraints.col(col++) = k.rays.col(c);
    }
    p.rhs = target;
    p.objective = Eigen::VectorXd::Zero(m + 1);
    p.objective(0) = 1.0;
    p.nonneg.assign(static_cast<std::size_t>(m + 1), 1);
    p.nonneg[0] = 0;
    p.nonneg[1] = 0;

    const lp::LpOutcome out = lp::solve_equality_form(p, feas_tol);
    ColumnSolve result;
    if (out.status == lp::LpStatus::Unbounded) {
        result.feasible = true;
        result.unbounded = true;
        return result;
    }
    if (out.status != lp::LpStatus::Optimal) {
        return result;
    }
    result.feasible = true;
    result.t = out.solution(0);
    result.q = assemble_q(m, j, out.solution(0), out.solution(1), out.solution.tail(m - 1));
    return result;
}

// Re-solve an unbounded column as a feasibility problem at the capped margin.
Eigen::VectorXd solve_column_at(const Eigen::MatrixXd& a, const cone::PolyhedralCone& k, int j,
                                double t, double feas_tol) {
    const int n = k.dim();
    const int m = k.num_rays();
    const Eigen::VectorXd ray_sum = k.rays.rowwise().sum();
    const Eigen::VectorXd target = a * k.rays.col(j) - t * (ray_sum - k.rays.col(j));

    lp::EqualityForm p;
    p.constraints.resize(n, m);
    p.constraints.col(0) = k.rays.col(j);
    int col = 1;
    for (int c = 0; c < m; ++c) {
        if (c == j) continue;
        p.constraints.col(col++) = k.rays.col(c);
    }
    p.rhs = target;
    p.objective = Eigen::VectorXd::Zero(m);
    p.nonneg.assign(static_cast<std::size_t>(m), 1);
    p.nonneg[0] = 0;

    const lp::LpOutcome out = lp::solve_equality_form(p, feas_tol);
    if (out.status != lp::LpStatus::Optimal) {
        throw NumericalFailure("capped column re-solve lost feasibility");
    }
    return assemble_q(m, j, t, out.solution(0), out.solution.tail(m - 1));
}

void require_square_matching(const Eigen::MatrixXd& a, int dim) {
    if (a.rows() != a.cols()) throw DimensionMismatch("family vertex is not square");
    if (static_cast<int>(a.rows()) != dim) throw DimensionMismatch("vertex dimension mismatch");
}

}  // namespace

MatrixFamily make_parametrized_family(Eigen::MatrixXd base, std::vector<Eigen::MatrixXd> directions,
                                      std::vector<Eigen::VectorXd> param_vertices,
                                      std::vector<std::string> direction_names) {
    if (param_vertices.empty()) throw EmptyFamily("no parameter vertices");
    MatrixFamily family;
    for (const auto& theta : param_vertices) {
        if (theta.size() != static_cast<Eigen::Index>(directions.size())) {
            throw DimensionMismatch("parameter vertex length != direction count");
        }
        Eigen::MatrixXd a = base;
        for (Eigen::Index d = 0; d < theta.size(); ++d) {
            a += theta(d) * directions[static_cast<std::size_t>(d)];
        }
        family.vertices.push_back(std::move(a));
    }
    if (direction_names.empty()) {
        for (std::size_t d = 0; d < directions.size(); ++d) {
            direction_names.push_back("p" + std::to_string(d));
        }
    }
    family.parametrization = MatrixFamily::Parametrization{
        std::move(base), std::move(directions), std::move(direction_names), std::move(param_vertices)};
    return family;
}

std::optional<VertexCertificate> certify_vertex(const Eigen::MatrixXd& a,
                                                const cone::PolyhedralCone& k, double t_tol,
                                                double feas_tol) {
    require_square_matching(a, k.dim());
    const int m = k.num_rays();
    if (m == 0) throw std::invalid_argument("cone has no rays");

    std::vector<ColumnSolve> columns(static_cast<std::size_t>(m));
    double t_star = std::numeric_limits<double>::infinity();
    for (int j = 0; j < m; ++j) {
        columns[static_cast<std::size_t>(j)] = solve_column(a, k, j, feas_tol);
        const auto& c = columns[static_cast<std::size_t>(j)];
        if (!c.feasible) return std::nullopt;
        if (!c.unbounded) t_star = std::min(t_star, c.t);
    }
    if (std::isinf(t_star)) {
        throw NotPointed("certification margin unbounded in every column");
    }
    if (!(t_star > t_tol)) return std::nullopt;

    Eigen::MatrixXd p(m, m);
    for (int j = 0; j < m; ++j) {
        auto& c = columns[static_cast<std::size_t>(j)];
        if (c.unbounded) {
            c.q = solve_column_at(a, k, j, t_star, feas_tol);
        }
        p.col(j) = c.q;
    }
    // alpha lifts the diagonal so the smallest diagonal entry lands exactly on
    // the margin; every off-diagonal already clears it.
    double alpha = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < m; ++j) alpha = std::max(alpha, t_star - p(j, j));
    for (int j = 0; j < m; ++j) p(j, j) += alpha;

    VertexCertificate cert;
    cert.alpha = alpha;
    cert.p = std::move(p);
    cert.margin = t_star;
    return cert;
}

FamilyCertification certify_family(const MatrixFamily& family, const cone::PolyhedralCone& k,
                                   double t_tol, double feas_tol, int threads) {
    if (family.vertices.empty()) throw EmptyFamily("family has no vertices");
    for (const auto& a : family.vertices) require_square_matching(a, k.dim());

    const int count = static_cast<int>(family.vertices.size());
    std::vector<std::optional<VertexCertificate>> results(static_cast<std::size_t>(count));

    if (threads <= 1 || count == 1) {
        for (int i = 0; i < count; ++i) {
            results[static_cast<std::size_t>(i)] =
                certify_vertex(family.vertices[static_cast<std::size_t>(i)], k, t_tol, feas_tol);
        }
    } else {
        std::atomic<int> next{0};
        auto worker = [&]() {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
                results[static_cast<std::size_t>(i)] =
                    certify_vertex(family.vertices[static_cast<std::size_t>(i)], k, t_tol, feas_tol);
            }
        };
        std::vector<std::future<void>> futs;
        const int workers = std::min(threads, count);
        futs.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) futs.push_back(std::async(std::launch::async, worker));
        for (auto& f : futs) f.get();
    }

    for (int i = 0; i < count; ++i) {
        if (!results[static_cast<std::size_t>(i)]) {
            return FamilyCertification{std::nullopt, i};
        }
    }
    Certificate cert;
    cert.cone_hash = cone::cone_hash(k);
    for (int i = 0; i < count; ++i) {
        VertexCertificate vc = std::move(*results[static_cast<std::size_t>(i)]);
        vc.vertex = i;
        cert.vertices.push_back(std::move(vc));
    }
    return FamilyCertification{std::move(cert), -1};
}

bool replay(const Certificate& cert, const MatrixFamily& family, const cone::PolyhedralCone& k,
            double resid_tol) {
    if (cert.vertices.size() != family.vertices.size()) return false;
    if (cert.cone_hash != cone::cone_hash(k)) return false;
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(k.dim(), k.dim());
    for (std::size_t i = 0; i < cert.vertices.size(); ++i) {
        const auto& vc = cert.vertices[i];
        const auto& a = family.vertices[i];
        if (vc.p.rows() != k.num_rays() || vc.p.cols() != k.num_rays()) return false;
        const double a_scale = 1.0 + a.cwiseAbs().maxCoeff();
        const double resid =
            (((vc.alpha * id + a) * k.rays) - k.rays * vc.p).cwiseAbs().maxCoeff();
        if (resid > resid_tol * a_scale) return false;
        const double min_entry = vc.p.minCoeff();
        if (!(min_entry > 0.0)) return false;
        if (std::abs(min_entry - vc.margin) > resid_tol * (1.0 + std::abs(vc.margin))) return false;
    }
    return true;
}

bool check_relaxation_membership(const Eigen::MatrixXd& j, const MatrixFamily& family, double delta) {
    if (family.vertices.empty()) throw EmptyFamily("family has no vertices");
    const int n = static_cast<int>(j.rows());
    require_square_matching(j, family.dim());
    const int count = static_cast<int>(family.vertices.size());

    // Vectorized equality rows plus one mass row: sum p - u = delta, u >= 0.
    Eigen::MatrixXd a(n * n + 1, count + 1);
    for (int i = 0; i < count; ++i) {
        const auto& v = family.vertices[static_cast<std::size_t>(i)];
        a.col(i).head(n * n) = Eigen::Map<const Eigen::VectorXd>(v.data(), n * n);
        a(n * n, i) = 1.0;
    }
    a.col(count).setZero();
    a(n * n, count) = -1.0;
    Eigen::VectorXd b(n * n + 1);
    b.head(n * n) = Eigen::Map<const Eigen::VectorXd>(j.data(), n * n);
    b(n * n) = delta;

    const double feas_tol = 1e-9 * (1.0 + b.cwiseAbs().maxCoeff());
    return lp::feasible_equality_form(a, b, std::vector<std::uint8_t>(static_cast<std::size_t>(count + 1), 1),
                                      feas_tol);
}

std::pair<double, double> robustness_range(const MatrixFamily& family, int free_direction,
                                           const cone::PolyhedralCone& k,
                                           const RobustnessOptions& options,
                                           std::optional<double> seed_override) {
    if (!family.parametrization) {
        throw std::invalid_argument("robustness_range requires a parametrized family");
    }
    const auto& par = *family.parametrization;
    const int dirs = static_cast<int>(par.directions.size());
    if (free_direction < 0 || free_direction >= dirs) {
        throw std::invalid_argument("free direction index out of range");
    }
    if (!(options.resolution > 0.0)) throw std::invalid_argument("resolution must be positive");

    // Tuples of the non-free coordinates; the moving endpoint is probed at
    // each of them.
    std::vector<Eigen::VectorXd> others;
    for (const auto& theta : par.param_vertices) {
        Eigen::VectorXd rest(dirs - 1);
        int c = 0;
        for (int d = 0; d < dirs; ++d) {
            if (d != free_direction) rest(c++) = theta(d);
        }
        bool seen = false;
        for (const auto& o : others) {
            if (dirs == 1 || (o - rest).cwiseAbs().maxCoeff() < 1e-12) {
                seen = true;
                break;
            }
        }
        if (!seen) others.push_back(std::move(rest));
    }
    if (others.empty()) others.emplace_back(Eigen::VectorXd(0));

    auto assemble = [&](double v, const Eigen::VectorXd& rest) {
        Eigen::MatrixXd a = par.base + v * par.directions[static_cast<std::size_t>(free_direction)];
        int c = 0;
        for (int d = 0; d < dirs; ++d) {
            if (d == free_direction) continue;
            a += rest(c++) * par.directions[static_cast<std::size_t>(d)];
        }
        return a;
    };
    auto endpoint_certified = [&](double v) {
        for (const auto& rest : others) {
            if (!certify_vertex(assemble(v, rest), k, options.t_tol, options.feas_tol)) return false;
        }
        return true;
    };

    double seed_lo;
    double seed_hi;
    if (seed_override) {
        seed_lo = seed_hi = *seed_override;
    } else {
        seed_lo = std::numeric_limits<double>::infinity();
        seed_hi = -std::numeric_limits<double>::infinity();
        for (const auto& theta : par.param_vertices) {
            seed_lo = std::min(seed_lo, theta(free_direction));
            seed_hi = std::max(seed_hi, theta(free_direction));
        }
    }
    if (!endpoint_certified(seed_lo) || (seed_hi != seed_lo && !endpoint_certified(seed_hi))) {
        throw SeedInfeasible("family is not certified at the seed parameter values");
    }

    auto expand = [&](double from, double sign, double cap) {
        double good = from;
        double step = std::max(options.resolution, 1e-3);
        double probe = from + sign * step;
        while (sign * (probe - cap) < 0.0 && endpoint_certified(probe)) {
            good = probe;
            step *= 2.0;
            probe = from + sign * (std::abs(good - from) + step);
        }
        if (sign * (probe - cap) >= 0.0) {
            // Hit the configured bound; treat the cap itself as the endpoint.
            return endpoint_certified(cap) ? cap : good;
        }
        double bad = probe;
        while (std::abs(bad - good) > options.resolution) {
            const double mid = 0.5 * (good + bad);
            if (endpoint_certified(mid)) {
                good = mid;
            } else {
                bad = mid;
            }
        }
        return good;
    };

    const double hi = expand(seed_hi, +1.0, options.hi_cap);
    const double lo = expand(seed_lo, -1.0, options.lo_cap);
    return {lo, hi};
}

std::string certificate_to_json(const Certificate& cert) {
    nlohmann::json j;
    j["cone_hash"] = cert.cone_hash;
    nlohmann::json verts = nlohmann::json::array();
    for (const auto& vc : cert.vertices) {
        nlohmann::json v;
        v["vertex"] = vc.vertex;
        v["alpha"] = vc.alpha;
        v["margin"] = vc.margin;
        nlohmann::json rows = nlohmann::json::array();
        for (Eigen::Index r = 0; r < vc.p.rows(); ++r) {
            nlohmann::json row = nlohmann::json::array();
            for (Eigen::Index c = 0; c < vc.p.cols(); ++c) row.push_back(vc.p(r, c));
            rows.push_back(std::move(row));
        }
        v["P"] = std::move(rows);
        verts.push_back(std::move(v));
    }
    j["vertices"] = std::move(verts);
    return j.dump(2) + "\n";
}

Certificate certificate_from_json_text(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    Certificate cert;
    cert.cone_hash = j.at("cone_hash").get<std::string>();
    for (const auto& v : j.at("vertices")) {
        VertexCertificate vc;
        vc.vertex = v.value("vertex", static_cast<int>(cert.vertices.size()));
        vc.alpha = v.at("alpha").get<double>();
        vc.margin = v.at("margin").get<double>();
        const auto& rows = v.at("P");
        const auto r = static_cast<Eigen::Index>(rows.size());
        if (r == 0) throw std::invalid_argument("certificate P matrix empty");
        const auto c = static_cast<Eigen::Index>(rows.at(0).size());
        vc.p.resize(r, c);
        for (Eigen::Index i = 0; i < r; ++i) {
            for (Eigen::Index jj = 0; jj < c; ++jj) {
                vc.p(i, jj) = rows.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(jj)).get<double>();
            }
        }
        cert.vertices.push_back(std::move(vc));
    }
    return cert;
}

}  // namespace conecert::certify
