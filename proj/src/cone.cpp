#include "conecert/cone.hpp"

#include "conecert/lp.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

namespace conecert::cone {

namespace {

constexpr double kZeroNorm = 1e-12;
constexpr double kRankTol = 1e-10;

std::vector<std::uint8_t> all_nonneg(int n) {
    return std::vector<std::uint8_t>(static_cast<std::size_t>(n), 1);
}

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& m, const std::vector<int>& cols) {
    Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        out.col(static_cast<Eigen::Index>(j)) = m.col(cols[j]);
    }
    return out;
}

}  // namespace

PolyhedralCone from_rays(const Eigen::MatrixXd& raw) {
    if (raw.rows() == 0) throw std::invalid_argument("ray matrix has zero dimension");
    std::vector<int> keep;
    Eigen::MatrixXd unit(raw.rows(), raw.cols());
    for (Eigen::Index j = 0; j < raw.cols(); ++j) {
        const double norm = raw.col(j).norm();
        if (norm < kZeroNorm) {
            throw ZeroRay("ray column " + std::to_string(j) + " has near-zero norm");
        }
        unit.col(j) = raw.col(j) / norm;
        bool duplicate = false;
        for (int kept : keep) {
            if (unit.col(j).dot(unit.col(kept)) > kDedupCosine) {
                duplicate = true;
                break;
            }
        }
        if (!duplicate) keep.push_back(static_cast<int>(j));
    }
    return PolyhedralCone{select_columns(unit, keep)};
}

HalfspaceCone from_normals(const Eigen::MatrixXd& raw) {
    if (raw.cols() == 0) throw std::invalid_argument("normal matrix has zero dimension");
    Eigen::MatrixXd unit(raw.rows(), raw.cols());
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
        const double norm = raw.row(i).norm();
        if (norm < kZeroNorm) throw ZeroRay("normal row " + std::to_string(i) + " has near-zero norm");
        unit.row(i) = raw.row(i) / norm;
    }
    return HalfspaceCone{unit};
}

int rank(const PolyhedralCone& k) {
    if (k.num_rays() == 0) return 0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(k.rays);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) <= 0.0) return 0;
    int r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > kRankTol * sv(0)) ++r;
    }
    return r;
}

bool member(const PolyhedralCone& k, const Eigen::VectorXd& r, double delta) {
    if (r.size() != k.dim()) throw std::invalid_argument("query dimension mismatch");
    if (k.num_rays() == 0) return r.norm() <= delta;
    return lp::feasible_equality_form(k.rays, r, all_nonneg(k.num_rays()), delta);
}

bool interior_member(const PolyhedralCone& k, const Eigen::VectorXd& r, double t_tol) {
    if (r.size() != k.dim()) throw std::invalid_argument("query dimension mismatch");
    if (rank(k) < k.dim()) throw NotProper("ray matrix is rank deficient");

    // Substituting p = t*1 + s, s >= 0 turns the program into
    //   maximize t   s.t.   t*(R*1) + R*s = r.
    const int m = k.num_rays();
    lp::EqualityForm p;
    p.constraints.resize(k.dim(), m + 1);
    p.constraints.col(0) = k.rays.rowwise().sum();
    p.constraints.rightCols(m) = k.rays;
    p.rhs = r;
    p.objective = Eigen::VectorXd::Zero(m + 1);
    p.objective(0) = 1.0;
    p.nonneg = all_nonneg(m + 1);
    p.nonneg[0] = 0;

    const lp::LpOutcome out = lp::solve_equality_form(p, 1e-9);
    if (out.status == lp::LpStatus::Unbounded) {
        throw NotProper("interior test unbounded: cone is not pointed");
    }
    if (out.status != lp::LpStatus::Optimal) return false;
    return out.solution(0) > t_tol;
}

bool strict_inclusion_in_halfspaces(const PolyhedralCone& k_r, const HalfspaceCone& k_h, double tol) {
    if (k_r.dim() != k_h.dim()) throw std::invalid_argument("cone dimension mismatch");
    return ((k_h.normals * k_r.rays).array() > tol).all();
}

bool strict_inclusion_rays(const PolyhedralCone& inner, const PolyhedralCone& outer, double t_tol) {
    if (inner.dim() != outer.dim()) throw std::invalid_argument("cone dimension mismatch");
    for (int j = 0; j < inner.num_rays(); ++j) {
        if (!interior_member(outer, inner.rays.col(j), t_tol)) return false;
    }
    return true;
}

PolyhedralCone remove_redundant_rays(const PolyhedralCone& k, double delta) {
    const int m = k.num_rays();
    std::vector<int> survivors;
    survivors.reserve(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) survivors.push_back(j);

    for (int j = 0; j < m; ++j) {
        std::vector<int> others;
        others.reserve(survivors.size());
        bool present = false;
        for (int s : survivors) {
            if (s == j) {
                present = true;
            } else {
                others.push_back(s);
            }
        }
        if (!present) continue;
        if (others.empty()) continue;
        const Eigen::MatrixXd rest = select_columns(k.rays, others);
        if (lp::feasible_equality_form(rest, k.rays.col(j), all_nonneg(static_cast<int>(others.size())), delta)) {
            survivors.erase(std::find(survivors.begin(), survivors.end(), j));
        }
    }
    return PolyhedralCone{select_columns(k.rays, survivors)};
}

bool is_proper(const PolyhedralCone& k, double delta) {
    if (rank(k) < k.dim()) return false;
    // Pointedness: the program { q >= 0, sum q = 1, R q = 0 } must be
    // infeasible, otherwise the hull contains a line.
    const int m = k.num_rays();
    Eigen::MatrixXd a(k.dim() + 1, m);
    a.topRows(k.dim()) = k.rays;
    a.bottomRows(1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(k.dim() + 1);
    b(k.dim()) = 1.0;
    return !lp::feasible_equality_form(a, b, all_nonneg(m), delta);
}

std::string cone_hash(const PolyhedralCone& k) {
    return to_hex(hash_matrix(k.rays));
}

std::string cone_to_json(const PolyhedralCone& k) {
    nlohmann::json j;
    j["dim"] = k.dim();
    nlohmann::json rays = nlohmann::json::array();
    for (int c = 0; c < k.num_rays(); ++c) {
        nlohmann::json ray = nlohmann::json::array();
        for (int r = 0; r < k.dim(); ++r) ray.push_back(k.rays(r, c));
        rays.push_back(std::move(ray));
    }
    j["rays"] = std::move(rays);
    return j.dump(2) + "\n";
}

PolyhedralCone cone_from_json_text(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    const int n = j.at("dim").get<int>();
    const auto& rays = j.at("rays");
    if (!rays.is_array() || rays.empty()) {
        throw std::invalid_argument("cone file has no rays");
    }
    Eigen::MatrixXd m(n, static_cast<Eigen::Index>(rays.size()));
    Eigen::Index c = 0;
    for (const auto& ray : rays) {
        if (static_cast<int>(ray.size()) != n) {
            throw std::invalid_argument("ray length disagrees with dim");
        }
        for (int r = 0; r < n; ++r) m(r, c) = ray.at(static_cast<std::size_t>(r)).get<double>();
        ++c;
    }
    return from_rays(m);
}

}  // namespace conecert::cone
