#include "conecert/systems.hpp"

#include <json.hpp>

#include <cmath>
#include <random>
#include <sstream>

namespace conecert::systems {

namespace {

constexpr double kSlopeGridLo = -10.0;
constexpr double kSlopeGridHi = 10.0;
constexpr int kSlopeGridPoints = 201;
constexpr double kSlopeSlack = 1e-9;

void check_slope(const Nonlinearity& nl, const Interval& declared, const std::string& where) {
    const double step = (kSlopeGridHi - kSlopeGridLo) / (kSlopeGridPoints - 1);
    for (int i = 0; i < kSlopeGridPoints; ++i) {
        const double u = kSlopeGridLo + step * i;
        const double s = nl.df(u);
        if (s < declared.lo - kSlopeSlack || s > declared.hi + kSlopeSlack) {
            std::ostringstream msg;
            msg << where << ": slope " << s << " of " << nl.name << " at u=" << u
                << " leaves [" << declared.lo << ", " << declared.hi << "]";
            throw SlopeViolation(msg.str());
        }
    }
}

void validate(const ConsensusSpec& spec) {
    if (spec.num_agents <= 0) throw std::invalid_argument("num_agents must be positive");
    auto check_edge = [&](int recv, int send) {
        if (recv < 1 || recv > spec.num_agents || send < 1 || send > spec.num_agents) {
            throw std::invalid_argument("edge endpoint outside 1..N");
        }
        if (recv == send) throw std::invalid_argument("self-loops are not allowed");
    };
    for (const auto& [recv, send] : spec.fixed_edges) check_edge(recv, send);
    for (const auto& e : spec.uncertain_edges) check_edge(e.receiver, e.sender);
    if (spec.order == ConsensusOrder::Second && !(spec.time_constant > 0.0)) {
        throw std::invalid_argument("time constant must be positive");
    }
}

// First-order Jacobian at the given uncertain-edge slopes: off-diagonals are
// edge slopes, diagonals balance the rows to zero sum.
Eigen::MatrixXd consensus_first_order(const ConsensusSpec& spec, const Eigen::VectorXd& slopes) {
    const int n = spec.num_agents;
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
    auto add = [&](int recv, int send, double slope) {
        l(recv - 1, send - 1) += slope;
        l(recv - 1, recv - 1) -= slope;
    };
    for (const auto& [recv, send] : spec.fixed_edges) add(recv, send, 1.0);
    for (std::size_t e = 0; e < spec.uncertain_edges.size(); ++e) {
        const auto& edge = spec.uncertain_edges[e];
        add(edge.receiver, edge.sender, slopes(static_cast<Eigen::Index>(e)));
    }
    return l;
}

Eigen::MatrixXd to_second_order(const Eigen::MatrixXd& l, double tau) {
    const int n = static_cast<int>(l.rows());
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    j.topRightCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
    j.bottomLeftCorner(n, n) = l / tau;
    j.bottomRightCorner(n, n) = -Eigen::MatrixXd::Identity(n, n) / tau;
    return j;
}

Eigen::MatrixXd duffing_jacobian(const DuffingSpec& spec, double alpha_slope, double kp_slope) {
    Eigen::MatrixXd j(3, 3);
    j << 0.0, 1.0, 0.0,
         -alpha_slope, -spec.c, spec.k_f,
         -kp_slope / spec.inductance, -spec.k_e / spec.inductance, -spec.resistance / spec.inductance;
    return j;
}

}  // namespace

Nonlinearity linear_coupling(double slope) {
    return Nonlinearity{[slope](double u) { return slope * u; },
                        [slope](double) { return slope; },
                        "linear(" + std::to_string(slope) + ")"};
}

Nonlinearity scaled_sin(double scale) {
    return Nonlinearity{[scale](double u) { return scale * std::sin(u); },
                        [scale](double u) { return scale * std::cos(u); },
                        "scaled_sin(" + std::to_string(scale) + ")"};
}

Nonlinearity linear_minus_tanh(double a, double b) {
    return Nonlinearity{[a, b](double u) { return a * u - b * std::tanh(u); },
                        [a, b](double u) {
                            const double c = std::cosh(u);
                            return a - b / (c * c);
                        },
                        "linear_minus_tanh(" + std::to_string(a) + "," + std::to_string(b) + ")"};
}

certify::MatrixFamily consensus_family(const ConsensusSpec& spec,
                                       const std::vector<Eigen::VectorXd>& param_vertices) {
    validate(spec);
    const auto edges = static_cast<Eigen::Index>(spec.uncertain_edges.size());
    if (param_vertices.empty()) throw certify::EmptyFamily("no parameter vertices");
    for (const auto& v : param_vertices) {
        if (v.size() != edges) {
            throw certify::DimensionMismatch("slope tuple length != number of uncertain edges");
        }
    }

    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(edges);
    Eigen::MatrixXd base = consensus_first_order(spec, zero);
    std::vector<Eigen::MatrixXd> directions;
    std::vector<std::string> names;
    for (std::size_t e = 0; e < spec.uncertain_edges.size(); ++e) {
        Eigen::VectorXd unit_e = Eigen::VectorXd::Zero(edges);
        unit_e(static_cast<Eigen::Index>(e)) = 1.0;
        directions.push_back(consensus_first_order(spec, unit_e) - base);
        const auto& edge = spec.uncertain_edges[e];
        names.push_back("f" + std::to_string(edge.receiver) + std::to_string(edge.sender));
    }
    if (spec.order == ConsensusOrder::Second) {
        base = to_second_order(base, spec.time_constant);
        for (auto& d : directions) {
            Eigen::MatrixXd block = Eigen::MatrixXd::Zero(base.rows(), base.cols());
            block.bottomLeftCorner(spec.num_agents, spec.num_agents) = d / spec.time_constant;
            d = block;
        }
    }
    return certify::make_parametrized_family(std::move(base), std::move(directions), param_vertices,
                                             std::move(names));
}

certify::MatrixFamily duffing_family(const DuffingSpec& spec) {
    if (!(spec.inductance > 0.0)) throw std::invalid_argument("inductance must be positive");
    Eigen::VectorXd lo(2), hi(2);
    lo << spec.alpha_slope.lo, spec.kp_slope.lo;
    hi << spec.alpha_slope.hi, spec.kp_slope.hi;

    const Eigen::MatrixXd base = duffing_jacobian(spec, 0.0, 0.0);
    std::vector<Eigen::MatrixXd> directions{duffing_jacobian(spec, 1.0, 0.0) - base,
                                            duffing_jacobian(spec, 0.0, 1.0) - base};
    // Collapsed intervals drop duplicate corners.
    std::vector<Eigen::VectorXd> corners;
    for (const auto& c : box_vertices(lo, hi)) {
        bool seen = false;
        for (const auto& existing : corners) {
            if ((existing - c).cwiseAbs().maxCoeff() < 1e-15) {
                seen = true;
                break;
            }
        }
        if (!seen) corners.push_back(c);
    }
    return certify::make_parametrized_family(base, std::move(directions), std::move(corners),
                                             {"alpha", "kp"});
}

std::vector<Eigen::VectorXd> box_vertices(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    if (lo.size() != hi.size()) throw std::invalid_argument("box bounds length mismatch");
    const int m = static_cast<int>(lo.size());
    std::vector<Eigen::VectorXd> out;
    out.reserve(1u << m);
    for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
        Eigen::VectorXd v(m);
        for (int d = 0; d < m; ++d) v(d) = (mask & (1u << d)) ? hi(d) : lo(d);
        out.push_back(std::move(v));
    }
    return out;
}

DynamicalSystem instantiate(const ConsensusSpec& spec, const std::vector<Nonlinearity>& uncertain_bindings) {
    validate(spec);
    if (uncertain_bindings.size() != spec.uncertain_edges.size()) {
        throw std::invalid_argument("one binding per uncertain edge required");
    }
    for (std::size_t e = 0; e < uncertain_bindings.size(); ++e) {
        const auto& edge = spec.uncertain_edges[e];
        check_slope(uncertain_bindings[e], edge.slope,
                    "edge " + std::to_string(edge.receiver) + "<-" + std::to_string(edge.sender));
    }

    const int n = spec.num_agents;
    const ConsensusSpec s = spec;
    const std::vector<Nonlinearity> bind = uncertain_bindings;

    auto coupling_sum = [s, bind](const Eigen::VectorXd& x) {
        Eigen::VectorXd out = Eigen::VectorXd::Zero(s.num_agents);
        for (const auto& [recv, send] : s.fixed_edges) {
            out(recv - 1) += x(send - 1) - x(recv - 1);
        }
        for (std::size_t e = 0; e < s.uncertain_edges.size(); ++e) {
            const auto& edge = s.uncertain_edges[e];
            out(edge.receiver - 1) += bind[e].f(x(edge.sender - 1) - x(edge.receiver - 1));
        }
        return out;
    };
    auto coupling_jac = [s, bind](const Eigen::VectorXd& x) {
        Eigen::MatrixXd l = Eigen::MatrixXd::Zero(s.num_agents, s.num_agents);
        auto add = [&](int recv, int send, double slope) {
            l(recv - 1, send - 1) += slope;
            l(recv - 1, recv - 1) -= slope;
        };
        for (const auto& [recv, send] : s.fixed_edges) add(recv, send, 1.0);
        for (std::size_t e = 0; e < s.uncertain_edges.size(); ++e) {
            const auto& edge = s.uncertain_edges[e];
            add(edge.receiver, edge.sender, bind[e].df(x(edge.sender - 1) - x(edge.receiver - 1)));
        }
        return l;
    };

    DynamicalSystem sys;
    if (spec.order == ConsensusOrder::First) {
        sys.dim = n;
        sys.vector_field = coupling_sum;
        sys.jacobian = coupling_jac;
        sys.description = "consensus network, " + std::to_string(n) + " agents";
    } else {
        const double tau = spec.time_constant;
        sys.dim = 2 * n;
        sys.vector_field = [n, tau, coupling_sum](const Eigen::VectorXd& z) {
            Eigen::VectorXd out(2 * n);
            out.head(n) = z.tail(n);
            out.tail(n) = (-z.tail(n) + coupling_sum(z.head(n))) / tau;
            return out;
        };
        sys.jacobian = [n, tau, coupling_jac](const Eigen::VectorXd& z) {
            return to_second_order(coupling_jac(z.head(n)), tau);
        };
        sys.description = "second-order consensus network, " + std::to_string(n) + " agents";
    }
    return sys;
}

DynamicalSystem instantiate(const DuffingSpec& spec, const Nonlinearity& alpha, const Nonlinearity& kp) {
    if (!(spec.inductance > 0.0)) throw std::invalid_argument("inductance must be positive");
    check_slope(alpha, spec.alpha_slope, "spring alpha");
    check_slope(kp, spec.kp_slope, "gain k_p");

    const DuffingSpec s = spec;
    DynamicalSystem sys;
    sys.dim = 3;
    sys.vector_field = [s, alpha, kp](const Eigen::VectorXd& x) {
        Eigen::VectorXd out(3);
        out(0) = x(1);
        out(1) = -alpha.f(x(0)) - s.c * x(1) + s.k_f * x(2);
        out(2) = (kp.f(s.x_ref - x(0)) - s.k_e * x(1) - s.resistance * x(2)) / s.inductance;
        return out;
    };
    sys.jacobian = [s, alpha, kp](const Eigen::VectorXd& x) {
        return duffing_jacobian(s, alpha.df(x(0)), kp.df(s.x_ref - x(0)));
    };
    sys.description = "controlled Duffing oscillator";
    return sys;
}

std::vector<Eigen::MatrixXd> sample_jacobians(const DynamicalSystem& sys, const Eigen::VectorXd& box_lo,
                                              const Eigen::VectorXd& box_hi, int count,
                                              std::uint64_t rng_seed) {
    if (count < 1) throw std::invalid_argument("sample count must be at least 1");
    if (box_lo.size() != sys.dim || box_hi.size() != sys.dim) {
        throw std::invalid_argument("sampling box dimension mismatch");
    }
    std::mt19937_64 rng(rng_seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Eigen::MatrixXd> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        Eigen::VectorXd x(sys.dim);
        for (int d = 0; d < sys.dim; ++d) {
            x(d) = box_lo(d) + (box_hi(d) - box_lo(d)) * unit(rng);
        }
        out.push_back(sys.jacobian(x));
    }
    return out;
}

ConsensusSpec paper_consensus_5(ConsensusOrder order, double time_constant) {
    ConsensusSpec spec;
    spec.num_agents = 5;
    spec.fixed_edges = {{1, 2}, {2, 4}, {2, 3}, {3, 1}, {4, 5}, {5, 1}};
    spec.uncertain_edges = {{1, 5, {-1.0, 1.0}}, {4, 2, {-1.0, 1.0}}};
    spec.order = order;
    spec.time_constant = time_constant;
    return spec;
}

std::vector<Eigen::VectorXd> paper_consensus_polytope() {
    std::vector<Eigen::VectorXd> vertices;
    const double data[4][2] = {{1.0, 1.0}, {-1.0, 1.0}, {1.0, -1.0}, {-0.9, -0.9}};
    for (const auto& row : data) {
        Eigen::VectorXd v(2);
        v << row[0], row[1];
        vertices.push_back(std::move(v));
    }
    return vertices;
}

DuffingSpec paper_duffing() {
    return DuffingSpec{};
}

namespace {

using nlohmann::json;

Eigen::MatrixXd matrix_from_json(const json& rows) {
    const auto r = static_cast<Eigen::Index>(rows.size());
    if (r == 0) throw std::invalid_argument("empty matrix in system file");
    const auto c = static_cast<Eigen::Index>(rows.at(0).size());
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
        const auto& row = rows.at(static_cast<std::size_t>(i));
        if (static_cast<Eigen::Index>(row.size()) != c) {
            throw std::invalid_argument("ragged matrix in system file");
        }
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = row.at(static_cast<std::size_t>(j)).get<double>();
    }
    return m;
}

Nonlinearity nonlinearity_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "linear") return linear_coupling(j.at("slope").get<double>());
    if (kind == "scaled_sin") return scaled_sin(j.at("scale").get<double>());
    if (kind == "linear_minus_tanh") {
        return linear_minus_tanh(j.at("a").get<double>(), j.at("b").get<double>());
    }
    throw std::invalid_argument("unknown nonlinearity kind: " + kind);
}

LoadedSystem load_builtin(const json& j) {
    const std::string name = j.at("name").get<std::string>();
    const json overrides = j.value("overrides", json::object());
    LoadedSystem out;
    out.name = name;

    if (name == "paper-consensus-5" || name == "paper-consensus-5-second-order") {
        const bool second = name == "paper-consensus-5-second-order";
        const double tau = overrides.value("tau", 0.3);
        ConsensusSpec spec = paper_consensus_5(second ? ConsensusOrder::Second : ConsensusOrder::First, tau);
        out.family = consensus_family(spec, paper_consensus_polytope());
        out.num_positions = spec.num_agents;
        out.consensus_like = true;
        if (j.contains("bindings")) {
            const auto& b = j.at("bindings");
            std::vector<Nonlinearity> bindings{nonlinearity_from_json(b.at("f15")),
                                               nonlinearity_from_json(b.at("f42"))};
            out.instance = instantiate(spec, bindings);
        }
        return out;
    }
    if (name == "paper-duffing") {
        DuffingSpec spec = paper_duffing();
        spec.c = overrides.value("c", spec.c);
        spec.k_f = overrides.value("k_f", spec.k_f);
        spec.inductance = overrides.value("L", spec.inductance);
        spec.k_e = overrides.value("k_e", spec.k_e);
        spec.resistance = overrides.value("R", spec.resistance);
        spec.x_ref = overrides.value("x_ref", spec.x_ref);
        spec.alpha_slope.lo = overrides.value("alpha_lo", spec.alpha_slope.lo);
        spec.alpha_slope.hi = overrides.value("alpha_hi", spec.alpha_slope.hi);
        spec.kp_slope.lo = overrides.value("kp_lo", spec.kp_slope.lo);
        spec.kp_slope.hi = overrides.value("kp_hi", spec.kp_slope.hi);
        out.family = duffing_family(spec);
        out.num_positions = 3;
        if (j.contains("bindings")) {
            const auto& b = j.at("bindings");
            out.instance = instantiate(spec, nonlinearity_from_json(b.at("alpha")),
                                       nonlinearity_from_json(b.at("kp")));
        }
        return out;
    }
    throw std::invalid_argument("unknown builtin system: " + name);
}

}  // namespace

LoadedSystem load_system_from_json_text(const std::string& text) {
    const json j = json::parse(text);
    const std::string type = j.at("type").get<std::string>();

    if (type == "builtin") {
        return load_builtin(j);
    }

    LoadedSystem out;
    if (type == "family") {
        const int dim = j.at("dim").get<int>();
        for (const auto& v : j.at("vertices")) {
            Eigen::MatrixXd m = matrix_from_json(v);
            if (m.rows() != dim || m.cols() != dim) {
                throw std::invalid_argument("family vertex shape disagrees with dim");
            }
            out.family.vertices.push_back(std::move(m));
        }
        if (out.family.vertices.empty()) throw std::invalid_argument("family has no vertices");
        out.name = "family";
        out.num_positions = dim;
        return out;
    }
    if (type == "parametrized") {
        Eigen::MatrixXd base = matrix_from_json(j.at("base"));
        std::vector<Eigen::MatrixXd> directions;
        for (const auto& d : j.at("directions")) directions.push_back(matrix_from_json(d));
        std::vector<Eigen::VectorXd> vertices;
        for (const auto& v : j.at("param_vertices")) {
            Eigen::VectorXd theta(static_cast<Eigen::Index>(v.size()));
            for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) = v.at(static_cast<std::size_t>(i)).get<double>();
            vertices.push_back(std::move(theta));
        }
        std::vector<std::string> names;
        if (j.contains("direction_names")) {
            for (const auto& n : j.at("direction_names")) names.push_back(n.get<std::string>());
        }
        out.family = certify::make_parametrized_family(std::move(base), std::move(directions),
                                                       std::move(vertices), std::move(names));
        out.name = "parametrized";
        out.num_positions = out.family.dim();
        return out;
    }
    throw std::invalid_argument("unknown system type: " + type);
}

}  // namespace conecert::systems
