#pragma once

#include "conecert/certify.hpp"
#include "conecert/common.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace conecert::systems {

struct SlopeViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DynamicalSystem {
    int dim = 0;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> vector_field;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;
    std::string description;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Scalar coupling with its analytic slope; slope admissibility against a
/// declared interval is spot-checked on a grid at instantiation time.
struct Nonlinearity {
    std::function<double(double)> f;
    std::function<double(double)> df;
    std::string name;
};

Nonlinearity linear_coupling(double slope);
Nonlinearity scaled_sin(double scale);
Nonlinearity linear_minus_tanh(double a, double b);  // a*u - b*tanh(u)

enum class ConsensusOrder { First, Second };

/// Diffusive network: agent i integrates the weighted differences with its
/// in-neighbors. Fixed edges have slope one; uncertain edges carry a slope
/// interval and are where the parameter polytope lives. Agents are 1-based.
struct ConsensusSpec {
    int num_agents = 0;
    std::vector<std::pair<int, int>> fixed_edges;  // (receiver, sender)
    struct UncertainEdge {
        int receiver = 0;
        int sender = 0;
        Interval slope;
    };
    std::vector<UncertainEdge> uncertain_edges;
    ConsensusOrder order = ConsensusOrder::First;
    double time_constant = 1.0;  // second order only
};

/// Controlled Duffing oscillator: position/velocity mechanics plus a DC-motor
/// electrical state. alpha is the (possibly nonlinear) spring and k_p the
/// (possibly nonlinear) position feedback.
struct DuffingSpec {
    double c = 5.0;
    double k_f = 1.0;
    double inductance = 0.1;
    double k_e = 1.0;
    double resistance = 1.0;
    Interval alpha_slope{-2.0, 5.0};
    Interval kp_slope{0.0, 3.0};
    double x_ref = 0.1;
};

/// Vertex Jacobians at the given slope tuples (one slope per uncertain edge).
/// First order: row sums zero, off-diagonals are the edge slopes. Second
/// order: 2N x 2N blocks [[0, I], [L/tau, -I/tau]].
certify::MatrixFamily consensus_family(const ConsensusSpec& spec,
                                       const std::vector<Eigen::VectorXd>& param_vertices);

/// Vertex Jacobians at the four corners of the (alpha', k_p') box.
certify::MatrixFamily duffing_family(const DuffingSpec& spec);

/// All 2^m corners of [lo, hi].
std::vector<Eigen::VectorXd> box_vertices(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);

DynamicalSystem instantiate(const ConsensusSpec& spec, const std::vector<Nonlinearity>& uncertain_bindings);
DynamicalSystem instantiate(const DuffingSpec& spec, const Nonlinearity& alpha, const Nonlinearity& kp);

/// Jacobians at `count` states sampled uniformly from the box.
std::vector<Eigen::MatrixXd> sample_jacobians(const DynamicalSystem& sys, const Eigen::VectorXd& box_lo,
                                              const Eigen::VectorXd& box_hi, int count,
                                              std::uint64_t rng_seed);

// The worked examples, encoded once. The five-agent ring topology is:
// 1<-2, 2<-3, 2<-4, 3<-1, 4<-5, 5<-1 with unit weights, plus the uncertain
// couplings 1<-5 (f15) and 4<-2 (f42).
ConsensusSpec paper_consensus_5(ConsensusOrder order = ConsensusOrder::First, double time_constant = 0.3);
std::vector<Eigen::VectorXd> paper_consensus_polytope();
DuffingSpec paper_duffing();

/// A system file: a matrix family plus, when couplings are bound, the
/// concrete dynamics for simulation.
struct LoadedSystem {
    std::string name;
    certify::MatrixFamily family;
    std::optional<DynamicalSystem> instance;
    int num_positions = 0;  // leading state entries compared for consensus
    bool consensus_like = false;
};

LoadedSystem load_system_from_json_text(const std::string& text);

}  // namespace conecert::systems
