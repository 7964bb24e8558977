#pragma once

#include "conecert/common.hpp"

#include <Eigen/Dense>

#include <optional>

namespace conecert::spectral {

/// Dominant-eigenpair data for a matrix with a strictly dominant (rightmost,
/// real, simple) eigenvalue.
///   - r_dom has unit norm and its first significant component positive;
///   - h_dom is scaled so that <h_dom, r_dom> = 1;
///   - gap = min over the other eigenvalues mu of (lambda_dom - Re mu).
struct SpectralData {
    double lambda_dom = 0.0;
    Eigen::VectorXd r_dom;
    Eigen::VectorXd h_dom;
    double gap = 0.0;
};

/// Returns the dominant eigenpair iff the rightmost eigenvalue of A is real,
/// simple, and exceeds every other eigenvalue's real part by more than
/// gap_tol (absolute). Eigenvector orientation is deterministic.
std::optional<SpectralData> strictly_dominant(const Eigen::MatrixXd& a, double gap_tol);

/// True iff W has a real, simple, strictly positive eigenvalue whose modulus
/// exceeds the modulus of every other eigenvalue by more than gap_tol.
bool absolutely_dominant(const Eigen::MatrixXd& w, double gap_tol);

/// Upper end T of the open time-step interval (0, T) on which
/// I + tau*(A - lambda*I) keeps an absolutely dominant eigenvalue at 1.
/// Closed form: T = min_j -2*Re(mu_j - lambda) / |mu_j - lambda|^2 over the
/// non-dominant eigenvalues mu_j; +infinity when there are none.
double max_timestep(const Eigen::MatrixXd& a, const SpectralData& spec);

/// W = I + tau*(A - lambda*I) - w * r h^T, evaluated exactly.
Eigen::MatrixXd widening_operator(const Eigen::MatrixXd& a, const SpectralData& spec, double tau,
                                  double w, const Eigen::VectorXd& r, const Eigen::VectorXd& h);

/// Largest widening coefficient (within 1e-4 relative) for which the
/// eigenvalue of the widening operator along r — equal to 1 - w*<h, r> when
/// (r, h) are the dominant eigenvectors — stays the absolutely dominant one.
/// Bisection after doubling the bracket; returns 0 when even infinitesimal
/// widening fails.
double max_widening(const Eigen::MatrixXd& a, const SpectralData& spec, double tau,
                    const Eigen::VectorXd& r, const Eigen::VectorXd& h, double gap_tol);

/// Convenience: gap tolerance scaled relative to the spectral radius,
/// rel * max(1, rho(A)).
double relative_gap_tol(const Eigen::MatrixXd& a, double rel = 1e-7);

}  // namespace conecert::spectral
