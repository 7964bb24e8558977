#include "conecert/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace conecert::spectral {

namespace {

constexpr double kRealTol = 1e-9;    // relative imaginary-part threshold
constexpr double kOrientTol = 1e-9;  // entry magnitude that fixes orientation

Eigen::VectorXcd eigenvalues_of(const Eigen::MatrixXd& m) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(m, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) {
        throw NumericalFailure("eigensolver did not converge");
    }
    return es.eigenvalues();
}

// Unit kernel direction of m, via the right-singular vector of the smallest
// singular value. Deterministic up to sign.
Eigen::VectorXd kernel_direction(const Eigen::MatrixXd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
    return svd.matrixV().col(m.cols() - 1);
}

void orient_first_significant_positive(Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > kOrientTol) {
            if (v(i) < 0.0) v = -v;
            return;
        }
    }
}

void require_square_finite(const Eigen::MatrixXd& a) {
    if (a.rows() == 0 || a.rows() != a.cols()) {
        throw std::invalid_argument("matrix must be square and non-empty");
    }
    if (!a.allFinite()) {
        throw std::invalid_argument("matrix has non-finite entries");
    }
}

}  // namespace

std::optional<SpectralData> strictly_dominant(const Eigen::MatrixXd& a, double gap_tol) {
    require_square_finite(a);
    const Eigen::VectorXcd ev = eigenvalues_of(a);
    const Eigen::Index n = ev.size();

    Eigen::Index dom = 0;
    for (Eigen::Index j = 1; j < n; ++j) {
        if (ev(j).real() > ev(dom).real()) dom = j;
    }
    const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
    if (std::abs(ev(dom).imag()) > kRealTol * scale) {
        return std::nullopt;
    }
    const double lambda = ev(dom).real();

    double gap = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
        if (j == dom) continue;
        gap = std::min(gap, lambda - ev(j).real());
    }
    if (!(gap > gap_tol)) {
        return std::nullopt;
    }

    const Eigen::MatrixXd shifted = a - lambda * Eigen::MatrixXd::Identity(a.rows(), a.cols());
    Eigen::VectorXd r = kernel_direction(shifted);
    orient_first_significant_positive(r);
    Eigen::VectorXd h = kernel_direction(shifted.transpose());
    const double s = h.dot(r);
    if (std::abs(s) < 1e-12) {
        // Left/right eigenvectors nearly orthogonal: effectively defective.
        return std::nullopt;
    }
    h /= s;

    const double a_scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    if ((a * r - lambda * r).norm() > 1e-8 * a_scale ||
        (a.transpose() * h - lambda * h).norm() > 1e-8 * a_scale * h.norm()) {
        throw NumericalFailure("dominant eigenpair residual too large");
    }

    SpectralData out;
    out.lambda_dom = lambda;
    out.r_dom = std::move(r);
    out.h_dom = std::move(h);
    out.gap = gap;
    return out;
}

bool absolutely_dominant(const Eigen::MatrixXd& w, double gap_tol) {
    require_square_finite(w);
    const Eigen::VectorXcd ev = eigenvalues_of(w);
    const Eigen::Index n = ev.size();

    Eigen::Index dom = 0;
    for (Eigen::Index j = 1; j < n; ++j) {
        if (std::abs(ev(j)) > std::abs(ev(dom))) dom = j;
    }
    const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
    if (std::abs(ev(dom).imag()) > kRealTol * scale) return false;
    const double lambda = ev(dom).real();
    if (lambda <= 0.0) return false;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (j == dom) continue;
        if (lambda - std::abs(ev(j)) <= gap_tol) return false;
    }
    return true;
}

double max_timestep(const Eigen::MatrixXd& a, const SpectralData& spec) {
    require_square_finite(a);
    const Eigen::VectorXcd ev = eigenvalues_of(a);
    const Eigen::Index n = ev.size();
    if (n == 1) return std::numeric_limits<double>::infinity();

    Eigen::Index dom = 0;
    double best = std::abs(ev(0) - std::complex<double>(spec.lambda_dom, 0.0));
    for (Eigen::Index j = 1; j < n; ++j) {
        const double d = std::abs(ev(j) - std::complex<double>(spec.lambda_dom, 0.0));
        if (d < best) {
            best = d;
            dom = j;
        }
    }
    double t = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
        if (j == dom) continue;
        const std::complex<double> z = ev(j) - std::complex<double>(spec.lambda_dom, 0.0);
        const double zn = std::norm(z);
        if (zn < 1e-24) continue;  // numerically coincident with the dominant one
        t = std::min(t, -2.0 * z.real() / zn);
    }
    return t;
}

Eigen::MatrixXd widening_operator(const Eigen::MatrixXd& a, const SpectralData& spec, double tau,
                                  double w, const Eigen::VectorXd& r, const Eigen::VectorXd& h) {
    require_square_finite(a);
    if (r.size() != a.rows() || h.size() != a.rows()) {
        throw std::invalid_argument("eigenvector dimension mismatch");
    }
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(a.rows(), a.cols());
    return id + tau * (a - spec.lambda_dom * id) - w * (r * h.transpose());
}

double max_widening(const Eigen::MatrixXd& a, const SpectralData& spec, double tau,
                    const Eigen::VectorXd& r, const Eigen::VectorXd& h, double gap_tol) {
    const double proj = h.dot(r);
    if (proj <= 1e-12) return 0.0;

    // The widening shifts only the eigenvalue along r (r h^T spans its
    // spectral projector), moving it from 1 to 1 - w*proj while the rest of
    // the spectrum stays put. The predicate asks that this tracked eigenvalue
    // remain the absolutely dominant one, which is monotone in w.
    auto holds = [&](double w_try) {
        const Eigen::MatrixXd op = widening_operator(a, spec, tau, w_try, r, h);
        const Eigen::VectorXcd ev = eigenvalues_of(op);
        const std::complex<double> predicted(1.0 - w_try * proj, 0.0);
        Eigen::Index dom = 0;
        double best = std::abs(ev(0) - predicted);
        for (Eigen::Index j = 1; j < ev.size(); ++j) {
            const double d = std::abs(ev(j) - predicted);
            if (d < best) {
                best = d;
                dom = j;
            }
        }
        const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
        if (best > 1e-6 * scale) return false;  // r no longer tracks an eigenvalue
        if (std::abs(ev(dom).imag()) > kRealTol * scale) return false;
        const double lam = ev(dom).real();
        if (lam <= 0.0) return false;
        for (Eigen::Index j = 0; j < ev.size(); ++j) {
            if (j == dom) continue;
            if (lam - std::abs(ev(j)) <= gap_tol) return false;
        }
        return true;
    };

    if (!holds(0.0)) return 0.0;
    double lo = 0.0;
    double hi = 1.0;
    while (holds(hi)) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e12) return lo;
    }
    while (hi - lo > 1e-4 * std::max(1.0, lo)) {
        const double mid = 0.5 * (lo + hi);
        if (holds(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo;
}

double relative_gap_tol(const Eigen::MatrixXd& a, double rel) {
    require_square_finite(a);
    const double rho = eigenvalues_of(a).cwiseAbs().maxCoeff();
    return rel * std::max(1.0, rho);
}

}  // namespace conecert::spectral
