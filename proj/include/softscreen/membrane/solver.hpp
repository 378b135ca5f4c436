// Damped Newton minimizer for the chamber energy.
#pragma once

#include "softscreen/membrane/energy.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace softscreen::membrane {

struct SolverOptions {
    int max_iterations = 5000;
    /// Convergence when max|grad| (N) < tolerance_scale * mu_kPa * thickness_mm.
    double tolerance_scale = 1e-6;
    /// Largest nodal move accepted in one iteration (mm).
    double max_step_mm = 1.0;
    /// Principal stretch above which the state counts as over-inflated.
    double stretch_cap = 3.0;
    /// Pressure increment used when continuing from a distant state (kPa).
    double continuation_step_kPa = 1.0;
};

/// Minimizer did not reach the gradient tolerance. Carries the last iterate.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, std::vector<Node> last, double grad_norm, int iterations)
        : Error(what), last_nodes(std::move(last)), gradient_norm(grad_norm), iterations(iterations) {}
    std::vector<Node> last_nodes;
    double gradient_norm;
    int iterations;
};

/// Equilibrium exceeds the stretch safety cap.
class OverInflationError : public Error {
public:
    OverInflationError(const std::string& what, double stretch, double pressure)
        : Error(what), max_stretch(stretch), pressure_kPa(pressure) {}
    double max_stretch;
    double pressure_kPa;
};

struct MinimizeResult {
    std::vector<Node> nodes;
    double energy = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;
};

inline double convergence_tolerance(const OgdenMaterial& m, const SolverOptions& o) {
    return o.tolerance_scale * m.mu_kPa * m.thickness_mm;
}

inline double max_stretch(const MembraneEnergy& energy, const std::vector<Node>& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto [a, b] = energy.stretches(x, i);
        s = std::max({s, a, b, 1.0 / (a * b)});
    }
    return s;
}

/// Minimizes the energy for one load case starting from `start`.
inline MinimizeResult minimize(const MembraneEnergy& energy, const LoadCase& load,
                               std::vector<Node> start, const SolverOptions& opt) {
    const double tol = convergence_tolerance(energy.material(), opt);
    Eigen::VectorXd x = energy.pack(start);
    Eigen::VectorXd g;
    Eigen::MatrixXd h;
    std::vector<Node> nodes = energy.unpack(x);
    double e = energy.value(nodes, load);
    double gnorm = std::numeric_limits<double>::infinity();
    int it = 0;
    for (; it < opt.max_iterations; ++it) {
        energy.gradient_hessian(nodes, load, g, &h);
        gnorm = g.size() ? g.cwiseAbs().maxCoeff() : 0.0;
        if (gnorm < tol) break;

        h = 0.5 * (h + h.transpose()).eval();
        Eigen::VectorXd step;
        const double diag = std::max(h.diagonal().cwiseAbs().maxCoeff(), 1e-12);
        double shift = 0.0;
        for (int attempt = 0; attempt < 40; ++attempt) {
            Eigen::LLT<Eigen::MatrixXd> llt;
            if (shift > 0.0)
                llt.compute(h + shift * Eigen::MatrixXd::Identity(h.rows(), h.cols()));
            else
                llt.compute(h);
            if (llt.info() == Eigen::Success) {
                step = -llt.solve(g);
                break;
            }
            shift = shift == 0.0 ? 1e-8 * diag : shift * 10.0;
        }
        if (step.size() == 0 || !step.allFinite() || step.dot(g) >= 0.0) step = -g / diag;
        const double biggest = step.cwiseAbs().maxCoeff();
        if (biggest > opt.max_step_mm) step *= opt.max_step_mm / biggest;

        // Armijo backtracking on the true energy.
        const double slope = step.dot(g);
        double t = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            const Eigen::VectorXd trial = x + t * step;
            const auto trial_nodes = energy.unpack(trial);
            const double et = energy.value(trial_nodes, load);
            if (std::isfinite(et) && et <= e + 1e-4 * t * slope) {
                x = trial;
                nodes = trial_nodes;
                e = et;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) throw ConvergenceError("line search stalled", nodes, gnorm, it);
    }
    if (!(gnorm < tol) && it >= opt.max_iterations)
        throw ConvergenceError("no convergence after " + std::to_string(it) + " iterations", nodes,
                               gnorm, it);
    return {std::move(nodes), e, gnorm, it};
}

}  // namespace softscreen::membrane
