#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "seg/grid.hpp"
#include "seg/image.hpp"
#include "seg/model.hpp"
#include "seg/params.hpp"
#include "seg/spectral.hpp"

namespace seg {

// Thrown when an iterate stops being finite.
class SolverError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Stabilizer actually used for time stepping: the configured S, raised to
// stabilizer_bound(...) when the bound-enforcing mode is on.
inline double effective_stabilizer(const ModelParams& params, int omega) {
    if (params.mbp_mode == StabilizerMode::user_value) return params.S;
    return std::max(params.S, stabilizer_bound(params.epsilon, params.lambda, omega, params.eps1()));
}

inline SpectralPlan make_plan(const ModelParams& params, int rows, int cols, int omega) {
    return SpectralPlan(rows, cols, params.h, effective_stabilizer(params, omega), params.epsilon,
                        params.dt);
}

// Stabilized nonlinear part of the evolution equation for field i, evaluated
// with every field frozen at the supplied stack:
//   N(U_i) = S * U_i - (1/epsilon) * W'(U_i) - force_i(U, C, I).
// The stabilizer must match the one baked into the spectral plan.
inline Field nonlinear_term(int i, const PhaseStack& u, const RegionMeans& c,
                            const ImageTensor& img, const ModelParams& params, double stabilizer) {
    Field out = force(i, u, c, img, params.lambda, params.eps1());
    const Field& ui = u[i];
    const double inv_eps = 1.0 / params.epsilon;
    for (std::size_t px = 0; px < out.size(); ++px)
        out[px] = stabilizer * ui[px] - inv_eps * double_well_deriv(ui[px]) - out[px];
    return out;
}

// One exponential Euler step applied to every field (Jacobi coupling: all
// nonlinear terms are evaluated at the incoming stack before any update):
//   U_i <- phi0(dt L_h) U_i + dt phi1(dt L_h) N(U_i).
inline PhaseStack etd1_step(const PhaseStack& u, const RegionMeans& c, const ImageTensor& img,
                            const SpectralPlan& plan, const ModelParams& params) {
    PhaseStack out = u;
    std::vector<Field> nl(u.n());
    for (int i = 0; i < u.n(); ++i) nl[i] = nonlinear_term(i, u, c, img, params, plan.stabilizer());
    for (int i = 0; i < u.n(); ++i) out[i] = plan.exp_euler(u[i], nl[i]);
    return out;
}

// Second-order two-stage step: the exponential Euler predictor followed by
//   U_i <- Uhat_i + dt phi2(dt L_h) (N(Uhat_i) - N(U_i)),
// with the corrector nonlinearity evaluated at the full predicted stack.
inline PhaseStack etdrk2_step(const PhaseStack& u, const RegionMeans& c, const ImageTensor& img,
                              const SpectralPlan& plan, const ModelParams& params) {
    const int n = u.n();
    std::vector<Field> nl(n);
    for (int i = 0; i < n; ++i) nl[i] = nonlinear_term(i, u, c, img, params, plan.stabilizer());
    PhaseStack hat = u;
    for (int i = 0; i < n; ++i) hat[i] = plan.exp_euler(u[i], nl[i]);
    PhaseStack out = hat;
    for (int i = 0; i < n; ++i) {
        Field dn = nonlinear_term(i, hat, c, img, params, plan.stabilizer());
        for (std::size_t px = 0; px < dn.size(); ++px) dn[px] -= nl[i][px];
        out[i] = plan.add_phi2(hat[i], dn);
    }
    return out;
}

inline PhaseStack step(Scheme scheme, const PhaseStack& u, const RegionMeans& c,
                       const ImageTensor& img, const SpectralPlan& plan,
                       const ModelParams& params) {
    return scheme == Scheme::etd1 ? etd1_step(u, c, img, plan, params)
                                  : etdrk2_step(u, c, img, plan, params);
}

// Fixed number of steps with frozen means; used for time-accuracy studies.
inline PhaseStack advance(PhaseStack u, const RegionMeans& c, const ImageTensor& img,
                          const SpectralPlan& plan, const ModelParams& params, Scheme scheme,
                          int steps) {
    for (int s = 0; s < steps; ++s) u = step(scheme, u, c, img, plan, params);
    return u;
}

// Slack for the [0, 1] bound monitor: violations smaller than this are
// attributed to roundoff.
constexpr double kBoundSlack = 1e-12;

struct SolveReport {
    int iterations = 0;
    double final_delta = 0.0;  // max_i ||step change||_inf at the last step
    bool converged = false;
    int mbp_violations = 0;  // (step, field) events outside [0,1] beyond slack
    // Per-step extrema, indexed [field][step].
    std::vector<std::vector<double>> step_min, step_max;
    // Per-step discrete energy (only when requested; one extra fitting pass
    // per step).
    std::vector<double> energy;
};

// Runs the chosen scheme with frozen means until the step change drops to
// params.tol_steady in the infinity norm or max_inner steps pass. The stack
// is updated in place. Throws SolverError on non-finite iterates.
inline SolveReport solve_to_steady(PhaseStack& u, const RegionMeans& c, const ImageTensor& img,
                                   const SpectralPlan& plan, const ModelParams& params,
                                   Scheme scheme, bool record_energy = false) {
    const int n = u.n();
    SolveReport report;
    report.step_min.assign(n, {});
    report.step_max.assign(n, {});
    if (record_energy) report.energy.push_back(discrete_energy(u, c, img, params));
    for (int it = 0; it < params.max_inner; ++it) {
        PhaseStack next = step(scheme, u, c, img, plan, params);
        double delta = 0.0;
        for (int i = 0; i < n; ++i) {
            const Field& f = next[i];
            if (!field_finite(f))
                throw SolverError("solve_to_steady: non-finite iterate at step " +
                                  std::to_string(it + 1));
            const double mn = field_min(f), mx = field_max(f);
            report.step_min[i].push_back(mn);
            report.step_max[i].push_back(mx);
            if (mn < -kBoundSlack || mx > 1.0 + kBoundSlack) ++report.mbp_violations;
            delta = std::max(delta, inf_norm_diff(f, u[i]));
        }
        u = std::move(next);
        ++report.iterations;
        report.final_delta = delta;
        if (record_energy) report.energy.push_back(discrete_energy(u, c, img, params));
        if (delta <= params.tol_steady) {
            report.converged = true;
            break;
        }
    }
    return report;
}

}  // namespace seg
