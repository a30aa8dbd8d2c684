#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "seg/etd.hpp"
#include "seg/grid.hpp"
#include "seg/image.hpp"
#include "seg/model.hpp"
#include "seg/params.hpp"

namespace seg {

using LabelMap = Grid2D<std::uint16_t>;

// Region code per pixel: bit i of the label is (u_i > 1/2), field 0 giving
// the most significant bit. Pixels sitting exactly at 1/2 take bit 0.
inline LabelMap extract_labels(const PhaseStack& u) {
    if (u.n() < 1) throw std::invalid_argument("extract_labels: empty stack");
    LabelMap labels(u.rows(), u.cols(), 0);
    const int n = u.n();
    for (std::size_t px = 0; px < labels.size(); ++px) {
        int code = 0;
        for (int i = 0; i < n; ++i)
            if (u[i][px] > 0.5) code |= 1 << (n - 1 - i);
        labels[px] = static_cast<std::uint16_t>(code);
    }
    return labels;
}

// Per-field interface masks: pixels whose thresholded value differs from at
// least one 4-neighbor, so both sides of each interface are marked.
inline std::vector<Mask> extract_contours(const PhaseStack& u) {
    const int n = u.n();
    if (n < 1) throw std::invalid_argument("extract_contours: empty stack");
    const int R = u.rows(), C = u.cols();
    std::vector<Mask> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        Mask contour(R, C, 0);
        const Field& f = u[i];
        auto bit = [&](int r, int c) { return f(r, c) > 0.5; };
        for (int r = 0; r < R; ++r)
            for (int c = 0; c < C; ++c) {
                const bool b = bit(r, c);
                const bool edge = (r > 0 && bit(r - 1, c) != b) || (r + 1 < R && bit(r + 1, c) != b) ||
                                  (c > 0 && bit(r, c - 1) != b) || (c + 1 < C && bit(r, c + 1) != b);
                contour(r, c) = edge ? 1 : 0;
            }
        out.push_back(std::move(contour));
    }
    return out;
}

// Same, decoding the per-field bits from a label map.
inline std::vector<Mask> extract_contours(const LabelMap& labels, int n) {
    if (n < 1 || n > kMaxPhaseFields) throw std::invalid_argument("extract_contours: bad n");
    PhaseStack u(n, labels.rows(), labels.cols(), 0.0);
    for (std::size_t px = 0; px < labels.size(); ++px)
        for (int i = 0; i < n; ++i)
            if (code_bit(labels[px], i, n)) u[i][px] = 1.0;
    return extract_contours(u);
}

// Record of one outer iteration: the energy before the phase solve, after it,
// and after the mean update, plus the inner solver report.
struct OuterRecord {
    int index = 0;
    double energy_start = 0.0;
    double energy_after_u = 0.0;
    double energy_after_c = 0.0;
    SolveReport report;
    int label_changes = 0;   // pixels whose label differs from the previous outer
    int mean_warnings = 0;   // region codes kept at their previous mean
    double step_change = 0.0;  // max_i ||u^k+1 - u^k||_inf over the outer step
    // Stack extrema at the round's start and end (the mean update leaves u
    // untouched, so the end values also hold after it).
    double u_min_start = 0.0, u_max_start = 0.0;
    double u_min_end = 0.0, u_max_end = 0.0;
};

struct RunTrace {
    std::vector<OuterRecord> outers;
    bool converged = false;
    double effective_stabilizer = 0.0;
    double stabilizer_floor = 0.0;  // the proven bound for these parameters
    int initial_mean_warnings = 0;

    int total_inner() const {
        int s = 0;
        for (const auto& o : outers) s += o.report.iterations;
        return s;
    }
    int total_mbp_violations() const {
        int s = 0;
        for (const auto& o : outers) s += o.report.mbp_violations;
        return s;
    }
};

struct AdmmResult {
    PhaseStack u;
    RegionMeans c;
    LabelMap labels;
    RunTrace trace;
};

// Alternating minimization: from the initial stack, repeatedly relax the
// phase fields to a steady state with frozen means, then refit the means.
// Stops when the outer step change drops below tol_outer, when the label map
// repeats, or after max_outer rounds. Energies are recorded at three
// checkpoints per round; per-step energies inside the relaxation are recorded
// when record_energy is set.
inline AdmmResult admm_solve(const ImageTensor& img, PhaseStack u0, const ModelParams& params,
                             Scheme scheme, bool record_energy = false) {
    params.validate();
    img.validate();
    detail::check_stack_image(u0, img);

    ModelParams run = params;
    run.S = effective_stabilizer(params, img.channels());
    run.mbp_mode = StabilizerMode::user_value;  // already resolved into run.S

    AdmmResult result;
    result.trace.effective_stabilizer = run.S;
    result.trace.stabilizer_floor =
        params.lambda > 0.0
            ? stabilizer_bound(params.epsilon, params.lambda, img.channels(), params.eps1())
            : 2.0 / params.epsilon;

    const SpectralPlan plan(img.rows(), img.cols(), run.h, run.S, run.epsilon, run.dt);

    result.u = std::move(u0);
    int stale = 0;
    result.c = update_means(result.u, img, run.eps1(), nullptr, &stale);
    result.trace.initial_mean_warnings = stale;
    LabelMap prev_labels = extract_labels(result.u);

    auto stack_extrema = [](const PhaseStack& u, double& mn, double& mx) {
        mn = field_min(u[0]);
        mx = field_max(u[0]);
        for (int i = 1; i < u.n(); ++i) {
            mn = std::min(mn, field_min(u[i]));
            mx = std::max(mx, field_max(u[i]));
        }
    };

    for (int k = 0; k < run.max_outer; ++k) {
        OuterRecord rec;
        rec.index = k;
        rec.energy_start = discrete_energy(result.u, result.c, img, run);
        stack_extrema(result.u, rec.u_min_start, rec.u_max_start);

        PhaseStack prev_u = result.u;
        rec.report = solve_to_steady(result.u, result.c, img, plan, run, scheme, record_energy);
        rec.energy_after_u = discrete_energy(result.u, result.c, img, run);
        stack_extrema(result.u, rec.u_min_end, rec.u_max_end);

        result.c = update_means(result.u, img, run.eps1(), &result.c, &stale);
        rec.mean_warnings = stale;
        rec.energy_after_c = discrete_energy(result.u, result.c, img, run);

        double du = 0.0;
        for (int i = 0; i < result.u.n(); ++i)
            du = std::max(du, inf_norm_diff(result.u[i], prev_u[i]));
        rec.step_change = du;

        LabelMap labels = extract_labels(result.u);
        int changes = 0;
        for (std::size_t px = 0; px < labels.size(); ++px) changes += labels[px] != prev_labels[px];
        rec.label_changes = changes;
        prev_labels = std::move(labels);

        result.trace.outers.push_back(std::move(rec));

        if (du <= run.tol_outer || changes == 0) {
            result.trace.converged = true;
            break;
        }
    }

    result.labels = std::move(prev_labels);
    return result;
}

}  // namespace seg
