#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace seg {

enum class Scheme { etd1, etdrk2 };

// How the stabilizer S is chosen before time stepping:
//  - enforce_bound: raise S to the proven maximum-bound-preserving threshold
//    if the configured value falls short (safe, slow for strong fitting).
//  - user_value: take S as configured and only monitor bound violations.
enum class StabilizerMode { enforce_bound, user_value };

inline std::string to_string(Scheme s) { return s == Scheme::etd1 ? "etd1" : "etdrk2"; }

inline Scheme scheme_from_string(const std::string& s) {
    if (s == "etd1") return Scheme::etd1;
    if (s == "etdrk2") return Scheme::etdrk2;
    throw std::invalid_argument("unknown scheme: " + s);
}

inline std::string to_string(StabilizerMode m) {
    return m == StabilizerMode::enforce_bound ? "enforce-gamma" : "user-S";
}

inline StabilizerMode stabilizer_mode_from_string(const std::string& s) {
    if (s == "enforce-gamma") return StabilizerMode::enforce_bound;
    if (s == "user-S") return StabilizerMode::user_value;
    throw std::invalid_argument("unknown mbp_mode: " + s);
}

// Phase-field model and solver parameters.
//
//   epsilon  interface width of the double-well term
//   lambda   weight of the data fitting term
//   p        odd integer >= 3; the Heaviside/Dirac smoothing radius is 1/(2p)
//   h        grid spacing
//   S        stabilizer added to both sides of the evolution equation
//   dt       time step of the exponential integrator
struct ModelParams {
    double epsilon = 4.0;
    double lambda = 40.0;
    int p = 3;
    double h = 1.0;
    double S = 120.0;
    double dt = 0.3;

    double tol_steady = 1e-4;
    int max_inner = 500;
    double tol_outer = 1e-3;
    int max_outer = 50;
    StabilizerMode mbp_mode = StabilizerMode::user_value;

    double eps1() const { return 1.0 / (2.0 * p); }

    void validate() const {
        if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
        if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be nonnegative");
        if (p < 3 || p % 2 == 0) throw std::invalid_argument("p must be an odd integer >= 3");
        if (!(h > 0.0)) throw std::invalid_argument("h must be positive");
        if (!(S > 0.0)) throw std::invalid_argument("S must be positive");
        if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
        if (!(tol_steady > 0.0)) throw std::invalid_argument("tol_steady must be positive");
        if (max_inner < 1) throw std::invalid_argument("max_inner must be at least 1");
        if (!(tol_outer > 0.0)) throw std::invalid_argument("tol_outer must be positive");
        if (max_outer < 1) throw std::invalid_argument("max_outer must be at least 1");
    }
};

// Initialization (edge detection + clustering) parameters.
//
//   kappa        sharpness of the neighbor weights
//   sigma        edge threshold on |L|
//   repetitions  denoise sweep count M
//   phases       number of regions m (the phase count n is ceil(log2 m))
struct InitParams {
    double kappa = 50.0;
    double sigma = 0.05;
    int repetitions = 1;
    int phases = 4;
    std::uint64_t seed = 1;

    void validate() const {
        if (!(kappa >= 0.0)) throw std::invalid_argument("kappa must be nonnegative");
        if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be nonnegative");
        if (repetitions < 0) throw std::invalid_argument("repetitions must be nonnegative");
        if (phases < 2) throw std::invalid_argument("phases must be at least 2");
    }
};

// Number of phase fields needed to code `m` regions: n = ceil(log2 m).
inline int phase_count(int m) {
    if (m < 2) throw std::invalid_argument("phase_count: need at least 2 regions");
    int n = 0;
    while ((1 << n) < m) ++n;
    return n < 1 ? 1 : n;
}

}  // namespace seg
