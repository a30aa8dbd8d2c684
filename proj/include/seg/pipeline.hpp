#pragma once

#include <json.hpp>

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "seg/dense_check.hpp"
#include "seg/driver.hpp"
#include "seg/image_io.hpp"
#include "seg/init.hpp"
#include "seg/model.hpp"
#include "seg/params.hpp"

namespace seg {

// Process exit codes shared by every subcommand.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 2,        // bad flags or config
    kExitIo = 3,           // unreadable input or unwritable output
    kExitNoEdges = 4,      // edge detection found nothing to cluster
    kExitNonFinite = 5,    // solver produced a non-finite iterate
    kExitNotConverged = 6, // outer loop hit max_outer
    kExitVerifyFailed = 7, // a verify property failed
};

struct RunConfig {
    std::string input;
    std::string output_dir = "out";
    InitParams init;
    ModelParams model;
    Scheme scheme = Scheme::etdrk2;
    std::optional<std::pair<int, int>> rescale;  // (rows, cols)
    bool record_inner_energy = false;
};

// ---------------------------------------------------------------------------
// Config parsing. Keys follow the math symbols: epsilon, lambda, p, h, S, dt,
// kappa, sigma, M, m. Unknown keys are rejected so typos fail loudly.
// ---------------------------------------------------------------------------

inline RunConfig parse_config(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
    static const std::vector<std::string> known = {
        "input",     "output_dir", "kappa",     "sigma",      "M",
        "m",         "seed",       "epsilon",   "lambda",     "p",
        "h",         "S",          "dt",        "tol_steady", "max_inner",
        "tol_outer", "max_outer",  "scheme",    "mbp_mode",   "rescale",
        "record_inner_energy"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw std::invalid_argument("config: unknown key \"" + it.key() + "\"");
    }
    RunConfig cfg;
    auto need = [&](const char* key) {
        if (!j.contains(key)) throw std::invalid_argument(std::string("config: missing \"") + key + "\"");
        return j.at(key);
    };
    cfg.input = need("input").get<std::string>();
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();

    if (j.contains("kappa")) cfg.init.kappa = j.at("kappa").get<double>();
    if (j.contains("sigma")) cfg.init.sigma = j.at("sigma").get<double>();
    if (j.contains("M")) cfg.init.repetitions = j.at("M").get<int>();
    if (j.contains("m")) cfg.init.phases = j.at("m").get<int>();
    if (j.contains("seed")) cfg.init.seed = j.at("seed").get<std::uint64_t>();

    if (j.contains("epsilon")) cfg.model.epsilon = j.at("epsilon").get<double>();
    if (j.contains("lambda")) cfg.model.lambda = j.at("lambda").get<double>();
    if (j.contains("p")) cfg.model.p = j.at("p").get<int>();
    if (j.contains("h")) cfg.model.h = j.at("h").get<double>();
    if (j.contains("S")) cfg.model.S = j.at("S").get<double>();
    if (j.contains("dt")) cfg.model.dt = j.at("dt").get<double>();
    if (j.contains("tol_steady")) cfg.model.tol_steady = j.at("tol_steady").get<double>();
    if (j.contains("max_inner")) cfg.model.max_inner = j.at("max_inner").get<int>();
    if (j.contains("tol_outer")) cfg.model.tol_outer = j.at("tol_outer").get<double>();
    if (j.contains("max_outer")) cfg.model.max_outer = j.at("max_outer").get<int>();
    if (j.contains("scheme")) cfg.scheme = scheme_from_string(j.at("scheme").get<std::string>());
    if (j.contains("mbp_mode"))
        cfg.model.mbp_mode = stabilizer_mode_from_string(j.at("mbp_mode").get<std::string>());
    if (j.contains("record_inner_energy"))
        cfg.record_inner_energy = j.at("record_inner_energy").get<bool>();

    if (j.contains("rescale")) {
        const auto& r = j.at("rescale");
        if (!r.is_array() || r.size() != 2)
            throw std::invalid_argument("config: rescale must be [width, height]");
        const int w = r.at(0).get<int>(), h = r.at(1).get<int>();
        if (w < 1 || h < 1) throw std::invalid_argument("config: rescale values must be positive");
        cfg.rescale = std::make_pair(h, w);  // stored as (rows, cols)
    }

    cfg.init.validate();
    cfg.model.validate();
    return cfg;
}

inline nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path + ": cannot open config");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(path + ": invalid JSON (" + e.what() + ")");
    }
    return j;
}

// ---------------------------------------------------------------------------
// Artifact writers
// ---------------------------------------------------------------------------

// Fixed label palette (RGB). Labels beyond 8 cycle.
inline constexpr std::array<std::array<unsigned char, 3>, 8> kLabelPalette = {{
    {0, 0, 0},        // 0: black
    {230, 25, 75},    // 1: red
    {60, 180, 75},    // 2: green
    {0, 130, 200},    // 3: blue
    {255, 225, 25},   // 4: yellow
    {240, 50, 230},   // 5: magenta
    {70, 240, 240},   // 6: cyan
    {255, 255, 255},  // 7: white
}};

// Contour overlay colors per phase field.
inline constexpr std::array<std::array<unsigned char, 3>, 4> kContourColors = {{
    {0, 255, 0},    // field 1: green
    {255, 0, 0},    // field 2: red
    {0, 128, 255},  // field 3: blue
    {255, 255, 0},  // field 4: yellow
}};

inline void write_labels_png(const std::string& path, const LabelMap& labels) {
    std::vector<unsigned char> rgb(labels.size() * 3);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto& color = kLabelPalette[labels[i] % kLabelPalette.size()];
        rgb[3 * i] = color[0];
        rgb[3 * i + 1] = color[1];
        rgb[3 * i + 2] = color[2];
    }
    save_png_rgb(path, rgb, labels.rows(), labels.cols());
}

inline void write_contours_png(const std::string& path, const ImageTensor& img,
                               const std::vector<Mask>& contours) {
    std::vector<unsigned char> rgb(img.pixels() * 3);
    for (std::size_t px = 0; px < img.pixels(); ++px) {
        for (int k = 0; k < 3; ++k) {
            const double v = img.channels() == 3 ? img.pixel(px)[k] : img.pixel(px)[0];
            rgb[3 * px + k] = quantize_byte(v);
        }
    }
    for (std::size_t i = 0; i < contours.size(); ++i) {
        const auto& color = kContourColors[i % kContourColors.size()];
        const Mask& m = contours[i];
        for (std::size_t px = 0; px < m.size(); ++px) {
            if (!m[px]) continue;
            rgb[3 * px] = color[0];
            rgb[3 * px + 1] = color[1];
            rgb[3 * px + 2] = color[2];
        }
    }
    save_png_rgb(path, rgb, img.rows(), img.cols());
}

inline void write_energy_csv(const std::string& path, const RunTrace& trace) {
    std::ofstream out(path);
    if (!out) throw IoError(path + ": cannot open for writing");
    out << "outer,stage,energy,u_min,u_max,inner_iterations\n";
    out.precision(17);
    for (const auto& rec : trace.outers) {
        out << rec.index << ",start," << rec.energy_start << ',' << rec.u_min_start << ','
            << rec.u_max_start << ",0\n";
        out << rec.index << ",after_phase," << rec.energy_after_u << ',' << rec.u_min_end << ','
            << rec.u_max_end << ',' << rec.report.iterations << '\n';
        out << rec.index << ",after_means," << rec.energy_after_c << ',' << rec.u_min_end << ','
            << rec.u_max_end << ',' << rec.report.iterations << '\n';
    }
}

inline std::string code_string(int code, int n) {
    std::string s(n, '0');
    for (int i = 0; i < n; ++i)
        if (code_bit(code, i, n)) s[i] = '1';
    return s;
}

inline nlohmann::json summary_to_json(const AdmmResult& result, Scheme scheme,
                                      double wall_seconds) {
    nlohmann::json j;
    j["converged"] = result.trace.converged;
    j["scheme"] = to_string(scheme);
    j["outer_iterations"] = result.trace.outers.size();
    j["inner_iterations_total"] = result.trace.total_inner();
    j["gamma"] = result.trace.stabilizer_floor;
    j["S_effective"] = result.trace.effective_stabilizer;
    j["mbp_violations"] = result.trace.total_mbp_violations();
    int warnings = result.trace.initial_mean_warnings;
    for (const auto& rec : result.trace.outers) warnings += rec.mean_warnings;
    j["mean_warnings"] = warnings;
    j["final_step_change"] =
        result.trace.outers.empty() ? 0.0 : result.trace.outers.back().step_change;
    j["energy_final"] =
        result.trace.outers.empty() ? 0.0 : result.trace.outers.back().energy_after_c;
    j["wall_time_seconds"] = wall_seconds;

    const int n = result.c.n;
    nlohmann::json means = nlohmann::json::object();
    for (int code = 0; code < result.c.codes(); ++code) {
        nlohmann::json channels = nlohmann::json::array();
        for (int k = 0; k < result.c.channels; ++k) channels.push_back(result.c.at(code, k));
        means[code_string(code, n)] = channels;
    }
    j["C"] = means;

    std::vector<std::int64_t> histogram(static_cast<std::size_t>(1) << n, 0);
    for (std::size_t px = 0; px < result.labels.size(); ++px) ++histogram[result.labels[px]];
    j["label_histogram"] = histogram;
    return j;
}

// ---------------------------------------------------------------------------
// Subcommands. Each returns a process exit code instead of throwing, keeping
// the CLI glue trivial; unexpected exceptions still propagate.
// ---------------------------------------------------------------------------

inline int run_init(const RunConfig& cfg, std::ostream& log = std::cout) {
    ImageTensor img;
    try {
        img = load_image(cfg.input, cfg.rescale);
    } catch (const IoError& e) {
        log << "error: " << e.what() << '\n';
        return kExitIo;
    }
    std::vector<Mask> masks;
    try {
        masks = init_phase_masks(img, cfg.init);
    } catch (const NoEdgesError& e) {
        log << "error: " << e.what() << '\n';
        return kExitNoEdges;
    }
    const PhaseStack u0 = combine_phases(masks);

    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);
    for (std::size_t i = 0; i < masks.size(); ++i) {
        Field f(masks[i].rows(), masks[i].cols());
        for (std::size_t px = 0; px < f.size(); ++px) f[px] = masks[i][px] ? 1.0 : 0.0;
        save_png_gray((fs::path(cfg.output_dir) / ("mask_" + std::to_string(i + 1) + ".png")).string(), f);
    }
    for (int i = 0; i < u0.n(); ++i)
        save_png_gray((fs::path(cfg.output_dir) / ("u0_" + std::to_string(i + 1) + ".png")).string(),
                      u0[i]);
    log << "wrote " << masks.size() << " masks and " << u0.n() << " initial fields to "
        << cfg.output_dir << '\n';
    return kExitOk;
}

inline int run_segment(const RunConfig& cfg, std::ostream& log = std::cout) {
    ImageTensor img;
    try {
        img = load_image(cfg.input, cfg.rescale);
    } catch (const IoError& e) {
        log << "error: " << e.what() << '\n';
        return kExitIo;
    }

    const auto t0 = std::chrono::steady_clock::now();
    AdmmResult result;
    try {
        const std::vector<Mask> masks = init_phase_masks(img, cfg.init);
        result = admm_solve(img, combine_phases(masks), cfg.model, cfg.scheme,
                            cfg.record_inner_energy);
    } catch (const NoEdgesError& e) {
        log << "error: " << e.what() << '\n';
        return kExitNoEdges;
    } catch (const SolverError& e) {
        log << "error: " << e.what() << '\n';
        return kExitNonFinite;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);
    const fs::path dir(cfg.output_dir);
    write_labels_png((dir / "labels.png").string(), result.labels);
    write_contours_png((dir / "contours.png").string(), img, extract_contours(result.u));
    for (int i = 0; i < result.u.n(); ++i)
        save_png_gray((dir / ("u_" + std::to_string(i + 1) + ".png")).string(), result.u[i]);
    write_energy_csv((dir / "energy.csv").string(), result.trace);
    {
        std::ofstream out(dir / "summary.json");
        if (!out) throw IoError((dir / "summary.json").string() + ": cannot open for writing");
        out << summary_to_json(result, cfg.scheme, wall).dump(2) << '\n';
    }

    log << (result.trace.converged ? "converged" : "stopped at max_outer") << " after "
        << result.trace.outers.size() << " outer / " << result.trace.total_inner()
        << " inner iterations; artifacts in " << cfg.output_dir << '\n';
    return result.trace.converged ? kExitOk : kExitNotConverged;
}

inline int run_verify(const RunConfig& cfg, std::ostream& log = std::cout) {
    ImageTensor img;
    try {
        img = load_image(cfg.input, cfg.rescale);
    } catch (const IoError& e) {
        log << "error: " << e.what() << '\n';
        return kExitIo;
    }
    bool all_ok = true;
    auto report = [&](const char* name, bool ok, const std::string& detail) {
        log << (ok ? "PASS" : "FAIL") << ' ' << name << " (" << detail << ")\n";
        all_ok = all_ok && ok;
    };

    // Spectral application versus the dense eigendecomposition oracle on the
    // top-left crop of the image.
    {
        const int R = std::min(8, img.rows()), C = std::min(8, img.cols());
        Field crop(R, C);
        for (int r = 0; r < R; ++r)
            for (int c = 0; c < C; ++c) crop(r, c) = img.at(r, c, 0);
        const double s_eff = effective_stabilizer(cfg.model, img.channels());
        const SpectralPlan plan(R, C, cfg.model.h, s_eff, cfg.model.epsilon, cfg.model.dt);
        const DensePhiOracle oracle(R, C, cfg.model.h, s_eff, cfg.model.epsilon, cfg.model.dt);
        double err = 0.0;
        for (int jphi = 0; jphi < 3; ++jphi)
            err = std::max(err, inf_norm_diff(plan.apply_phi(jphi, crop), oracle.apply(jphi, crop)));
        std::ostringstream det;
        det << "max deviation " << err;
        report("spectral operator matches dense oracle", err <= 1e-10, det.str());
    }

    // Bound preservation and energy decay with the stabilizer raised to its
    // proven floor, on a shortened run.
    try {
        RunConfig safe = cfg;
        safe.model.mbp_mode = StabilizerMode::enforce_bound;
        safe.model.max_outer = std::min(safe.model.max_outer, 2);
        safe.model.max_inner = std::min(safe.model.max_inner, 60);
        const std::vector<Mask> masks = init_phase_masks(img, safe.init);
        const AdmmResult result =
            admm_solve(img, combine_phases(masks), safe.model, safe.scheme, true);

        double lo = 0.0, hi = 1.0;
        for (const auto& rec : result.trace.outers) {
            for (const auto& per_field : rec.report.step_min)
                for (double v : per_field) lo = std::min(lo, v);
            for (const auto& per_field : rec.report.step_max)
                for (double v : per_field) hi = std::max(hi, v);
        }
        std::ostringstream det;
        det << "min " << lo << ", max " << hi << ", violations "
            << result.trace.total_mbp_violations();
        report("phase fields stay inside [0,1] with enforced stabilizer",
               result.trace.total_mbp_violations() == 0 && lo >= -kBoundSlack &&
                   hi <= 1.0 + kBoundSlack,
               det.str());

        bool monotone = true;
        double worst = 0.0;
        auto check_pair = [&](double before, double after) {
            const double slack = 1e-10 * (1.0 + std::abs(before));
            if (after > before + slack) {
                monotone = false;
                worst = std::max(worst, after - before);
            }
        };
        for (const auto& rec : result.trace.outers) {
            for (std::size_t s = 1; s < rec.report.energy.size(); ++s)
                check_pair(rec.report.energy[s - 1], rec.report.energy[s]);
            check_pair(rec.energy_start, rec.energy_after_u);
            check_pair(rec.energy_after_u, rec.energy_after_c);
        }
        std::ostringstream det2;
        det2 << (monotone ? "nonincreasing" : "increase of " + std::to_string(worst));
        report("discrete energy is nonincreasing with enforced stabilizer", monotone, det2.str());
    } catch (const NoEdgesError& e) {
        log << "error: " << e.what() << '\n';
        return kExitNoEdges;
    } catch (const SolverError& e) {
        log << "error: " << e.what() << '\n';
        return kExitNonFinite;
    }

    log << (all_ok ? "all properties hold" : "one or more properties FAILED") << '\n';
    return all_ok ? kExitOk : kExitVerifyFailed;
}

}  // namespace seg
