// Batch segmentation CLI: `seg init|segment|verify --config run.json [overrides]`.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "seg/parallel.hpp"
#include "seg/pipeline.hpp"

namespace {

struct CliOverrides {
    std::optional<std::string> input, output_dir, scheme, mbp_mode;
    std::optional<double> kappa, sigma, epsilon, lambda, h, S, dt, tol_steady, tol_outer;
    std::optional<int> M, m, p, max_inner, max_outer;
    std::optional<std::uint64_t> seed;
    std::vector<int> rescale;  // width height
    bool record_inner_energy = false;
};

void add_override_flags(CLI::App& sub, CliOverrides& ov) {
    sub.add_option("--input", ov.input, "input image path (overrides config)");
    sub.add_option("--output-dir", ov.output_dir, "artifact directory (overrides config)");
    sub.add_option("--scheme", ov.scheme, "time stepper: etd1 or etdrk2");
    sub.add_option("--mbp-mode", ov.mbp_mode, "stabilizer policy: enforce-gamma or user-S");
    sub.add_option("--kappa", ov.kappa, "edge weight sharpness");
    sub.add_option("--sigma", ov.sigma, "edge detection threshold");
    sub.add_option("--M", ov.M, "denoising sweep count");
    sub.add_option("--m", ov.m, "number of phases to extract");
    sub.add_option("--seed", ov.seed, "clustering seed");
    sub.add_option("--epsilon", ov.epsilon, "interface width");
    sub.add_option("--lambda", ov.lambda, "fitting weight");
    sub.add_option("--p", ov.p, "Heaviside smoothing order (odd)");
    sub.add_option("--h", ov.h, "grid spacing");
    sub.add_option("--S", ov.S, "stabilizer constant");
    sub.add_option("--dt", ov.dt, "time step");
    sub.add_option("--tol-steady", ov.tol_steady, "inner stopping tolerance");
    sub.add_option("--max-inner", ov.max_inner, "inner iteration cap");
    sub.add_option("--tol-outer", ov.tol_outer, "outer stopping tolerance");
    sub.add_option("--max-outer", ov.max_outer, "outer iteration cap");
    sub.add_option("--rescale", ov.rescale, "resize input to WIDTH HEIGHT")->expected(2);
    sub.add_flag("--record-inner-energy", ov.record_inner_energy,
                 "log per-step energies (slower)");
}

// Flags override the config by patching the parsed JSON before conversion, so
// the strict key check and validation run on the merged result.
void apply_overrides(nlohmann::json& j, const CliOverrides& ov) {
    if (ov.input) j["input"] = *ov.input;
    if (ov.output_dir) j["output_dir"] = *ov.output_dir;
    if (ov.scheme) j["scheme"] = *ov.scheme;
    if (ov.mbp_mode) j["mbp_mode"] = *ov.mbp_mode;
    if (ov.kappa) j["kappa"] = *ov.kappa;
    if (ov.sigma) j["sigma"] = *ov.sigma;
    if (ov.M) j["M"] = *ov.M;
    if (ov.m) j["m"] = *ov.m;
    if (ov.seed) j["seed"] = *ov.seed;
    if (ov.epsilon) j["epsilon"] = *ov.epsilon;
    if (ov.lambda) j["lambda"] = *ov.lambda;
    if (ov.p) j["p"] = *ov.p;
    if (ov.h) j["h"] = *ov.h;
    if (ov.S) j["S"] = *ov.S;
    if (ov.dt) j["dt"] = *ov.dt;
    if (ov.tol_steady) j["tol_steady"] = *ov.tol_steady;
    if (ov.max_inner) j["max_inner"] = *ov.max_inner;
    if (ov.tol_outer) j["tol_outer"] = *ov.tol_outer;
    if (ov.max_outer) j["max_outer"] = *ov.max_outer;
    if (!ov.rescale.empty()) j["rescale"] = ov.rescale;
    if (ov.record_inner_energy) j["record_inner_energy"] = true;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multiphase image segmentation (phase-field relaxation with spectral stepping)"};
    // Long-form help only: the short -h would collide with the --h grid-step
    // override below.
    app.set_help_flag("--help", "print usage");
    app.require_subcommand(1);

    std::string config_path;
    CliOverrides ov;

    CLI::App* cmd_init =
        app.add_subcommand("init", "compute phase masks and initial fields only");
    CLI::App* cmd_segment = app.add_subcommand("segment", "run the full segmentation");
    CLI::App* cmd_verify =
        app.add_subcommand("verify", "check solver guarantees on the given input");
    for (CLI::App* sub : {cmd_init, cmd_segment, cmd_verify}) {
        sub->set_help_flag("--help", "print usage");
        sub->add_option("--config", config_path, "JSON config file")->required();
        add_override_flags(*sub, ov);
    }

    CLI11_PARSE(app, argc, argv);

    if (const char* threads = std::getenv("SEG_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(threads, &end, 10);
        if (end && *end == '\0' && v >= 1) seg::set_thread_count(static_cast<int>(v));
    }

    seg::RunConfig cfg;
    try {
        nlohmann::json j = seg::load_json_file(config_path);
        apply_overrides(j, ov);
        cfg = seg::parse_config(j);
    } catch (const seg::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return seg::kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return seg::kExitUsage;
    }

    try {
        if (cmd_init->parsed()) return seg::run_init(cfg);
        if (cmd_segment->parsed()) return seg::run_segment(cfg);
        return seg::run_verify(cfg);
    } catch (const seg::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return seg::kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return seg::kExitUsage;
    }
}
