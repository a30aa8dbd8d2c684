// Writes small synthetic test images (clean and noisy) for trying the CLI.
#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "seg/image_io.hpp"
#include "seg/synthetic.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Generate sample images for the segmentation CLI"};
    std::string dir = ".";
    int size = 128;
    double variance = 0.01;
    std::uint64_t seed = 7;
    app.add_option("--dir", dir, "output directory");
    app.add_option("--size", size, "image side length")->check(CLI::PositiveNumber);
    app.add_option("--noise", variance, "Gaussian noise variance for the noisy variants");
    app.add_option("--seed", seed, "noise seed");
    CLI11_PARSE(app, argc, argv);

    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const fs::path base(dir);

    const seg::LabeledImage blocks = seg::blocks_image(size, size);
    const seg::LabeledImage shapes = seg::shapes_image(size, size);
    seg::save_png_gray((base / "blocks.png").string(), blocks.image.channel(0));
    seg::save_png_gray((base / "shapes.png").string(), shapes.image.channel(0));
    seg::save_png_gray((base / "blocks_noisy.png").string(),
                       seg::add_gaussian_noise(blocks.image, variance, seed).channel(0));
    seg::save_png_gray((base / "shapes_noisy.png").string(),
                       seg::add_gaussian_noise(shapes.image, variance, seed + 1).channel(0));
    std::cout << "wrote blocks.png, shapes.png and noisy variants to " << dir << '\n';
    return 0;
}
