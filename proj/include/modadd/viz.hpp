#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "modadd/analysis.hpp"
#include "modadd/model.hpp"

namespace modadd {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    bool operator==(const Rgb&) const = default;
};

// Color of class `label` out of `classes`: hue 360 * label / classes, fixed saturation/value.
// Shared by scatter plots, raster backgrounds and overlay markers.
Rgb class_color(int label, int classes);

struct LabeledPoint {
    double x = 0.0;
    double y = 0.0;
    int label = 0;
};

struct Bounds {
    double x_min = -1.0;
    double x_max = 1.0;
    double y_min = -1.0;
    double y_max = 1.0;
};

// Tight bounding box expanded by `margin` of its extent on each side (unit box around the
// origin when there are no points; a degenerate extent is widened to 1).
Bounds padded_bounds(std::span<const LabeledPoint> points, double margin = 0.1);

struct ScatterSpec {
    std::vector<LabeledPoint> points;
    int classes = 17;
    Bounds bounds;
    double marker_radius = 6.0;
    int size_px = 400;
    std::string title;
};

ScatterSpec scatter_spec(const EmbeddingSnapshot& snapshot, std::string title = {});

// Standalone SVG 1.1: axes through the origin and one labeled <circle class="marker"> per point.
std::string render_scatter(const ScatterSpec& spec);

struct RasterSpec {
    ClassRaster raster;
    int classes = 17;
    std::vector<LabeledPoint> overlay;  // pair sums, labeled by modular class
    int marker_radius = 3;
};

struct Image {
    int width = 0;
    int height = 0;
    std::vector<Rgb> pixels;  // row-major, top row first
    std::size_t overlay_markers = 0;

    Rgb at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
};

// One pixel per raster cell in the class color; overlay markers are discs in their class color
// with a black outline, clipped to the image.
Image render_classifier(const RasterSpec& spec);

// Binary PPM: "P6\n<width> <height>\n255\n" followed by RGB triples.
std::string encode_ppm(const Image& image);

// Compressed PNG (RGB, 8 bit) for viewing.
std::string encode_png(const Image& image);

// Pair-sum overlay points for a classifier plot.
std::vector<LabeledPoint> pair_sum_points(const EmbeddingSnapshot& embedding, std::span<const Pair> pairs);

// Three scatter documents over canonical_projections(D). Throws for D outside {3, 4}.
std::vector<std::string> render_projections(const EmbeddingSnapshot& snapshot, int classes,
                                            const std::string& title = {});

}  // namespace modadd
