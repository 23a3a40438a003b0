#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <string>

#include "modadd/dataset.hpp"
#include "modadd/model.hpp"
#include "modadd/rng.hpp"
#include "modadd/viz.hpp"

using namespace modadd;

namespace {

std::size_t count_of(const std::string& haystack, const std::string& needle) {
    std::size_t n = 0;
    for (std::size_t pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) {
        ++n;
    }
    return n;
}

Matrix random_embedding(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    CounterRng rng(seed);
    Matrix m(rows, cols);
    for (double& v : m.data) {
        v = rng.normal();
    }
    return m;
}

}  // namespace

TEST_CASE("class colors are distinct and stable") {
    for (int a = 0; a < 17; ++a) {
        CHECK(class_color(a, 17) == class_color(a, 17));
        for (int b = a + 1; b < 17; ++b) {
            CHECK_FALSE(class_color(a, 17) == class_color(b, 17));
        }
    }
    const Rgb red = class_color(0, 17);
    CHECK(red.r > red.g);
    CHECK(red.g == red.b);
    CHECK_THROWS_AS(class_color(17, 17), std::invalid_argument);
    CHECK_THROWS_AS(class_color(-1, 17), std::invalid_argument);
}

TEST_CASE("scatter has one marker per token and is reproducible") {
    const Matrix e = random_embedding(17, 2, 3);
    const std::string svg = render_scatter(scatter_spec(e, "epoch 0"));
    CHECK(svg.rfind("<?xml", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(count_of(svg, "class=\"marker\"") == 17);
    CHECK(svg.find("epoch 0") != std::string::npos);
    CHECK(render_scatter(scatter_spec(e, "epoch 0")) == svg);
    CHECK_THROWS_AS(scatter_spec(random_embedding(17, 3, 3)), std::invalid_argument);
}

TEST_CASE("scatter with no points is still a valid document") {
    ScatterSpec spec;
    const std::string svg = render_scatter(spec);
    CHECK(count_of(svg, "class=\"marker\"") == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("padded bounds contain every point") {
    const std::vector<LabeledPoint> pts{{-2.0, 1.0, 0}, {3.0, 5.0, 1}};
    const Bounds b = padded_bounds(pts);
    CHECK(b.x_min == doctest::Approx(-2.5));
    CHECK(b.x_max == doctest::Approx(3.5));
    CHECK(b.y_min == doctest::Approx(0.6));
    CHECK(b.y_max == doctest::Approx(5.4));
    const std::vector<LabeledPoint> single{{1.0, 1.0, 0}};
    const Bounds s = padded_bounds(single);
    CHECK(s.x_max > s.x_min);
    CHECK(s.y_max > s.y_min);
}

TEST_CASE("a single-class raster renders in one color") {
    RasterSpec spec;
    spec.raster.width = 8;
    spec.raster.height = 5;
    spec.raster.classes.assign(40, 4);
    const Image img = render_classifier(spec);
    CHECK(img.width == 8);
    CHECK(img.height == 5);
    for (const Rgb& p : img.pixels) {
        CHECK(p == class_color(4, 17));
    }
    spec.raster.classes.pop_back();
    CHECK_THROWS_AS(render_classifier(spec), std::invalid_argument);
}

TEST_CASE("classifier image for a trained-shape model") {
    ModelConfig cfg;
    const ModelParams params = init_params(cfg, 5);
    const Region region{-3.0, 3.0, -3.0, 3.0};
    RasterSpec spec;
    spec.raster = classifier_map(params, region, 256);
    spec.overlay = pair_sum_points(params.embedding, enumerate_pairs(17));
    const Image img = render_classifier(spec);
    CHECK(img.overlay_markers == 153);
    const std::string ppm = encode_ppm(img);
    const std::string header = "P6\n256 256\n255\n";
    REQUIRE(ppm.size() == header.size() + 256 * 256 * 3);
    CHECK(ppm.compare(0, header.size(), header) == 0);
    // Background pixels far from all overlay points carry the class color of the raster cell.
    const Rgb corner = img.at(0, 0);
    bool matches_some_class = false;
    for (int c = 0; c < 17; ++c) {
        matches_some_class = matches_some_class || corner == class_color(c, 17);
    }
    CHECK(matches_some_class);
    const std::string png = encode_png(img);
    CHECK(png.compare(0, 8, std::string("\x89PNG\r\n\x1a\n", 8)) == 0);
    CHECK(png.size() < ppm.size());
}

TEST_CASE("overlay point colors follow the modular class") {
    Matrix e(17, 2);
    for (int i = 0; i < 17; ++i) {
        e(static_cast<std::size_t>(i), 0) = std::cos(2.0 * M_PI * i / 17.0);
        e(static_cast<std::size_t>(i), 1) = std::sin(2.0 * M_PI * i / 17.0);
    }
    const auto pairs = enumerate_pairs(17);
    const auto pts = pair_sum_points(e, pairs);
    REQUIRE(pts.size() == pairs.size());
    for (std::size_t k = 0; k < pts.size(); ++k) {
        CHECK(pts[k].label == (pairs[k].a + pairs[k].b) % 17);
        CHECK(pts[k].x == doctest::Approx(e(static_cast<std::size_t>(pairs[k].a), 0) +
                                          e(static_cast<std::size_t>(pairs[k].b), 0)));
    }
}

TEST_CASE("projections produce three panels for higher dimensions") {
    for (std::size_t dim : {3u, 4u}) {
        const auto docs = render_projections(random_embedding(17, dim, dim), 17, "final");
        REQUIRE(docs.size() == 3);
        for (const std::string& svg : docs) {
            CHECK(count_of(svg, "class=\"marker\"") == 17);
        }
    }
    CHECK_THROWS_AS(render_projections(random_embedding(17, 2, 1), 17), std::invalid_argument);
}
