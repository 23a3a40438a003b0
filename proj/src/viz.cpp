#include "modadd/viz.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <zlib.h>

namespace modadd {

Rgb class_color(int label, int classes) {
    if (classes < 1 || label < 0 || label >= classes) {
        throw std::invalid_argument("class_color: label out of range");
    }
    // HSV -> RGB with s = 0.75, v = 0.9.
    const double hue = 360.0 * label / classes;
    const double v = 0.9;
    const double s = 0.75;
    const double c = v * s;
    const double h = hue / 60.0;
    const double x = c * (1.0 - std::abs(std::fmod(h, 2.0) - 1.0));
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;
    switch (static_cast<int>(h)) {
        case 0: r = c; g = x; break;
        case 1: r = x; g = c; break;
        case 2: g = c; b = x; break;
        case 3: g = x; b = c; break;
        case 4: r = x; b = c; break;
        default: r = c; b = x; break;
    }
    const double m = v - c;
    auto to_byte = [](double u) { return static_cast<std::uint8_t>(std::lround(std::clamp(u, 0.0, 1.0) * 255.0)); };
    return Rgb{to_byte(r + m), to_byte(g + m), to_byte(b + m)};
}

Bounds padded_bounds(std::span<const LabeledPoint> points, double margin) {
    if (points.empty()) {
        return Bounds{};
    }
    Bounds b{points[0].x, points[0].x, points[0].y, points[0].y};
    for (const LabeledPoint& p : points) {
        b.x_min = std::min(b.x_min, p.x);
        b.x_max = std::max(b.x_max, p.x);
        b.y_min = std::min(b.y_min, p.y);
        b.y_max = std::max(b.y_max, p.y);
    }
    auto widen = [margin](double& lo, double& hi) {
        double extent = hi - lo;
        if (!(extent > 0.0)) {
            extent = 1.0;
            lo -= 0.5;
            hi += 0.5;
        }
        lo -= margin * extent;
        hi += margin * extent;
    };
    widen(b.x_min, b.x_max);
    widen(b.y_min, b.y_max);
    return b;
}

ScatterSpec scatter_spec(const EmbeddingSnapshot& snapshot, std::string title) {
    if (snapshot.cols != 2) {
        throw std::invalid_argument("scatter_spec: snapshot must be 2-dimensional; project it first");
    }
    ScatterSpec spec;
    spec.classes = static_cast<int>(snapshot.rows);
    for (std::size_t i = 0; i < snapshot.rows; ++i) {
        spec.points.push_back({snapshot(i, 0), snapshot(i, 1), static_cast<int>(i)});
    }
    spec.bounds = padded_bounds(spec.points);
    spec.title = std::move(title);
    return spec;
}

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string hex(const Rgb& c) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
    return buf;
}

std::string escape_xml(const std::string& text) {
    std::string out;
    for (char ch : text) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

}  // namespace

std::string render_scatter(const ScatterSpec& spec) {
    const double size = spec.size_px;
    const Bounds& b = spec.bounds;
    const double pad = 20.0;
    const double span_x = b.x_max - b.x_min;
    const double span_y = b.y_max - b.y_min;
    if (!(span_x > 0.0) || !(span_y > 0.0)) {
        throw std::invalid_argument("render_scatter: bounds have zero area");
    }
    // Equal aspect so circles look like circles.
    const double scale = (size - 2.0 * pad) / std::max(span_x, span_y);
    const double off_x = pad + 0.5 * ((size - 2.0 * pad) - scale * span_x);
    const double off_y = pad + 0.5 * ((size - 2.0 * pad) - scale * span_y);
    auto px = [&](double x) { return off_x + (x - b.x_min) * scale; };
    auto py = [&](double y) { return size - off_y - (y - b.y_min) * scale; };

    std::string svg;
    svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + num(size) + "\" height=\"" +
           num(size) + "\" viewBox=\"0 0 " + num(size) + " " + num(size) + "\">\n";
    svg += "<rect x=\"0\" y=\"0\" width=\"" + num(size) + "\" height=\"" + num(size) + "\" fill=\"white\"/>\n";
    if (!spec.title.empty()) {
        svg += "<title>" + escape_xml(spec.title) + "</title>\n";
    }
    svg += "<g class=\"axes\" stroke=\"#999999\" stroke-width=\"1\">\n";
    if (b.y_min <= 0.0 && b.y_max >= 0.0) {
        svg += "<line x1=\"" + num(px(b.x_min)) + "\" y1=\"" + num(py(0.0)) + "\" x2=\"" + num(px(b.x_max)) +
               "\" y2=\"" + num(py(0.0)) + "\"/>\n";
    }
    if (b.x_min <= 0.0 && b.x_max >= 0.0) {
        svg += "<line x1=\"" + num(px(0.0)) + "\" y1=\"" + num(py(b.y_min)) + "\" x2=\"" + num(px(0.0)) +
               "\" y2=\"" + num(py(b.y_max)) + "\"/>\n";
    }
    svg += "</g>\n";
    svg += "<g class=\"points\" font-family=\"sans-serif\" font-size=\"9\" text-anchor=\"middle\">\n";
    for (const LabeledPoint& p : spec.points) {
        const std::string cx = num(px(p.x));
        const std::string cy = num(py(p.y));
        svg += "<circle class=\"marker\" cx=\"" + cx + "\" cy=\"" + cy + "\" r=\"" + num(spec.marker_radius) +
               "\" fill=\"" + hex(class_color(p.label, spec.classes)) + "\" stroke=\"black\" stroke-width=\"0.5\"/>";
        svg += "<text x=\"" + cx + "\" y=\"" + num(py(p.y) + 3.0) + "\">" + std::to_string(p.label) + "</text>\n";
    }
    svg += "</g>\n</svg>\n";
    return svg;
}

Image render_classifier(const RasterSpec& spec) {
    const ClassRaster& raster = spec.raster;
    if (raster.width < 1 || raster.height < 1) {
        throw std::invalid_argument("render_classifier: empty raster");
    }
    if (raster.classes.size() != static_cast<std::size_t>(raster.width) * raster.height) {
        throw std::invalid_argument("render_classifier: raster size does not match its resolution");
    }
    Image image;
    image.width = raster.width;
    image.height = raster.height;
    image.pixels.reserve(raster.classes.size());
    for (int c : raster.classes) {
        image.pixels.push_back(class_color(c, spec.classes));
    }

    const Region& region = raster.region;
    const double col_scale = raster.width / (region.x_max - region.x_min);
    const double row_scale = raster.height / (region.y_max - region.y_min);
    const int radius = std::max(1, spec.marker_radius);
    const int outer = radius + 1;
    for (const LabeledPoint& p : spec.overlay) {
        const double cc = (p.x - region.x_min) * col_scale - 0.5;
        const double cr = (region.y_max - p.y) * row_scale - 0.5;
        const Rgb fill = class_color(p.label, spec.classes);
        const int r0 = static_cast<int>(std::floor(cr)) - outer;
        const int c0 = static_cast<int>(std::floor(cc)) - outer;
        for (int r = std::max(0, r0); r <= std::min(image.height - 1, r0 + 2 * outer + 1); ++r) {
            for (int c = std::max(0, c0); c <= std::min(image.width - 1, c0 + 2 * outer + 1); ++c) {
                const double d = std::hypot(r - cr, c - cc);
                if (d <= radius) {
                    image.pixels[static_cast<std::size_t>(r) * image.width + c] = fill;
                } else if (d <= outer) {
                    image.pixels[static_cast<std::size_t>(r) * image.width + c] = Rgb{0, 0, 0};
                }
            }
        }
        ++image.overlay_markers;
    }
    return image;
}

std::string encode_ppm(const Image& image) {
    std::string out = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
    out.reserve(out.size() + image.pixels.size() * 3);
    for (const Rgb& p : image.pixels) {
        out.push_back(static_cast<char>(p.r));
        out.push_back(static_cast<char>(p.g));
        out.push_back(static_cast<char>(p.b));
    }
    return out;
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>(v & 0xFF));
}

void put_chunk(std::string& out, const char* type, const std::string& payload) {
    put_u32(out, static_cast<std::uint32_t>(payload.size()));
    std::string body(type, 4);
    body += payload;
    out += body;
    put_u32(out, static_cast<std::uint32_t>(
                     crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size()))));
}

}  // namespace

std::string encode_png(const Image& image) {
    std::string raw;
    raw.reserve(static_cast<std::size_t>(image.height) * (1 + 3 * image.width));
    for (int r = 0; r < image.height; ++r) {
        raw.push_back('\0');  // filter: none
        for (int c = 0; c < image.width; ++c) {
            const Rgb& p = image.at(r, c);
            raw.push_back(static_cast<char>(p.r));
            raw.push_back(static_cast<char>(p.g));
            raw.push_back(static_cast<char>(p.b));
        }
    }
    uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
    std::string packed(packed_size, '\0');
    if (compress2(reinterpret_cast<Bytef*>(packed.data()), &packed_size, reinterpret_cast<const Bytef*>(raw.data()),
                  static_cast<uLong>(raw.size()), 9) != Z_OK) {
        throw std::runtime_error("encode_png: zlib compression failed");
    }
    packed.resize(packed_size);

    std::string png("\x89PNG\r\n\x1a\n", 8);
    std::string header;
    put_u32(header, static_cast<std::uint32_t>(image.width));
    put_u32(header, static_cast<std::uint32_t>(image.height));
    header += std::string("\x08\x02\x00\x00\x00", 5);  // 8-bit RGB, no interlace
    put_chunk(png, "IHDR", header);
    put_chunk(png, "IDAT", packed);
    put_chunk(png, "IEND", "");
    return png;
}

std::vector<LabeledPoint> pair_sum_points(const EmbeddingSnapshot& embedding, std::span<const Pair> pairs) {
    if (embedding.cols != 2) {
        throw std::invalid_argument("pair_sum_points: embedding must be 2-dimensional");
    }
    std::vector<LabeledPoint> out;
    for (const PairSum& ps : pair_sums(embedding, pairs)) {
        out.push_back({ps.sum[0], ps.sum[1], ps.label});
    }
    return out;
}

std::vector<std::string> render_projections(const EmbeddingSnapshot& snapshot, int classes, const std::string& title) {
    const int dim = static_cast<int>(snapshot.cols);
    if (dim < 3) {
        throw std::invalid_argument("render_projections: embeddings must have D >= 3, got D = " + std::to_string(dim));
    }
    std::vector<std::string> docs;
    for (const auto& axes : canonical_projections(dim)) {
        ScatterSpec spec = scatter_spec(project_2d(snapshot, axes));
        spec.classes = classes;
        spec.title = title + (title.empty() ? "" : " ") + "dims " + std::to_string(axes.first) + "," +
                     std::to_string(axes.second);
        docs.push_back(render_scatter(spec));
    }
    return docs;
}

}  // namespace modadd
