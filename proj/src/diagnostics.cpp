#include "mock3d/diagnostics.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>
#include <stdexcept>

#include "mock3d/error.hpp"
#include "mock3d/image_io.hpp"

namespace mock3d::field {

double ScalarMap::max_abs() const {
    double m = 0.0;
    for (std::size_t i = 0; i < value.size(); ++i) {
        if (valid[i]) m = std::max(m, std::abs(value[i]));
    }
    return m;
}

double ScalarMap::mean() const {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < value.size(); ++i) {
        if (valid[i]) {
            sum += value[i];
            ++count;
        }
    }
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

ScalarMap curl_map(const ShapeMap& map) {
    const int w = map.width();
    const int h = map.height();
    ScalarMap out{ScalarRaster(w, h), MaskRaster(w, h)};
    auto covered = [&](int x, int y) { return map.alpha(x, y) > 0.5; };
    for (int y = 1; y + 1 < h; ++y) {
        for (int x = 1; x + 1 < w; ++x) {
            if (!covered(x, y) || !covered(x - 1, y) || !covered(x + 1, y) || !covered(x, y - 1) ||
                !covered(x, y + 1)) {
                continue;
            }
            const double dn1dx = 0.5 * (map.n1(x + 1, y) - map.n1(x - 1, y));
            const double dn0dy = 0.5 * (map.n0(x, y + 1) - map.n0(x, y - 1));
            out.value(x, y) = dn1dx - dn0dy;
            out.valid(x, y) = 1;
        }
    }
    return out;
}

double loop_residual(const ShapeMap& map, const std::vector<Vec2>& loop) {
    if (loop.empty()) throw std::invalid_argument("loop has no points");
    if (!(loop.front() == loop.back())) {
        throw std::invalid_argument("loop is not closed: first and last points differ");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < loop.size(); ++i) {
        const Vec2 a = loop[i];
        const Vec2 b = loop[i + 1];
        const Vec2 d = b - a;
        const double len = length(d);
        if (len == 0.0) continue;
        const int pieces = std::max(1, static_cast<int>(std::ceil(len / 0.5)));
        const Vec2 piece = d / pieces;
        for (int k = 0; k < pieces; ++k) {
            const FieldSample s = sample_field(map, a + d * ((k + 0.5) / pieces));
            sum += s.n0 * piece.x + s.n1 * piece.y;
        }
    }
    return sum;
}

ScalarMap view_dependence_map(const ShapeMap& map, const DepthChannel& depth,
                              const IntegralParams& params, const std::vector<Vec2>& centers,
                              const SweepOptions& options) {
    if (centers.size() < 2) throw std::invalid_argument("view dependence needs at least 2 centers");
    const int w = map.width();
    const int h = map.height();
    constexpr double inf = std::numeric_limits<double>::infinity();
    ScalarRaster lo(w, h, inf);
    ScalarRaster hi(w, h, -inf);
    MaskRaster valid;
    for (const Vec2& c : centers) {
        const HeightSheet sheet = reconstruct_sheet(map, depth, RayFan::point(c), params, options);
        valid = sheet.valid;
        for (std::size_t i = 0; i < lo.size(); ++i) {
            if (!sheet.valid[i]) continue;
            lo[i] = std::min(lo[i], sheet.f0[i]);
            hi[i] = std::max(hi[i], sheet.f0[i]);
        }
    }
    ScalarMap out{ScalarRaster(w, h), std::move(valid)};
    for (std::size_t i = 0; i < lo.size(); ++i) {
        if (out.valid[i]) out.value[i] = hi[i] - lo[i];
    }
    return out;
}

std::vector<Vec2> default_analysis_centers(int width, int height) {
    const double w = width;
    const double h = height;
    return {{w / 4, h / 4}, {3 * w / 4, h / 4}, {w / 4, 3 * h / 4}, {3 * w / 4, 3 * h / 4}};
}

Rgba8 diverging_color(int index) {
    index = std::clamp(index, 0, 255);
    auto channel = [](double v) { return static_cast<std::uint8_t>(std::lround(255.0 * v)); };
    const double t = index / 255.0;
    if (t < 0.5) {
        const double s = t / 0.5;
        return {channel(s), channel(s), 255, 255};
    }
    const double s = (t - 0.5) / 0.5;
    return {255, channel(1.0 - s), channel(1.0 - s), 255};
}

FalseColor false_color(const ScalarMap& map) {
    FalseColor fc;
    fc.vmax = map.max_abs();
    if (!(fc.vmax > 0.0)) fc.vmax = 1.0;
    fc.image = Rgba8Image(map.value.width(), map.value.height());
    for (std::size_t i = 0; i < map.value.size(); ++i) {
        if (!map.valid[i]) continue;
        const double v = std::clamp(map.value[i] / fc.vmax, -1.0, 1.0);
        fc.image[i] = diverging_color(static_cast<int>(std::lround(255.0 * (v + 1.0) / 2.0)));
    }
    return fc;
}

void write_false_color(const std::filesystem::path& png_path, const FalseColor& fc) {
    write_png(png_path, fc.image);
    std::filesystem::path sidecar = png_path;
    sidecar.replace_extension(".txt");
    std::ofstream out(sidecar);
    if (!out) throw InputError("cannot write file: " + sidecar.string());
    out << "vmax " << std::setprecision(17) << fc.vmax << '\n';
}

} // namespace mock3d::field
