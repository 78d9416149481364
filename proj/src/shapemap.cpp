#include "mock3d/shapemap.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "mock3d/error.hpp"

namespace mock3d {

ShapeMap::ShapeMap(int width, int height)
    : n0(width, height), n1(width, height), thickness(width, height), alpha(width, height) {}

void ShapeMap::set(int x, int y, const FieldSample& s) {
    n0(x, y) = s.n0;
    n1(x, y) = s.n1;
    thickness(x, y) = s.t;
    alpha(x, y) = s.alpha;
}

void ShapeMap::normalize() {
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        if (alpha[i] == 0.0) {
            n0[i] = 0.0;
            n1[i] = 0.0;
            thickness[i] = 0.0;
        }
    }
}

std::vector<std::string> ShapeMap::check_invariants() const {
    std::vector<std::string> problems;
    if (!n1.same_shape(n0) || !thickness.same_shape(n0) || !alpha.same_shape(n0)) {
        problems.emplace_back("channel rasters differ in size");
        return problems;
    }
    auto report = [&](const char* what, std::size_t i, double v) {
        std::ostringstream msg;
        msg << what << " out of range at pixel (" << i % static_cast<std::size_t>(width()) << ", "
            << i / static_cast<std::size_t>(width()) << "): " << v;
        problems.push_back(msg.str());
    };
    for (std::size_t i = 0; i < n0.size(); ++i) {
        if (!(n0[i] >= -1.0 && n0[i] <= 1.0)) report("n0", i, n0[i]);
        if (!(n1[i] >= -1.0 && n1[i] <= 1.0)) report("n1", i, n1[i]);
        if (!(thickness[i] >= 0.0 && thickness[i] <= 1.0)) report("thickness", i, thickness[i]);
        if (!(alpha[i] >= 0.0 && alpha[i] <= 1.0)) report("alpha", i, alpha[i]);
        if (alpha[i] == 0.0 && (n0[i] != 0.0 || n1[i] != 0.0 || thickness[i] != 0.0)) {
            report("masked texel not normalized; n0", i, n0[i]);
        }
        if (problems.size() >= 8) break;
    }
    return problems;
}

void ShapeMap::require_valid() const {
    const auto problems = check_invariants();
    if (!problems.empty()) throw std::invalid_argument("invalid shape map: " + problems.front());
}

void NormalParams::validate() const {
    if (!(s > 0.0 && s <= 1.0)) {
        throw std::invalid_argument("normal scale s must lie in (0, 1]");
    }
}

namespace {

double ratio_to_signed(double r) { return 2.0 * r - 1.0; }

std::uint8_t quantize(double unit) {
    const double v = std::round(255.0 * unit);
    return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

} // namespace

ShapeMap decode_shapemap(const Rgba8Image& image) {
    if (image.width() == 0 || image.height() == 0) throw DecodeError("shape map image is empty");
    ShapeMap map(image.width(), image.height());
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            const Rgba8 px = image(x, y);
            map.set(x, y,
                    {ratio_to_signed(px.r / 255.0), ratio_to_signed(px.g / 255.0), px.b / 255.0,
                     px.a / 255.0});
        }
    }
    map.normalize();
    return map;
}

ShapeMap decode_shapemap(const PngImage& image) {
    if (image.width() == 0 || image.height() == 0) throw DecodeError("shape map image is empty");
    ShapeMap map(image.width(), image.height());
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            map.set(x, y,
                    {ratio_to_signed(image.ratio(x, y, 0)), ratio_to_signed(image.ratio(x, y, 1)),
                     image.ratio(x, y, 2), image.ratio(x, y, 3)});
        }
    }
    map.normalize();
    return map;
}

Rgba8Image encode_shapemap(const ShapeMap& map) {
    Rgba8Image image(map.width(), map.height());
    for (int y = 0; y < map.height(); ++y) {
        for (int x = 0; x < map.width(); ++x) {
            const FieldSample s = map.at(x, y);
            image(x, y) = {quantize((s.n0 + 1.0) / 2.0), quantize((s.n1 + 1.0) / 2.0), quantize(s.t),
                           quantize(s.alpha)};
        }
    }
    return image;
}

ShapeMap read_shapemap(const std::filesystem::path& path) {
    return decode_shapemap(read_png(path));
}

void write_shapemap(const std::filesystem::path& path, const ShapeMap& map) {
    write_png(path, encode_shapemap(map));
}

FieldSample sample_field(const ShapeMap& map, Vec2 p) {
    const int w = map.width();
    const int h = map.height();
    if (w == 0 || h == 0 || !(p.x >= 0.0 && p.y >= 0.0 && p.x <= w && p.y <= h)) return {};

    const double fx = p.x - 0.5;
    const double fy = p.y - 0.5;
    const double flx = std::floor(fx);
    const double fly = std::floor(fy);
    const double tx = fx - flx;
    const double ty = fy - fly;
    const int x0 = std::clamp(static_cast<int>(flx), 0, w - 1);
    const int x1 = std::clamp(static_cast<int>(flx) + 1, 0, w - 1);
    const int y0 = std::clamp(static_cast<int>(fly), 0, h - 1);
    const int y1 = std::clamp(static_cast<int>(fly) + 1, 0, h - 1);

    const int xs[4] = {x0, x1, x0, x1};
    const int ys[4] = {y0, y0, y1, y1};
    const double ws[4] = {(1.0 - tx) * (1.0 - ty), tx * (1.0 - ty), (1.0 - tx) * ty, tx * ty};

    double a = 0.0, pn0 = 0.0, pn1 = 0.0, pt = 0.0;
    for (int k = 0; k < 4; ++k) {
        const double wa = ws[k] * map.alpha(xs[k], ys[k]);
        a += wa;
        pn0 += wa * map.n0(xs[k], ys[k]);
        pn1 += wa * map.n1(xs[k], ys[k]);
        pt += wa * map.thickness(xs[k], ys[k]);
    }
    if (!(a > 0.0)) return {};
    return {pn0 / a, pn1 / a, pt / a, a};
}

Vec3 normal_from_field(double n0, double n1, const NormalParams& params) {
    const double s = params.s;
    const double z = std::sqrt(std::max(0.0, normal_radicand(n0, n1, s)));
    const Vec3 n{s * n0, s * n1, z};
    const double len = length(n);
    if (!(len > 0.0)) return {0.0, 0.0, 1.0};
    return n / len;
}

} // namespace mock3d
