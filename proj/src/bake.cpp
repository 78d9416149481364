#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mock3d/author.hpp"

namespace mock3d::author {

ShapeMap bake_from_heightfield(const ScalarRaster& h, const ScalarRaster& thickness, double gain) {
    const int w = h.width();
    const int ht = h.height();
    if (w == 0 || ht == 0) throw std::invalid_argument("height field is empty");
    if (!thickness.same_shape(h)) throw std::invalid_argument("thickness and height field dimensions differ");
    if (!std::isfinite(gain)) throw std::invalid_argument("gain must be finite");
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (!std::isfinite(h[i])) throw std::invalid_argument("height field contains non-finite values");
        if (!(thickness[i] >= 0.0 && thickness[i] <= 1.0)) {
            throw std::invalid_argument("thickness must lie in [0, 1]");
        }
    }
    auto diff = [](double lo, double hi, int span) { return span == 0 ? 0.0 : (hi - lo) / span; };
    ShapeMap map(w, ht);
    for (int y = 0; y < ht; ++y) {
        for (int x = 0; x < w; ++x) {
            const int xl = std::max(0, x - 1), xr = std::min(w - 1, x + 1);
            const int yu = std::max(0, y - 1), yd = std::min(ht - 1, y + 1);
            const double dx = diff(h(xl, y), h(xr, y), xr - xl);
            const double dy = diff(h(x, yu), h(x, yd), yd - yu);
            map.set(x, y, {std::clamp(gain * dx, -1.0, 1.0), std::clamp(gain * dy, -1.0, 1.0), thickness(x, y), 1.0});
        }
    }
    return map;
}

ShapeMap bake_from_heightfield(const ScalarRaster& h, double thickness, double gain) {
    return bake_from_heightfield(h, ScalarRaster(h.width(), h.height(), thickness), gain);
}

ShapeMap photo_to_shapemap(const Rgba8Image& photo, Rgba8 key, double tolerance, double blue_fill) {
    if (photo.empty()) throw std::invalid_argument("photo is empty");
    if (!(tolerance >= 0.0)) throw std::invalid_argument("key tolerance must be >= 0");
    if (!(blue_fill > 0.0 && blue_fill <= 1.0)) throw std::invalid_argument("blue fill must lie in (0, 1]");
    ShapeMap map(photo.width(), photo.height());
    for (int y = 0; y < photo.height(); ++y) {
        for (int x = 0; x < photo.width(); ++x) {
            const Rgba8 c = photo(x, y);
            const double dr = static_cast<double>(c.r) - key.r;
            const double dg = static_cast<double>(c.g) - key.g;
            const double db = static_cast<double>(c.b) - key.b;
            if (std::sqrt(dr * dr + dg * dg + db * db) <= tolerance) continue;
            map.set(x, y, {2.0 * c.r / 255.0 - 1.0, 2.0 * c.g / 255.0 - 1.0, blue_fill, 1.0});
        }
    }
    return map;
}

} // namespace mock3d::author
