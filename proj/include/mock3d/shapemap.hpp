#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mock3d/image_io.hpp"
#include "mock3d/raster.hpp"
#include "mock3d/vec.hpp"

namespace mock3d {

/// One shape-map texel: field components, thickness and domain coverage.
struct FieldSample {
    double n0 = 0.0;
    double n1 = 0.0;
    double t = 0.0;
    double alpha = 0.0;

    bool operator==(const FieldSample&) const = default;
};

/// A 2D vector field (n0, n1), a thickness map and a domain mask over a
/// common pixel grid.
///
/// The documented ranges are n0, n1 in [-1, 1] and thickness, alpha in
/// [0, 1]; everything that emits a ShapeMap for storage checks them via
/// check_invariants(). Analysis code (integrals, curl, circulation) accepts
/// any finite field so that analytic test fields need not be clipped.
class ShapeMap {
public:
    ShapeMap() = default;
    ShapeMap(int width, int height);

    int width() const { return n0.width(); }
    int height() const { return n0.height(); }

    FieldSample at(int x, int y) const {
        return {n0(x, y), n1(x, y), thickness(x, y), alpha(x, y)};
    }
    void set(int x, int y, const FieldSample& s);

    /// Zeroes n0, n1 and thickness wherever alpha == 0.
    void normalize();
    /// Human-readable invariant violations; empty when the map is valid.
    std::vector<std::string> check_invariants() const;
    /// Throws std::invalid_argument listing the first violation.
    void require_valid() const;

    Raster<double> n0;
    Raster<double> n1;
    Raster<double> thickness;
    Raster<double> alpha;
};

/// Field-flattening scale for normal reconstruction, 0 < s <= 1.
struct NormalParams {
    double s = 1.0 / std::sqrt(2.0);

    void validate() const;
};

ShapeMap decode_shapemap(const Rgba8Image& image);
/// Accepts 8- and 16-bit sources (channel ratio v / max_value).
ShapeMap decode_shapemap(const PngImage& image);
Rgba8Image encode_shapemap(const ShapeMap& map);

ShapeMap read_shapemap(const std::filesystem::path& path);
void write_shapemap(const std::filesystem::path& path, const ShapeMap& map);

/// Alpha-weighted bilinear sample at continuous point p (pixel centers at
/// half-integers). Outside the image rectangle the result is all zeros.
FieldSample sample_field(const ShapeMap& map, Vec2 p);

/// Unit normal (s*n0, s*n1, sqrt(1 - s^2 n0^2 - s^2 n1^2)); the radicand is
/// clamped at 0 before renormalizing.
Vec3 normal_from_field(double n0, double n1, const NormalParams& params);

/// 1 - s^2 n0^2 - s^2 n1^2, exposed for bound checks.
inline double normal_radicand(double n0, double n1, double s) {
    return 1.0 - s * s * n0 * n0 - s * s * n1 * n1;
}

} // namespace mock3d
