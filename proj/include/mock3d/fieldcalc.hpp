#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "mock3d/raster.hpp"
#include "mock3d/shapemap.hpp"
#include "mock3d/vec.hpp"

namespace mock3d::field {

/// The common origin (point-center) or common direction (directional) of
/// the 2D rays along which heights are integrated.
struct RayFan {
    enum class Mode { PointCenter, Directional };

    Mode mode = Mode::PointCenter;
    Vec2 center;        // point-center mode
    double theta = 0.0; // directional mode, radians
    double step = 1.0;  // arclength per quadrature sample, pixels

    static RayFan point(Vec2 c, double step = 1.0) { return {Mode::PointCenter, c, 0.0, step}; }
    static RayFan directional(double theta, double step = 1.0) {
        return {Mode::Directional, {}, theta, step};
    }

    void validate() const;
    bool operator==(const RayFan&) const = default;
};

/// Scales for the field integral (s0), the quantized depth integral (s1)
/// and the thickness offset (s2); n is the depth quantization term.
struct IntegralParams {
    double s0 = 1.0;
    double s1 = 1.0;
    double s2 = 0.5;
    int n = 1;
    /// Canvas z units per unit of thickness T. The back sheet is
    /// f1 = f0 - s2 * thickness_scale * T.
    double thickness_scale = 1.0;

    void validate() const;
    bool operator==(const IntegralParams&) const = default;
};

/// The layer's embedded depth Z(p) in canvas z units.
struct DepthChannel {
    Raster<double> z;

    static DepthChannel constant(int width, int height, double value = 0.0) {
        return {Raster<double>(width, height, value)};
    }
    /// Bilinear, clamped to the edge texels; outside the rectangle the
    /// nearest edge value is used.
    double sample(Vec2 p) const;
};

struct HeightSheet {
    ScalarRaster f0;
    ScalarRaster f1;
    MaskRaster valid;  // alpha > 0.5
    RayFan fan;
    IntegralParams params;
};

/// Where the integration path for p1 starts: the image-rectangle edge hit by
/// marching from p1 along (-cos theta, -sin theta).
Vec2 ray_entry_point(const ShapeMap& map, Vec2 p1, double theta);

/// Midpoint-rule sum of (n0 cos theta + n1 sin theta) from the entry point to
/// p1. Full segments of length `step` start at the entry point; the final
/// segment may be shorter.
double integrate_g0(const ShapeMap& map, Vec2 p1, double theta, double step);

/// Sum of (1/n) floor(n dZ/dt + 0.5) dt, with dZ/dt the forward difference
/// between consecutive quadrature samples of integrate_g0 (the segment
/// midpoints) and dt their spacing.
double integrate_g1(const DepthChannel& depth, Vec2 p1, double theta, int n, double step);

/// As above, but a difference contributes only when the domain alpha at both
/// of its samples is positive. This is the form used by reconstruct_sheet.
double integrate_g1(const DepthChannel& depth, const ShapeMap& domain, Vec2 p1, double theta,
                    int n, double step);

/// Contribution of one sample spacing `len` across which the depth changes by dz.
inline double quantized_depth_step(double dz, double len, int n) {
    return std::floor(n * (dz / len) + 0.5) / n * len;
}

/// The discrete ray set used by reconstruct_sheet. Rays are spaced so that
/// neighbours are at most `spacing` pixels apart anywhere on the canvas; each
/// pixel's heights are the angular (or lateral) linear blend of its two
/// bracketing rays evaluated at the pixel's radius (or along-ray coordinate).
class RayLayout {
public:
    struct Ray {
        Vec2 origin;        // entry point on the rectangle edge
        Vec2 dir;           // unit direction of integration
        double length = 0;  // chord length inside the rectangle
    };
    struct Bracket {
        int ray0 = 0;
        int ray1 = 0;
        double weight = 0.0;  // of ray1
        double tau0 = 0.0;    // arclength from ray0's origin, clamped to [0, length]
        double tau1 = 0.0;
    };

    RayLayout(int width, int height, const RayFan& fan, double spacing);

    int ray_count() const { return static_cast<int>(rays_.size()); }
    const Ray& ray(int j) const { return rays_[static_cast<std::size_t>(j)]; }
    Bracket locate(Vec2 p) const;

private:
    Ray make_ray(Vec2 anchor, Vec2 dir);
    double tau_for(int j, Vec2 p) const;

    int width_;
    int height_;
    RayFan fan_;
    bool wrap_ = false;
    double first_ = 0.0;  // first angle (point) or lateral offset (directional)
    double delta_ = 0.0;  // angular or lateral increment
    double reference_ = 0.0;
    std::vector<Ray> rays_;
    std::vector<double> anchor_t_;  // parameter of the ray origin relative to the anchor
};

struct SweepOptions {
    double ray_spacing = 0.5;  // pixels between neighbouring rays at the far edge
    int threads = 0;           // 0 = hardware concurrency
};

/// f0 = s0 G0 + s1 G1 and f1 = f0 - s2 * thickness_scale * T for every pixel
/// with alpha > 0.5, computed by prefix sums along the rays of a RayLayout.
HeightSheet reconstruct_sheet(const ShapeMap& map, const DepthChannel& depth, const RayFan& fan,
                              const IntegralParams& params, const SweepOptions& options = {});

/// Integration direction for pixel p under a fan (theta := 0 at the center).
double ray_angle(const RayFan& fan, Vec2 p);

} // namespace mock3d::field
