#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mock3d/fieldcalc.hpp"
#include "mock3d/mesh.hpp"
#include "mock3d/raster.hpp"
#include "mock3d/shapemap.hpp"

namespace mock3d::author {

struct RasterizeOptions {
    /// Pixels along the longer side of the mesh extent; 0 keeps one pixel
    /// per mesh unit.
    int resolution = 0;
    /// Multiply thickness by a distance-to-silhouette ramp of this width.
    bool feather = false;
    double feather_width = 4.0;
    int threads = 0;
};

struct RasterizeResult {
    ShapeMap map;
    field::DepthChannel depth;
    double scale = 1.0;  // pixels per mesh unit
    int newton_failures = 0;
    int degenerate_faces = 0;
    std::vector<std::string> warnings;
};

/// Scan-converts the visible faces. Each pixel takes the Coons field,
/// bilinear thickness and bilinear z at the inverse-mapped (u, v) of its
/// center, or the mean over its covered 2x2 subsamples when the center is
/// outside; alpha is the covered fraction of the subsamples.
RasterizeResult rasterize_shapemap(const QuadPatchMesh& mesh, const RasterizeOptions& options = {});

/// Newton inverse of a patch: on success (u, v) satisfies |P(u,v) - target|
/// < 1e-6 px after at most 8 iterations from the given start.
bool invert_patch(const PatchGeometry& patch, Vec2 target, double& u, double& v);

/// Central differences (one-sided at the border) scaled by gain and clamped
/// to [-1, 1]; alpha = 1 everywhere.
ShapeMap bake_from_heightfield(const ScalarRaster& h, const ScalarRaster& thickness, double gain);
ShapeMap bake_from_heightfield(const ScalarRaster& h, double thickness, double gain);

/// Pixels within `tolerance` (Euclidean RGB distance, 0..255 units) of the
/// key become transparent; the rest decode red/green as N0/N1 with constant
/// thickness `blue_fill`.
ShapeMap photo_to_shapemap(const Rgba8Image& photo, Rgba8 key, double tolerance, double blue_fill);

/// Squared Euclidean distance from every pixel center to the nearest pixel
/// center where mask is 0 (infinity when there is none).
ScalarRaster squared_distance_to_background(const MaskRaster& mask);

/// `map.png` -> `map.json`.
std::filesystem::path sidecar_path(const std::filesystem::path& png_path);

} // namespace mock3d::author
