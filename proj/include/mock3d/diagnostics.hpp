#pragma once

#include <filesystem>
#include <vector>

#include "mock3d/fieldcalc.hpp"
#include "mock3d/raster.hpp"
#include "mock3d/shapemap.hpp"

namespace mock3d::field {

/// A scalar diagnostic with a per-pixel validity mask.
struct ScalarMap {
    ScalarRaster value;
    MaskRaster valid;

    double max_abs() const;
    double mean() const;  // over valid pixels; 0 when none
};

/// dN1/dx - dN0/dy by central differences. Border pixels and pixels whose
/// 4-neighbourhood is not fully covered (alpha > 0.5) are invalid.
ScalarMap curl_map(const ShapeMap& map);

/// Circulation of the field around a closed polyline (first point == last
/// point). Each segment is split into pieces of at most half a pixel and
/// summed with the midpoint rule.
double loop_residual(const ShapeMap& map, const std::vector<Vec2>& loop);

/// Per-pixel spread (max - min) of f0 over reconstructions from each center.
ScalarMap view_dependence_map(const ShapeMap& map, const DepthChannel& depth,
                              const IntegralParams& params, const std::vector<Vec2>& centers,
                              const SweepOptions& options = {});

/// Four centers at the quarter points of the canvas.
std::vector<Vec2> default_analysis_centers(int width, int height);

struct FalseColor {
    Rgba8Image image;
    double vmax = 1.0;
};

/// Symmetric blue-white-red mapping of [-vmax, vmax] onto 256 levels, with
/// vmax = max |value| over valid pixels (1 if that is 0). Invalid pixels are
/// transparent.
FalseColor false_color(const ScalarMap& map);
Rgba8 diverging_color(int index);

/// Writes the PNG and a sidecar next to it (same stem, .txt) holding
/// "vmax <value>".
void write_false_color(const std::filesystem::path& png_path, const FalseColor& fc);

} // namespace mock3d::field
