#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mock3d/fieldcalc.hpp"
#include "mock3d/raster.hpp"
#include "mock3d/scene.hpp"
#include "mock3d/shapemap.hpp"

namespace mock3d::render {

/// A layer's channels moved onto the canvas by its integer translation.
/// Pixels outside the layer have alpha 0.
struct PlacedLayer {
    int index = 0;  // position in the scene file
    ShapeMap map;
    field::DepthChannel depth;
    RgbRaster diffuse;
    ScalarRaster specular;
    ScalarRaster transparency;
    double z_offset = 0.0;
    std::optional<double> ior;
    field::IntegralParams params;
    NormalParams normal_params;
};

PlacedLayer place_layer(const scene::Scene& scene, int index);

/// Surface normal in the canvas frame (x right, y down, z toward the
/// viewer). A field that is the gradient of a height h leans away from the
/// direction in which h rises.
Vec3 surface_normal(double n0, double n1, const NormalParams& params);

/// Unit vector from a surface point toward the light.
Vec3 light_vector(const scene::Light& light, Vec3 surface);

/// Per-layer lighting for one light: Lambert plus Blinn-Phong scaled by the
/// specular channel, modulated by light color and intensity. `view` gives
/// the surface heights used for point-light directions.
RgbRaster shade_diffuse_specular(const PlacedLayer& layer, const field::HeightSheet& view,
                                 const scene::Light& light, double specular_exponent, int threads = 0);

/// Per pixel, the maximum of z_offset + Z + f0 over layers whose sheet is
/// valid there; -infinity where no layer is.
ScalarRaster global_heights(const std::vector<PlacedLayer>& layers,
                            const std::vector<field::HeightSheet>& sheets);

/// Height-field shadow test. From each pixel center the path toward the
/// light is stepped in 1 px increments, reading heights bilinearly over the
/// texels that carry a surface; the pixel is shadowed when some height rises
/// above the segment from its surface point to the light.
MaskRaster shadow_mask_from_heights(const ScalarRaster& heights, const scene::Light& light, int threads = 0);

/// The ray fan whose rays emanate from the light's 2D projection.
field::RayFan light_fan(const scene::Light& light);

/// Reconstructs light-fan sheets for every layer and tests shadows.
MaskRaster shadow_mask(const scene::Scene& scene, const std::vector<PlacedLayer>& layers,
                       const scene::Light& light, int threads = 0);

/// Horizon-based occlusion: mean over k directions of 1 / (1 + max slope)
/// within `radius` px. 1 where there is no surface.
ScalarRaster ambient_occlusion_from_heights(const ScalarRaster& heights, int k, int radius, int threads = 0);

/// Screen-space displacement of the refracted view ray after travelling
/// `distance` through a single interface. Total internal reflection yields
/// the reflected ray's displacement instead.
Vec2 refraction_offset(Vec3 normal, double eta, double distance);

/// Bilinear background lookup with edge clamping; exact texel copy at
/// pixel centers.
Rgb sample_rgb(const RgbRaster& image, Vec2 p);

/// Refracted backdrop seen through each valid pixel of the layer; other
/// pixels copy the backdrop.
RgbRaster refraction_pass(const PlacedLayer& layer, const MaskRaster& valid, const RgbRaster& backdrop,
                          int threads = 0);

/// Mirror direction of the view ray (0, 0, -1).
Vec3 reflect_view(Vec3 normal);
/// Nearest texel of a lat-long map: column from the azimuth, row from the
/// polar angle with the zenith on the top row.
Rgb environment_lookup(const RgbRaster& environment, Vec3 direction);

RgbRaster reflection_pass(const PlacedLayer& layer, const MaskRaster& valid, const RgbRaster& environment,
                          const scene::GlossySettings& glossy, std::uint64_t seed, int threads = 0);

/// Schlick's approximation.
double fresnel_weight(double cos_view, double eta);

/// One layer's contribution to the final image.
struct LayerImage {
    RgbRaster color;
    ScalarRaster coverage;  // effective opacity in [0, 1]
    ScalarRaster key;       // z_offset + Z(p)
    ScalarRaster tie;       // f0
    MaskRaster valid;
};

/// Per pixel, layers are stacked by descending key, then descending f0,
/// then file order (earlier on top), and blended source-over onto the
/// background from the bottom up.
RgbRaster composite(const std::vector<LayerImage>& layers, const RgbRaster& background, int threads = 0);

Rgba8Image to_rgba8(const RgbRaster& image);

struct RenderOptions {
    int threads = 0;
    bool keep_aux = false;
};

struct RenderOutput {
    Rgba8Image color;
    // Present when keep_aux is set.
    std::vector<MaskRaster> shadow_masks;  // per light (empty rasters when shadows are off)
    ScalarRaster ao;
    std::vector<field::HeightSheet> sheets;  // view sheets per layer
    std::vector<std::string> warnings;
    std::map<std::string, double> timings_ms;
};

RenderOutput render_scene(const scene::Scene& scene, const RenderOptions& options = {});

/// Gray PNG encodings of auxiliary rasters: masks as 0/255, AO as 255 * ao.
Raster<std::uint8_t> mask_to_gray(const MaskRaster& mask);
Raster<std::uint8_t> unit_to_gray(const ScalarRaster& values);

} // namespace mock3d::render
