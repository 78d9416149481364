#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mock3d/fieldcalc.hpp"
#include "mock3d/mesh.hpp"
#include "mock3d/raster.hpp"
#include "mock3d/shapemap.hpp"
#include "mock3d/vec.hpp"

namespace mock3d::scene {

/// One mock-3D object: a shape source plus material and depth channels.
/// The *_ref members keep the references as written in the scene file;
/// the rasters hold the resolved assets at the shape map's resolution.
struct Layer {
    std::string id;

    std::string shapemap_ref;   // image source
    std::string patchmesh_ref;  // mesh source (compiled on resolve)

    std::optional<std::string> diffuse_ref;
    Rgb diffuse_color{1.0, 1.0, 1.0};  // used when there is no diffuse image
    std::optional<std::string> specular_ref;
    double specular_value = 0.0;
    std::optional<std::string> transparency_ref;
    double transparency_value = 0.0;
    std::optional<double> ior;

    std::optional<std::string> depth_ref;
    double z_offset = 0.0;
    double depth_scale = 1.0;  // canvas z units per unit gray

    field::IntegralParams params;
    NormalParams normal_params;
    Vec2 translate;  // whole pixels

    // Resolved assets.
    ShapeMap map;
    field::DepthChannel depth;
    RgbRaster diffuse;
    ScalarRaster specular;
    ScalarRaster transparency;
    std::shared_ptr<const author::QuadPatchMesh> mesh;

    bool has_mesh() const { return !patchmesh_ref.empty(); }
};

struct Light {
    enum class Kind { Point, Directional };

    Kind kind = Kind::Directional;
    Vec3 position;                 // point lights, canvas units
    Vec3 direction{0.0, 0.0, -1.0};  // directional lights: direction of travel, unit length
    Rgb color{1.0, 1.0, 1.0};
    double intensity = 1.0;

    bool operator==(const Light&) const = default;
};

struct AoSettings {
    bool enabled = false;
    int k = 16;
    int radius = 32;
};

struct GlossySettings {
    int samples = 0;  // 0 = mirror reflection
    double spread = 0.15;
};

struct Settings {
    bool shadows = false;
    AoSettings ao;
    bool reflection = false;
    bool refraction = false;
    bool fresnel = false;
    GlossySettings glossy;
    std::uint64_t seed = 0;
    double specular_exponent = 32.0;
};

struct Scene {
    int width = 0;
    int height = 0;
    Rgb background_color;
    std::optional<std::string> background_ref;
    std::optional<std::string> environment_ref;
    /// Ray fan used for the viewing reconstruction.
    field::RayFan view;
    std::vector<Layer> layers;
    std::vector<Light> lights;
    Settings settings;
    std::filesystem::path base_dir;

    RgbRaster background;   // canvas size, resolved
    RgbRaster environment;  // lat-long, empty when absent

    const Layer* find_layer(const std::string& id) const;
    Layer* find_layer(const std::string& id);
};

struct Diagnostic {
    enum class Severity { Warning, Error };

    Severity severity = Severity::Error;
    std::string where;  // e.g. "layer 'body': channels.ior"
    std::string message;

    std::string str() const;
};

/// Parses the JSON scene format without touching the file system. Defaults
/// are applied for every omitted field.
Scene parse_scene(const nlohmann::json& doc, const std::filesystem::path& base_dir);
/// Loads every referenced asset relative to scene.base_dir.
void resolve_assets(Scene& scene);
/// Re-reads one layer's assets (used after edits to its sources).
void resolve_layer(const Scene& scene, Layer& layer);
/// Compiles a mesh-backed layer from `mesh` into its map and depth.
void compile_layer_mesh(Layer& layer, std::shared_ptr<const author::QuadPatchMesh> mesh);

std::vector<Diagnostic> validate_scene(const Scene& scene);
/// Throws SceneError naming the first error diagnostic, if any.
void require_valid(const Scene& scene);

/// parse_scene + resolve_assets + require_valid.
Scene load_scene(const std::filesystem::path& path);

nlohmann::json scene_to_json(const Scene& scene);

// Pieces of the format shared with render overrides.
Light parse_light(const nlohmann::json& j, const std::string& where);
nlohmann::json light_to_json(const Light& light);
void apply_settings(Settings& settings, const nlohmann::json& j);
nlohmann::json settings_to_json(const Settings& settings);
void apply_params(Layer& layer, const nlohmann::json& j, const std::string& where);
nlohmann::json params_to_json(const Layer& layer);
field::RayFan parse_view(const nlohmann::json& j, int width, int height);
nlohmann::json view_to_json(const field::RayFan& view);

std::optional<Rgb> parse_hex_color(const std::string& text);
std::string hex_color(Rgb c);

} // namespace mock3d::scene
