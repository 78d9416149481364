#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "mock3d/fieldcalc.hpp"
#include "mock3d/mesh.hpp"
#include "mock3d/scene.hpp"
#include "mock3d/shapemap.hpp"

namespace fixtures {

using namespace mock3d;

inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "mock3d-tests" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::filesystem::path data_dir() { return MOCK3D_TEST_DATA; }

/// Fully covered map whose field at each pixel center is fn(center).
template <class Fn>
ShapeMap field_map(int w, int h, Fn&& fn, double thickness = 0.5) {
    ShapeMap m(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Vec2 f = fn(Vec2{x + 0.5, y + 0.5});
            m.set(x, y, {f.x, f.y, thickness, 1.0});
        }
    }
    return m;
}

/// (-k (y - cy), k (x - cx)) about the canvas center; curl 2k.
inline ShapeMap rotation_map(int w, int h, double k, double thickness = 0.5) {
    const Vec2 c{w / 2.0, h / 2.0};
    return field_map(w, h, [&](Vec2 p) { return Vec2{-k * (p.y - c.y), k * (p.x - c.x)}; }, thickness);
}

inline double gaussian(Vec2 p, Vec2 c, double sigma, double amp) {
    const Vec2 d = p - c;
    return amp * std::exp(-dot(d, d) / (2.0 * sigma * sigma));
}

inline Vec2 gaussian_gradient(Vec2 p, Vec2 c, double sigma, double amp) {
    const double g = gaussian(p, c, sigma, amp);
    return (c - p) * (g / (sigma * sigma));
}

inline ScalarRaster gaussian_raster(int w, int h, Vec2 c, double sigma, double amp) {
    ScalarRaster r(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) r(x, y) = gaussian({x + 0.5, y + 0.5}, c, sigma, amp);
    }
    return r;
}

/// Disk of radius r at c; inside, the field is the analytic gradient of a
/// Gaussian bump scaled by gain.
inline ShapeMap bump_disk(int w, int h, Vec2 c, double r, double sigma, double amp, double thickness = 0.5) {
    ShapeMap m(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Vec2 p{x + 0.5, y + 0.5};
            if (length(p - c) > r) continue;
            const Vec2 g = gaussian_gradient(p, c, sigma, amp);
            m.set(x, y, {g.x, g.y, thickness, 1.0});
        }
    }
    return m;
}

inline scene::Layer layer_from_map(const std::string& id, const ShapeMap& map, double z = 0.0) {
    scene::Layer l;
    l.id = id;
    l.shapemap_ref = id + ".png";
    l.map = map;
    l.depth = field::DepthChannel::constant(map.width(), map.height(), z);
    l.diffuse = RgbRaster(map.width(), map.height(), l.diffuse_color);
    l.specular = ScalarRaster(map.width(), map.height(), 0.0);
    l.transparency = ScalarRaster(map.width(), map.height(), 0.0);
    return l;
}

inline scene::Scene canvas(int w, int h, Rgb background = {0.1, 0.2, 0.3}) {
    scene::Scene s;
    s.width = w;
    s.height = h;
    s.background_color = background;
    s.background = RgbRaster(w, h, background);
    s.view = field::RayFan::point({w / 2.0, h / 2.0});
    return s;
}

inline scene::Light point_light(Vec3 p, double intensity = 1.0) {
    scene::Light l;
    l.kind = scene::Light::Kind::Point;
    l.position = p;
    l.intensity = intensity;
    return l;
}

inline scene::Light directional_light(Vec3 d, double intensity = 1.0) {
    scene::Light l;
    l.kind = scene::Light::Kind::Directional;
    l.direction = normalize(d);
    l.intensity = intensity;
    return l;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p);
    f << text;
}

inline void write_json(const std::filesystem::path& p, const nlohmann::json& j) { write_text(p, j.dump(2)); }

/// 2x2 grid with unit radial control vectors on the boundary and zero at
/// the center vertex.
inline author::QuadPatchMesh radial_grid() {
    author::QuadPatchMesh m = author::make_grid(2, 2);
    const Vec2 c{0.5, 0.5};
    for (auto& v : m.vertices) {
        const Vec2 d = v.pos - c;
        v.control = length(d) > 0.0 ? d / length(d) : Vec2{};
    }
    return m;
}

/// A two-layer scene on disk: a bump disk ("bump") over a rotation-field
/// square ("swirl"), one point light.
inline std::filesystem::path write_demo_scene(const std::filesystem::path& dir, int size = 64) {
    const double c = size / 2.0;
    write_shapemap(dir / "bump.png", bump_disk(size, size, {c, c}, size * 0.35, size * 0.15, size * 0.1));
    ShapeMap swirl = rotation_map(size / 2, size / 2, 0.02);
    write_shapemap(dir / "swirl.png", swirl);
    nlohmann::json scene = {
        {"canvas", {{"width", size}, {"height", size}, {"background", "#203040"}}},
        {"layers",
         {{{"id", "bump"},
           {"shapemap", "bump.png"},
           {"channels", {{"diffuse", "#e0c080"}, {"specular", 0.3}}},
           {"depth", {{"z_offset", 2.0}}}},
          {{"id", "swirl"},
           {"shapemap", "swirl.png"},
           {"channels", {{"diffuse", "#80a0e0"}}},
           {"translate", {size / 4, size / 4}}}}},
        {"lights", {{{"kind", "point"}, {"position", {size * 0.2, size * 0.1, size * 1.0}}, {"intensity", 1.0}}}},
        {"settings", {{"shadows", true}, {"ao", {{"enabled", true}, {"k", 8}, {"radius", 8}}}}},
    };
    write_json(dir / "scene.json", scene);
    return dir / "scene.json";
}

} // namespace fixtures
