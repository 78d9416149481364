#include "mock3d/scene.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "mock3d/author.hpp"
#include "mock3d/error.hpp"
#include "mock3d/image_io.hpp"

namespace mock3d::scene {

using nlohmann::json;

namespace {

std::string layer_where(const std::string& id, const std::string& field) {
    return "layer '" + id + "': " + field;
}

double get_number(const json& j, const std::string& where) {
    if (!j.is_number()) throw SceneError(where + " must be a number");
    return j.get<double>();
}

int get_int(const json& j, const std::string& where) {
    if (!j.is_number_integer()) throw SceneError(where + " must be an integer");
    return j.get<int>();
}

bool get_bool(const json& j, const std::string& where) {
    if (!j.is_boolean()) throw SceneError(where + " must be true or false");
    return j.get<bool>();
}

std::string get_string(const json& j, const std::string& where) {
    if (!j.is_string()) throw SceneError(where + " must be a string");
    return j.get<std::string>();
}

Vec3 get_vec3(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3) throw SceneError(where + " must be a [x, y, z] triple");
    return {get_number(j[0], where), get_number(j[1], where), get_number(j[2], where)};
}

Vec2 get_vec2(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2) throw SceneError(where + " must be a [x, y] pair");
    return {get_number(j[0], where), get_number(j[1], where)};
}

void require_object(const json& j, const std::string& where) {
    if (!j.is_object()) throw SceneError(where + " must be an object");
}

std::filesystem::path asset_path(const Scene& scene, const std::string& ref, const std::string& where) {
    const std::filesystem::path p = scene.base_dir / ref;
    if (!std::filesystem::is_regular_file(p)) {
        throw SceneError(where + ": missing asset '" + ref + "' (" + p.string() + ")");
    }
    return p;
}

RgbRaster read_rgb(const std::filesystem::path& path) {
    const PngImage img = read_png(path);
    RgbRaster out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            out(x, y) = {img.ratio(x, y, 0), img.ratio(x, y, 1), img.ratio(x, y, 2)};
        }
    }
    return out;
}

ScalarRaster read_gray(const std::filesystem::path& path, double scale) {
    const PngImage img = read_png(path);
    ScalarRaster out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) out(x, y) = img.ratio(x, y, 0) * scale;
    }
    return out;
}

Layer parse_layer(const json& j, std::size_t index) {
    Layer layer;
    require_object(j, "layers[" + std::to_string(index) + "]");
    if (!j.contains("id")) throw SceneError("layers[" + std::to_string(index) + "]: missing id");
    layer.id = get_string(j.at("id"), "layers[" + std::to_string(index) + "].id");
    auto where = [&](const std::string& f) { return layer_where(layer.id, f); };

    if (!j.contains("shapemap")) throw SceneError(where("shapemap") + " is required");
    const json& src = j.at("shapemap");
    if (src.is_string()) {
        layer.shapemap_ref = src.get<std::string>();
    } else if (src.is_object() && src.contains("patchmesh")) {
        layer.patchmesh_ref = get_string(src.at("patchmesh"), where("shapemap.patchmesh"));
    } else {
        throw SceneError(where("shapemap") + " must be a path or {\"patchmesh\": path}");
    }

    if (j.contains("channels")) {
        const json& ch = j.at("channels");
        require_object(ch, where("channels"));
        if (ch.contains("diffuse")) {
            const std::string d = get_string(ch.at("diffuse"), where("channels.diffuse"));
            if (auto c = parse_hex_color(d)) {
                layer.diffuse_color = *c;
            } else {
                layer.diffuse_ref = d;
            }
        }
        if (ch.contains("specular")) {
            const json& s = ch.at("specular");
            if (s.is_string()) layer.specular_ref = s.get<std::string>();
            else layer.specular_value = get_number(s, where("channels.specular"));
        }
        if (ch.contains("transparency")) {
            const json& t = ch.at("transparency");
            if (t.is_string()) layer.transparency_ref = t.get<std::string>();
            else layer.transparency_value = get_number(t, where("channels.transparency"));
        }
        if (ch.contains("ior") && !ch.at("ior").is_null()) layer.ior = get_number(ch.at("ior"), where("channels.ior"));
    }

    if (j.contains("depth")) {
        const json& d = j.at("depth");
        require_object(d, where("depth"));
        if (d.contains("image") && !d.at("image").is_null()) layer.depth_ref = get_string(d.at("image"), where("depth.image"));
        if (d.contains("z_offset")) layer.z_offset = get_number(d.at("z_offset"), where("depth.z_offset"));
        if (d.contains("scale")) layer.depth_scale = get_number(d.at("scale"), where("depth.scale"));
    }
    if (j.contains("params")) apply_params(layer, j.at("params"), where("params"));
    if (j.contains("translate")) {
        const Vec2 t = get_vec2(j.at("translate"), where("translate"));
        if (t.x != std::floor(t.x) || t.y != std::floor(t.y)) {
            throw SceneError(where("translate") + " must be whole pixels");
        }
        layer.translate = t;
    }
    return layer;
}

} // namespace

const Layer* Scene::find_layer(const std::string& id) const {
    for (const Layer& l : layers) {
        if (l.id == id) return &l;
    }
    return nullptr;
}

Layer* Scene::find_layer(const std::string& id) {
    return const_cast<Layer*>(static_cast<const Scene*>(this)->find_layer(id));
}

std::string Diagnostic::str() const {
    return std::string(severity == Severity::Error ? "error: " : "warning: ") + where + ": " + message;
}

std::optional<Rgb> parse_hex_color(const std::string& text) {
    if (text.size() != 7 || text[0] != '#') return std::nullopt;
    unsigned r = 0, g = 0, b = 0;
    for (std::size_t i = 1; i < 7; ++i) {
        if (!std::isxdigit(static_cast<unsigned char>(text[i]))) return std::nullopt;
    }
    if (std::sscanf(text.c_str() + 1, "%2x%2x%2x", &r, &g, &b) != 3) return std::nullopt;
    return Rgb{r / 255.0, g / 255.0, b / 255.0};
}

std::string hex_color(Rgb c) {
    auto q = [](double v) { return static_cast<unsigned>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); };
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", q(c.r), q(c.g), q(c.b));
    return buf;
}

Light parse_light(const json& j, const std::string& where) {
    require_object(j, where);
    Light light;
    const std::string kind = j.contains("kind") ? get_string(j.at("kind"), where + ".kind") : "directional";
    if (kind == "point") {
        light.kind = Light::Kind::Point;
        if (!j.contains("position")) throw SceneError(where + ".position is required for point lights");
        light.position = get_vec3(j.at("position"), where + ".position");
    } else if (kind == "directional") {
        light.kind = Light::Kind::Directional;
        if (!j.contains("direction")) throw SceneError(where + ".direction is required for directional lights");
        const Vec3 d = get_vec3(j.at("direction"), where + ".direction");
        if (!(length(d) > 0.0)) throw SceneError(where + ".direction must be nonzero");
        light.direction = normalize(d);
    } else {
        throw SceneError(where + ".kind must be \"point\" or \"directional\"");
    }
    if (j.contains("color")) {
        const Vec3 c = get_vec3(j.at("color"), where + ".color");
        light.color = {c.x, c.y, c.z};
    }
    if (j.contains("intensity")) light.intensity = get_number(j.at("intensity"), where + ".intensity");
    return light;
}

json light_to_json(const Light& light) {
    json j;
    if (light.kind == Light::Kind::Point) {
        j["kind"] = "point";
        j["position"] = {light.position.x, light.position.y, light.position.z};
    } else {
        j["kind"] = "directional";
        j["direction"] = {light.direction.x, light.direction.y, light.direction.z};
    }
    j["color"] = {light.color.r, light.color.g, light.color.b};
    j["intensity"] = light.intensity;
    return j;
}

void apply_settings(Settings& s, const json& j) {
    require_object(j, "settings");
    if (j.contains("shadows")) s.shadows = get_bool(j.at("shadows"), "settings.shadows");
    if (j.contains("ao")) {
        const json& ao = j.at("ao");
        require_object(ao, "settings.ao");
        if (ao.contains("enabled")) s.ao.enabled = get_bool(ao.at("enabled"), "settings.ao.enabled");
        if (ao.contains("k")) s.ao.k = get_int(ao.at("k"), "settings.ao.k");
        if (ao.contains("radius")) s.ao.radius = get_int(ao.at("radius"), "settings.ao.radius");
    }
    if (j.contains("reflection")) s.reflection = get_bool(j.at("reflection"), "settings.reflection");
    if (j.contains("refraction")) s.refraction = get_bool(j.at("refraction"), "settings.refraction");
    if (j.contains("fresnel")) s.fresnel = get_bool(j.at("fresnel"), "settings.fresnel");
    if (j.contains("glossy")) {
        const json& g = j.at("glossy");
        require_object(g, "settings.glossy");
        if (g.contains("samples")) s.glossy.samples = get_int(g.at("samples"), "settings.glossy.samples");
        if (g.contains("spread")) s.glossy.spread = get_number(g.at("spread"), "settings.glossy.spread");
    }
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned()) throw SceneError("settings.seed must be a non-negative integer");
        s.seed = j.at("seed").get<std::uint64_t>();
    }
    if (j.contains("specular_exponent")) {
        s.specular_exponent = get_number(j.at("specular_exponent"), "settings.specular_exponent");
    }
}

json settings_to_json(const Settings& s) {
    return {{"shadows", s.shadows},
            {"ao", {{"enabled", s.ao.enabled}, {"k", s.ao.k}, {"radius", s.ao.radius}}},
            {"reflection", s.reflection},
            {"refraction", s.refraction},
            {"fresnel", s.fresnel},
            {"glossy", {{"samples", s.glossy.samples}, {"spread", s.glossy.spread}}},
            {"seed", s.seed},
            {"specular_exponent", s.specular_exponent}};
}

void apply_params(Layer& layer, const json& j, const std::string& where) {
    require_object(j, where);
    auto& p = layer.params;
    if (j.contains("s0")) p.s0 = get_number(j.at("s0"), where + ".s0");
    if (j.contains("s1")) p.s1 = get_number(j.at("s1"), where + ".s1");
    if (j.contains("s2")) p.s2 = get_number(j.at("s2"), where + ".s2");
    if (j.contains("n")) p.n = get_int(j.at("n"), where + ".n");
    if (j.contains("thickness_scale")) p.thickness_scale = get_number(j.at("thickness_scale"), where + ".thickness_scale");
    if (j.contains("s")) layer.normal_params.s = get_number(j.at("s"), where + ".s");
}

json params_to_json(const Layer& layer) {
    const auto& p = layer.params;
    return {{"s0", p.s0}, {"s1", p.s1}, {"s2", p.s2}, {"n", p.n}, {"s", layer.normal_params.s},
            {"thickness_scale", p.thickness_scale}};
}

field::RayFan parse_view(const json& j, int width, int height) {
    require_object(j, "view");
    const std::string mode = j.contains("mode") ? get_string(j.at("mode"), "view.mode") : "point";
    field::RayFan fan;
    if (mode == "point") {
        fan = field::RayFan::point({width / 2.0, height / 2.0});
        if (j.contains("center")) fan.center = get_vec2(j.at("center"), "view.center");
    } else if (mode == "directional") {
        fan = field::RayFan::directional(j.contains("theta") ? get_number(j.at("theta"), "view.theta") : 0.0);
    } else {
        throw SceneError("view.mode must be \"point\" or \"directional\"");
    }
    if (j.contains("step")) fan.step = get_number(j.at("step"), "view.step");
    return fan;
}

json view_to_json(const field::RayFan& view) {
    if (view.mode == field::RayFan::Mode::Directional) {
        return {{"mode", "directional"}, {"theta", view.theta}, {"step", view.step}};
    }
    return {{"mode", "point"}, {"center", {view.center.x, view.center.y}}, {"step", view.step}};
}

Scene parse_scene(const json& doc, const std::filesystem::path& base_dir) {
    require_object(doc, "scene");
    Scene scene;
    scene.base_dir = base_dir;
    if (!doc.contains("canvas")) throw SceneError("canvas is required");
    const json& canvas = doc.at("canvas");
    require_object(canvas, "canvas");
    if (!canvas.contains("width") || !canvas.contains("height")) throw SceneError("canvas width and height are required");
    scene.width = get_int(canvas.at("width"), "canvas.width");
    scene.height = get_int(canvas.at("height"), "canvas.height");
    if (canvas.contains("background")) {
        const json& bg = canvas.at("background");
        if (bg.is_string()) {
            const auto c = parse_hex_color(bg.get<std::string>());
            if (!c) throw SceneError("canvas.background must be \"#rrggbb\" or {\"image\": path}");
            scene.background_color = *c;
        } else if (bg.is_object() && bg.contains("image")) {
            scene.background_ref = get_string(bg.at("image"), "canvas.background.image");
        } else {
            throw SceneError("canvas.background must be \"#rrggbb\" or {\"image\": path}");
        }
    }
    if (doc.contains("environment") && !doc.at("environment").is_null()) {
        const json& env = doc.at("environment");
        require_object(env, "environment");
        if (!env.contains("image")) throw SceneError("environment.image is required");
        scene.environment_ref = get_string(env.at("image"), "environment.image");
    }
    scene.view = field::RayFan::point({scene.width / 2.0, scene.height / 2.0});
    if (doc.contains("view")) scene.view = parse_view(doc.at("view"), scene.width, scene.height);

    if (!doc.contains("layers") || !doc.at("layers").is_array()) throw SceneError("layers must be a list");
    const json& layers = doc.at("layers");
    for (std::size_t i = 0; i < layers.size(); ++i) scene.layers.push_back(parse_layer(layers[i], i));

    if (doc.contains("lights")) {
        const json& lights = doc.at("lights");
        if (!lights.is_array()) throw SceneError("lights must be a list");
        for (std::size_t i = 0; i < lights.size(); ++i) {
            scene.lights.push_back(parse_light(lights[i], "lights[" + std::to_string(i) + "]"));
        }
    }
    if (doc.contains("settings")) apply_settings(scene.settings, doc.at("settings"));
    return scene;
}

void compile_layer_mesh(Layer& layer, std::shared_ptr<const author::QuadPatchMesh> mesh) {
    auto result = author::rasterize_shapemap(*mesh);
    layer.map = std::move(result.map);
    if (!layer.depth_ref) layer.depth = std::move(result.depth);
    layer.mesh = std::move(mesh);
}

void resolve_layer(const Scene& scene, Layer& layer) {
    auto where = [&](const std::string& f) { return layer_where(layer.id, f); };
    if (layer.has_mesh()) {
        const auto path = asset_path(scene, layer.patchmesh_ref, where("shapemap.patchmesh"));
        compile_layer_mesh(layer, std::make_shared<const author::QuadPatchMesh>(author::read_mesh(path)));
    } else {
        layer.map = read_shapemap(asset_path(scene, layer.shapemap_ref, where("shapemap")));
        layer.mesh.reset();
    }
    const int w = layer.map.width();
    const int h = layer.map.height();
    if (layer.depth_ref) {
        layer.depth = {read_gray(asset_path(scene, *layer.depth_ref, where("depth.image")), layer.depth_scale)};
    } else if (!layer.has_mesh()) {
        layer.depth = field::DepthChannel::constant(w, h, 0.0);
    }
    if (layer.diffuse_ref) {
        layer.diffuse = read_rgb(asset_path(scene, *layer.diffuse_ref, where("channels.diffuse")));
    } else {
        layer.diffuse = RgbRaster(w, h, layer.diffuse_color);
    }
    if (layer.specular_ref) {
        layer.specular = read_gray(asset_path(scene, *layer.specular_ref, where("channels.specular")), 1.0);
    } else {
        layer.specular = ScalarRaster(w, h, layer.specular_value);
    }
    if (layer.transparency_ref) {
        layer.transparency = read_gray(asset_path(scene, *layer.transparency_ref, where("channels.transparency")), 1.0);
    } else {
        layer.transparency = ScalarRaster(w, h, layer.transparency_value);
    }
}

void resolve_assets(Scene& scene) {
    if (scene.width <= 0 || scene.height <= 0) throw SceneError("canvas dimensions must be positive");
    if (scene.background_ref) {
        scene.background = read_rgb(asset_path(scene, *scene.background_ref, "canvas.background"));
    } else {
        scene.background = RgbRaster(scene.width, scene.height, scene.background_color);
    }
    if (scene.environment_ref) {
        scene.environment = read_rgb(asset_path(scene, *scene.environment_ref, "environment"));
    }
    for (Layer& layer : scene.layers) resolve_layer(scene, layer);
}

std::vector<Diagnostic> validate_scene(const Scene& scene) {
    std::vector<Diagnostic> out;
    auto error = [&](std::string where, std::string msg) {
        out.push_back({Diagnostic::Severity::Error, std::move(where), std::move(msg)});
    };
    auto warning = [&](std::string where, std::string msg) {
        out.push_back({Diagnostic::Severity::Warning, std::move(where), std::move(msg)});
    };

    if (scene.width <= 0 || scene.height <= 0) error("canvas", "dimensions must be positive");
    if (scene.layers.empty()) error("layers", "a scene needs at least one layer");
    if (scene.settings.ao.k < 4) error("settings.ao.k", "ambient occlusion needs k >= 4 directions");
    if (scene.settings.ao.radius < 1) error("settings.ao.radius", "must be >= 1");
    if (scene.settings.glossy.samples < 0) error("settings.glossy.samples", "must be >= 0");
    if (!(scene.settings.glossy.spread >= 0.0)) error("settings.glossy.spread", "must be >= 0");
    if (!(scene.settings.specular_exponent > 0.0)) error("settings.specular_exponent", "must be > 0");
    try {
        scene.view.validate();
    } catch (const std::invalid_argument& e) {
        error("view", e.what());
    }
    if (!scene.background.same_shape(scene.width, scene.height)) {
        error("canvas.background", "dimension mismatch: background image differs from the canvas size");
    }
    if (scene.settings.reflection && scene.environment.empty()) {
        error("settings.reflection", "reflection needs an environment image");
    }

    for (std::size_t i = 0; i < scene.lights.size(); ++i) {
        const Light& l = scene.lights[i];
        const std::string where = "lights[" + std::to_string(i) + "]";
        if (!(l.intensity >= 0.0)) error(where + ".intensity", "intensity must be >= 0");
        for (double c : {l.color.r, l.color.g, l.color.b}) {
            if (!(c >= 0.0 && c <= 1.0)) {
                error(where + ".color", "color components must lie in [0, 1]");
                break;
            }
        }
        if (l.kind == Light::Kind::Directional && std::abs(length(l.direction) - 1.0) > 1e-6) {
            error(where + ".direction", "direction must have unit length");
        }
    }

    std::set<std::string> ids;
    for (const Layer& layer : scene.layers) {
        auto where = [&](const std::string& f) { return layer_where(layer.id, f); };
        if (!ids.insert(layer.id).second) error(where("id"), "duplicate layer id");
        if (layer.ior && !(*layer.ior >= 1.0)) error(where("channels.ior"), "index of refraction must be ≥ 1");
        try {
            layer.params.validate();
        } catch (const std::invalid_argument& e) {
            error(where("params"), e.what());
        }
        try {
            layer.normal_params.validate();
        } catch (const std::invalid_argument& e) {
            error(where("params.s"), e.what());
        }
        const int w = layer.map.width();
        const int h = layer.map.height();
        if (w == 0 || h == 0) {
            error(where("shapemap"), "shape map is empty or unresolved");
            continue;
        }
        auto check_dims = [&](const auto& raster, const std::string& field) {
            if (!raster.same_shape(w, h)) {
                error(where(field), "dimension mismatch: " + std::to_string(raster.width()) + "x" +
                                        std::to_string(raster.height()) + " under a " + std::to_string(w) +
                                        "x" + std::to_string(h) + " shape map");
            }
        };
        check_dims(layer.diffuse, "channels.diffuse");
        check_dims(layer.specular, "channels.specular");
        check_dims(layer.transparency, "channels.transparency");
        check_dims(layer.depth.z, "depth");
        for (double v : layer.specular.data()) {
            if (!(v >= 0.0 && v <= 1.0)) {
                error(where("channels.specular"), "specular strength must lie in [0, 1]");
                break;
            }
        }
        for (double v : layer.transparency.data()) {
            if (!(v >= 0.0 && v <= 1.0)) {
                error(where("channels.transparency"), "transparency must lie in [0, 1]");
                break;
            }
        }
        for (double v : layer.depth.z.data()) {
            if (!std::isfinite(v)) {
                error(where("depth"), "depth values must be finite");
                break;
            }
        }
        const auto problems = layer.map.check_invariants();
        if (!problems.empty()) error(where("shapemap"), problems.front());
        if (scene.settings.refraction && layer.ior) {
            bool any = false;
            for (std::size_t i = 0; i < layer.map.thickness.size() && !any; ++i) {
                any = layer.map.thickness[i] != 0.0;
            }
            if (!any) warning(where("shapemap"), "thickness is identically 0: refraction will be an identity mapping");
        }
    }
    return out;
}

void require_valid(const Scene& scene) {
    for (const Diagnostic& d : validate_scene(scene)) {
        if (d.severity == Diagnostic::Severity::Error) throw SceneError(d.where + ": " + d.message);
    }
}

Scene load_scene(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open file: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    json doc;
    try {
        doc = json::parse(buf.str());
    } catch (const json::parse_error& e) {
        throw SceneError(path.string() + ": scene JSON does not parse: " + e.what());
    }
    Scene scene = parse_scene(doc, path.parent_path());
    resolve_assets(scene);
    require_valid(scene);
    return scene;
}

json scene_to_json(const Scene& scene) {
    json doc;
    json canvas{{"width", scene.width}, {"height", scene.height}};
    if (scene.background_ref) {
        canvas["background"] = {{"image", *scene.background_ref}};
    } else {
        canvas["background"] = hex_color(scene.background_color);
    }
    doc["canvas"] = canvas;
    if (scene.environment_ref) doc["environment"] = {{"image", *scene.environment_ref}};
    doc["view"] = view_to_json(scene.view);
    doc["layers"] = json::array();
    for (const Layer& layer : scene.layers) {
        json l;
        l["id"] = layer.id;
        if (layer.has_mesh()) l["shapemap"] = {{"patchmesh", layer.patchmesh_ref}};
        else l["shapemap"] = layer.shapemap_ref;
        json ch;
        ch["diffuse"] = layer.diffuse_ref ? *layer.diffuse_ref : hex_color(layer.diffuse_color);
        if (layer.specular_ref) ch["specular"] = *layer.specular_ref;
        else ch["specular"] = layer.specular_value;
        if (layer.transparency_ref) ch["transparency"] = *layer.transparency_ref;
        else ch["transparency"] = layer.transparency_value;
        if (layer.ior) ch["ior"] = *layer.ior;
        l["channels"] = ch;
        json depth{{"z_offset", layer.z_offset}, {"scale", layer.depth_scale}};
        if (layer.depth_ref) depth["image"] = *layer.depth_ref;
        l["depth"] = depth;
        l["params"] = params_to_json(layer);
        l["translate"] = {static_cast<int>(layer.translate.x), static_cast<int>(layer.translate.y)};
        l["size"] = {layer.map.width(), layer.map.height()};
        doc["layers"].push_back(l);
    }
    doc["lights"] = json::array();
    for (const Light& light : scene.lights) doc["lights"].push_back(light_to_json(light));
    doc["settings"] = settings_to_json(scene.settings);
    return doc;
}

} // namespace mock3d::scene
