#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mock3d/app.hpp"
#include "mock3d/author.hpp"
#include "mock3d/diagnostics.hpp"
#include "mock3d/error.hpp"
#include "mock3d/mesh.hpp"

namespace mock3d::app {
namespace {

using nlohmann::json;

constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void fnv(std::uint64_t& h, const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
}

template <class T>
void fnv_raster(std::uint64_t& h, const Raster<T>& r) {
    const int dims[2] = {r.width(), r.height()};
    fnv(h, dims, sizeof dims);
    if (!r.empty()) fnv(h, r.data().data(), r.size() * sizeof(T));
}

std::string hex64(std::uint64_t v) {
    std::ostringstream s;
    s << std::hex;
    s.width(16);
    s.fill('0');
    s << v;
    return s.str();
}

void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream f(path);
    if (!f) throw InputError("cannot write file: " + path.string());
    f << j.dump(2) << "\n";
}

// Mean over each divisor x divisor block that lies inside the raster.
template <class T, class Weight>
Raster<T> block_mean(const Raster<T>& src, int d, Weight&& weight) {
    const int w = (src.width() + d - 1) / d;
    const int h = (src.height() + d - 1) / d;
    Raster<T> out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            T sum{};
            double total = 0.0;
            for (int sy = y * d; sy < std::min(src.height(), (y + 1) * d); ++sy) {
                for (int sx = x * d; sx < std::min(src.width(), (x + 1) * d); ++sx) {
                    const double wt = weight(sx, sy);
                    sum = sum + src(sx, sy) * wt;
                    total += wt;
                }
            }
            if (total > 0.0) out(x, y) = sum * (1.0 / total);
        }
    }
    return out;
}

template <class T>
Raster<T> block_mean(const Raster<T>& src, int d) {
    return block_mean(src, d, [](int, int) { return 1.0; });
}

author::QuadPatchMesh scaled_mesh(author::QuadPatchMesh mesh, double w, double h) {
    if (w <= 0.0 && h <= 0.0) return mesh;
    if (w <= 0.0 || h <= 0.0) throw std::invalid_argument("mesh size needs both width and height");
    const double sx = w / mesh.size.x;
    const double sy = h / mesh.size.y;
    for (auto& v : mesh.vertices) v.pos = {v.pos.x * sx, v.pos.y * sy};
    for (auto& e : mesh.edges) {
        for (Vec2& p : e.curve.p) p = {p.x * sx, p.y * sy};
    }
    mesh.size = {w, h};
    return mesh;
}

} // namespace

int guarded(std::ostream& err, const std::function<int()>& fn) {
    try {
        return fn();
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return kInput;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kInput;
    } catch (const json::exception& e) {
        err << "error: " << e.what() << "\n";
        return kInput;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kInternal;
    }
}

RenderRequest parse_render_request(const json& j, const scene::Scene& scene) {
    if (!j.is_object()) throw InputError("render request must be a JSON object");
    RenderRequest req;
    for (const auto& [key, value] : j.items()) {
        if (key == "lights") {
            if (!value.is_array()) throw InputError("lights must be a list");
            std::vector<scene::Light> lights;
            for (std::size_t i = 0; i < value.size(); ++i) {
                lights.push_back(scene::parse_light(value[i], "lights[" + std::to_string(i) + "]"));
            }
            req.lights = std::move(lights);
        } else if (key == "layers") {
            if (!value.is_object()) throw InputError("layers must map layer ids to params");
            for (const auto& [id, params] : value.items()) {
                if (!scene.find_layer(id)) throw InputError("unknown layer '" + id + "'");
                const json& p = params.contains("params") ? params.at("params") : params;
                req.layer_params[id] = p;
            }
        } else if (key == "settings") {
            req.settings = value;
        } else if (key == "view") {
            req.view = value;
        } else if (key == "size") {
            if (!value.is_number_integer() || value.get<int>() < 1) {
                throw InputError("size must be a positive integer downscale divisor");
            }
            req.size = value.get<int>();
        } else {
            throw InputError("unknown render request field '" + key + "'");
        }
    }
    // Surface invalid values now rather than at render time.
    scene::require_valid(apply_request(scene, req));
    return req;
}

scene::Scene apply_request(const scene::Scene& base, const RenderRequest& request) {
    scene::Scene s = base;
    if (request.lights) s.lights = *request.lights;
    for (const auto& [id, params] : request.layer_params) {
        scene::Layer* layer = s.find_layer(id);
        if (!layer) throw InputError("unknown layer '" + id + "'");
        scene::apply_params(*layer, params, "layer '" + id + "': params");
    }
    if (request.settings) scene::apply_settings(s.settings, *request.settings);
    if (request.view) s.view = scene::parse_view(*request.view, s.width, s.height);
    if (request.size > 1) s = downscale_scene(s, request.size);
    return s;
}

scene::Scene downscale_scene(const scene::Scene& scene, int d) {
    if (d < 1) throw std::invalid_argument("downscale divisor must be >= 1");
    if (d == 1) return scene;
    const double f = 1.0 / d;
    scene::Scene s = scene;
    s.width = std::max(1, scene.width / d);
    s.height = std::max(1, scene.height / d);
    s.background = block_mean(scene.background, d);
    if (s.background.width() != s.width || s.background.height() != s.height) {
        RgbRaster bg(s.width, s.height);
        for (int y = 0; y < s.height; ++y) {
            for (int x = 0; x < s.width; ++x) bg(x, y) = s.background(x, y);
        }
        s.background = std::move(bg);
    }
    s.view.center = scene.view.center * f;
    s.view.step = scene.view.step;
    for (scene::Light& l : s.lights) l.position = l.position * f;
    s.settings.ao.radius = std::max(1, static_cast<int>(std::lround(scene.settings.ao.radius * f)));
    for (scene::Layer& l : s.layers) {
        const ShapeMap& m = l.map;
        auto by_alpha = [&](int x, int y) { return m.alpha(x, y); };
        ShapeMap small;
        small.n0 = block_mean(m.n0, d, by_alpha);
        small.n1 = block_mean(m.n1, d, by_alpha);
        small.thickness = block_mean(m.thickness, d, by_alpha);
        small.alpha = block_mean(m.alpha, d);
        small.normalize();
        l.map = std::move(small);
        l.depth.z = block_mean(l.depth.z, d);
        for (double& z : l.depth.z.data()) z *= f;
        l.diffuse = block_mean(l.diffuse, d);
        l.specular = block_mean(l.specular, d);
        l.transparency = block_mean(l.transparency, d);
        l.z_offset *= f;
        l.params.thickness_scale *= f;
        l.translate = {std::floor(l.translate.x * f), std::floor(l.translate.y * f)};
    }
    return s;
}

std::uint64_t scene_hash(const scene::Scene& scene) {
    std::uint64_t h = kFnvOffset;
    const std::string canonical = scene::scene_to_json(scene).dump();
    fnv(h, canonical.data(), canonical.size());
    fnv_raster(h, scene.background);
    fnv_raster(h, scene.environment);
    for (const scene::Layer& l : scene.layers) {
        fnv_raster(h, l.map.n0);
        fnv_raster(h, l.map.n1);
        fnv_raster(h, l.map.thickness);
        fnv_raster(h, l.map.alpha);
        fnv_raster(h, l.depth.z);
        fnv_raster(h, l.diffuse);
        fnv_raster(h, l.specular);
        fnv_raster(h, l.transparency);
    }
    return h;
}

RenderResult render_to_png(const scene::Scene& scene, const render::RenderOptions& options) {
    RenderResult r;
    r.output = render::render_scene(scene, options);
    r.png = encode_png(r.output.color, {.srgb = true});
    const scene::Settings& st = scene.settings;
    r.manifest = {
        {"scene_hash", hex64(scene_hash(scene))},
        {"seed", st.seed},
        {"size", {scene.width, scene.height}},
        {"toggles",
         {{"shadows", st.shadows},
          {"ao", st.ao.enabled},
          {"reflection", st.reflection},
          {"refraction", st.refraction},
          {"fresnel", st.fresnel}}},
        {"timings_ms", r.output.timings_ms},
        {"warnings", r.output.warnings},
    };
    return r;
}

int cmd_render(const RenderArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        scene::Scene s = scene::load_scene(args.scene);
        if (args.light_pos) {
            scene::Light l;
            l.kind = scene::Light::Kind::Point;
            l.position = *args.light_pos;
            s.lights = {l};
        }
        if (args.no_shadows) s.settings.shadows = false;
        if (args.view) s.view = field::RayFan::point(*args.view, s.view.step);
        scene::require_valid(s);
        const RenderResult r = render_to_png(s, {args.threads, args.aux_dir.has_value()});
        write_file(args.output, r.png);
        write_json(author::sidecar_path(args.output), r.manifest);
        if (args.aux_dir) {
            std::filesystem::create_directories(*args.aux_dir);
            for (std::size_t i = 0; i < r.output.shadow_masks.size(); ++i) {
                write_png_gray(*args.aux_dir / ("shadow_" + std::to_string(i) + ".png"),
                               render::mask_to_gray(r.output.shadow_masks[i]));
            }
            write_png_gray(*args.aux_dir / "ao.png", render::unit_to_gray(r.output.ao));
        }
        for (const std::string& w : r.output.warnings) err << "warning: " << w << "\n";
        out << "wrote " << args.output.string() << "\n";
        return kOk;
    });
}

int cmd_analyze(const AnalyzeArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const ShapeMap map = read_shapemap(args.input);
        std::filesystem::create_directories(args.output_dir);
        const field::ScalarMap curl = field::curl_map(map);
        const auto depth = field::DepthChannel::constant(map.width(), map.height());
        const field::ScalarMap vd = field::view_dependence_map(
            map, depth, {}, field::default_analysis_centers(map.width(), map.height()), {0.5, args.threads});
        field::write_false_color(args.output_dir / "curl.png", field::false_color(curl));
        field::write_false_color(args.output_dir / "view_dependence.png", field::false_color(vd));
        const json summary{{"max_abs_curl", curl.max_abs()}, {"mean_view_dependence", vd.mean()}};
        write_json(args.output_dir / "summary.json", summary);
        out << summary.dump() << "\n";
        return kOk;
    });
}

int cmd_bake(const BakeArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (!(args.thickness >= 0.0 && args.thickness <= 1.0)) throw std::invalid_argument("--thickness must be in [0, 1]");
        if (!std::isfinite(args.gain)) throw std::invalid_argument("--gain must be finite");
        const PngImage png = read_png(args.input);
        ScalarRaster h(png.width(), png.height());
        for (int y = 0; y < h.height(); ++y) {
            for (int x = 0; x < h.width(); ++x) h(x, y) = png.ratio(x, y, 0) * args.height_scale;
        }
        const ShapeMap map = author::bake_from_heightfield(h, args.thickness, args.gain);
        write_shapemap(args.output, map);
        write_json(author::sidecar_path(args.output),
                   {{"source", args.input.filename().string()},
                    {"operation", "bake"},
                    {"gain", args.gain},
                    {"height_scale", args.height_scale},
                    {"thickness", args.thickness}});
        out << "wrote " << args.output.string() << "\n";
        return kOk;
    });
}

int cmd_photo(const PhotoArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto key = scene::parse_hex_color(args.key);
        if (!key) throw std::invalid_argument("--key must be #rrggbb");
        const Rgba8 k{static_cast<std::uint8_t>(std::lround(key->r * 255)),
                      static_cast<std::uint8_t>(std::lround(key->g * 255)),
                      static_cast<std::uint8_t>(std::lround(key->b * 255)), 255};
        const ShapeMap map = author::photo_to_shapemap(to_rgba8(read_png(args.input)), k, args.tolerance, args.blue);
        write_shapemap(args.output, map);
        write_json(author::sidecar_path(args.output),
                   {{"source", args.input.filename().string()},
                    {"operation", "photo"},
                    {"key", args.key},
                    {"tolerance", args.tolerance},
                    {"blue", args.blue}});
        out << "wrote " << args.output.string() << "\n";
        return kOk;
    });
}

int cmd_compile(const CompileArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (args.resolution < 0) throw std::invalid_argument("--res must be non-negative");
        const author::QuadPatchMesh mesh = author::read_mesh(args.input);
        author::RasterizeOptions opt;
        opt.resolution = args.resolution;
        opt.feather = args.feather;
        opt.feather_width = args.feather_width;
        opt.threads = args.threads;
        const author::RasterizeResult r = author::rasterize_shapemap(mesh, opt);
        write_shapemap(args.output, r.map);
        json side{{"source", args.input.filename().string()},
                  {"operation", "compile"},
                  {"scale", r.scale},
                  {"feather_width", args.feather ? json(args.feather_width) : json(nullptr)},
                  {"newton_failures", r.newton_failures},
                  {"degenerate_faces", r.degenerate_faces},
                  {"warnings", r.warnings}};
        write_json(author::sidecar_path(args.output), side);
        for (const std::string& w : r.warnings) err << "warning: " << w << "\n";
        out << "wrote " << args.output.string() << "\n";
        return kOk;
    });
}

int cmd_mesh(const MeshArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        author::QuadPatchMesh mesh;
        if (args.kind == "grid") {
            mesh = scaled_mesh(author::make_grid(args.nx, args.ny), args.width, args.height);
        } else if (args.kind == "polygon") {
            mesh = scaled_mesh(author::make_polygon_disk(args.sides), args.width, args.height);
        } else if (args.kind == "split") {
            mesh = author::split_edge(author::read_mesh(args.input), args.edge, args.t);
        } else {
            throw std::invalid_argument("unknown mesh operation '" + args.kind + "'");
        }
        author::write_mesh(args.output, mesh);
        out << "wrote " << args.output.string() << " (" << mesh.vertices.size() << " vertices, "
            << mesh.edges.size() << " edges, " << mesh.faces.size() << " faces)\n";
        return kOk;
    });
}

} // namespace mock3d::app
