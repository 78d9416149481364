#include <iostream>
#include <optional>
#include <vector>

#include <CLI11.hpp>

#include "mock3d/app.hpp"

using namespace mock3d;

namespace {

// CLI11 validates the element count through expected(); this just builds
// the value.
std::optional<Vec3> vec3_of(const std::vector<double>& v) {
    if (v.empty()) return std::nullopt;
    return Vec3{v[0], v[1], v[2]};
}

std::optional<Vec2> vec2_of(const std::vector<double>& v) {
    if (v.empty()) return std::nullopt;
    return Vec2{v[0], v[1]};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App cli{"Mock-3D shape map renderer and authoring tools"};
    cli.require_subcommand(1);

    app::RenderArgs render;
    std::vector<double> light_pos;
    std::vector<double> view;
    std::string aux_dir;
    auto* r = cli.add_subcommand("render", "Render a scene to PNG");
    r->add_option("scene", render.scene, "Scene JSON")->required()->check(CLI::ExistingFile);
    r->add_option("-o,--output", render.output, "Output PNG")->required();
    r->add_option("--light-pos", light_pos, "Replace the lights with one point light at x,y,z")
        ->delimiter(',')
        ->expected(3);
    r->add_flag("--no-shadows", render.no_shadows, "Disable shadows");
    r->add_option("--view", view, "View ray center cx,cy")->delimiter(',')->expected(2);
    r->add_option("--threads", render.threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    r->add_option("--aux-dir", aux_dir, "Also write shadow masks and AO here");

    app::AnalyzeArgs analyze;
    auto* a = cli.add_subcommand("analyze", "Curl and view-dependence diagnostics for a shape map");
    a->add_option("map", analyze.input, "Shape map PNG")->required();
    a->add_option("-o,--output", analyze.output_dir, "Output directory")->required();
    a->add_option("--threads", analyze.threads)->check(CLI::NonNegativeNumber);

    app::BakeArgs bake;
    auto* b = cli.add_subcommand("bake", "Shape map from a grayscale height field");
    b->add_option("height", bake.input, "Height PNG")->required();
    b->add_option("-o,--output", bake.output, "Output shape map")->required();
    b->add_option("--thickness", bake.thickness, "Constant thickness in [0, 1]");
    b->add_option("--gain", bake.gain, "Gradient gain");
    b->add_option("--height-scale", bake.height_scale, "Canvas units per unit gray");

    app::PhotoArgs photo;
    auto* p = cli.add_subcommand("photo", "Shape map from a photo against a key color");
    p->add_option("image", photo.input, "Photo PNG")->required();
    p->add_option("-o,--output", photo.output, "Output shape map")->required();
    p->add_option("--key", photo.key, "Background key #rrggbb")->required();
    p->add_option("--tol", photo.tolerance, "RGB distance treated as background");
    p->add_option("--blue", photo.blue, "Thickness for covered pixels");

    app::CompileArgs compile;
    auto* c = cli.add_subcommand("compile", "Rasterize a patch mesh to a shape map");
    c->add_option("mesh", compile.input, "Mesh JSON")->required();
    c->add_option("-o,--output", compile.output, "Output shape map")->required();
    c->add_option("--res", compile.resolution, "Pixels along the longer side (0 = mesh units)");
    c->add_flag("--feather", compile.feather, "Ramp thickness to 0 at the silhouette");
    c->add_option("--feather-width", compile.feather_width, "Feather ramp width in pixels");
    c->add_option("--threads", compile.threads)->check(CLI::NonNegativeNumber);

    app::MeshArgs mesh;
    std::vector<double> mesh_size;
    auto* m = cli.add_subcommand("mesh", "Create or edit patch meshes");
    m->require_subcommand(1);
    auto* mg = m->add_subcommand("grid", "nx x ny grid of quads");
    mg->add_option("--nx", mesh.nx);
    mg->add_option("--ny", mesh.ny);
    auto* mp = m->add_subcommand("polygon", "Polygonal disk fanned to its center");
    mp->add_option("--sides", mesh.sides);
    auto* ms = m->add_subcommand("split", "Split an edge and the face strip across it");
    ms->add_option("mesh", mesh.input, "Mesh JSON")->required();
    ms->add_option("--edge", mesh.edge)->required();
    ms->add_option("--t", mesh.t, "Curve parameter of the split");
    for (auto* sub : {mg, mp, ms}) sub->add_option("-o,--output", mesh.output, "Output mesh JSON")->required();
    for (auto* sub : {mg, mp}) {
        sub->add_option("--size", mesh_size, "Canvas size w,h")->delimiter(',')->expected(2);
    }

    std::string serve_scene;
    int port = 8080;
    std::string host = "127.0.0.1";
    int serve_threads = 0;
    auto* s = cli.add_subcommand("serve", "HTTP service for the studio front end");
    s->add_option("scene", serve_scene, "Scene JSON")->required();
    s->add_option("--port", port);
    s->add_option("--host", host);
    s->add_option("--threads", serve_threads)->check(CLI::NonNegativeNumber);

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = cli.exit(e);
        return code == 0 ? 0 : app::kInput;
    }

    if (r->parsed()) {
        render.light_pos = vec3_of(light_pos);
        render.view = vec2_of(view);
        if (!aux_dir.empty()) render.aux_dir = aux_dir;
        return app::cmd_render(render, std::cout, std::cerr);
    }
    if (a->parsed()) return app::cmd_analyze(analyze, std::cout, std::cerr);
    if (b->parsed()) return app::cmd_bake(bake, std::cout, std::cerr);
    if (p->parsed()) return app::cmd_photo(photo, std::cout, std::cerr);
    if (c->parsed()) return app::cmd_compile(compile, std::cout, std::cerr);
    if (m->parsed()) {
        mesh.kind = mg->parsed() ? "grid" : mp->parsed() ? "polygon" : "split";
        if (!mesh_size.empty()) {
            mesh.width = mesh_size[0];
            mesh.height = mesh_size[1];
        }
        return app::cmd_mesh(mesh, std::cout, std::cerr);
    }
    if (s->parsed()) return app::cmd_serve(serve_scene, host, port, serve_threads, std::cout, std::cerr);
    return app::kInput;
}
