#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "mock3d/app.hpp"
#include "mock3d/author.hpp"
#include "mock3d/error.hpp"
#include "mock3d/image_io.hpp"
#include "mock3d/mesh.hpp"
#include "support.hpp"

using namespace mock3d;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(MOCK3D_CLI) + " " + args + " >" + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json read_json_file(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

} // namespace

TEST_CASE("render command") {
    const fs::path dir = fixtures::scratch_dir("cli_render");
    const fs::path scene = fixtures::write_demo_scene(dir);
    std::ostringstream out, err;
    app::RenderArgs args;
    args.scene = scene;
    args.output = dir / "out.png";
    args.aux_dir = dir / "aux";
    REQUIRE(app::cmd_render(args, out, err) == app::kOk);
    CHECK(out.str().find("wrote") != std::string::npos);
    const PngImage png = read_png(dir / "out.png");
    CHECK(png.width() == 64);
    const auto manifest = read_json_file(dir / "out.json");
    CHECK(manifest.at("size") == nlohmann::json({64, 64}));
    CHECK(manifest.at("toggles").at("shadows") == true);
    CHECK(manifest.at("scene_hash").get<std::string>().size() == 16);
    CHECK(manifest.at("timings_ms").contains("total"));
    CHECK(fs::exists(dir / "aux" / "shadow_0.png"));
    CHECK(fs::exists(dir / "aux" / "ao.png"));

    SUBCASE("the binary writes the same image") {
        REQUIRE(run_cli("render " + scene.string() + " -o " + (dir / "bin.png").string() + " --threads 2",
                        dir / "log.txt") == 0);
        CHECK(read_file(dir / "bin.png") == read_file(dir / "out.png"));
        const auto other = read_json_file(dir / "bin.json");
        CHECK(other.at("scene_hash") == manifest.at("scene_hash"));
    }
    SUBCASE("overrides") {
        app::RenderArgs o = args;
        o.aux_dir.reset();
        o.output = dir / "o.png";
        o.no_shadows = true;
        o.light_pos = Vec3{60, 60, 30};
        o.view = Vec2{1, 2};
        REQUIRE(app::cmd_render(o, out, err) == app::kOk);
        CHECK(read_json_file(dir / "o.json").at("toggles").at("shadows") == false);
        CHECK(read_file(dir / "o.png") != read_file(dir / "out.png"));
    }
}

TEST_CASE("exit codes") {
    const fs::path dir = fixtures::scratch_dir("cli_exit");
    const fs::path scene = fixtures::write_demo_scene(dir);
    SUBCASE("missing asset") {
        fs::remove(dir / "swirl.png");
        std::ostringstream out, err;
        app::RenderArgs args{scene, dir / "x.png"};
        CHECK(app::cmd_render(args, out, err) == app::kInput);
        CHECK(err.str().rfind("error: ", 0) == 0);
        CHECK(err.str().find("swirl.png") != std::string::npos);
        CHECK_FALSE(fs::exists(dir / "x.png"));
        CHECK(run_cli("render " + scene.string() + " -o " + (dir / "y.png").string(), dir / "log.txt") == 2);
    }
    SUBCASE("bad arguments") {
        CHECK(run_cli("render", dir / "log.txt") == 2);
        CHECK(run_cli("frobnicate", dir / "log.txt") == 2);
        CHECK(run_cli("render " + scene.string() + " -o " + (dir / "z.png").string() + " --light-pos 1,2",
                      dir / "log.txt") == 2);
        CHECK(run_cli("--help", dir / "log.txt") == 0);
    }
    SUBCASE("invalid scene values") {
        auto j = read_json_file(scene);
        j["layers"][0]["channels"]["ior"] = 0.5;
        fixtures::write_json(dir / "bad.json", j);
        CHECK(run_cli("render " + (dir / "bad.json").string() + " -o " + (dir / "b.png").string(), dir / "log.txt") == 2);
        CHECK(slurp(dir / "log.txt").find("ior") != std::string::npos);
    }
    SUBCASE("guarded maps exceptions") {
        std::ostringstream err;
        CHECK(app::guarded(err, [] { return app::kOk; }) == 0);
        CHECK(app::guarded(err, []() -> int { throw InputError("bad"); }) == 2);
        CHECK(app::guarded(err, []() -> int { throw std::invalid_argument("bad"); }) == 2);
        CHECK(app::guarded(err, []() -> int { throw std::runtime_error("boom"); }) == 1);
        CHECK(err.str().find("internal error: boom") != std::string::npos);
    }
}

TEST_CASE("compile command matches the library") {
    const fs::path dir = fixtures::scratch_dir("cli_compile");
    const author::QuadPatchMesh mesh = fixtures::radial_grid();
    author::write_mesh(dir / "radial_mesh.json", mesh);
    REQUIRE(run_cli("compile " + (dir / "radial_mesh.json").string() + " -o " + (dir / "radial.png").string() + " --res 64",
                    dir / "log.txt") == 0);
    const author::RasterizeResult lib = author::rasterize_shapemap(mesh, {.resolution = 64});
    CHECK(to_rgba8(read_png(dir / "radial.png")) == encode_shapemap(lib.map));
    write_shapemap(dir / "lib.png", lib.map);
    CHECK(read_file(dir / "radial.png") == read_file(dir / "lib.png"));
    CHECK(read_json_file(dir / "radial.json").at("newton_failures") == 0);
}

TEST_CASE("compile sidecar and feather") {
    const fs::path dir = fixtures::scratch_dir("cli_compile2");
    author::write_mesh(dir / "m.json", author::make_polygon_disk(6));
    std::ostringstream out, err;
    app::CompileArgs args{dir / "m.json", dir / "m.png", 48, true, 3.0, 1};
    REQUIRE(app::cmd_compile(args, out, err) == app::kOk);
    const auto side = read_json_file(author::sidecar_path(dir / "m.png"));
    CHECK(side.at("operation") == "compile");
    CHECK(side.at("scale") == 48.0);
    CHECK(side.at("feather_width") == 3.0);
    args.resolution = -2;
    CHECK(app::cmd_compile(args, out, err) == app::kInput);
}

TEST_CASE("mesh commands") {
    const fs::path dir = fixtures::scratch_dir("cli_mesh");
    REQUIRE(run_cli("mesh grid --nx 3 --ny 2 --size 300,200 -o " + (dir / "g.json").string(), dir / "log.txt") == 0);
    CHECK(slurp(dir / "log.txt").find("12 vertices") != std::string::npos);
    const author::QuadPatchMesh g = author::read_mesh(dir / "g.json");
    CHECK(g.faces.size() == 6);
    CHECK(g.size.x == 300.0);
    CHECK(g.vertices.back().pos.x == doctest::Approx(300.0));
    REQUIRE(run_cli("mesh split " + (dir / "g.json").string() + " --edge 0 -o " + (dir / "s.json").string(),
                    dir / "log.txt") == 0);
    CHECK(author::read_mesh(dir / "s.json").faces.size() == 8);
    REQUIRE(run_cli("mesh polygon --sides 6 -o " + (dir / "p.json").string(), dir / "log.txt") == 0);
    CHECK(author::read_mesh(dir / "p.json").faces.size() == 3);
    CHECK(run_cli("mesh polygon --sides 5 -o " + (dir / "q.json").string(), dir / "log.txt") == 2);
    CHECK(run_cli("mesh split " + (dir / "g.json").string() + " --edge 999 -o " + (dir / "e.json").string(),
                  dir / "log.txt") == 2);
}

TEST_CASE("bake command") {
    const fs::path dir = fixtures::scratch_dir("cli_bake");
    // a gray ramp rising one level per pixel along x
    Rgba8Image img(32, 16);
    for (int y = 0; y < 16; ++y) {
        for (int x = 0; x < 32; ++x) {
            const auto v = static_cast<std::uint8_t>(100 + x);
            img(x, y) = {v, v, v, 255};
        }
    }
    write_png(dir / "h.png", img);
    REQUIRE(run_cli("bake " + (dir / "h.png").string() + " -o " + (dir / "b.png").string() +
                        " --gain 0.5 --height-scale 51 --thickness 0.25",
                    dir / "log.txt") == 0);
    const ShapeMap m = read_shapemap(dir / "b.png");
    // slope 51/255 = 0.2 per pixel, times gain 0.5
    for (int y = 1; y < 15; ++y) {
        for (int x = 1; x < 31; ++x) {
            CHECK(m.n0(x, y) == doctest::Approx(0.1).epsilon(0.05));
            CHECK(std::abs(m.n1(x, y)) <= 1.0 / 255);
            CHECK(m.thickness(x, y) == doctest::Approx(0.25).epsilon(0.02));
        }
    }
    const auto side = read_json_file(dir / "b.json");
    CHECK(side.at("operation") == "bake");
    CHECK(run_cli("bake " + (dir / "h.png").string() + " -o " + (dir / "c.png").string() + " --thickness 2",
                  dir / "log.txt") == 2);
    CHECK(run_cli("bake " + (dir / "nope.png").string() + " -o " + (dir / "c.png").string(), dir / "log.txt") == 2);
}

TEST_CASE("photo command") {
    const fs::path dir = fixtures::scratch_dir("cli_photo");
    write_png(dir / "key.png", Rgba8Image(16, 16, {0, 255, 0, 255}));
    REQUIRE(run_cli("photo " + (dir / "key.png").string() + " -o " + (dir / "k.png").string() + " --key '#00ff00'",
                    dir / "log.txt") == 0);
    const PngImage out = read_png(dir / "k.png");
    for (int y = 0; y < 16; ++y) {
        for (int x = 0; x < 16; ++x) CHECK(out.ratio(x, y, 3) == 0.0);
    }
    CHECK(read_json_file(dir / "k.json").at("key") == "#00ff00");
    CHECK(run_cli("photo " + (dir / "key.png").string() + " -o " + (dir / "k2.png").string() + " --key green",
                  dir / "log.txt") == 2);
}

TEST_CASE("analyze command") {
    const fs::path dir = fixtures::scratch_dir("cli_analyze");
    write_shapemap(dir / "rot.png", fixtures::rotation_map(32, 32, 0.01));
    std::ostringstream out, err;
    REQUIRE(app::cmd_analyze({dir / "rot.png", dir / "diag", 1}, out, err) == app::kOk);
    for (const char* f : {"curl.png", "curl.txt", "view_dependence.png", "view_dependence.txt", "summary.json"}) {
        CHECK(fs::exists(dir / "diag" / f));
    }
    const auto summary = read_json_file(dir / "diag" / "summary.json");
    CHECK(summary.at("max_abs_curl").get<double>() > 0.015);
    CHECK(summary.at("mean_view_dependence").get<double>() > 0.0);
    CHECK(app::cmd_analyze({dir / "none.png", dir / "diag", 1}, out, err) == app::kInput);
}
