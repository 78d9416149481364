#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mock3d/image_io.hpp"
#include "mock3d/renderer.hpp"
#include "mock3d/scene.hpp"

namespace mock3d::app {

/// 0 success, 1 internal error, 2 input or validation error.
enum ExitCode { kOk = 0, kInternal = 1, kInput = 2 };

/// Runs fn and maps exceptions to exit codes, printing "error: ..." to err.
int guarded(std::ostream& err, const std::function<int()>& fn);

/// Overrides applied to a loaded scene for one render.
struct RenderRequest {
    std::optional<std::vector<scene::Light>> lights;
    std::map<std::string, nlohmann::json> layer_params;  // layer id -> params object
    std::optional<nlohmann::json> settings;
    std::optional<nlohmann::json> view;
    int size = 1;  // integer downscale divisor
};

/// Throws InputError when the request names unknown layers or carries
/// out-of-range values.
RenderRequest parse_render_request(const nlohmann::json& j, const scene::Scene& scene);
scene::Scene apply_request(const scene::Scene& scene, const RenderRequest& request);

/// Shrinks the canvas and every layer by an integer factor. Lengths in
/// canvas units (positions, depths, radii) shrink by the same factor so the
/// smaller render shows the same picture.
scene::Scene downscale_scene(const scene::Scene& scene, int divisor);

/// FNV-1a over the canonical scene JSON and the resolved layer rasters.
std::uint64_t scene_hash(const scene::Scene& scene);

struct RenderResult {
    render::RenderOutput output;
    Bytes png;
    nlohmann::json manifest;
};

RenderResult render_to_png(const scene::Scene& scene, const render::RenderOptions& options = {});

struct RenderArgs {
    std::filesystem::path scene;
    std::filesystem::path output;
    std::optional<Vec3> light_pos;
    bool no_shadows = false;
    std::optional<Vec2> view;
    int threads = 0;
    std::optional<std::filesystem::path> aux_dir;
};
/// Writes the PNG and `<stem>.json` next to it holding the render manifest.
int cmd_render(const RenderArgs& args, std::ostream& out, std::ostream& err);

struct AnalyzeArgs {
    std::filesystem::path input;
    std::filesystem::path output_dir;
    int threads = 0;
};
/// curl.png/.txt, view_dependence.png/.txt and summary.json in output_dir.
int cmd_analyze(const AnalyzeArgs& args, std::ostream& out, std::ostream& err);

struct BakeArgs {
    std::filesystem::path input;
    std::filesystem::path output;
    double thickness = 0.5;
    double gain = 1.0;
    double height_scale = 32.0;  // canvas units per unit gray
};
int cmd_bake(const BakeArgs& args, std::ostream& out, std::ostream& err);

struct PhotoArgs {
    std::filesystem::path input;
    std::filesystem::path output;
    std::string key;
    double tolerance = 40.0;
    double blue = 0.5;
};
int cmd_photo(const PhotoArgs& args, std::ostream& out, std::ostream& err);

struct CompileArgs {
    std::filesystem::path input;
    std::filesystem::path output;
    int resolution = 0;
    bool feather = false;
    double feather_width = 4.0;
    int threads = 0;
};
int cmd_compile(const CompileArgs& args, std::ostream& out, std::ostream& err);

struct MeshArgs {
    std::string kind;  // grid, polygon, split
    std::filesystem::path output;
    int nx = 2;
    int ny = 2;
    int sides = 8;
    std::filesystem::path input;  // split
    int edge = 0;
    double t = 0.5;
    double width = 0.0;  // optional canvas size for generated meshes
    double height = 0.0;
};
int cmd_mesh(const MeshArgs& args, std::ostream& out, std::ostream& err);

/// HTTP-independent request handling for the studio service; the server
/// adapter in service.cpp forwards requests here.
struct Response {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
    std::map<std::string, std::string> headers;
};

class StudioService {
public:
    explicit StudioService(scene::Scene scene, int threads = 0);

    Response handle(const std::string& method, const std::string& path, const std::string& body);

    std::shared_ptr<const scene::Scene> snapshot() const;

    /// Blocks serving on host:port until stop() is called. Throws
    /// std::runtime_error when the port cannot be bound.
    void run(const std::string& host, int port);
    /// Binds first and returns the port (an ephemeral one when port is 0),
    /// then serves on a background thread.
    int start(const std::string& host, int port);
    void stop();
    ~StudioService();

private:
    Response get_scene() const;
    Response post_render(const std::string& body) const;
    Response get_shapemap(const std::string& id) const;
    Response get_curl(const std::string& id) const;
    Response get_mesh(const std::string& id) const;
    Response post_field(const std::string& id, const std::string& body);
    Response post_params(const std::string& id, const std::string& body);

    mutable std::mutex state_mutex_;  // guards scene_ pointer swaps
    std::mutex writer_mutex_;         // serializes authoring mutations
    std::shared_ptr<const scene::Scene> scene_;
    int threads_ = 0;

    struct Server;
    std::unique_ptr<Server> server_;
};

int cmd_serve(const std::filesystem::path& scene, const std::string& host, int port, int threads,
              std::ostream& out, std::ostream& err);

} // namespace mock3d::app
