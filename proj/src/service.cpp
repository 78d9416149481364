#include <regex>
#include <stdexcept>
#include <thread>

#include <httplib.h>

#include "mock3d/app.hpp"
#include "mock3d/diagnostics.hpp"
#include "mock3d/error.hpp"

namespace mock3d::app {
namespace {

using nlohmann::json;

Response json_response(int status, const json& body) {
    return {status, "application/json", body.dump(), {}};
}

Response error_response(int status, const std::string& message) {
    return json_response(status, {{"error", message}});
}

Response png_response(const Bytes& png) {
    return {200, "image/png", std::string(png.begin(), png.end()), {}};
}

json parse_body(const std::string& body) {
    try {
        return json::parse(body);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("request body is not valid JSON: ") + e.what());
    }
}

const scene::Layer& require_layer(const scene::Scene& s, const std::string& id) {
    const scene::Layer* layer = s.find_layer(id);
    if (!layer) throw std::out_of_range("unknown layer '" + id + "'");
    return *layer;
}

} // namespace

struct StudioService::Server {
    httplib::Server http;
    std::thread worker;
};

StudioService::StudioService(scene::Scene scene, int threads)
    : scene_(std::make_shared<const scene::Scene>(std::move(scene))), threads_(threads) {}

StudioService::~StudioService() { stop(); }

std::shared_ptr<const scene::Scene> StudioService::snapshot() const {
    std::lock_guard lock(state_mutex_);
    return scene_;
}

Response StudioService::handle(const std::string& method, const std::string& target, const std::string& body) {
    static const std::regex layer_route(R"(^/layers/([^/]+)/(shapemap|curl|mesh|field|params)$)");
    const std::string path = target.substr(0, target.find('?'));
    try {
        if (method == "GET" && path == "/health") return json_response(200, {{"status", "ok"}});
        if (method == "GET" && path == "/scene") return get_scene();
        if (method == "POST" && path == "/render") return post_render(body);
        std::smatch m;
        if (std::regex_match(path, m, layer_route)) {
            const std::string id = m[1];
            const std::string what = m[2];
            if (method == "GET" && what == "shapemap") return get_shapemap(id);
            if (method == "GET" && what == "curl") return get_curl(id);
            if (method == "GET" && what == "mesh") return get_mesh(id);
            if (method == "POST" && what == "field") return post_field(id, body);
            if (method == "POST" && what == "params") return post_params(id, body);
            return error_response(405, method + " is not supported on " + path);
        }
        return error_response(404, "no route for " + method + " " + path);
    } catch (const std::out_of_range& e) {
        return error_response(404, e.what());
    } catch (const InputError& e) {
        return error_response(400, e.what());
    } catch (const std::invalid_argument& e) {
        return error_response(400, e.what());
    } catch (const json::exception& e) {
        return error_response(400, e.what());
    } catch (const std::exception& e) {
        return error_response(500, e.what());
    }
}

Response StudioService::get_scene() const {
    return json_response(200, scene::scene_to_json(*snapshot()));
}

Response StudioService::post_render(const std::string& body) const {
    const auto base = snapshot();
    const json j = body.empty() ? json::object() : parse_body(body);
    const RenderRequest req = parse_render_request(j, *base);
    const RenderResult r = render_to_png(apply_request(*base, req), {threads_, false});
    Response resp = png_response(r.png);
    resp.headers["X-Render-Manifest"] = httplib::detail::base64_encode(r.manifest.dump());
    return resp;
}

Response StudioService::get_shapemap(const std::string& id) const {
    const auto s = snapshot();
    return png_response(encode_png(encode_shapemap(require_layer(*s, id).map)));
}

Response StudioService::get_curl(const std::string& id) const {
    const auto s = snapshot();
    const field::FalseColor fc = field::false_color(field::curl_map(require_layer(*s, id).map));
    Response resp = png_response(encode_png(fc.image));
    resp.headers["X-Curl-Vmax"] = json(fc.vmax).dump();
    return resp;
}

Response StudioService::get_mesh(const std::string& id) const {
    const auto s = snapshot();
    const scene::Layer& layer = require_layer(*s, id);
    if (!layer.mesh) throw InputError("layer '" + id + "' is not mesh-backed");
    return {200, "application/json", author::mesh_to_json(*layer.mesh), {}};
}

Response StudioService::post_field(const std::string& id, const std::string& body) {
    std::lock_guard writer(writer_mutex_);
    const auto base = snapshot();
    const scene::Layer& current = require_layer(*base, id);
    if (!current.mesh) throw InputError("layer '" + id + "' is not mesh-backed");
    const json j = parse_body(body);
    if (!j.is_object() || j.empty()) throw InputError("field edit must map vertex ids to [x, y] control vectors");
    auto mesh = std::make_shared<author::QuadPatchMesh>(*current.mesh);
    for (const auto& [key, value] : j.items()) {
        std::size_t used = 0;
        int vid = -1;
        try {
            vid = std::stoi(key, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != key.size() || vid < 0 || vid >= static_cast<int>(mesh->vertices.size())) {
            throw InputError("unknown vertex id '" + key + "'");
        }
        if (!value.is_array() || value.size() != 2 || !value[0].is_number() || !value[1].is_number()) {
            throw InputError("vertex " + key + ": control vector must be [x, y]");
        }
        const Vec2 c{value[0].get<double>(), value[1].get<double>()};
        if (!(std::abs(c.x) <= 1.0 && std::abs(c.y) <= 1.0)) {
            throw InputError("vertex " + key + ": control vector components must lie in [-1, 1]");
        }
        mesh->vertices[static_cast<std::size_t>(vid)].control = c;
    }
    auto next = std::make_shared<scene::Scene>(*base);
    scene::Layer& layer = *next->find_layer(id);
    scene::compile_layer_mesh(layer, std::move(mesh));
    scene::require_valid(*next);
    const Bytes png = encode_png(encode_shapemap(layer.map));
    {
        std::lock_guard lock(state_mutex_);
        scene_ = std::move(next);
    }
    return png_response(png);
}

Response StudioService::post_params(const std::string& id, const std::string& body) {
    std::lock_guard writer(writer_mutex_);
    const auto base = snapshot();
    require_layer(*base, id);
    const json j = parse_body(body);
    auto next = std::make_shared<scene::Scene>(*base);
    scene::Layer& layer = *next->find_layer(id);
    scene::apply_params(layer, j, "layer '" + id + "': params");
    scene::require_valid(*next);
    json params = scene::params_to_json(layer);
    {
        std::lock_guard lock(state_mutex_);
        scene_ = std::move(next);
    }
    return json_response(200, params);
}

namespace {

void install(httplib::Server& http, StudioService& service) {
    auto forward = [&service](const httplib::Request& req, httplib::Response& res) {
        const Response r = service.handle(req.method, req.path, req.body);
        res.status = r.status;
        for (const auto& [k, v] : r.headers) res.set_header(k, v);
        res.set_content(r.body, r.content_type);
    };
    http.Get(R"(/.*)", forward);
    http.Post(R"(/.*)", forward);
    http.Put(R"(/.*)", forward);
    http.Patch(R"(/.*)", forward);
    http.Delete(R"(/.*)", forward);
}

} // namespace

void StudioService::run(const std::string& host, int port) {
    if (!server_) server_ = std::make_unique<Server>();
    install(server_->http, *this);
    if (!server_->http.bind_to_port(host, port)) {
        throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    }
    server_->http.listen_after_bind();
}

int StudioService::start(const std::string& host, int port) {
    if (server_) throw std::logic_error("service already started");
    server_ = std::make_unique<Server>();
    install(server_->http, *this);
    int bound = port;
    if (port == 0) {
        bound = server_->http.bind_to_any_port(host);
        if (bound < 0) throw std::runtime_error("cannot bind " + host);
    } else if (!server_->http.bind_to_port(host, port)) {
        throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    }
    server_->worker = std::thread([this] { server_->http.listen_after_bind(); });
    server_->http.wait_until_ready();
    return bound;
}

void StudioService::stop() {
    if (!server_) return;
    server_->http.stop();
    if (server_->worker.joinable()) server_->worker.join();
    server_.reset();
}

int cmd_serve(const std::filesystem::path& scene_path, const std::string& host, int port, int threads,
              std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        StudioService service(scene::load_scene(scene_path), threads);
        out << "serving " << scene_path.string() << " on http://" << host << ":" << port << "\n";
        out.flush();
        service.run(host, port);
        return kOk;
    });
}

} // namespace mock3d::app
