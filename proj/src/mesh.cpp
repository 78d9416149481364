#include "mock3d/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mock3d/error.hpp"

namespace mock3d::author {

using nlohmann::json;

Vec2 CubicBezier::eval(double t) const {
    const double s = 1.0 - t;
    return p[0] * (s * s * s) + p[1] * (3.0 * s * s * t) + p[2] * (3.0 * s * t * t) + p[3] * (t * t * t);
}

Vec2 CubicBezier::derivative(double t) const {
    const double s = 1.0 - t;
    return (p[1] - p[0]) * (3.0 * s * s) + (p[2] - p[1]) * (6.0 * s * t) + (p[3] - p[2]) * (3.0 * t * t);
}

std::pair<CubicBezier, CubicBezier> CubicBezier::split(double t) const {
    const Vec2 a = lerp(p[0], p[1], t);
    const Vec2 b = lerp(p[1], p[2], t);
    const Vec2 c = lerp(p[2], p[3], t);
    const Vec2 ab = lerp(a, b, t);
    const Vec2 bc = lerp(b, c, t);
    const Vec2 m = lerp(ab, bc, t);
    return {CubicBezier{{p[0], a, ab, m}}, CubicBezier{{m, bc, c, p[3]}}};
}

ArcLengthTable::ArcLengthTable(const CubicBezier& curve) {
    constexpr int n = 256;
    cumulative_.resize(n, 0.0);
    Vec2 prev = curve.eval(0.0);
    for (int k = 1; k < n; ++k) {
        const Vec2 cur = curve.eval(static_cast<double>(k) / (n - 1));
        cumulative_[static_cast<std::size_t>(k)] = cumulative_[static_cast<std::size_t>(k) - 1] + mock3d::length(cur - prev);
        prev = cur;
    }
}

double ArcLengthTable::fraction(double t) const {
    t = std::clamp(t, 0.0, 1.0);
    const double total = cumulative_.back();
    if (!(total > 0.0)) return t;
    if (t == 1.0) return 1.0;
    const double pos = t * static_cast<double>(cumulative_.size() - 1);
    const auto k = static_cast<std::size_t>(std::floor(pos));
    const double w = pos - static_cast<double>(k);
    return ((1.0 - w) * cumulative_[k] + w * cumulative_[k + 1]) / total;
}

namespace {

int other_end(const MeshEdge& e, int v) { return e.v0 == v ? e.v1 : e.v0; }
bool touches(const MeshEdge& e, int v) { return e.v0 == v || e.v1 == v; }

} // namespace

std::array<int, 4> QuadPatchMesh::face_corners(int face) const {
    if (face < 0 || face >= static_cast<int>(faces.size())) throw MeshError("face index out of range");
    const auto& ids = faces[static_cast<std::size_t>(face)].edges;
    for (int id : ids) {
        if (id < 0 || id >= static_cast<int>(edges.size())) {
            throw MeshError("face " + std::to_string(face) + " references missing edge " + std::to_string(id));
        }
    }
    const MeshEdge& e0 = edges[static_cast<std::size_t>(ids[0])];
    const MeshEdge& e1 = edges[static_cast<std::size_t>(ids[1])];
    const MeshEdge& e2 = edges[static_cast<std::size_t>(ids[2])];
    const MeshEdge& e3 = edges[static_cast<std::size_t>(ids[3])];
    auto broken = [&] {
        return MeshError("face " + std::to_string(face) + " edges do not form a closed loop");
    };
    int c0 = -1;
    if (touches(e3, e0.v0) && !touches(e3, e0.v1)) c0 = e0.v0;
    else if (touches(e3, e0.v1) && !touches(e3, e0.v0)) c0 = e0.v1;
    else throw broken();
    const int c1 = other_end(e0, c0);
    if (!touches(e1, c1)) throw broken();
    const int c2 = other_end(e1, c1);
    if (!touches(e2, c2)) throw broken();
    const int c3 = other_end(e2, c2);
    if (!touches(e3, c3) || other_end(e3, c3) != c0) throw broken();
    return {c0, c1, c2, c3};
}

std::vector<std::vector<int>> QuadPatchMesh::edge_faces() const {
    std::vector<std::vector<int>> out(edges.size());
    for (std::size_t f = 0; f < faces.size(); ++f) {
        for (int e : faces[f].edges) {
            if (e >= 0 && e < static_cast<int>(edges.size())) out[static_cast<std::size_t>(e)].push_back(static_cast<int>(f));
        }
    }
    return out;
}

void QuadPatchMesh::validate() const {
    if (!(size.x > 0.0 && size.y > 0.0 && std::isfinite(size.x) && std::isfinite(size.y))) {
        throw MeshError("mesh size must be positive");
    }
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        const MeshVertex& v = vertices[i];
        const std::string where = "vertex " + std::to_string(i);
        if (!(std::isfinite(v.pos.x) && std::isfinite(v.pos.y) && std::isfinite(v.z))) {
            throw MeshError(where + " has non-finite coordinates");
        }
        if (!(v.thickness >= 0.0 && v.thickness <= 1.0)) throw MeshError(where + " thickness must lie in [0, 1]");
        if (!(std::abs(v.control.x) <= 1.0 && std::abs(v.control.y) <= 1.0)) {
            throw MeshError(where + " control vector must lie in [-1, 1]^2");
        }
    }
    const double tol = 1e-6 * std::max({1.0, size.x, size.y});
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const MeshEdge& e = edges[i];
        const std::string where = "edge " + std::to_string(i);
        const int nv = static_cast<int>(vertices.size());
        if (e.v0 < 0 || e.v1 < 0 || e.v0 >= nv || e.v1 >= nv) throw MeshError(where + " references a missing vertex");
        if (e.v0 == e.v1) throw MeshError(where + " is degenerate; zero-length edges (triangles) are not supported");
        if (length(e.curve.p[0] - vertices[static_cast<std::size_t>(e.v0)].pos) > tol ||
            length(e.curve.p[3] - vertices[static_cast<std::size_t>(e.v1)].pos) > tol) {
            throw MeshError(where + " endpoints do not coincide with its vertices");
        }
    }
    for (std::size_t f = 0; f < faces.size(); ++f) face_corners(static_cast<int>(f));
}

std::array<FaceSide, 4> face_sides(const QuadPatchMesh& mesh, int face) {
    const auto c = mesh.face_corners(face);
    const auto& ids = mesh.faces[static_cast<std::size_t>(face)].edges;
    auto side = [&](int k, int start) {
        const MeshEdge& e = mesh.edges[static_cast<std::size_t>(ids[static_cast<std::size_t>(k)])];
        return FaceSide{ids[static_cast<std::size_t>(k)], e.v0 != start};
    };
    return {side(0, c[0]), side(1, c[1]), side(2, c[3]), side(3, c[0])};
}

QuadPatchMesh make_grid(int nx, int ny) {
    if (nx < 1 || ny < 1) throw std::invalid_argument("grid needs at least one quad in each direction");
    QuadPatchMesh mesh;
    auto vid = [&](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
            mesh.vertices.push_back({{static_cast<double>(i) / nx, static_cast<double>(j) / ny}, 0.0, 0.5, {}});
        }
    }
    auto add_edge = [&](int a, int b) {
        mesh.edges.push_back({a, b, CubicBezier::line(mesh.vertices[static_cast<std::size_t>(a)].pos,
                                                      mesh.vertices[static_cast<std::size_t>(b)].pos)});
        return static_cast<int>(mesh.edges.size()) - 1;
    };
    std::vector<int> horizontal(static_cast<std::size_t>(nx * (ny + 1)));
    std::vector<int> vertical(static_cast<std::size_t>((nx + 1) * ny));
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i < nx; ++i) horizontal[static_cast<std::size_t>(j * nx + i)] = add_edge(vid(i, j), vid(i + 1, j));
    }
    for (int i = 0; i <= nx; ++i) {
        for (int j = 0; j < ny; ++j) vertical[static_cast<std::size_t>(i * ny + j)] = add_edge(vid(i, j), vid(i, j + 1));
    }
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            mesh.faces.push_back({{horizontal[static_cast<std::size_t>(j * nx + i)],
                                   vertical[static_cast<std::size_t>((i + 1) * ny + j)],
                                   horizontal[static_cast<std::size_t>((j + 1) * nx + i)],
                                   vertical[static_cast<std::size_t>(i * ny + j)]},
                                  true});
        }
    }
    return default_corner_vectors(std::move(mesh));
}

QuadPatchMesh make_polygon_disk(int sides) {
    if (sides < 4 || sides % 2 != 0) {
        throw std::invalid_argument("polygon disk needs an even number of sides >= 4 (triangles are not supported)");
    }
    QuadPatchMesh mesh;
    mesh.vertices.push_back({{0.5, 0.5}, 0.0, 0.5, {}});
    for (int k = 0; k < sides; ++k) {
        const double a = 2.0 * std::numbers::pi * k / sides;
        mesh.vertices.push_back({{0.5 + 0.5 * std::cos(a), 0.5 + 0.5 * std::sin(a)}, 0.0, 0.5, {}});
    }
    auto boundary = [&](int k) { return 1 + (k % sides); };
    auto add_edge = [&](int a, int b) {
        mesh.edges.push_back({a, b, CubicBezier::line(mesh.vertices[static_cast<std::size_t>(a)].pos,
                                                      mesh.vertices[static_cast<std::size_t>(b)].pos)});
        return static_cast<int>(mesh.edges.size()) - 1;
    };
    const int quads = sides / 2;
    std::vector<int> spokes;
    for (int q = 0; q < quads; ++q) spokes.push_back(add_edge(0, boundary(2 * q)));
    std::vector<int> rim;
    for (int k = 0; k < sides; ++k) rim.push_back(add_edge(boundary(k), boundary(k + 1)));
    for (int q = 0; q < quads; ++q) {
        mesh.faces.push_back({{spokes[static_cast<std::size_t>(q)], rim[static_cast<std::size_t>(2 * q)],
                               rim[static_cast<std::size_t>(2 * q + 1)],
                               spokes[static_cast<std::size_t>((q + 1) % quads)]},
                              true});
    }
    return default_corner_vectors(std::move(mesh));
}

namespace {

// One face of the strip crossed by a split: the side that carries the
// incoming split point and its patch parameter along that side.
struct StripFace {
    int face;
    int side;
    double param;
};

double stored_param(const FaceSide& side, double local) { return side.reversed ? 1.0 - local : local; }

} // namespace

QuadPatchMesh split_edge(const QuadPatchMesh& mesh, int edge, double t) {
    mesh.validate();
    if (edge < 0 || edge >= static_cast<int>(mesh.edges.size())) throw MeshError("edge index out of range");
    if (!(t > 0.0 && t < 1.0)) throw std::invalid_argument("split parameter must lie in (0, 1)");

    const auto incident = mesh.edge_faces();
    auto faces_of = [&](int e) -> const std::vector<int>& {
        const auto& f = incident[static_cast<std::size_t>(e)];
        if (f.size() > 2) {
            throw MeshError("split path is non-manifold at edge " + std::to_string(e) + " (" +
                            std::to_string(f.size()) + " faces)");
        }
        return f;
    };
    if (faces_of(edge).empty()) throw MeshError("edge " + std::to_string(edge) + " belongs to no face");

    // Edge -> stored split parameter, in discovery order.
    std::map<int, double> split_at{{edge, t}};
    std::vector<StripFace> strip;
    std::set<int> visited;

    for (int start_face : faces_of(edge)) {
        int cur_edge = edge;
        double cur_t = t;
        int face = start_face;
        while (true) {
            if (!visited.insert(face).second) {
                throw MeshError("split path closes into a ring; splits must run boundary to boundary");
            }
            const auto sides = face_sides(mesh, face);
            int k = -1;
            for (int s = 0; s < 4; ++s) {
                if (sides[static_cast<std::size_t>(s)].edge == cur_edge) k = s;
            }
            if (k < 0) throw MeshError("mesh adjacency is inconsistent");
            const double local = stored_param(sides[static_cast<std::size_t>(k)], cur_t);
            strip.push_back({face, k, local});
            const FaceSide& opposite = sides[static_cast<std::size_t>((k + 2) % 4)];
            const double opposite_t = stored_param(opposite, local);
            if (opposite.edge == edge) {
                throw MeshError("split path closes into a ring; splits must run boundary to boundary");
            }
            split_at[opposite.edge] = opposite_t;
            const auto& next = faces_of(opposite.edge);
            int next_face = -1;
            for (int f : next) {
                if (f != face) next_face = f;
            }
            if (next_face < 0) break;
            cur_edge = opposite.edge;
            cur_t = opposite_t;
            face = next_face;
        }
    }

    QuadPatchMesh out = mesh;
    struct Halves {
        int vertex;
        int first;   // stored v0 -> new vertex
        int second;  // new vertex -> stored v1
    };
    std::map<int, Halves> halves;
    for (const auto& [e, te] : split_at) {
        const MeshEdge original = mesh.edges[static_cast<std::size_t>(e)];
        const MeshVertex& a = mesh.vertices[static_cast<std::size_t>(original.v0)];
        const MeshVertex& b = mesh.vertices[static_cast<std::size_t>(original.v1)];
        const auto [left, right] = original.curve.split(te);
        const EdgeFieldFunction field(a.control, b.control, original.curve);
        MeshVertex mid;
        mid.pos = left.p[3];
        mid.z = (1.0 - te) * a.z + te * b.z;
        mid.thickness = (1.0 - te) * a.thickness + te * b.thickness;
        mid.control = field.at_parameter(te);
        mid.control = {std::clamp(mid.control.x, -1.0, 1.0), std::clamp(mid.control.y, -1.0, 1.0)};
        const int vid = static_cast<int>(out.vertices.size());
        out.vertices.push_back(mid);
        out.edges[static_cast<std::size_t>(e)] = {original.v0, vid, left};
        out.edges.push_back({vid, original.v1, right});
        halves[e] = {vid, e, static_cast<int>(out.edges.size()) - 1};
    }

    for (const StripFace& sf : strip) {
        const auto corners = mesh.face_corners(sf.face);
        const auto sides = face_sides(mesh, sf.face);
        const PatchGeometry patch(mesh, sf.face);
        const bool along_u = sf.side % 2 == 0;
        auto half_near = [&](int side, int corner) {
            const int e = sides[static_cast<std::size_t>(side)].edge;
            const Halves& h = halves.at(e);
            return mesh.edges[static_cast<std::size_t>(e)].v0 == corner ? h.first : h.second;
        };
        auto mid_vertex = [&](int side) { return halves.at(sides[static_cast<std::size_t>(side)].edge).vertex; };
        const bool visible = mesh.faces[static_cast<std::size_t>(sf.face)].visible;
        MeshFace first, second;
        first.visible = second.visible = visible;
        if (along_u) {
            const int mb = mid_vertex(0);
            const int mt = mid_vertex(2);
            out.edges.push_back({mb, mt, patch.iso_u(sf.param)});
            const int middle = static_cast<int>(out.edges.size()) - 1;
            first.edges = {half_near(0, corners[0]), middle, half_near(2, corners[3]), sides[3].edge};
            second.edges = {half_near(0, corners[1]), sides[1].edge, half_near(2, corners[2]), middle};
        } else {
            const int ml = mid_vertex(3);
            const int mr = mid_vertex(1);
            out.edges.push_back({ml, mr, patch.iso_v(sf.param)});
            const int middle = static_cast<int>(out.edges.size()) - 1;
            first.edges = {sides[0].edge, half_near(1, corners[1]), middle, half_near(3, corners[0])};
            second.edges = {middle, half_near(1, corners[2]), sides[2].edge, half_near(3, corners[3])};
        }
        out.faces[static_cast<std::size_t>(sf.face)] = first;
        out.faces.push_back(second);
    }
    out.validate();
    return out;
}

namespace {

json vec_json(Vec2 v) { return json::array({v.x, v.y}); }

Vec2 json_vec(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw MeshError(what + " must be a [x, y] pair");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

} // namespace

QuadPatchMesh parse_mesh(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw MeshError(std::string("mesh JSON does not parse: ") + e.what());
    }
    QuadPatchMesh mesh;
    try {
        if (doc.contains("size")) mesh.size = json_vec(doc.at("size"), "size");
        for (const json& v : doc.at("vertices")) {
            MeshVertex mv;
            mv.pos = json_vec(v.at("pos"), "vertex pos");
            mv.z = v.value("z", 0.0);
            mv.thickness = v.value("thickness", 0.5);
            if (v.contains("control_vector")) mv.control = json_vec(v.at("control_vector"), "control_vector");
            mesh.vertices.push_back(mv);
        }
        for (const json& e : doc.at("edges")) {
            MeshEdge me;
            const json& ends = e.at("vertices");
            if (!ends.is_array() || ends.size() != 2) throw MeshError("edge vertices must be a pair of ids");
            me.v0 = ends[0].get<int>();
            me.v1 = ends[1].get<int>();
            const int nv = static_cast<int>(mesh.vertices.size());
            if (me.v0 < 0 || me.v1 < 0 || me.v0 >= nv || me.v1 >= nv) {
                throw MeshError("edge references a missing vertex");
            }
            if (e.contains("controls")) {
                const json& c = e.at("controls");
                if (!c.is_array() || c.size() != 4) throw MeshError("edge controls must hold 4 points");
                for (std::size_t k = 0; k < 4; ++k) me.curve.p[k] = json_vec(c[k], "edge control point");
            } else {
                me.curve = CubicBezier::line(mesh.vertices[static_cast<std::size_t>(me.v0)].pos,
                                             mesh.vertices[static_cast<std::size_t>(me.v1)].pos);
            }
            mesh.edges.push_back(me);
        }
        for (const json& f : doc.at("faces")) {
            MeshFace mf;
            const json& ids = f.at("edges");
            if (!ids.is_array() || ids.size() != 4) throw MeshError("faces must reference exactly 4 edges");
            for (std::size_t k = 0; k < 4; ++k) mf.edges[k] = ids[k].get<int>();
            mf.visible = f.value("visible", true);
            mesh.faces.push_back(mf);
        }
    } catch (const json::exception& e) {
        throw MeshError(std::string("malformed mesh: ") + e.what());
    }
    mesh.validate();
    return mesh;
}

QuadPatchMesh read_mesh(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open file: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_mesh(buf.str());
}

std::string mesh_to_json(const QuadPatchMesh& mesh) {
    json doc;
    doc["size"] = vec_json(mesh.size);
    doc["vertices"] = json::array();
    for (const MeshVertex& v : mesh.vertices) {
        doc["vertices"].push_back({{"pos", vec_json(v.pos)},
                                   {"z", v.z},
                                   {"thickness", v.thickness},
                                   {"control_vector", vec_json(v.control)}});
    }
    doc["edges"] = json::array();
    for (const MeshEdge& e : mesh.edges) {
        json controls = json::array();
        for (const Vec2& p : e.curve.p) controls.push_back(vec_json(p));
        doc["edges"].push_back({{"vertices", {e.v0, e.v1}}, {"controls", controls}});
    }
    doc["faces"] = json::array();
    for (const MeshFace& f : mesh.faces) {
        doc["faces"].push_back({{"edges", f.edges}, {"visible", f.visible}});
    }
    return doc.dump(2) + "\n";
}

void write_mesh(const std::filesystem::path& path, const QuadPatchMesh& mesh) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write file: " + path.string());
    out << mesh_to_json(mesh);
}

} // namespace mock3d::author
