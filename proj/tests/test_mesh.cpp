#include <doctest.h>

#include <random>

#include "mock3d/error.hpp"
#include "mock3d/mesh.hpp"
#include "support.hpp"

using namespace mock3d;
using namespace mock3d::author;

namespace {

// Direct Bernstein form, independent of de Casteljau.
Vec2 bernstein(const CubicBezier& c, double t) {
    const double s = 1.0 - t;
    return c.p[0] * (s * s * s) + c.p[1] * (3 * s * s * t) + c.p[2] * (3 * s * t * t) + c.p[3] * (t * t * t);
}

CubicBezier wavy() { return {{Vec2{0, 0}, Vec2{0.2, 0.9}, Vec2{0.7, -0.4}, Vec2{1, 0.3}}}; }

} // namespace

TEST_CASE("bezier evaluation, derivative and split") {
    const CubicBezier c = wavy();
    for (double t = 0.0; t <= 1.0; t += 0.05) {
        CHECK(length(c.eval(t) - bernstein(c, t)) < 1e-12);
        const double h = 1e-6;
        const Vec2 fd = (bernstein(c, std::min(1.0, t + h)) - bernstein(c, std::max(0.0, t - h))) /
                        (std::min(1.0, t + h) - std::max(0.0, t - h));
        CHECK(length(c.derivative(t) - fd) < 1e-5);
    }
    const auto [left, right] = c.split(0.3);
    CHECK(left.p[0] == c.p[0]);
    CHECK(right.p[3] == c.p[3]);
    CHECK(length(left.p[3] - c.eval(0.3)) < 1e-12);
    for (double s = 0.0; s <= 1.0; s += 0.1) {
        CHECK(length(left.eval(s) - c.eval(0.3 * s)) < 1e-12);
        CHECK(length(right.eval(s) - c.eval(0.3 + 0.7 * s)) < 1e-12);
    }
    CHECK(length(c.reversed().eval(0.25) - c.eval(0.75)) < 1e-12);
}

TEST_CASE("arc length table") {
    const ArcLengthTable line(CubicBezier::line({0, 0}, {3, 4}));
    CHECK(line.length() == doctest::Approx(5.0));
    CHECK(line.fraction(0.0) == 0.0);
    CHECK(line.fraction(1.0) == doctest::Approx(1.0));
    CHECK(line.fraction(0.37) == doctest::Approx(0.37).epsilon(1e-6));

    // clustered control points make parameter and arc length differ
    const CubicBezier skewed{{Vec2{0, 0}, Vec2{0, 0}, Vec2{0, 0}, Vec2{1, 0}}};
    const ArcLengthTable table(skewed);
    for (double t = 0.05; t < 1.0; t += 0.1) {
        CHECK(table.fraction(t) == doctest::Approx(skewed.eval(t).x).epsilon(1e-3));
    }
}

TEST_CASE("rotate_vector") {
    CHECK(length(rotate_vector({1, 0}, {0, 1}, 0.5) - Vec2{std::sqrt(0.5), std::sqrt(0.5)}) < 1e-12);
    CHECK(length(rotate_vector({1, 0}, {0, 2}, 0.5) - Vec2{1.5 * std::sqrt(0.5), 1.5 * std::sqrt(0.5)}) < 1e-12);
    // shortest arc
    CHECK(rotate_vector({0, 1}, {1, 0}, 0.5).x > 0.0);
    CHECK(rotate_vector({1, 0}, {0, -1}, 0.5).y < 0.0);
    // exact half turn goes counterclockwise
    CHECK(length(rotate_vector({1, 0}, {-1, 0}, 0.5) - Vec2{0, 1}) < 1e-12);
    CHECK(rotate_vector({0.3, -0.2}, {0.5, 0.5}, 0.0) == Vec2{0.3, -0.2});
    CHECK(length(rotate_vector({0.3, -0.2}, {0.5, 0.5}, 1.0) - Vec2{0.5, 0.5}) < 1e-12);
    // zero ends fall back to linear interpolation
    CHECK(length(rotate_vector({0, 0}, {0.4, 0}, 0.5) - Vec2{0.2, 0}) < 1e-12);
}

TEST_CASE("edge field samples are uniform in arc length") {
    const EdgeField f = interpolate_edge_field({1, 0}, {0, 1}, CubicBezier::line({0, 0}, {1, 0}), 5);
    REQUIRE(f.samples.size() == 5);
    CHECK(f.samples.front() == Vec2{1, 0});
    CHECK(length(f.samples.back() - Vec2{0, 1}) < 1e-12);
    CHECK(length(f.samples[2] - Vec2{std::sqrt(0.5), std::sqrt(0.5)}) < 1e-9);
}

TEST_CASE("grid mesh") {
    const QuadPatchMesh g = make_grid(3, 2);
    CHECK(g.vertices.size() == 12);
    CHECK(g.edges.size() == 17);
    CHECK(g.faces.size() == 6);
    CHECK(g.euler_characteristic() == 1);
    CHECK_NOTHROW(g.validate());
    CHECK(g.face_corners(0) == std::array<int, 4>{0, 1, 5, 4});
    // boundary corner vectors point outward, interior ones vanish
    CHECK(length(g.vertices[0].control - Vec2{-std::sqrt(0.5), -std::sqrt(0.5)}) < 1e-12);
    CHECK(length(g.vertices[1].control - Vec2{0, -1}) < 1e-12);
    CHECK(g.vertices[5].control == Vec2{});
    for (const auto& faces : g.edge_faces()) CHECK((faces.size() == 1 || faces.size() == 2));
    CHECK_THROWS_AS(make_grid(0, 2), std::invalid_argument);
}

TEST_CASE("polygon disk") {
    const QuadPatchMesh d = make_polygon_disk(8);
    CHECK(d.vertices.size() == 9);
    CHECK(d.faces.size() == 4);
    CHECK(d.euler_characteristic() == 1);
    CHECK(d.vertices[0].control == Vec2{});
    for (int k = 1; k <= 8; ++k) {
        const Vec2 out = d.vertices[static_cast<std::size_t>(k)].pos - Vec2{0.5, 0.5};
        CHECK(dot(d.vertices[static_cast<std::size_t>(k)].control, out / length(out)) > 0.9);
        CHECK(length(d.vertices[static_cast<std::size_t>(k)].control) == doctest::Approx(1.0));
    }
    CHECK_THROWS_AS(make_polygon_disk(5), std::invalid_argument);
    CHECK_THROWS_AS(make_polygon_disk(2), std::invalid_argument);
}

TEST_CASE("validation messages") {
    QuadPatchMesh g = make_grid(1, 1);
    SUBCASE("control vector range") {
        g.vertices[0].control = {1.5, 0};
        CHECK_THROWS_WITH_AS(g.validate(), doctest::Contains("control vector must lie in [-1, 1]^2"), MeshError);
    }
    SUBCASE("thickness range") {
        g.vertices[2].thickness = -0.1;
        CHECK_THROWS_WITH_AS(g.validate(), doctest::Contains("thickness must lie in [0, 1]"), MeshError);
    }
    SUBCASE("open face loop") {
        std::swap(g.faces[0].edges[1], g.faces[0].edges[2]);
        CHECK_THROWS_WITH_AS(g.validate(), doctest::Contains("do not form a closed loop"), MeshError);
    }
    SUBCASE("curve endpoints") {
        g.edges[0].curve.p[3] = {0.5, 0.5};
        CHECK_THROWS_WITH_AS(g.validate(), doctest::Contains("endpoints do not coincide"), MeshError);
    }
    SUBCASE("degenerate edge") {
        g.edges[0].v1 = g.edges[0].v0;
        CHECK_THROWS_WITH_AS(g.validate(), doctest::Contains("(triangles) are not supported"), MeshError);
    }
}

TEST_CASE("split_edge cuts the whole strip") {
    const QuadPatchMesh g = make_grid(3, 3);
    // edge 0 is the top-left horizontal edge; the strip runs down column 0
    const QuadPatchMesh s = split_edge(g, 0, 0.25);
    CHECK_NOTHROW(s.validate());
    CHECK(s.faces.size() == g.faces.size() + 3);
    CHECK(s.vertices.size() == g.vertices.size() + 4);
    CHECK(s.euler_characteristic() == g.euler_characteristic());
    int at_quarter = 0;
    for (std::size_t v = g.vertices.size(); v < s.vertices.size(); ++v) {
        CHECK(s.vertices[v].pos.x == doctest::Approx(0.25 / 3));
        ++at_quarter;
    }
    CHECK(at_quarter == 4);
    // the original mesh is untouched
    CHECK(g == make_grid(3, 3));

    CHECK_THROWS_AS(split_edge(g, 0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(split_edge(g, 999, 0.5), MeshError);
}

TEST_CASE("split_edge interpolates the corner vectors") {
    QuadPatchMesh g = make_grid(1, 1);
    const QuadPatchMesh s = split_edge(g, 0, 0.5);
    const Vec2 mid = s.vertices[g.vertices.size()].control;
    const Vec2 expect = rotate_vector(g.vertices[0].control, g.vertices[1].control, 0.5);
    CHECK(length(mid - expect) < 1e-9);
}

TEST_CASE("split_edge refuses rings and non-manifold strips") {
    // three faces on one edge
    QuadPatchMesh g = make_grid(1, 1);
    g.faces.push_back(g.faces[0]);
    g.faces.push_back(g.faces[0]);
    CHECK_THROWS_WITH_AS(split_edge(g, 0, 0.5), doctest::Contains("non-manifold"), MeshError);
}

TEST_CASE("mesh json round trip") {
    QuadPatchMesh g = split_edge(make_grid(2, 2), 1, 0.4);
    g.size = {300, 200};
    g.faces[1].visible = false;
    g.vertices[3].z = 2.5;
    g.edges[2].curve.p[1] += Vec2{0.01, 0.02};
    const QuadPatchMesh back = parse_mesh(mesh_to_json(g));
    CHECK(back == g);

    const auto dir = fixtures::scratch_dir("mesh_json");
    write_mesh(dir / "m.json", g);
    CHECK(read_mesh(dir / "m.json") == g);
    CHECK_THROWS_AS(read_mesh(dir / "none.json"), InputError);
}

TEST_CASE("mesh json defaults and errors") {
    const std::string minimal = R"({
        "vertices": [{"pos": [0, 0]}, {"pos": [1, 0]}, {"pos": [1, 1]}, {"pos": [0, 1]}],
        "edges": [{"vertices": [0, 1]}, {"vertices": [1, 2]}, {"vertices": [3, 2]}, {"vertices": [0, 3]}],
        "faces": [{"edges": [0, 1, 2, 3]}]
    })";
    const QuadPatchMesh m = parse_mesh(minimal);
    CHECK(m.size == Vec2{1, 1});
    CHECK(m.vertices[0].thickness == 0.5);
    CHECK(m.vertices[0].control == Vec2{});
    CHECK(m.faces[0].visible);
    CHECK(m.edges[2].curve == CubicBezier::line({0, 1}, {1, 1}));

    CHECK_THROWS_WITH_AS(parse_mesh("{"), doctest::Contains("does not parse"), MeshError);
    CHECK_THROWS_WITH_AS(parse_mesh(R"({"vertices": []})"), doctest::Contains("malformed mesh"), MeshError);
    CHECK_THROWS_WITH_AS(parse_mesh(R"({"vertices": [{"pos": [0]}], "edges": [], "faces": []})"),
                         doctest::Contains("must be a [x, y] pair"), MeshError);
}

TEST_CASE("patch geometry interpolates its boundary") {
    QuadPatchMesh g = make_grid(1, 1);
    g.edges[0].curve.p[1] += Vec2{0.0, -0.2};
    g.edges[0].curve.p[2] += Vec2{0.0, 0.1};
    g.vertices[3].z = 4.0;
    g.vertices[1].thickness = 1.0;
    const PatchGeometry p(g, 0, 10.0);
    const auto sides = face_sides(g, 0);
    for (double t = 0.0; t <= 1.0; t += 0.125) {
        const CubicBezier& e0 = g.edges[static_cast<std::size_t>(sides[0].edge)].curve;
        const Vec2 expect = (sides[0].reversed ? e0.reversed() : e0).eval(t) * 10.0;
        CHECK(length(p.position(t, 0.0) - expect) < 1e-9);
        CHECK(length(p.iso_v(0.0).eval(t) - expect) < 1e-9);
    }
    const PatchPoint corner = p.eval(1.0, 1.0);
    CHECK(corner.z == doctest::Approx(4.0));
    CHECK(p.eval(1.0, 0.0).thickness == doctest::Approx(1.0));
    CHECK(p.eval(0.5, 0.5).z == doctest::Approx(1.0));

    // derivatives against finite differences
    const double h = 1e-6;
    const Vec2 fdu = (p.position(0.4 + h, 0.6) - p.position(0.4 - h, 0.6)) / (2 * h);
    const Vec2 fdv = (p.position(0.4, 0.6 + h) - p.position(0.4, 0.6 - h)) / (2 * h);
    CHECK(length(p.du(0.4, 0.6) - fdu) < 1e-5);
    CHECK(length(p.dv(0.4, 0.6) - fdv) < 1e-5);

    const auto poly = p.boundary_polygon(4);
    CHECK(poly.size() == 16);
    double area = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) area += cross(poly[i], poly[(i + 1) % poly.size()]);
    CHECK(area > 0.0);
}
