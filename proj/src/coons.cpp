#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <utility>

#include "mock3d/error.hpp"
#include "mock3d/mesh.hpp"

namespace mock3d::author {
namespace {

std::array<double, 4> bernstein(double t) {
    const double s = 1.0 - t;
    return {s * s * s, 3.0 * s * s * t, 3.0 * s * t * t, t * t * t};
}

std::array<double, 3> bernstein2(double t) {
    const double s = 1.0 - t;
    return {s * s, 2.0 * s * t, t * t};
}

double signed_area(const std::vector<Vec2>& poly) {
    double a = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        a += cross(poly[i], poly[(i + 1) % poly.size()]);
    }
    return 0.5 * a;
}

CubicBezier side_curve(const QuadPatchMesh& mesh, const FaceSide& side) {
    const CubicBezier& c = mesh.edges[static_cast<std::size_t>(side.edge)].curve;
    return side.reversed ? c.reversed() : c;
}

} // namespace

PatchGeometry::PatchGeometry(const QuadPatchMesh& mesh, int face, double scale) {
    const auto sides = face_sides(mesh, face);
    const auto corners = mesh.face_corners(face);
    const CubicBezier bottom = side_curve(mesh, sides[0]);
    const CubicBezier right = side_curve(mesh, sides[1]);
    const CubicBezier top = side_curve(mesh, sides[2]);
    const CubicBezier left = side_curve(mesh, sides[3]);

    auto& P = control_;
    for (int k = 0; k < 4; ++k) {
        P[k][0] = bottom.p[k] * scale;
        P[k][3] = top.p[k] * scale;
        P[0][k] = left.p[k] * scale;
        P[3][k] = right.p[k] * scale;
    }
    for (int i = 1; i <= 2; ++i) {
        for (int j = 1; j <= 2; ++j) {
            const double u = i / 3.0;
            const double v = j / 3.0;
            P[i][j] = P[0][j] * (1.0 - u) + P[3][j] * u + P[i][0] * (1.0 - v) + P[i][3] * v -
                      (P[0][0] * ((1.0 - u) * (1.0 - v)) + P[3][0] * (u * (1.0 - v)) +
                       P[0][3] * ((1.0 - u) * v) + P[3][3] * (u * v));
        }
    }
    // corner order (u, v): (0,0), (1,0), (1,1), (0,1)
    for (int k = 0; k < 4; ++k) {
        const MeshVertex& vx = mesh.vertices[static_cast<std::size_t>(corners[static_cast<std::size_t>(k)])];
        corner_z_[static_cast<std::size_t>(k)] = vx.z;
        corner_t_[static_cast<std::size_t>(k)] = vx.thickness;
    }
}

Vec2 PatchGeometry::position(double u, double v) const {
    const auto bu = bernstein(u);
    const auto bv = bernstein(v);
    Vec2 p;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) p += control_[i][j] * (bu[i] * bv[j]);
    }
    return p;
}

Vec2 PatchGeometry::du(double u, double v) const {
    const auto bu = bernstein2(u);
    const auto bv = bernstein(v);
    Vec2 d;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 4; ++j) d += (control_[i + 1][j] - control_[i][j]) * (3.0 * bu[i] * bv[j]);
    }
    return d;
}

Vec2 PatchGeometry::dv(double u, double v) const {
    const auto bu = bernstein(u);
    const auto bv = bernstein2(v);
    Vec2 d;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 3; ++j) d += (control_[i][j + 1] - control_[i][j]) * (3.0 * bu[i] * bv[j]);
    }
    return d;
}

PatchPoint PatchGeometry::eval(double u, double v) const {
    const double w00 = (1.0 - u) * (1.0 - v);
    const double w10 = u * (1.0 - v);
    const double w11 = u * v;
    const double w01 = (1.0 - u) * v;
    return {position(u, v),
            w00 * corner_z_[0] + w10 * corner_z_[1] + w11 * corner_z_[2] + w01 * corner_z_[3],
            w00 * corner_t_[0] + w10 * corner_t_[1] + w11 * corner_t_[2] + w01 * corner_t_[3]};
}

CubicBezier PatchGeometry::iso_u(double u) const {
    const auto bu = bernstein(u);
    CubicBezier c;
    for (int j = 0; j < 4; ++j) {
        Vec2 q;
        for (int i = 0; i < 4; ++i) q += control_[i][j] * bu[i];
        c.p[j] = q;
    }
    return c;
}

CubicBezier PatchGeometry::iso_v(double v) const {
    const auto bv = bernstein(v);
    CubicBezier c;
    for (int i = 0; i < 4; ++i) {
        Vec2 q;
        for (int j = 0; j < 4; ++j) q += control_[i][j] * bv[j];
        c.p[i] = q;
    }
    return c;
}

std::vector<Vec2> PatchGeometry::boundary_polygon(int per_side) const {
    std::vector<Vec2> poly;
    poly.reserve(static_cast<std::size_t>(4 * per_side));
    for (int k = 0; k < per_side; ++k) poly.push_back(position(static_cast<double>(k) / per_side, 0.0));
    for (int k = 0; k < per_side; ++k) poly.push_back(position(1.0, static_cast<double>(k) / per_side));
    for (int k = 0; k < per_side; ++k) poly.push_back(position(1.0 - static_cast<double>(k) / per_side, 1.0));
    for (int k = 0; k < per_side; ++k) poly.push_back(position(0.0, 1.0 - static_cast<double>(k) / per_side));
    return poly;
}

PatchPoint evaluate_patch(const QuadPatchMesh& mesh, int face, double u, double v) {
    if (face < 0 || face >= static_cast<int>(mesh.faces.size())) throw MeshError("face index out of range");
    if (!(u >= 0.0 && u <= 1.0 && v >= 0.0 && v <= 1.0)) {
        throw std::invalid_argument("patch parameters must lie in [0, 1]");
    }
    return PatchGeometry(mesh, face).eval(u, v);
}

Vec2 rotate_vector(Vec2 v_start, Vec2 v_end, double s) {
    if (s <= 0.0) return v_start;
    if (s >= 1.0) return v_end;
    if (v_start == v_end) return v_start;
    const double m0 = length(v_start);
    const double m1 = length(v_end);
    double a0 = std::atan2(v_start.y, v_start.x);
    double a1 = std::atan2(v_end.y, v_end.x);
    if (m0 == 0.0) a0 = a1;
    if (m1 == 0.0) a1 = a0;
    double d = std::remainder(a1 - a0, 2.0 * std::numbers::pi);
    if (d <= -std::numbers::pi) d = std::numbers::pi;
    const double a = a0 + s * d;
    const double m = (1.0 - s) * m0 + s * m1;
    return {m * std::cos(a), m * std::sin(a)};
}

EdgeField interpolate_edge_field(Vec2 v_start, Vec2 v_end, const CubicBezier&, int samples) {
    if (samples < 2) throw std::invalid_argument("an edge field needs at least 2 samples");
    // Samples are uniform in normalized arc length, so the curve only fixes
    // where each sample sits, not its value.
    EdgeField field;
    field.samples.reserve(static_cast<std::size_t>(samples));
    for (int i = 0; i < samples; ++i) {
        field.samples.push_back(rotate_vector(v_start, v_end, static_cast<double>(i) / (samples - 1)));
    }
    return field;
}

CoonsField::CoonsField(Boundary b0, Boundary b1, Boundary c0, Boundary c1)
    : b0_(std::move(b0)), b1_(std::move(b1)), c0_(std::move(c0)), c1_(std::move(c1)) {
    p00_ = b0_(0.0);
    p10_ = b0_(1.0);
    p01_ = b1_(0.0);
    p11_ = b1_(1.0);
    auto check = [](Vec2 a, Vec2 b, const char* corner) {
        if (length(a - b) > 1e-6) {
            throw MeshError(std::string("edge fields disagree at corner ") + corner);
        }
    };
    check(p00_, c0_(0.0), "(0,0)");
    check(p10_, c1_(0.0), "(1,0)");
    check(p01_, c0_(1.0), "(0,1)");
    check(p11_, c1_(1.0), "(1,1)");
}

Vec2 CoonsField::operator()(double u, double v) const {
    const Vec2 f = b0_(u) * (1.0 - v) + b1_(u) * v + c0_(v) * (1.0 - u) + c1_(v) * u -
                   (p00_ * ((1.0 - u) * (1.0 - v)) + p10_ * (u * (1.0 - v)) + p01_ * ((1.0 - u) * v) +
                    p11_ * (u * v));
    return {std::clamp(f.x, -1.0, 1.0), std::clamp(f.y, -1.0, 1.0)};
}

CoonsField coons_field(CoonsField::Boundary b0, CoonsField::Boundary b1, CoonsField::Boundary c0,
                       CoonsField::Boundary c1) {
    return CoonsField(std::move(b0), std::move(b1), std::move(c0), std::move(c1));
}

CoonsField face_field(const QuadPatchMesh& mesh, int face) {
    const auto sides = face_sides(mesh, face);
    auto boundary = [&](const FaceSide& side) -> CoonsField::Boundary {
        const MeshEdge& e = mesh.edges[static_cast<std::size_t>(side.edge)];
        auto fn = std::make_shared<EdgeFieldFunction>(mesh.vertices[static_cast<std::size_t>(e.v0)].control,
                                                      mesh.vertices[static_cast<std::size_t>(e.v1)].control,
                                                      e.curve);
        const bool rev = side.reversed;
        return [fn, rev](double t) { return fn->at_parameter(rev ? 1.0 - t : t); };
    };
    return CoonsField(boundary(sides[0]), boundary(sides[2]), boundary(sides[3]), boundary(sides[1]));
}

QuadPatchMesh default_corner_vectors(QuadPatchMesh mesh) {
    const auto incident = mesh.edge_faces();
    std::vector<Vec2> sum(mesh.vertices.size());
    for (std::size_t e = 0; e < mesh.edges.size(); ++e) {
        int visible_face = -1;
        int visible_count = 0;
        for (int f : incident[e]) {
            if (mesh.faces[static_cast<std::size_t>(f)].visible) {
                visible_face = f;
                ++visible_count;
            }
        }
        if (visible_count != 1) continue;

        const auto corners = mesh.face_corners(visible_face);
        const double area = signed_area(PatchGeometry(mesh, visible_face).boundary_polygon(16));
        const double sign = area < 0.0 ? -1.0 : 1.0;
        const MeshEdge& edge = mesh.edges[e];
        // Does the face loop c0 -> c1 -> c2 -> c3 run along the stored direction?
        bool forward = false;
        for (int k = 0; k < 4; ++k) {
            if (corners[static_cast<std::size_t>(k)] == edge.v0 &&
                corners[static_cast<std::size_t>((k + 1) % 4)] == edge.v1) {
                forward = true;
            }
        }
        auto tangent = [&](double t) {
            Vec2 d = edge.curve.derivative(t);
            if (length(d) == 0.0) d = edge.curve.p[3] - edge.curve.p[0];
            if (!forward) d = -d;
            const double len = length(d);
            return len > 0.0 ? d / len : Vec2{};
        };
        auto outward = [&](Vec2 tau) { return Vec2{tau.y, -tau.x} * sign; };
        sum[static_cast<std::size_t>(edge.v0)] += outward(tangent(0.0));
        sum[static_cast<std::size_t>(edge.v1)] += outward(tangent(1.0));
    }
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
        const double len = length(sum[v]);
        mesh.vertices[v].control = len > 1e-12 ? sum[v] / len : Vec2{};
    }
    return mesh;
}

} // namespace mock3d::author
