#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mock3d/vec.hpp"

namespace mock3d::author {

struct CubicBezier {
    std::array<Vec2, 4> p;

    static CubicBezier line(Vec2 a, Vec2 b) {
        return {{a, lerp(a, b, 1.0 / 3.0), lerp(a, b, 2.0 / 3.0), b}};
    }

    Vec2 eval(double t) const;
    Vec2 derivative(double t) const;
    CubicBezier reversed() const { return {{p[3], p[2], p[1], p[0]}}; }
    /// de Casteljau subdivision at t.
    std::pair<CubicBezier, CubicBezier> split(double t) const;

    bool operator==(const CubicBezier&) const = default;
};

/// Normalized arc length along a curve, tabulated at 256 parameter values.
class ArcLengthTable {
public:
    explicit ArcLengthTable(const CubicBezier& curve);

    double length() const { return cumulative_.back(); }
    /// Arc-length fraction in [0, 1] reached at curve parameter t.
    double fraction(double t) const;

private:
    std::vector<double> cumulative_;
};

struct MeshVertex {
    Vec2 pos;
    double z = 0.0;
    double thickness = 0.5;
    Vec2 control;

    bool operator==(const MeshVertex&) const = default;
};

struct MeshEdge {
    int v0 = 0;
    int v1 = 0;
    CubicBezier curve;  // p[0] at v0, p[3] at v1

    bool operator==(const MeshEdge&) const = default;
};

/// A quad whose four edges form a closed loop e0, e1, e2, e3. Corners are
/// c0 = e3 ∩ e0, c1 = e0 ∩ e1, c2 = e1 ∩ e2, c3 = e2 ∩ e3; the patch has
/// P(0,0) = c0, P(1,0) = c1, P(1,1) = c2, P(0,1) = c3.
struct MeshFace {
    std::array<int, 4> edges{};
    bool visible = true;

    bool operator==(const MeshFace&) const = default;
};

/// Quad mesh of cubic Bezier patches. An edge may be shared by more than two
/// faces; invisible faces take part in topology but are never rasterized.
struct QuadPatchMesh {
    std::vector<MeshVertex> vertices;
    std::vector<MeshEdge> edges;
    std::vector<MeshFace> faces;
    /// Extent of the canvas the mesh is drawn on, in mesh units.
    Vec2 size{1.0, 1.0};

    /// Throws MeshError describing the first broken invariant.
    void validate() const;
    std::array<int, 4> face_corners(int face) const;
    /// Faces (visible or not) incident to each edge.
    std::vector<std::vector<int>> edge_faces() const;
    int euler_characteristic() const {
        return static_cast<int>(vertices.size()) - static_cast<int>(edges.size()) +
               static_cast<int>(faces.size());
    }

    bool operator==(const QuadPatchMesh&) const = default;
};

/// Side k of a face as a curve running with the patch parameter: side 0 from
/// c0 to c1 (u), side 1 from c1 to c2 (v), side 2 from c3 to c2 (u), side 3
/// from c0 to c3 (v). `reversed` tells whether that runs against the stored
/// edge direction.
struct FaceSide {
    int edge = 0;
    bool reversed = false;
};
std::array<FaceSide, 4> face_sides(const QuadPatchMesh& mesh, int face);

struct PatchPoint {
    Vec2 pos;
    double z = 0.0;
    double thickness = 0.0;
};

/// Tensor-product cubic Bezier patch for one face. Interior control points
/// come from the discrete Coons construction of the four boundary curves;
/// z and thickness are bilinear in the corner values.
class PatchGeometry {
public:
    PatchGeometry(const QuadPatchMesh& mesh, int face, double scale = 1.0);

    PatchPoint eval(double u, double v) const;
    Vec2 position(double u, double v) const;
    Vec2 du(double u, double v) const;
    Vec2 dv(double u, double v) const;
    /// Control points P[i][j], i along u and j along v.
    const std::array<std::array<Vec2, 4>, 4>& control() const { return control_; }
    /// The exact cubic curve u = const (along v) or v = const (along u).
    CubicBezier iso_u(double u) const;
    CubicBezier iso_v(double v) const;
    /// Boundary sampled densely, counterclockwise in (u, v).
    std::vector<Vec2> boundary_polygon(int per_side) const;

private:
    std::array<std::array<Vec2, 4>, 4> control_;
    std::array<double, 4> corner_z_{};
    std::array<double, 4> corner_t_{};
};

PatchPoint evaluate_patch(const QuadPatchMesh& mesh, int face, double u, double v);

/// Rotates v_start into v_end along the shortest arc (counterclockwise at an
/// exact half turn) while interpolating magnitude linearly, s in [0, 1].
Vec2 rotate_vector(Vec2 v_start, Vec2 v_end, double s);

struct EdgeField {
    std::vector<Vec2> samples;  // uniform in normalized arc length
};

EdgeField interpolate_edge_field(Vec2 v_start, Vec2 v_end, const CubicBezier& edge, int samples);

/// Field along one stored edge as a function of its curve parameter.
class EdgeFieldFunction {
public:
    EdgeFieldFunction(Vec2 v_start, Vec2 v_end, const CubicBezier& curve)
        : start_(v_start), end_(v_end), arc_(curve) {}

    Vec2 at_parameter(double t) const { return rotate_vector(start_, end_, arc_.fraction(t)); }
    double arc_fraction(double t) const { return arc_.fraction(t); }

private:
    Vec2 start_;
    Vec2 end_;
    ArcLengthTable arc_;
};

/// Coons interpolant of four boundary fields: B0(u) at v = 0, B1(u) at v = 1,
/// C0(v) at u = 0 and C1(v) at u = 1. Values are clamped to [-1, 1]².
class CoonsField {
public:
    using Boundary = std::function<Vec2(double)>;

    /// Throws MeshError when the boundaries disagree at a corner by > 1e-6.
    CoonsField(Boundary b0, Boundary b1, Boundary c0, Boundary c1);

    Vec2 operator()(double u, double v) const;

private:
    Boundary b0_, b1_, c0_, c1_;
    Vec2 p00_, p10_, p01_, p11_;
};

CoonsField coons_field(CoonsField::Boundary b0, CoonsField::Boundary b1, CoonsField::Boundary c0,
                       CoonsField::Boundary c1);

/// Coons field of a face built from the control vectors at its corners and
/// the shared per-edge fields.
CoonsField face_field(const QuadPatchMesh& mesh, int face);

/// Unit outward boundary normals at boundary vertices (averaged over their
/// boundary edges), zero at interior vertices. A boundary edge has exactly
/// one visible face.
QuadPatchMesh default_corner_vectors(QuadPatchMesh mesh);

/// Unit square split into nx × ny straight-edged quads.
QuadPatchMesh make_grid(int nx, int ny);
/// Disk of `sides` boundary vertices fanned to a center vertex in sides/2
/// quads; sides must be even and >= 4.
QuadPatchMesh make_polygon_disk(int sides);
/// Splits `edge` at curve parameter t and every face in the strip across it,
/// from boundary to boundary.
QuadPatchMesh split_edge(const QuadPatchMesh& mesh, int edge, double t);

QuadPatchMesh read_mesh(const std::filesystem::path& path);
QuadPatchMesh parse_mesh(const std::string& json_text);
std::string mesh_to_json(const QuadPatchMesh& mesh);
void write_mesh(const std::filesystem::path& path, const QuadPatchMesh& mesh);

} // namespace mock3d::author
