#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>

#include "mock3d/author.hpp"
#include "mock3d/error.hpp"
#include "mock3d/parallel.hpp"

namespace mock3d::author {
namespace {

constexpr int kSeedGrid = 16;
constexpr int kSamples = 5;  // center, then the 2x2 subsamples
constexpr std::array<Vec2, kSamples> kOffsets{
    Vec2{0.5, 0.5}, Vec2{0.25, 0.25}, Vec2{0.75, 0.25}, Vec2{0.25, 0.75}, Vec2{0.75, 0.75}};

bool point_in_polygon(const std::vector<Vec2>& poly, Vec2 p) {
    bool inside = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        const Vec2 a = poly[i];
        const Vec2 b = poly[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < x) inside = !inside;
        }
    }
    return inside;
}

double polygon_area(const std::vector<Vec2>& poly) {
    double a = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) a += cross(poly[i], poly[(i + 1) % poly.size()]);
    return 0.5 * a;
}

struct FacePrep {
    int face;
    PatchGeometry patch;
    CoonsField field;
    std::vector<Vec2> boundary;
    std::vector<Vec2> seed_pos;
    std::vector<Vec2> seed_uv;
    int x0, x1, y0, y1;  // inclusive pixel bounds
};

struct Hit {
    int face = -1;  // index into the prepared faces
    double u = 0.0;
    double v = 0.0;
};

struct Solve {
    bool inside = false;
    bool failed = false;
    double u = 0.0;
    double v = 0.0;
};

Solve locate(const FacePrep& f, Vec2 p, std::optional<Vec2> warm) {
    auto accept = [](double u, double v) {
        constexpr double eps = 1e-9;
        return u >= -eps && u <= 1.0 + eps && v >= -eps && v <= 1.0 + eps;
    };
    double u = 0.0, v = 0.0;
    if (warm) {
        u = warm->x;
        v = warm->y;
        if (invert_patch(f.patch, p, u, v) && accept(u, v)) {
            return {true, false, std::clamp(u, 0.0, 1.0), std::clamp(v, 0.0, 1.0)};
        }
    }
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < f.seed_pos.size(); ++k) {
        const Vec2 d = f.seed_pos[k] - p;
        const double dd = dot(d, d);
        if (dd < best_d) {
            best_d = dd;
            best = k;
        }
    }
    u = f.seed_uv[best].x;
    v = f.seed_uv[best].y;
    if (invert_patch(f.patch, p, u, v)) {
        if (accept(u, v)) return {true, false, std::clamp(u, 0.0, 1.0), std::clamp(v, 0.0, 1.0)};
        return {};
    }
    if (point_in_polygon(f.boundary, p)) return {true, true, f.seed_uv[best].x, f.seed_uv[best].y};
    return {};
}

} // namespace

bool invert_patch(const PatchGeometry& patch, Vec2 target, double& u, double& v) {
    constexpr double tol = 1e-6;
    for (int it = 0; it < 8; ++it) {
        const Vec2 r = patch.position(u, v) - target;
        if (length(r) < tol) return true;
        const Vec2 du = patch.du(u, v);
        const Vec2 dv = patch.dv(u, v);
        const double det = cross(du, dv);
        if (std::abs(det) < 1e-14) return false;
        u = std::clamp(u - cross(r, dv) / det, -1.0, 2.0);
        v = std::clamp(v - cross(du, r) / det, -1.0, 2.0);
    }
    return length(patch.position(u, v) - target) < tol;
}

ScalarRaster squared_distance_to_background(const MaskRaster& mask) {
    const int w = mask.width();
    const int h = mask.height();
    static constexpr double inf = std::numeric_limits<double>::infinity();
    // Exact separable transform (lower envelope of parabolas), columns then rows.
    auto transform_1d = [](const std::vector<double>& f) {
        const int n = static_cast<int>(f.size());
        std::vector<double> d(static_cast<std::size_t>(n), inf);
        std::vector<int> site(static_cast<std::size_t>(n));
        std::vector<double> bound(static_cast<std::size_t>(n) + 1);
        int k = -1;
        for (int q = 0; q < n; ++q) {
            if (f[static_cast<std::size_t>(q)] == inf) continue;
            double s = 0.0;
            while (k >= 0) {
                const int r = site[static_cast<std::size_t>(k)];
                s = ((f[static_cast<std::size_t>(q)] + q * q) - (f[static_cast<std::size_t>(r)] + r * r)) /
                    (2.0 * (q - r));
                if (s > bound[static_cast<std::size_t>(k)]) break;
                --k;
            }
            ++k;
            site[static_cast<std::size_t>(k)] = q;
            bound[static_cast<std::size_t>(k)] = k == 0 ? -inf : s;
            bound[static_cast<std::size_t>(k) + 1] = inf;
        }
        if (k < 0) return d;
        int j = 0;
        for (int q = 0; q < n; ++q) {
            while (bound[static_cast<std::size_t>(j) + 1] < q) ++j;
            const int r = site[static_cast<std::size_t>(j)];
            d[static_cast<std::size_t>(q)] = (q - r) * (q - r) + f[static_cast<std::size_t>(r)];
        }
        return d;
    };
    ScalarRaster out(w, h, inf);
    std::vector<double> col(static_cast<std::size_t>(h));
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) col[static_cast<std::size_t>(y)] = mask(x, y) ? inf : 0.0;
        const auto d = transform_1d(col);
        for (int y = 0; y < h; ++y) out(x, y) = d[static_cast<std::size_t>(y)];
    }
    std::vector<double> row(static_cast<std::size_t>(w));
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) row[static_cast<std::size_t>(x)] = out(x, y);
        const auto d = transform_1d(row);
        for (int x = 0; x < w; ++x) out(x, y) = d[static_cast<std::size_t>(x)];
    }
    return out;
}

RasterizeResult rasterize_shapemap(const QuadPatchMesh& mesh, const RasterizeOptions& options) {
    mesh.validate();
    if (options.resolution < 0) throw std::invalid_argument("resolution must be positive");
    if (options.feather && !(options.feather_width > 0.0)) throw std::invalid_argument("feather width must be > 0");

    RasterizeResult result;
    result.scale = options.resolution > 0 ? options.resolution / std::max(mesh.size.x, mesh.size.y) : 1.0;
    const int w = std::max(1, static_cast<int>(std::lround(mesh.size.x * result.scale)));
    const int h = std::max(1, static_cast<int>(std::lround(mesh.size.y * result.scale)));

    std::vector<FacePrep> faces;
    for (int f = 0; f < static_cast<int>(mesh.faces.size()); ++f) {
        if (!mesh.faces[static_cast<std::size_t>(f)].visible) continue;
        PatchGeometry patch(mesh, f, result.scale);
        auto boundary = patch.boundary_polygon(64);
        if (std::abs(polygon_area(boundary)) < 1e-9) {
            ++result.degenerate_faces;
            result.warnings.push_back("face " + std::to_string(f) + " has zero area; skipped");
            continue;
        }
        double minx = std::numeric_limits<double>::infinity(), miny = minx;
        double maxx = -minx, maxy = -minx;
        for (const auto& row : patch.control()) {
            for (const Vec2& c : row) {
                minx = std::min(minx, c.x);
                maxx = std::max(maxx, c.x);
                miny = std::min(miny, c.y);
                maxy = std::max(maxy, c.y);
            }
        }
        FacePrep prep{f,
                      patch,
                      face_field(mesh, f),
                      std::move(boundary),
                      {},
                      {},
                      std::max(0, static_cast<int>(std::floor(minx)) - 1),
                      std::min(w - 1, static_cast<int>(std::ceil(maxx))),
                      std::max(0, static_cast<int>(std::floor(miny)) - 1),
                      std::min(h - 1, static_cast<int>(std::ceil(maxy)))};
        for (int j = 0; j < kSeedGrid; ++j) {
            for (int i = 0; i < kSeedGrid; ++i) {
                const Vec2 uv{static_cast<double>(i) / (kSeedGrid - 1), static_cast<double>(j) / (kSeedGrid - 1)};
                prep.seed_uv.push_back(uv);
                prep.seed_pos.push_back(patch.position(uv.x, uv.y));
            }
        }
        faces.push_back(std::move(prep));
    }

    ShapeMap map(w, h);
    ScalarRaster depth(w, h);
    std::vector<int> failures(static_cast<std::size_t>(h), 0);

    parallel_for(h, options.threads, [&](int y) {
        std::vector<std::array<Hit, kSamples>> hits(static_cast<std::size_t>(w));
        for (std::size_t fi = 0; fi < faces.size(); ++fi) {
            const FacePrep& f = faces[fi];
            if (y < f.y0 || y > f.y1) continue;
            std::optional<Vec2> warm;
            for (int x = f.x0; x <= f.x1; ++x) {
                for (int s = 0; s < kSamples; ++s) {
                    Hit& hit = hits[static_cast<std::size_t>(x)][static_cast<std::size_t>(s)];
                    if (hit.face >= 0) continue;
                    const Vec2 p{x + kOffsets[static_cast<std::size_t>(s)].x, y + kOffsets[static_cast<std::size_t>(s)].y};
                    const Solve solve = locate(f, p, warm);
                    if (!solve.inside) continue;
                    if (solve.failed) {
                        ++failures[static_cast<std::size_t>(y)];
                    } else {
                        warm = Vec2{solve.u, solve.v};
                    }
                    hit = {static_cast<int>(fi), solve.u, solve.v};
                }
            }
        }
        for (int x = 0; x < w; ++x) {
            const auto& px = hits[static_cast<std::size_t>(x)];
            int covered = 0;
            for (int s = 1; s < kSamples; ++s) covered += px[static_cast<std::size_t>(s)].face >= 0 ? 1 : 0;
            if (covered == 0) continue;
            auto value = [&](const Hit& hit) {
                const FacePrep& f = faces[static_cast<std::size_t>(hit.face)];
                const Vec2 n = f.field(hit.u, hit.v);
                const PatchPoint pp = f.patch.eval(hit.u, hit.v);
                return std::array<double, 4>{n.x, n.y, pp.thickness, pp.z};
            };
            std::array<double, 4> acc{};
            if (px[0].face >= 0) {
                acc = value(px[0]);
            } else {
                for (int s = 1; s < kSamples; ++s) {
                    if (px[static_cast<std::size_t>(s)].face < 0) continue;
                    const auto v = value(px[static_cast<std::size_t>(s)]);
                    for (int c = 0; c < 4; ++c) acc[static_cast<std::size_t>(c)] += v[static_cast<std::size_t>(c)] / covered;
                }
            }
            map.set(x, y, {acc[0], acc[1], std::clamp(acc[2], 0.0, 1.0), covered / 4.0});
            depth(x, y) = acc[3];
        }
    });

    for (int f : failures) result.newton_failures += f;
    if (result.newton_failures > 0) {
        result.warnings.push_back(std::to_string(result.newton_failures) +
                                  " samples did not converge in the inverse mapping; nearest seed used");
    }

    if (options.feather) {
        MaskRaster solid(w, h);
        for (std::size_t i = 0; i < solid.size(); ++i) solid[i] = map.alpha[i] > 0.5 ? 1 : 0;
        const ScalarRaster d2 = squared_distance_to_background(solid);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                if (map.alpha(x, y) == 0.0) continue;
                const double border = std::min({x + 0.5, y + 0.5, w - x - 0.5, h - y - 0.5});
                const double dist = std::min(std::sqrt(d2(x, y)), border);
                map.thickness(x, y) *= std::min(1.0, dist / options.feather_width);
            }
        }
    }

    map.normalize();
    map.require_valid();
    result.map = std::move(map);
    result.depth = field::DepthChannel{std::move(depth)};
    return result;
}

std::filesystem::path sidecar_path(const std::filesystem::path& png_path) {
    std::filesystem::path p = png_path;
    p.replace_extension(".json");
    return p;
}

} // namespace mock3d::author
