#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "mock3d/parallel.hpp"
#include "mock3d/renderer.hpp"

namespace mock3d::render {
namespace {

constexpr double kNoSurface = -std::numeric_limits<double>::infinity();
constexpr double kShadowEpsilon = 1e-9;

// Bilinear over the finite texels around p (pixel centers at half-integers);
// -infinity when none of them carries a surface.
double sample_height(const ScalarRaster& h, Vec2 p) {
    const double fx = std::clamp(p.x - 0.5, 0.0, static_cast<double>(h.width() - 1));
    const double fy = std::clamp(p.y - 0.5, 0.0, static_cast<double>(h.height() - 1));
    const int x0 = static_cast<int>(fx);
    const int y0 = static_cast<int>(fy);
    const int x1 = std::min(x0 + 1, h.width() - 1);
    const int y1 = std::min(y0 + 1, h.height() - 1);
    const double tx = fx - x0;
    const double ty = fy - y0;
    const double w[4] = {(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty};
    const double v[4] = {h(x0, y0), h(x1, y0), h(x0, y1), h(x1, y1)};
    double sum = 0.0;
    double weight = 0.0;
    for (int i = 0; i < 4; ++i) {
        if (v[i] == kNoSurface || w[i] == 0.0) continue;
        sum += w[i] * v[i];
        weight += w[i];
    }
    return weight > 0.0 ? sum / weight : kNoSurface;
}

double finite_max(const ScalarRaster& h) {
    double m = kNoSurface;
    for (double v : h.data()) m = std::max(m, v);
    return m;
}

template <class T>
Raster<T> place(const Raster<T>& src, int w, int h, int dx, int dy, T fill = T{}) {
    Raster<T> out(w, h, fill);
    for (int y = 0; y < src.height(); ++y) {
        const int cy = y + dy;
        if (cy < 0 || cy >= h) continue;
        for (int x = 0; x < src.width(); ++x) {
            const int cx = x + dx;
            if (cx >= 0 && cx < w) out(cx, cy) = src(x, y);
        }
    }
    return out;
}

} // namespace

PlacedLayer place_layer(const scene::Scene& scene, int index) {
    const scene::Layer& layer = scene.layers[static_cast<std::size_t>(index)];
    const int w = scene.width;
    const int h = scene.height;
    const int dx = static_cast<int>(layer.translate.x);
    const int dy = static_cast<int>(layer.translate.y);
    PlacedLayer p;
    p.index = index;
    p.map.n0 = place(layer.map.n0, w, h, dx, dy);
    p.map.n1 = place(layer.map.n1, w, h, dx, dy);
    p.map.thickness = place(layer.map.thickness, w, h, dx, dy);
    p.map.alpha = place(layer.map.alpha, w, h, dx, dy);
    p.depth.z = place(layer.depth.z, w, h, dx, dy);
    p.diffuse = place(layer.diffuse, w, h, dx, dy);
    p.specular = place(layer.specular, w, h, dx, dy);
    p.transparency = place(layer.transparency, w, h, dx, dy);
    p.z_offset = layer.z_offset;
    p.ior = layer.ior;
    p.params = layer.params;
    p.normal_params = layer.normal_params;
    return p;
}

Vec3 surface_normal(double n0, double n1, const NormalParams& params) {
    const Vec3 n = normal_from_field(n0, n1, params);
    return {-n.x, -n.y, n.z};
}

Vec3 light_vector(const scene::Light& light, Vec3 surface) {
    if (light.kind == scene::Light::Kind::Directional) return -light.direction;
    return normalize(light.position - surface);
}

RgbRaster shade_diffuse_specular(const PlacedLayer& layer, const field::HeightSheet& view,
                                 const scene::Light& light, double specular_exponent, int threads) {
    const int w = layer.map.width();
    const int h = layer.map.height();
    RgbRaster out(w, h);
    const Rgb radiance = light.color * light.intensity;
    parallel_for(h, threads, [&](int y) {
        for (int x = 0; x < w; ++x) {
            if (!view.valid(x, y)) continue;
            const Vec3 n = surface_normal(layer.map.n0(x, y), layer.map.n1(x, y), layer.normal_params);
            const Vec3 p{x + 0.5, y + 0.5, layer.z_offset + layer.depth.z(x, y) + view.f0(x, y)};
            const Vec3 l = light_vector(light, p);
            const double ndotl = dot(n, l);
            if (!(ndotl > 0.0)) continue;
            Rgb c = layer.diffuse(x, y) * radiance * ndotl;
            const double ks = layer.specular(x, y);
            if (ks > 0.0) {
                const Vec3 half = normalize(l + Vec3{0.0, 0.0, 1.0});
                c += radiance * (ks * std::pow(std::max(0.0, dot(n, half)), specular_exponent));
            }
            out(x, y) = c;
        }
    });
    return out;
}

ScalarRaster global_heights(const std::vector<PlacedLayer>& layers, const std::vector<field::HeightSheet>& sheets) {
    const int w = layers.empty() ? 0 : layers.front().map.width();
    const int h = layers.empty() ? 0 : layers.front().map.height();
    ScalarRaster out(w, h, kNoSurface);
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const PlacedLayer& l = layers[i];
        const field::HeightSheet& s = sheets[i];
        for (std::size_t k = 0; k < out.size(); ++k) {
            if (s.valid[k]) out[k] = std::max(out[k], l.z_offset + l.depth.z[k] + s.f0[k]);
        }
    }
    return out;
}

MaskRaster shadow_mask_from_heights(const ScalarRaster& heights, const scene::Light& light, int threads) {
    const int w = heights.width();
    const int h = heights.height();
    MaskRaster mask(w, h);
    const double hmax = finite_max(heights);
    const bool point = light.kind == scene::Light::Kind::Point;
    const Vec3 toward = -light.direction;
    const double lateral = std::hypot(toward.x, toward.y);
    if (!point && lateral == 0.0) return mask;
    const double slope = point ? 0.0 : toward.z / lateral;
    const Vec2 dir_fixed = point ? Vec2{} : Vec2{toward.x / lateral, toward.y / lateral};

    parallel_for(h, threads, [&](int y) {
        for (int x = 0; x < w; ++x) {
            const double hp = heights(x, y);
            if (hp == kNoSurface) continue;
            const Vec2 p{x + 0.5, y + 0.5};
            Vec2 dir = dir_fixed;
            double dist = std::numeric_limits<double>::infinity();
            double rise = slope;
            if (point) {
                const Vec2 d{light.position.x - p.x, light.position.y - p.y};
                dist = length(d);
                if (dist == 0.0) continue;
                dir = d / dist;
                rise = (light.position.z - hp) / dist;
            }
            for (int k = 1; k < dist; ++k) {
                const Vec2 q = p + dir * static_cast<double>(k);
                if (q.x < 0.0 || q.y < 0.0 || q.x >= w || q.y >= h) break;
                const double seg = hp + rise * k;
                if (rise > 0.0 && seg > hmax) break;
                const double hq = sample_height(heights, q);
                if (hq == kNoSurface) continue;
                if (hq > seg + kShadowEpsilon) {
                    mask(x, y) = 1;
                    break;
                }
            }
        }
    });
    return mask;
}

field::RayFan light_fan(const scene::Light& light) {
    if (light.kind == scene::Light::Kind::Point) return field::RayFan::point({light.position.x, light.position.y});
    return field::RayFan::directional(std::atan2(light.direction.y, light.direction.x));
}

MaskRaster shadow_mask(const scene::Scene& scene, const std::vector<PlacedLayer>& layers,
                       const scene::Light& light, int threads) {
    if (light.kind == scene::Light::Kind::Directional && light.direction.x == 0.0 && light.direction.y == 0.0) {
        return MaskRaster(scene.width, scene.height);
    }
    std::vector<field::HeightSheet> sheets;
    sheets.reserve(layers.size());
    const field::RayFan fan = light_fan(light);
    for (const PlacedLayer& l : layers) {
        sheets.push_back(field::reconstruct_sheet(l.map, l.depth, fan, l.params, {0.5, threads}));
    }
    return shadow_mask_from_heights(global_heights(layers, sheets), light, threads);
}

ScalarRaster ambient_occlusion_from_heights(const ScalarRaster& heights, int k, int radius, int threads) {
    if (k < 4) throw std::invalid_argument("ambient occlusion needs k >= 4 directions");
    const int w = heights.width();
    const int h = heights.height();
    ScalarRaster ao(w, h, 1.0);
    const double hmax = finite_max(heights);
    std::vector<Vec2> dirs;
    for (int d = 0; d < k; ++d) {
        const double a = 2.0 * std::numbers::pi * d / k;
        dirs.push_back({std::cos(a), std::sin(a)});
    }
    parallel_for(h, threads, [&](int y) {
        for (int x = 0; x < w; ++x) {
            const double hp = heights(x, y);
            if (hp == kNoSurface) continue;
            const Vec2 p{x + 0.5, y + 0.5};
            double sum = 0.0;
            for (const Vec2& dir : dirs) {
                double best = 0.0;
                for (int s = 1; s <= radius; ++s) {
                    if ((hmax - hp) / s <= best) break;
                    const Vec2 q = p + dir * static_cast<double>(s);
                    if (q.x < 0.0 || q.y < 0.0 || q.x >= w || q.y >= h) break;
                    const double hq = heights(static_cast<int>(q.x), static_cast<int>(q.y));
                    if (hq == kNoSurface) continue;
                    best = std::max(best, (hq - hp) / s);
                }
                sum += 1.0 / (1.0 + best);
            }
            ao(x, y) = sum / k;
        }
    });
    return ao;
}

Vec2 refraction_offset(Vec3 normal, double eta, double distance) {
    const Vec3 incident{0.0, 0.0, -1.0};
    const double ratio = 1.0 / eta;
    const double cos_i = -dot(normal, incident);
    const double k = 1.0 - ratio * ratio * (1.0 - cos_i * cos_i);
    Vec3 t;
    if (k < 0.0) {
        t = incident + normal * (2.0 * cos_i);
    } else {
        t = incident * ratio + normal * (ratio * cos_i - std::sqrt(k));
    }
    if (t.z == 0.0) return {};
    return Vec2{t.x, t.y} * (distance / std::abs(t.z));
}

Rgb sample_rgb(const RgbRaster& image, Vec2 p) {
    const int w = image.width();
    const int h = image.height();
    const double fx = std::clamp(p.x - 0.5, 0.0, static_cast<double>(w - 1));
    const double fy = std::clamp(p.y - 0.5, 0.0, static_cast<double>(h - 1));
    const int x0 = static_cast<int>(std::floor(fx));
    const int y0 = static_cast<int>(std::floor(fy));
    const double tx = fx - x0;
    const double ty = fy - y0;
    if (tx == 0.0 && ty == 0.0) return image(x0, y0);
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const Rgb top = image(x0, y0) * (1.0 - tx) + image(x1, y0) * tx;
    const Rgb bottom = image(x0, y1) * (1.0 - tx) + image(x1, y1) * tx;
    return top * (1.0 - ty) + bottom * ty;
}

RgbRaster refraction_pass(const PlacedLayer& layer, const MaskRaster& valid, const RgbRaster& backdrop,
                          int threads) {
    RgbRaster out = backdrop;
    if (!layer.ior) return out;
    const double eta = *layer.ior;
    const double scale = layer.params.s2 * layer.params.thickness_scale;
    parallel_for(out.height(), threads, [&](int y) {
        for (int x = 0; x < out.width(); ++x) {
            if (!valid(x, y)) continue;
            const double d = scale * layer.map.thickness(x, y);
            if (d == 0.0) continue;
            const Vec3 n = surface_normal(layer.map.n0(x, y), layer.map.n1(x, y), layer.normal_params);
            const Vec2 off = refraction_offset(n, eta, d);
            if (off.x == 0.0 && off.y == 0.0) continue;
            out(x, y) = sample_rgb(backdrop, Vec2{x + 0.5, y + 0.5} + off);
        }
    });
    return out;
}

Vec3 reflect_view(Vec3 normal) {
    const Vec3 v{0.0, 0.0, -1.0};
    return v - normal * (2.0 * dot(v, normal));
}

Rgb environment_lookup(const RgbRaster& environment, Vec3 direction) {
    const int w = environment.width();
    const int h = environment.height();
    const Vec3 d = normalize(direction);
    double u = (std::atan2(d.y, d.x) + std::numbers::pi) / (2.0 * std::numbers::pi);
    int col = static_cast<int>(std::floor(u * w)) % w;
    if (col < 0) col += w;
    const int row = std::clamp(static_cast<int>(std::floor(std::acos(std::clamp(d.z, -1.0, 1.0)) / std::numbers::pi * h)), 0, h - 1);
    return environment(col, row);
}

RgbRaster reflection_pass(const PlacedLayer& layer, const MaskRaster& valid, const RgbRaster& environment,
                          const scene::GlossySettings& glossy, std::uint64_t seed, int threads) {
    const int w = layer.map.width();
    const int h = layer.map.height();
    RgbRaster out(w, h);
    if (environment.empty()) throw std::invalid_argument("reflection needs an environment image");
    parallel_for(h, threads, [&](int y) {
        for (int x = 0; x < w; ++x) {
            if (!valid(x, y)) continue;
            const Vec3 n = surface_normal(layer.map.n0(x, y), layer.map.n1(x, y), layer.normal_params);
            if (glossy.samples <= 0) {
                out(x, y) = environment_lookup(environment, reflect_view(n));
                continue;
            }
            const std::uint64_t pixel = static_cast<std::uint64_t>(y) * static_cast<std::uint64_t>(w) + static_cast<std::uint64_t>(x);
            const std::uint64_t mixed = seed * 0x9E3779B97F4A7C15ULL ^ (static_cast<std::uint64_t>(layer.index) << 40) ^ pixel;
            std::minstd_rand rng(static_cast<std::uint32_t>(mixed ^ (mixed >> 32)));
            std::uniform_real_distribution<double> jitter(-1.0, 1.0);
            Rgb sum;
            for (int j = 0; j < glossy.samples; ++j) {
                Vec3 nj = n + Vec3{jitter(rng), jitter(rng), 0.0} * glossy.spread;
                nj.z = std::max(nj.z, 1e-6);
                sum += environment_lookup(environment, reflect_view(normalize(nj)));
            }
            out(x, y) = sum * (1.0 / glossy.samples);
        }
    });
    return out;
}

double fresnel_weight(double cos_view, double eta) {
    const double r0 = (eta - 1.0) / (eta + 1.0);
    const double f0 = r0 * r0;
    const double m = 1.0 - std::clamp(cos_view, 0.0, 1.0);
    return f0 + (1.0 - f0) * m * m * m * m * m;
}

} // namespace mock3d::render
