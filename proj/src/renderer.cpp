#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "mock3d/parallel.hpp"
#include "mock3d/renderer.hpp"

namespace mock3d::render {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

Rgb clamp01(Rgb c) {
    return {std::clamp(c.r, 0.0, 1.0), std::clamp(c.g, 0.0, 1.0), std::clamp(c.b, 0.0, 1.0)};
}

std::uint8_t to_byte(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

bool refracts(const scene::Scene& scene, const PlacedLayer& layer) {
    return scene.settings.refraction && layer.ior.has_value();
}

} // namespace

RgbRaster composite(const std::vector<LayerImage>& layers, const RgbRaster& background, int threads) {
    RgbRaster out = background;
    const int w = out.width();
    parallel_for(out.height(), threads, [&](int y) {
        std::vector<int> order;
        order.reserve(layers.size());
        for (int x = 0; x < w; ++x) {
            order.clear();
            for (std::size_t i = 0; i < layers.size(); ++i) {
                if (layers[i].valid(x, y)) order.push_back(static_cast<int>(i));
            }
            if (order.empty()) continue;
            // Top of the stack first.
            std::sort(order.begin(), order.end(), [&](int a, int b) {
                const LayerImage& la = layers[static_cast<std::size_t>(a)];
                const LayerImage& lb = layers[static_cast<std::size_t>(b)];
                if (la.key(x, y) != lb.key(x, y)) return la.key(x, y) > lb.key(x, y);
                if (la.tie(x, y) != lb.tie(x, y)) return la.tie(x, y) > lb.tie(x, y);
                return a < b;
            });
            Rgb dst = out(x, y);
            for (auto it = order.rbegin(); it != order.rend(); ++it) {
                const LayerImage& l = layers[static_cast<std::size_t>(*it)];
                const double a = l.coverage(x, y);
                dst = dst + (l.color(x, y) - dst) * a;
            }
            out(x, y) = dst;
        }
    });
    return out;
}

Rgba8Image to_rgba8(const RgbRaster& image) {
    Rgba8Image out(image.width(), image.height());
    for (std::size_t i = 0; i < image.size(); ++i) {
        const Rgb c = image[i];
        out[i] = {to_byte(c.r), to_byte(c.g), to_byte(c.b), 255};
    }
    return out;
}

Raster<std::uint8_t> mask_to_gray(const MaskRaster& mask) {
    Raster<std::uint8_t> out(mask.width(), mask.height());
    for (std::size_t i = 0; i < mask.size(); ++i) out[i] = mask[i] ? 255 : 0;
    return out;
}

Raster<std::uint8_t> unit_to_gray(const ScalarRaster& values) {
    Raster<std::uint8_t> out(values.width(), values.height());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = to_byte(values[i]);
    return out;
}

RenderOutput render_scene(const scene::Scene& scene, const RenderOptions& options) {
    const auto total_start = Clock::now();
    const int threads = options.threads;
    const int w = scene.width;
    const int h = scene.height;
    const scene::Settings& settings = scene.settings;
    RenderOutput out;
    for (const scene::Diagnostic& d : scene::validate_scene(scene)) {
        if (d.severity == scene::Diagnostic::Severity::Warning) out.warnings.push_back(d.str());
    }

    auto start = Clock::now();
    std::vector<PlacedLayer> layers;
    layers.reserve(scene.layers.size());
    for (std::size_t i = 0; i < scene.layers.size(); ++i) layers.push_back(place_layer(scene, static_cast<int>(i)));
    std::vector<field::HeightSheet> sheets;
    sheets.reserve(layers.size());
    for (const PlacedLayer& l : layers) {
        sheets.push_back(field::reconstruct_sheet(l.map, l.depth, scene.view, l.params, {0.5, threads}));
    }
    out.timings_ms["reconstruct"] = elapsed_ms(start);

    start = Clock::now();
    std::vector<MaskRaster> masks;
    for (const scene::Light& light : scene.lights) {
        masks.push_back(settings.shadows ? shadow_mask(scene, layers, light, threads) : MaskRaster(w, h));
    }
    out.timings_ms["shadows"] = elapsed_ms(start);

    start = Clock::now();
    ScalarRaster ao(w, h, 1.0);
    if (settings.ao.enabled) {
        ao = ambient_occlusion_from_heights(global_heights(layers, sheets), settings.ao.k, settings.ao.radius, threads);
    }
    out.timings_ms["ao"] = elapsed_ms(start);

    start = Clock::now();
    std::vector<LayerImage> images(layers.size());
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const PlacedLayer& l = layers[i];
        const field::HeightSheet& s = sheets[i];
        LayerImage& img = images[i];
        img.color = RgbRaster(w, h);
        img.coverage = ScalarRaster(w, h);
        img.key = ScalarRaster(w, h);
        img.tie = s.f0;
        img.valid = s.valid;
        std::vector<RgbRaster> direct;
        for (const scene::Light& light : scene.lights) {
            direct.push_back(shade_diffuse_specular(l, s, light, settings.specular_exponent, threads));
        }
        const bool refractive = refracts(scene, l);
        parallel_for(h, threads, [&](int y) {
            for (int x = 0; x < w; ++x) {
                img.key(x, y) = l.z_offset + l.depth.z(x, y);
                if (!s.valid(x, y)) continue;
                Rgb c = l.diffuse(x, y) * (0.2 * ao(x, y));
                for (std::size_t k = 0; k < direct.size(); ++k) {
                    if (!masks[k](x, y)) c += direct[k](x, y);
                }
                img.color(x, y) = c;
                const double alpha = l.map.alpha(x, y);
                img.coverage(x, y) = refractive ? alpha : alpha * (1.0 - l.transparency(x, y));
            }
        });
    }
    out.timings_ms["shading"] = elapsed_ms(start);

    start = Clock::now();
    const bool any_refraction = std::any_of(layers.begin(), layers.end(),
                                            [&](const PlacedLayer& l) { return refracts(scene, l); });
    if (any_refraction) {
        std::vector<LayerImage> opaque;
        for (std::size_t i = 0; i < layers.size(); ++i) {
            if (!refracts(scene, layers[i])) opaque.push_back(images[i]);
        }
        const RgbRaster backdrop = composite(opaque, scene.background, threads);
        for (std::size_t i = 0; i < layers.size(); ++i) {
            if (!refracts(scene, layers[i])) continue;
            const RgbRaster refracted = refraction_pass(layers[i], sheets[i].valid, backdrop, threads);
            LayerImage& img = images[i];
            const ScalarRaster& t = layers[i].transparency;
            parallel_for(h, threads, [&](int y) {
                for (int x = 0; x < w; ++x) {
                    if (!img.valid(x, y)) continue;
                    img.color(x, y) = img.color(x, y) * (1.0 - t(x, y)) + refracted(x, y) * t(x, y);
                }
            });
        }
    }
    out.timings_ms["refraction"] = elapsed_ms(start);

    start = Clock::now();
    if (settings.reflection) {
        for (std::size_t i = 0; i < layers.size(); ++i) {
            const PlacedLayer& l = layers[i];
            const RgbRaster refl = reflection_pass(l, sheets[i].valid, scene.environment, settings.glossy,
                                                   settings.seed, threads);
            LayerImage& img = images[i];
            const double eta = l.ior.value_or(1.5);
            parallel_for(h, threads, [&](int y) {
                for (int x = 0; x < w; ++x) {
                    if (!img.valid(x, y)) continue;
                    double weight = l.specular(x, y);
                    if (settings.fresnel) {
                        const Vec3 n = surface_normal(l.map.n0(x, y), l.map.n1(x, y), l.normal_params);
                        weight = fresnel_weight(n.z, eta);
                    }
                    img.color(x, y) = img.color(x, y) * (1.0 - weight) + refl(x, y) * weight;
                }
            });
        }
    }
    out.timings_ms["reflection"] = elapsed_ms(start);

    start = Clock::now();
    for (LayerImage& img : images) {
        for (Rgb& c : img.color.data()) c = clamp01(c);
    }
    out.color = to_rgba8(composite(images, scene.background, threads));
    out.timings_ms["composite"] = elapsed_ms(start);

    if (options.keep_aux) {
        out.shadow_masks = std::move(masks);
        out.ao = std::move(ao);
        out.sheets = std::move(sheets);
    }
    out.timings_ms["total"] = elapsed_ms(total_start);
    return out;
}

} // namespace mock3d::render
