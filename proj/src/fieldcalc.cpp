#include "mock3d/fieldcalc.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "mock3d/parallel.hpp"

namespace mock3d::field {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// cos/sin with round-off residue snapped to zero so that axis-aligned rays
// stay exactly axis-aligned.
Vec2 unit_direction(double theta) {
    double c = std::cos(theta);
    double s = std::sin(theta);
    if (std::abs(c) < 1e-14) c = 0.0;
    if (std::abs(s) < 1e-14) s = 0.0;
    return {c, s};
}

bool inside_rect(Vec2 p, int w, int h) {
    return p.x >= 0.0 && p.y >= 0.0 && p.x <= w && p.y <= h;
}

// Parameter interval of {anchor + t dir} inside [0,w] x [0,h].
bool clip_line(Vec2 anchor, Vec2 dir, int w, int h, double& t_in, double& t_out) {
    t_in = -kInf;
    t_out = kInf;
    auto slab = [&](double a, double d, double hi) {
        if (d == 0.0) return a >= 0.0 && a <= hi;
        double t1 = (0.0 - a) / d;
        double t2 = (hi - a) / d;
        if (t1 > t2) std::swap(t1, t2);
        t_in = std::max(t_in, t1);
        t_out = std::min(t_out, t2);
        return true;
    };
    if (!slab(anchor.x, dir.x, w) || !slab(anchor.y, dir.y, h)) return false;
    return t_out >= t_in;
}

double g0_integrand(const ShapeMap& map, Vec2 p, Vec2 dir) {
    const FieldSample s = sample_field(map, p);
    return s.n0 * dir.x + s.n1 * dir.y;
}

// Distance from p1 back to the rectangle edge along -dir.
double backward_distance(Vec2 p1, Vec2 dir, int w, int h) {
    double t = kInf;
    if (dir.x > 0.0) t = std::min(t, p1.x / dir.x);
    if (dir.x < 0.0) t = std::min(t, (p1.x - w) / dir.x);
    if (dir.y > 0.0) t = std::min(t, p1.y / dir.y);
    if (dir.y < 0.0) t = std::min(t, (p1.y - h) / dir.y);
    return t == kInf ? 0.0 : t;
}

double wrap_angle(double a) { return std::remainder(a, 2.0 * std::numbers::pi); }

} // namespace

void RayFan::validate() const {
    if (!(step > 0.0) || !std::isfinite(step)) throw std::invalid_argument("ray step must be > 0");
    if (mode == Mode::PointCenter && !(std::isfinite(center.x) && std::isfinite(center.y))) {
        throw std::invalid_argument("ray center must be finite");
    }
    if (mode == Mode::Directional && !std::isfinite(theta)) {
        throw std::invalid_argument("ray angle must be finite");
    }
}

void IntegralParams::validate() const {
    auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!unit(s0)) throw std::invalid_argument("s0 must lie in [0, 1]");
    if (!unit(s1)) throw std::invalid_argument("s1 must lie in [0, 1]");
    if (!unit(s2)) throw std::invalid_argument("s2 must lie in [0, 1]");
    if (n < 1) throw std::invalid_argument("quantization term n must be >= 1");
    if (!(thickness_scale >= 0.0) || !std::isfinite(thickness_scale)) {
        throw std::invalid_argument("thickness_scale must be finite and >= 0");
    }
}

double DepthChannel::sample(Vec2 p) const {
    const int w = z.width();
    const int h = z.height();
    if (w == 0 || h == 0) return 0.0;
    const double fx = std::clamp(p.x - 0.5, 0.0, static_cast<double>(w - 1));
    const double fy = std::clamp(p.y - 0.5, 0.0, static_cast<double>(h - 1));
    const int x0 = static_cast<int>(std::floor(fx));
    const int y0 = static_cast<int>(std::floor(fy));
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double tx = fx - x0;
    const double ty = fy - y0;
    const double top = z(x0, y0) * (1.0 - tx) + z(x1, y0) * tx;
    const double bottom = z(x0, y1) * (1.0 - tx) + z(x1, y1) * tx;
    return top * (1.0 - ty) + bottom * ty;
}

Vec2 ray_entry_point(const ShapeMap& map, Vec2 p1, double theta) {
    if (!inside_rect(p1, map.width(), map.height())) {
        throw std::invalid_argument("ray end point lies outside the image rectangle");
    }
    const Vec2 dir = unit_direction(theta);
    return p1 - dir * backward_distance(p1, dir, map.width(), map.height());
}

double integrate_g0(const ShapeMap& map, Vec2 p1, double theta, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("step must be > 0");
    const Vec2 p0 = ray_entry_point(map, p1, theta);
    const Vec2 dir = unit_direction(theta);
    const double total = length(p1 - p0);
    const auto full = static_cast<long>(std::floor(total / step));
    double sum = 0.0;
    for (long k = 0; k < full; ++k) {
        sum += step * g0_integrand(map, p0 + dir * ((k + 0.5) * step), dir);
    }
    const double partial = total - full * step;
    if (partial > 0.0) {
        sum += partial * g0_integrand(map, p0 + dir * (full * step + 0.5 * partial), dir);
    }
    return sum;
}

namespace {

// Depth differences between consecutive quadrature samples (the segment
// midpoints used by integrate_g0), quantized per difference.
double g1_along(const DepthChannel& depth, const ShapeMap* domain, Vec2 p0, Vec2 dir, double total,
                int n, double step) {
    auto inside = [&](Vec2 p) { return domain == nullptr || sample_field(*domain, p).alpha > 0.0; };
    const auto full = static_cast<long>(std::floor(total / step));
    double sum = 0.0;
    Vec2 a = p0 + dir * (0.5 * step);
    double za = full > 0 ? depth.sample(a) : 0.0;
    bool ina = full > 0 && inside(a);
    for (long k = 1; k < full; ++k) {
        const Vec2 b = p0 + dir * ((k + 0.5) * step);
        const double zb = depth.sample(b);
        const bool inb = inside(b);
        if (ina && inb) sum += quantized_depth_step(zb - za, step, n);
        za = zb;
        ina = inb;
    }
    const double partial = total - full * step;
    if (partial > 0.0 && full > 0) {
        const Vec2 b = p0 + dir * (full * step + 0.5 * partial);
        if (ina && inside(b)) sum += quantized_depth_step(depth.sample(b) - za, 0.5 * (step + partial), n);
    }
    return sum;
}

} // namespace

double integrate_g1(const DepthChannel& depth, Vec2 p1, double theta, int n, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("step must be > 0");
    if (n < 1) throw std::invalid_argument("quantization term n must be >= 1");
    const int w = depth.z.width();
    const int h = depth.z.height();
    if (!inside_rect(p1, w, h)) {
        throw std::invalid_argument("ray end point lies outside the image rectangle");
    }
    const Vec2 dir = unit_direction(theta);
    const double total = backward_distance(p1, dir, w, h);
    return g1_along(depth, nullptr, p1 - dir * total, dir, total, n, step);
}

double integrate_g1(const DepthChannel& depth, const ShapeMap& domain, Vec2 p1, double theta,
                    int n, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("step must be > 0");
    if (n < 1) throw std::invalid_argument("quantization term n must be >= 1");
    const Vec2 p0 = ray_entry_point(domain, p1, theta);
    const Vec2 dir = unit_direction(theta);
    return g1_along(depth, &domain, p0, dir, length(p1 - p0), n, step);
}

double ray_angle(const RayFan& fan, Vec2 p) {
    if (fan.mode == RayFan::Mode::Directional) return fan.theta;
    const Vec2 d = p - fan.center;
    if (d.x == 0.0 && d.y == 0.0) return 0.0;
    return std::atan2(d.y, d.x);
}

RayLayout::RayLayout(int width, int height, const RayFan& fan, double spacing)
    : width_(width), height_(height), fan_(fan) {
    fan.validate();
    if (!(spacing > 0.0)) throw std::invalid_argument("ray spacing must be > 0");
    if (width <= 0 || height <= 0) throw std::invalid_argument("layout needs a non-empty canvas");

    const Vec2 corners[4] = {{0.0, 0.0},
                             {static_cast<double>(width), 0.0},
                             {0.0, static_cast<double>(height)},
                             {static_cast<double>(width), static_cast<double>(height)}};
    int count = 0;
    if (fan.mode == RayFan::Mode::PointCenter) {
        const Vec2 c = fan.center;
        double rmax = 0.0;
        for (const Vec2& k : corners) rmax = std::max(rmax, length(k - c));
        if (inside_rect(c, width, height)) {
            wrap_ = true;
            count = std::max(16, static_cast<int>(std::ceil(2.0 * std::numbers::pi * rmax / spacing)));
            first_ = 0.0;
            delta_ = 2.0 * std::numbers::pi / count;
        } else {
            const Vec2 mid{width / 2.0, height / 2.0};
            reference_ = std::atan2(mid.y - c.y, mid.x - c.x);
            double lo = kInf, hi = -kInf;
            for (const Vec2& k : corners) {
                const double d = wrap_angle(std::atan2(k.y - c.y, k.x - c.x) - reference_);
                lo = std::min(lo, d);
                hi = std::max(hi, d);
            }
            count = std::max(2, static_cast<int>(std::ceil((hi - lo) * rmax / spacing)) + 1);
            first_ = reference_ + lo;
            delta_ = (hi - lo) / (count - 1);
        }
        rays_.reserve(static_cast<std::size_t>(count));
        for (int j = 0; j < count; ++j) rays_.push_back(make_ray(c, unit_direction(first_ + j * delta_)));
    } else {
        const Vec2 dir = unit_direction(fan.theta);
        const Vec2 normal{-dir.y, dir.x};
        double lo = kInf, hi = -kInf;
        for (const Vec2& k : corners) {
            lo = std::min(lo, dot(k, normal));
            hi = std::max(hi, dot(k, normal));
        }
        count = std::max(2, static_cast<int>(std::ceil((hi - lo) / spacing)) + 1);
        first_ = lo;
        delta_ = (hi - lo) / (count - 1);
        rays_.reserve(static_cast<std::size_t>(count));
        for (int j = 0; j < count; ++j) rays_.push_back(make_ray(normal * (first_ + j * delta_), dir));
    }
}

RayLayout::Ray RayLayout::make_ray(Vec2 anchor, Vec2 dir) {
    double t_in = 0.0, t_out = 0.0;
    Ray ray{anchor, dir, 0.0};
    if (clip_line(anchor, dir, width_, height_, t_in, t_out)) {
        ray.origin = anchor + dir * t_in;
        ray.length = t_out - t_in;
    } else {
        t_in = 0.0;
    }
    anchor_t_.push_back(t_in);
    return ray;
}

double RayLayout::tau_for(int j, Vec2 p) const {
    const Ray& r = rays_[static_cast<std::size_t>(j)];
    const double t_in = anchor_t_[static_cast<std::size_t>(j)];
    double along = 0.0;
    if (fan_.mode == RayFan::Mode::PointCenter) {
        along = length(p - fan_.center);
    } else {
        along = dot(p, r.dir);
    }
    return std::clamp(along - t_in, 0.0, r.length);
}

RayLayout::Bracket RayLayout::locate(Vec2 p) const {
    const int count = ray_count();
    double a = 0.0;
    if (fan_.mode == RayFan::Mode::PointCenter) {
        const double theta = ray_angle(fan_, p);
        if (wrap_) {
            double t = std::fmod(theta, 2.0 * std::numbers::pi);
            if (t < 0.0) t += 2.0 * std::numbers::pi;
            a = t / delta_;
            if (a >= count) a -= count;
        } else {
            a = (wrap_angle(theta - reference_) + reference_ - first_) / delta_;
        }
    } else {
        const Vec2 dir = rays_.front().dir;
        a = (dot(p, Vec2{-dir.y, dir.x}) - first_) / delta_;
    }

    Bracket b;
    if (wrap_) {
        b.ray0 = std::clamp(static_cast<int>(std::floor(a)), 0, count - 1);
        b.ray1 = (b.ray0 + 1) % count;
        b.weight = std::clamp(a - b.ray0, 0.0, 1.0);
    } else {
        a = std::clamp(a, 0.0, static_cast<double>(count - 1));
        b.ray0 = std::min(static_cast<int>(std::floor(a)), count - 2);
        b.ray1 = b.ray0 + 1;
        b.weight = a - b.ray0;
    }
    b.tau0 = tau_for(b.ray0, p);
    b.tau1 = tau_for(b.ray1, p);
    return b;
}

namespace {

// Prefix sums of s0*G0 + s1*G1 over the full segments of one ray.
struct RayIntegral {
    std::vector<double> prefix;
};

class SheetIntegrator {
public:
    SheetIntegrator(const ShapeMap& map, const DepthChannel& depth, const IntegralParams& params,
                    double step)
        : map_(map), depth_(depth), params_(params), step_(step) {}

    RayIntegral integrate(const RayLayout::Ray& ray) const {
        RayIntegral out;
        const auto full = static_cast<long>(std::floor(ray.length / step_));
        out.prefix.resize(static_cast<std::size_t>(full) + 1, 0.0);
        double z_prev = 0.0;
        bool in_prev = false;
        double sum = 0.0;
        for (long k = 0; k < full; ++k) {
            const Vec2 mid = ray.origin + ray.dir * ((k + 0.5) * step_);
            const FieldSample f = sample_field(map_, mid);
            const double g0 = step_ * (f.n0 * ray.dir.x + f.n1 * ray.dir.y);
            const double z = depth_.sample(mid);
            const bool in = f.alpha > 0.0;
            const double g1 = (k > 0 && in_prev && in) ? quantized_depth_step(z - z_prev, step_, params_.n) : 0.0;
            sum += params_.s0 * g0 + params_.s1 * g1;
            out.prefix[static_cast<std::size_t>(k) + 1] = sum;
            z_prev = z;
            in_prev = in;
        }
        return out;
    }

    double evaluate(const RayLayout::Ray& ray, const RayIntegral& integral, double tau) const {
        const long last = static_cast<long>(integral.prefix.size()) - 1;
        const long k = std::min(static_cast<long>(std::floor(tau / step_)), last);
        const double partial = tau - k * step_;
        double value = integral.prefix[static_cast<std::size_t>(k)];
        if (partial > 0.0) {
            const Vec2 mid = ray.origin + ray.dir * (k * step_ + 0.5 * partial);
            const FieldSample f = sample_field(map_, mid);
            const double g0 = partial * (f.n0 * ray.dir.x + f.n1 * ray.dir.y);
            double g1 = 0.0;
            if (k > 0 && f.alpha > 0.0) {
                const Vec2 prev = ray.origin + ray.dir * ((k - 0.5) * step_);
                if (inside(prev)) {
                    g1 = quantized_depth_step(depth_.sample(mid) - depth_.sample(prev), 0.5 * (step_ + partial), params_.n);
                }
            }
            value += params_.s0 * g0 + params_.s1 * g1;
        }
        return value;
    }

private:
    bool inside(Vec2 p) const { return sample_field(map_, p).alpha > 0.0; }

    const ShapeMap& map_;
    const DepthChannel& depth_;
    const IntegralParams& params_;
    double step_;
};

} // namespace

HeightSheet reconstruct_sheet(const ShapeMap& map, const DepthChannel& depth, const RayFan& fan,
                              const IntegralParams& params, const SweepOptions& options) {
    fan.validate();
    params.validate();
    const int w = map.width();
    const int h = map.height();
    if (!depth.z.same_shape(w, h)) {
        throw std::invalid_argument("depth channel and shape map dimensions differ");
    }

    HeightSheet sheet{ScalarRaster(w, h), ScalarRaster(w, h), MaskRaster(w, h), fan, params};
    if (w == 0 || h == 0) return sheet;

    const RayLayout layout(w, h, fan, options.ray_spacing);
    const SheetIntegrator integrator(map, depth, params, fan.step);

    // Only rays that some valid pixel actually brackets need integrating.
    std::vector<std::uint8_t> needed(static_cast<std::size_t>(layout.ray_count()), 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!(map.alpha(x, y) > 0.5)) continue;
            const auto b = layout.locate({x + 0.5, y + 0.5});
            needed[static_cast<std::size_t>(b.ray0)] = 1;
            if (b.weight > 0.0) needed[static_cast<std::size_t>(b.ray1)] = 1;
        }
    }

    std::vector<RayIntegral> integrals(static_cast<std::size_t>(layout.ray_count()));
    parallel_for(layout.ray_count(), options.threads, [&](int j) {
        if (needed[static_cast<std::size_t>(j)]) {
            integrals[static_cast<std::size_t>(j)] = integrator.integrate(layout.ray(j));
        }
    });

    const double back = params.s2 * params.thickness_scale;
    parallel_for(h, options.threads, [&](int y) {
        for (int x = 0; x < w; ++x) {
            if (!(map.alpha(x, y) > 0.5)) continue;
            const auto b = layout.locate({x + 0.5, y + 0.5});
            double f0 = integrator.evaluate(layout.ray(b.ray0), integrals[static_cast<std::size_t>(b.ray0)], b.tau0);
            if (b.weight > 0.0) {
                const double f0b = integrator.evaluate(layout.ray(b.ray1),
                                                       integrals[static_cast<std::size_t>(b.ray1)], b.tau1);
                f0 = (1.0 - b.weight) * f0 + b.weight * f0b;
            }
            sheet.f0(x, y) = f0;
            sheet.f1(x, y) = f0 - back * map.thickness(x, y);
            sheet.valid(x, y) = 1;
        }
    });
    return sheet;
}

} // namespace mock3d::field
