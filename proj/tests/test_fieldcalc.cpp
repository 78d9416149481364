#include <doctest.h>

#include <numbers>
#include <random>

#include "mock3d/fieldcalc.hpp"
#include "support.hpp"

using namespace mock3d;
using namespace mock3d::field;

namespace {

constexpr double kPi = std::numbers::pi;

// Entry point by brute force: walk back in tiny steps until leaving the
// rectangle, then bisect onto the edge.
Vec2 walk_back(Vec2 p1, double theta, int w, int h) {
    const Vec2 d{std::cos(theta), std::sin(theta)};
    auto in = [&](Vec2 p) { return p.x >= 0 && p.y >= 0 && p.x <= w && p.y <= h; };
    double lo = 0.0, hi = 0.0;
    while (in(p1 - d * hi)) {
        lo = hi;
        hi += 0.25;
    }
    for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        (in(p1 - d * mid) ? lo : hi) = mid;
    }
    return p1 - d * lo;
}

// Midpoint rule written out directly.
double oracle_g0(const ShapeMap& m, Vec2 p1, double theta, double step) {
    const Vec2 p0 = walk_back(p1, theta, m.width(), m.height());
    const Vec2 d{std::cos(theta), std::sin(theta)};
    const double total = length(p1 - p0);
    double sum = 0.0;
    double t = 0.0;
    while (t < total - 1e-12) {
        const double seg = std::min(step, total - t);
        const FieldSample f = sample_field(m, p0 + d * (t + seg / 2));
        sum += (f.n0 * d.x + f.n1 * d.y) * seg;
        t += seg;
    }
    return sum;
}

} // namespace

TEST_CASE("ray entry points") {
    const ShapeMap m(100, 100);
    const Vec2 a = ray_entry_point(m, {50, 50}, 0.0);
    CHECK(a == Vec2{0.0, 50.0});
    const Vec2 b = ray_entry_point(m, {50, 50}, kPi / 2);
    CHECK(b == Vec2{50.0, 0.0});
    const Vec2 c = ray_entry_point(m, {50, 50}, kPi);
    CHECK(c == Vec2{100.0, 50.0});

    std::mt19937 rng(5);
    std::uniform_real_distribution<double> pos(0.0, 100.0);
    std::uniform_real_distribution<double> ang(-kPi, kPi);
    for (int i = 0; i < 200; ++i) {
        const Vec2 p{pos(rng), pos(rng)};
        const double th = ang(rng);
        const Vec2 e = ray_entry_point(m, p, th);
        const Vec2 o = walk_back(p, th, 100, 100);
        CHECK(length(e - o) < 1e-9);
    }
    CHECK_THROWS_AS(ray_entry_point(m, {101, 5}, 0.0), std::invalid_argument);
}

TEST_CASE("G0 on constant fields") {
    const ShapeMap m = fixtures::field_map(100, 40, [](Vec2) { return Vec2{0.3, 0.0}; });
    CHECK(integrate_g0(m, {60.0, 20.5}, 0.0, 1.0) == doctest::Approx(0.3 * 60.0));
    CHECK(integrate_g0(m, {60.25, 20.5}, 0.0, 1.0) == doctest::Approx(0.3 * 60.25));
    CHECK(integrate_g0(m, {60.0, 20.5}, kPi / 2, 1.0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("G0 matches the direct midpoint sum") {
    const ShapeMap m = fixtures::rotation_map(48, 40, 0.03);
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> px(0.0, 48.0), py(0.0, 40.0), ang(-kPi, kPi);
    for (int i = 0; i < 100; ++i) {
        const Vec2 p{px(rng), py(rng)};
        const double th = ang(rng);
        CHECK(integrate_g0(m, p, th, 1.0) == doctest::Approx(oracle_g0(m, p, th, 1.0)).epsilon(1e-9));
        CHECK(integrate_g0(m, p, th, 0.37) == doctest::Approx(oracle_g0(m, p, th, 0.37)).epsilon(1e-9));
    }
}

TEST_CASE("G0 of a gradient field is path independent") {
    // h = a (x^2 + y^2) on a 100 px square, field = grad h
    const int n = 100;
    const double a = 0.25 / n;
    auto h = [&](Vec2 p) { return a * dot(p, p); };
    const ShapeMap m = fixtures::field_map(n, n, [&](Vec2 p) { return p * (2 * a); });
    const double range = h({n, n});
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> pos(1.0, n - 1.0), ang(-kPi, kPi);
    for (int i = 0; i < 200; ++i) {
        const Vec2 p1{pos(rng), pos(rng)};
        const double th = ang(rng);
        const Vec2 p0 = ray_entry_point(m, p1, th);
        CHECK(std::abs(integrate_g0(m, p1, th, 1.0) - (h(p1) - h(p0))) <= 0.01 * range);
    }
}

TEST_CASE("G1 quantizes depth changes") {
    const int w = 100, h = 10;
    SUBCASE("constant depth") {
        const auto d = DepthChannel::constant(w, h, 7.0);
        CHECK(integrate_g1(d, {80.5, 5.5}, 0.0, 1, 1.0) == 0.0);
    }
    SUBCASE("smooth slope vanishes") {
        DepthChannel d = DepthChannel::constant(w, h);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) d.z(x, y) = 0.4 * x;
        }
        CHECK(integrate_g1(d, {80.5, 5.5}, 0.0, 1, 1.0) == 0.0);
        // n = 2 resolves a slope of 0.4: floor(0.8 + 0.5) / 2 = 0.5 per px
        CHECK(integrate_g1(d, {80.0, 5.5}, 0.0, 2, 1.0) == doctest::Approx(0.5 * 79));
    }
    SUBCASE("a jump survives") {
        DepthChannel d = DepthChannel::constant(w, h);
        for (int y = 0; y < h; ++y) {
            for (int x = 50; x < w; ++x) d.z(x, y) = 3.0;
        }
        CHECK(integrate_g1(d, {80.5, 5.5}, 0.0, 1, 1.0) == doctest::Approx(3.0));
        CHECK(integrate_g1(d, {30.5, 5.5}, 0.0, 1, 1.0) == 0.0);
        // running against the jump
        CHECK(integrate_g1(d, {20.5, 5.5}, kPi, 1, 1.0) == doctest::Approx(-3.0));
    }
    SUBCASE("masked samples drop out") {
        DepthChannel d = DepthChannel::constant(w, h);
        for (int y = 0; y < h; ++y) {
            for (int x = 50; x < w; ++x) d.z(x, y) = 3.0;
        }
        ShapeMap dom = fixtures::field_map(w, h, [](Vec2) { return Vec2{}; });
        CHECK(integrate_g1(d, dom, {80.5, 5.5}, 0.0, 1, 1.0) == doctest::Approx(3.0));
        for (int y = 0; y < h; ++y) dom.set(49, y, {});
        CHECK(integrate_g1(d, dom, {80.5, 5.5}, 0.0, 1, 1.0) == 0.0);
    }
    CHECK_THROWS_AS(integrate_g1(DepthChannel::constant(4, 4), {1, 1}, 0.0, 0, 1.0), std::invalid_argument);
}

TEST_CASE("masked holes contribute nothing") {
    ShapeMap m = fixtures::field_map(60, 20, [](Vec2) { return Vec2{0.5, 0.0}; });
    for (int y = 0; y < 20; ++y) {
        for (int x = 10; x < 20; ++x) m.set(x, y, {});
    }
    const Vec2 p1{40.0, 10.5};
    CHECK(ray_entry_point(m, p1, 0.0) == Vec2{0.0, 10.5});
    // dense sampling oracle of the masked integrand
    double dense = 0.0;
    const int k = 40000;
    for (int i = 0; i < k; ++i) dense += sample_field(m, {(i + 0.5) * 40.0 / k, 10.5}).n0 * 40.0 / k;
    CHECK(integrate_g0(m, p1, 0.0, 0.01) == doctest::Approx(dense).epsilon(1e-3));
    // at 1 px the samples sit on texel centers: 10 masked, 30 covered
    CHECK(integrate_g0(m, p1, 0.0, 1.0) == doctest::Approx(0.5 * 30.0).epsilon(1e-9));
}

TEST_CASE("sheet of a zero field is flat") {
    ShapeMap m = fixtures::field_map(32, 24, [](Vec2) { return Vec2{}; }, 0.8);
    IntegralParams p;
    p.s2 = 0.5;
    p.thickness_scale = 10.0;
    const HeightSheet s = reconstruct_sheet(m, DepthChannel::constant(32, 24), RayFan::point({7, 9}), p);
    for (std::size_t i = 0; i < s.f0.size(); ++i) {
        CHECK(s.valid[i] == 1);
        CHECK(s.f0[i] == 0.0);
        CHECK(s.f1[i] == doctest::Approx(-0.5 * 10.0 * 0.8));
    }
}

TEST_CASE("directional sheet of a constant field is a ramp") {
    const double c = 0.4;
    const ShapeMap m = fixtures::field_map(40, 30, [&](Vec2) { return Vec2{c, 0.0}; });
    const HeightSheet s = reconstruct_sheet(m, DepthChannel::constant(40, 30), RayFan::directional(0.0), {});
    for (int y = 0; y < 30; ++y) {
        for (int x = 0; x < 40; ++x) CHECK(s.f0(x, y) == doctest::Approx(c * (x + 0.5)).epsilon(1e-12));
    }
}

TEST_CASE("sheet values are blends of exact integrals along the bracketing rays") {
    // Independent per-ray integration (midpoint G0 plus midpoint-difference
    // G1) at the same ray parameter, blended with the layout's weight.
    const int w = 64, h = 64;
    ShapeMap m = fixtures::rotation_map(w, h, 0.02);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (length(Vec2{x + 0.5, y + 0.5} - Vec2{20, 40}) < 6) m.set(x, y, {});
        }
    }
    DepthChannel d = DepthChannel::constant(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) d.z(x, y) = (x > 40 ? 4.0 : 0.0) + 0.1 * y;
    }
    IntegralParams params;
    params.s0 = 0.9;
    params.s1 = 0.7;
    for (const RayFan fan : {RayFan::point({30.3, 21.7}), RayFan::point({-20, 80}), RayFan::directional(0.7),
                             RayFan::point({10, 10}, 0.8)}) {
        const HeightSheet s = reconstruct_sheet(m, d, fan, params);
        const RayLayout layout(w, h, fan, 0.5);
        double worst = 0.0;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                if (!s.valid(x, y)) continue;
                const auto b = layout.locate({x + 0.5, y + 0.5});
                auto along = [&](int j, double tau) {
                    const auto& r = layout.ray(j);
                    const Vec2 p = r.origin + r.dir * tau;
                    const double th = std::atan2(r.dir.y, r.dir.x);
                    if (tau <= 0.0) return 0.0;
                    return params.s0 * integrate_g0(m, p, th, fan.step) +
                           params.s1 * integrate_g1(d, m, p, th, params.n, fan.step);
                };
                const double expect = (1 - b.weight) * along(b.ray0, b.tau0) + b.weight * along(b.ray1, b.tau1);
                worst = std::max(worst, std::abs(expect - s.f0(x, y)));
            }
        }
        CHECK(worst < 1e-6);
    }
}

TEST_CASE("sheet agrees with per-pixel integration") {
    const int w = 64, h = 64;
    const ShapeMap m = fixtures::rotation_map(w, h, 0.02);
    const RayFan fan = RayFan::point({17.2, 30.9});
    const HeightSheet s = reconstruct_sheet(m, DepthChannel::constant(w, h), fan, {});
    double worst = 0.0, range = 0.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Vec2 p{x + 0.5, y + 0.5};
            const double direct = integrate_g0(m, p, ray_angle(fan, p), 1.0);
            worst = std::max(worst, std::abs(direct - s.f0(x, y)));
            range = std::max(range, std::abs(direct));
        }
    }
    // ray blending error only
    CHECK(worst <= 0.01 * range);
}

TEST_CASE("conservative sheets do not depend on the ray center") {
    const int n = 96;
    const Vec2 c{n / 2.0, n / 2.0};
    const double sigma = 14.0, amp = 12.0;
    const ShapeMap m = fixtures::field_map(n, n, [&](Vec2 p) { return fixtures::gaussian_gradient(p, c, sigma, amp); });
    const auto depth = DepthChannel::constant(n, n);
    const HeightSheet a = reconstruct_sheet(m, depth, RayFan::point({5, 7}), {});
    const HeightSheet b = reconstruct_sheet(m, depth, RayFan::point({90, 50}), {});
    const HeightSheet e = reconstruct_sheet(m, depth, RayFan::directional(2.0), {});
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            // every ray enters where h is nearly 0, so f0 ~ h
            const double hval = fixtures::gaussian({x + 0.5, y + 0.5}, c, sigma, amp);
            CHECK(std::abs(a.f0(x, y) - b.f0(x, y)) <= 0.02 * amp);
            CHECK(std::abs(a.f0(x, y) - e.f0(x, y)) <= 0.02 * amp);
            CHECK(std::abs(a.f0(x, y) - hval) <= 0.02 * amp);
        }
    }
}

TEST_CASE("sheet invariants") {
    const int w = 50, h = 40;
    std::mt19937 rng(21);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    ShapeMap m = fixtures::rotation_map(w, h, 0.03);
    for (auto& t : m.thickness.data()) t = unit(rng);
    for (int x = 0; x < 8; ++x) m.alpha(x, 3) = 0.4;
    m.normalize();
    IntegralParams p;
    p.s2 = 0.6;
    p.thickness_scale = 3.0;
    const RayFan fan = RayFan::point({12, 33});
    const HeightSheet s1 = reconstruct_sheet(m, DepthChannel::constant(w, h), fan, p, {0.5, 1});
    const HeightSheet s4 = reconstruct_sheet(m, DepthChannel::constant(w, h), fan, p, {0.5, 4});

    SUBCASE("validity is alpha above one half") {
        for (std::size_t i = 0; i < m.alpha.size(); ++i) CHECK(s1.valid[i] == (m.alpha[i] > 0.5 ? 1 : 0));
    }
    SUBCASE("back sheet lies below the front sheet") {
        for (std::size_t i = 0; i < s1.f0.size(); ++i) {
            if (s1.valid[i]) CHECK(s1.f1[i] <= s1.f0[i]);
        }
    }
    SUBCASE("thread count does not change the result") {
        CHECK(s1.f0 == s4.f0);
        CHECK(s1.f1 == s4.f1);
    }
    SUBCASE("continuity along a ray") {
        // field magnitude is at most |k| * half-diagonal
        const double bound = 0.03 * 32.1;
        const double th = 0.6;
        const Vec2 d{std::cos(th), std::sin(th)};
        const Vec2 base{12, 33};
        double prev = integrate_g0(m, base + d * 0.5, th, 1.0);
        for (double t = 1.5; t < 10; t += 1.0) {
            const double cur = integrate_g0(m, base + d * t, th, 1.0);
            CHECK(std::abs(cur - prev) <= bound * 1.0 + 1e-9);
            prev = cur;
        }
    }
}

TEST_CASE("sheet preconditions") {
    const ShapeMap m(8, 8);
    CHECK_THROWS_AS(reconstruct_sheet(m, DepthChannel::constant(7, 8), RayFan::point({1, 1}), {}),
                    std::invalid_argument);
    IntegralParams bad;
    bad.s0 = 1.5;
    CHECK_THROWS_AS(reconstruct_sheet(m, DepthChannel::constant(8, 8), RayFan::point({1, 1}), bad),
                    std::invalid_argument);
    CHECK_THROWS_AS(reconstruct_sheet(m, DepthChannel::constant(8, 8), RayFan::point({1, 1}, 0.0), {}),
                    std::invalid_argument);
}

TEST_CASE("ray angle") {
    CHECK(ray_angle(RayFan::point({3, 3}), {3, 3}) == 0.0);
    CHECK(ray_angle(RayFan::point({3, 3}), {3, 5}) == doctest::Approx(kPi / 2));
    CHECK(ray_angle(RayFan::directional(1.25), {9, 9}) == 1.25);
}

TEST_CASE("ray layout spacing") {
    for (const RayFan fan : {RayFan::point({30, 20}), RayFan::point({-50, 10}), RayFan::directional(0.3)}) {
        const RayLayout layout(60, 40, fan, 0.5);
        // neighbouring rays are at most `spacing` apart at the far corner
        for (int j = 0; j + 1 < layout.ray_count(); ++j) {
            const auto& a = layout.ray(j);
            const auto& b = layout.ray(j + 1);
            if (fan.mode == RayFan::Mode::Directional) {
                CHECK(std::abs(cross(a.dir, b.origin - a.origin)) <= 0.5 + 1e-9);
            } else {
                const double angle = std::acos(std::clamp(dot(a.dir, b.dir), -1.0, 1.0));
                double rmax = 0.0;
                for (Vec2 k : {Vec2{0, 0}, Vec2{60, 0}, Vec2{0, 40}, Vec2{60, 40}}) rmax = std::max(rmax, length(k - fan.center));
                CHECK(angle * rmax <= 0.5 + 1e-9);
            }
        }
    }
}
