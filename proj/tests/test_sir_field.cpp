#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <cmath>
#include <random>

#include "lcap/sir_field.hpp"

using namespace lcap;
using Big = boost::multiprecision::cpp_dec_float_50;

namespace {

TransmitterSet random_set(std::mt19937_64& g, int n, double spread) {
    std::uniform_real_distribution<double> u(-spread, spread);
    TransmitterSet s{{}, MapExtent(4.0 * spread)};
    for (int k = 0; k < n; ++k) s.points.push_back({u(g), u(g)});
    return s;
}

// 50-digit direct summation of the SIR definition
double sir_oracle(const std::vector<Point>& pts, std::size_t i, Point z, double alpha) {
    auto p = [&](const Point& q) {
        const Big dx = Big(z.x) - Big(q.x), dy = Big(z.y) - Big(q.y);
        return boost::multiprecision::pow(dx * dx + dy * dy, Big(-alpha / 2.0));
    };
    Big interference = 0;
    for (std::size_t j = 0; j < pts.size(); ++j)
        if (j != i) interference += p(pts[j]);
    return static_cast<double>(p(pts[i]) / interference);
}

} // namespace

TEST(Sir, MidpointOfTwoIsOne) {
    const FieldContext ctx(TransmitterSet{{{0, 0}, {25, 0}}, MapExtent(100)}, {10, 4}, FieldContext::no_cutoff);
    EXPECT_DOUBLE_EQ(sir_at(ctx, 0, {12.5, 0}), 1.0);
    const Point g = sir_gradient(ctx, 0, {12.5, 0});
    EXPECT_LT(g.x, 0.0);
    EXPECT_NEAR(g.y, 0.0, 1e-15);
}

TEST(Sir, SingularPoints) {
    const FieldContext ctx(TransmitterSet{{{0, 0}, {25, 0}}, MapExtent(100)}, {10, 4}, FieldContext::no_cutoff);
    EXPECT_TRUE(std::isinf(sir_at(ctx, 0, {0, 0})));
    EXPECT_EQ(sir_at(ctx, 0, {25, 0}), 0.0);
    EXPECT_TRUE(ctx.evaluate(0, {25, 0}).singular);
    EXPECT_THROW(sir_gradient(ctx, 0, {25, 0}), Error);
    EXPECT_THROW(sir_gradient(ctx, 0, {0, 0}), Error);
    EXPECT_THROW(sir_at(ctx, 0, {NAN, 0}), Error);
    EXPECT_THROW(sir_at(ctx, 2, {1, 0}), Error);
}

TEST(Sir, RejectsBadParams) {
    const TransmitterSet s{{{0, 0}, {1, 0}}, MapExtent(10)};
    EXPECT_THROW(FieldContext(s, {0.0, 4.0}), Error);
    EXPECT_THROW(FieldContext(s, {10.0, 2.0}), Error);
    EXPECT_THROW(FieldContext(s, {10.0, 4.0}, -1.0), Error);
}

TEST(Sir, MatchesHighPrecisionOracle) {
    std::mt19937_64 g(31);
    for (double alpha : {2.5, 3.0, 4.0, 7.3}) {
        for (int rep = 0; rep < 25; ++rep) {
            const auto set = random_set(g, 5, 50.0);
            const FieldContext ctx(set, {10, alpha}, FieldContext::no_cutoff);
            std::uniform_real_distribution<double> u(-60.0, 60.0);
            const Point z{u(g), u(g)};
            for (std::size_t i = 0; i < 5; ++i) {
                const double want = sir_oracle(set.points, i, z, alpha);
                EXPECT_NEAR(sir_at(ctx, i, z), want, 1e-12 * want);
            }
        }
    }
}

TEST(Sir, LargeExponentStaysFinite) {
    const FieldContext ctx(TransmitterSet{{{0, 0}, {25, 0}, {0, 30}}, MapExtent(100)}, {10, 200}, FieldContext::no_cutoff);
    const double s = sir_at(ctx, 0, {10, 3});
    EXPECT_TRUE(std::isfinite(s));
    EXPECT_GT(s, 0.0);
    EXPECT_NEAR(s, sir_oracle(ctx.points(), 0, {10, 3}, 200), 1e-12 * s);
}

TEST(Sir, GradientMatchesCentralDifferencesOver100Configs) {
    std::mt19937_64 g(77);
    int checked = 0;
    for (int rep = 0; rep < 100; ++rep) {
        std::uniform_int_distribution<int> count(2, 12);
        std::uniform_real_distribution<double> a(2.5, 6.0);
        const auto set = random_set(g, count(g), 40.0);
        const FieldContext ctx(set, {10, a(g)}, FieldContext::no_cutoff);
        const std::size_t i = rep % set.size();
        std::uniform_real_distribution<double> u(-45.0, 45.0);
        Point z{u(g), u(g)};
        const double h = 1e-6 * distance(z, set.points[i]);
        const Point grad = sir_gradient(ctx, i, z);
        const Point fd{(ctx.sir(i, z + Point{h, 0}) - ctx.sir(i, z - Point{h, 0})) / (2 * h),
                       (ctx.sir(i, z + Point{0, h}) - ctx.sir(i, z - Point{0, h})) / (2 * h)};
        EXPECT_LE(norm(grad - fd), 1e-6 * norm(grad)) << "config " << rep;
        ++checked;
    }
    EXPECT_EQ(checked, 100);
}

TEST(Sir, ScaleInvariance) {
    std::mt19937_64 g(5);
    const auto set = random_set(g, 8, 30.0);
    const FieldContext ctx(set, {10, 3.5}, FieldContext::no_cutoff);
    for (double gamma : {0.01, 3.0, 1e4}) {
        TransmitterSet scaled{{}, MapExtent(set.extent.side * gamma)};
        for (const Point& p : set.points) scaled.points.push_back(gamma * p);
        const FieldContext big(scaled, {10, 3.5}, FieldContext::no_cutoff);
        const Point z{3.0, -7.0};
        for (std::size_t i = 0; i < set.size(); ++i) {
            const double s = ctx.sir(i, z);
            EXPECT_NEAR(big.sir(i, gamma * z), s, 1e-12 * s);
        }
    }
}

TEST(G, ValuesAndIdentity) {
    const FieldContext two(TransmitterSet{{{0, 0}, {25, 0}}, MapExtent(100)}, {10, 4}, FieldContext::no_cutoff);
    EXPECT_EQ(g_value(two, 0, {0, 0}), 1.0);
    EXPECT_DOUBLE_EQ(g_value(two, 0, {12.5, 7}), 0.5);
    EXPECT_EQ(g_value(two, 0, {25, 0}), 0.0);

    std::mt19937_64 g(8);
    const auto set = random_set(g, 6, 20.0);
    const FieldContext ctx(set, {10, 4}, FieldContext::no_cutoff);
    for (int rep = 0; rep < 50; ++rep) {
        std::uniform_real_distribution<double> u(-25.0, 25.0);
        const Point z{u(g), u(g)};
        for (std::size_t i = 0; i < set.size(); ++i) {
            const double s = sir_at(ctx, i, z);
            EXPECT_NEAR(g_value(ctx, i, z), s / (1 + s), 1e-12);
        }
    }
}

TEST(G, PartitionOfUnity) {
    std::mt19937_64 g(12);
    for (int rep = 0; rep < 100; ++rep) {
        const auto set = random_set(g, 2 + rep % 20, 30.0);
        const FieldContext ctx(set, {10, 2.5 + 0.05 * rep}, FieldContext::no_cutoff);
        std::uniform_real_distribution<double> u(-35.0, 35.0);
        const Point z{u(g), u(g)};
        double total = 0.0;
        for (std::size_t i = 0; i < set.size(); ++i) {
            const double v = g_value(ctx, i, z);
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
            total += v;
        }
        EXPECT_NEAR(total, 1.0, 1e-9);
    }
}

TEST(Count, Examples) {
    std::mt19937_64 g(3);
    const FieldContext sparse(TransmitterSet{{{0, 0}, {100, 0}, {0, 100}}, MapExtent(400)}, {10, 4},
                              FieldContext::no_cutoff);
    EXPECT_GE(count_successful(sparse, {0, 0}), 1u);
    EXPECT_EQ(count_successful(sparse, {50, 50}), 0u);

    for (double K : {0.1, 0.5, 2.0, 10.0}) {
        const auto set = random_set(g, 3, 20.0);
        const FieldContext ctx(set, {K, 4}, FieldContext::no_cutoff);
        for (int rep = 0; rep < 200; ++rep) {
            std::uniform_real_distribution<double> u(-25.0, 25.0);
            const Point z{u(g), u(g)};
            std::size_t brute = 0;
            for (std::size_t i = 0; i < 3; ++i) brute += sir_oracle(set.points, i, z, 4) >= K;
            const std::size_t got = count_successful(ctx, z);
            EXPECT_EQ(got, brute);
            if (K > 1) {
                EXPECT_LE(got, 1u);
            }
        }
    }
}

TEST(Context, CutoffAndTailBound) {
    const auto grid = generate_grid(GridKind::square, 10.0, MapExtent(2000.0));
    const FieldContext ctx(grid, {10, 4});
    EXPECT_NEAR(ctx.mean_spacing(), 10.0, 1e-9);
    EXPECT_NEAR(ctx.cutoff(), 400.0, 1e-6);
    EXPECT_GT(ctx.tail_bound(), 0.0);
    const FieldContext full(grid, {10, 4}, FieldContext::no_cutoff);
    EXPECT_EQ(full.tail_bound(), 0.0);
    const std::size_t o = ctx.nearest_to({0, 0});
    const Point z{3.1, 1.7};
    // dropped power relative to the kept interference tracks the tail estimate
    const double kept = std::pow(norm(z - ctx.points()[o]), -4.0) / ctx.sir(o, z);
    const double rel = ctx.sir(o, z) / full.sir(o, z) - 1.0;
    EXPECT_GT(rel, 0.5 * ctx.tail_bound() / kept);
    EXPECT_LT(rel, 1.5 * ctx.tail_bound() / kept);
    const auto [j, d] = ctx.nearest_interferer(o);
    EXPECT_NEAR(d, 10.0, 1e-12);
    EXPECT_NE(j, o);
}

TEST(Context, IndexedAndCompensatedPathsAgree) {
    std::mt19937_64 g(21);
    TransmitterSet set = random_set(g, 600, 200.0);
    const FieldContext indexed(set, {10, 4}, 120.0);
    const FieldContext plain(set, {10, 4}, 120.0, Accumulation::compensated);
    for (int rep = 0; rep < 50; ++rep) {
        std::uniform_real_distribution<double> u(-150.0, 150.0);
        const Point z{u(g), u(g)};
        const std::size_t i = rep;
        const FieldSample a = indexed.evaluate(i, z), b = plain.evaluate(i, z);
        EXPECT_NEAR(a.sir, b.sir, 1e-12 * b.sir);
        EXPECT_NEAR(norm(a.gradient - b.gradient), 0.0, 1e-10 * norm(b.gradient));
    }
}
