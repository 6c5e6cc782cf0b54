#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "lqg/fractal.hpp"

using namespace lqg;

namespace {

double brute_distance(const FractalMask& m, Point z) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c : m.cells) best = std::min(best, distance(z, m.center(c)));
    return best;
}

std::vector<double> geometric(double first, double ratio, int count) {
    std::vector<double> v;
    for (int k = 0; k < count; ++k) v.push_back(first * std::pow(ratio, k));
    return v;
}

const double kCantorX = 1.0 - std::log(2.0) / std::log(3.0);

}  // namespace

TEST(Fractal, Names) {
    for (auto k : {MaskKind::point, MaskKind::segment, MaskKind::cantor_dust, MaskKind::random_walk_range})
        EXPECT_EQ(mask_kind_from_string(to_string(k)), k);
    EXPECT_THROW(mask_kind_from_string("sierpinski"), std::invalid_argument);
}

TEST(Fractal, BasicMasks) {
    const Grid g(64);
    const auto p = make_fractal(MaskKind::point, {}, g);
    ASSERT_EQ(p.cells.size(), 1u);
    EXPECT_EQ(*p.known_x, 1.0);
    const auto s = make_fractal(MaskKind::segment, {}, g);
    EXPECT_EQ(s.cells.size(), 32u);
    EXPECT_EQ(*s.known_x, 0.5);
    const auto w = make_fractal(MaskKind::random_walk_range, {5, 3000, 9, 0.125}, g);
    EXPECT_FALSE(w.known_x.has_value());
    for (std::size_t c : w.cells) EXPECT_GE(boundary_distance(w.center(c)), 0.125 - 1e-12);
    EXPECT_EQ(make_fractal(MaskKind::random_walk_range, {5, 3000, 9, 0.125}, g).cells, w.cells);
}

TEST(Fractal, CantorRejectsUnresolvableDepth) {
    EXPECT_THROW(make_fractal(MaskKind::cantor_dust, {5, 0, 1, 0.125}, Grid(256)), std::invalid_argument);
    EXPECT_NO_THROW(make_fractal(MaskKind::cantor_dust, {4, 0, 1, 0.125}, Grid(256)));
    EXPECT_THROW(make_fractal(MaskKind::cantor_dust, {2, 0, 1, 0.125}, Grid(256)), std::invalid_argument);
}

TEST(Fractal, CantorBoxCountsArePowersOfFour) {
    const auto m = make_fractal(MaskKind::cantor_dust, {5, 0, 1, 0.125}, Grid(1024));
    std::vector<double> sides;
    for (int k = 1; k <= 5; ++k) sides.push_back(0.75 / std::pow(3.0, k));
    const auto bc = box_count(m, sides, {0.125, 0.125});
    for (int k = 1; k <= 5; ++k) EXPECT_EQ(bc.counts[k - 1], static_cast<std::size_t>(std::pow(4.0, k)));
    EXPECT_NEAR(bc.dimension, std::log(4.0) / std::log(3.0), 1e-12);
    EXPECT_NEAR(*m.known_x, kCantorX, 1e-15);
}

TEST(Fractal, SegmentBoxDimensionIsOne) {
    const auto m = make_fractal(MaskKind::segment, {}, Grid(256));
    const double sides[] = {1.0 / 4, 1.0 / 16, 1.0 / 64};
    const auto bc = box_count(m, sides);
    EXPECT_NEAR(bc.dimension, 1.0, 1e-12);
    EXPECT_THROW(box_count(m, std::span<const double>(sides, 1)), std::invalid_argument);
}

TEST(MaskDistance, MatchesBruteForce) {
    const Grid g(128);
    for (auto kind : {MaskKind::point, MaskKind::segment, MaskKind::random_walk_range}) {
        const auto m = make_fractal(kind, {4, 4000, 3, 0.125}, g);
        const MaskDistance d(m);
        Philox4x32 rng(7, static_cast<std::uint64_t>(kind));
        for (int k = 0; k < 3000; ++k) {
            const Point z{rng.uniform(), rng.uniform()};
            const double exact = brute_distance(m, z), got = d.distance(z);
            ASSERT_GE(got, exact - 1e-12);
            ASSERT_LE(got, exact + (exact < 0.05 ? 1e-12 : 0.05 * g.spacing)) << to_string(kind) << " " << z.x << "," << z.y;
        }
        for (int j = 0; j < g.n; j += 7)
            for (int i = 0; i < g.n; i += 3) ASSERT_NEAR(d.distance(g.center(i, j)), brute_distance(m, g.center(i, j)), 1e-12);
    }
    const auto c = make_fractal(MaskKind::cantor_dust, {4, 0, 1, 0.125}, g);
    const MaskDistance dc(c);
    for (int j = 0; j < g.n; j += 5)
        for (int i = 0; i < g.n; i += 3) EXPECT_NEAR(dc.distance(g.center(i, j)), brute_distance(c, g.center(i, j)), 1e-12);
}

TEST(EuclideanExponent, Segment) {
    const Grid g(1024);
    const auto m = make_fractal(MaskKind::segment, {}, g);
    const auto est = euclidean_exponent(m, geometric(2.0 / 1024, std::sqrt(2.0), 9), {100000, 3, 100});
    EXPECT_NEAR(est.exponent, 0.5, 0.03);
    EXPECT_GT(est.std_error, 0.0);
    EXPECT_TRUE(est.sufficient);
}

TEST(EuclideanExponent, Point) {
    const Grid g(1024);
    const auto m = make_fractal(MaskKind::point, {}, g);
    const auto est = euclidean_exponent(m, geometric(0.008, std::pow(10.0, 0.25), 6), {1000000, 5, 50});
    EXPECT_NEAR(est.exponent, 1.0, 0.05);
}

TEST(EuclideanExponent, CantorDust) {
    const Grid g(1024);
    const auto m = make_fractal(MaskKind::cantor_dust, {5, 0, 1, 0.125}, g);
    const auto est = euclidean_exponent(m, geometric(0.1, 1.0 / std::sqrt(3.0), 7), {100000, 4, 100});
    EXPECT_NEAR(est.exponent, kCantorX, 0.04);
}

TEST(EuclideanExponent, DropsThinRungsAndRejectsSubResolution) {
    const Grid g(256);
    const auto m = make_fractal(MaskKind::point, {}, g);
    const auto est = euclidean_exponent(m, geometric(0.2, 0.5, 5), {2000, 1, 10});
    EXPECT_FALSE(est.dropped.empty());
    for (const auto& d : est.dropped) EXPECT_EQ(d.code, "few_hits");
    const double tiny[] = {1.0 / 256, 0.1};
    EXPECT_THROW(euclidean_exponent(m, tiny), std::invalid_argument);
}

TEST(BallOutcome, Brackets) {
    QuantumBallResult r;
    r.status = BallStatus::crossed;
    r.eps = 0.1;
    EXPECT_EQ(ball_outcome(r, 0.1), BallOutcome::hit);
    EXPECT_EQ(ball_outcome(r, 0.11), BallOutcome::miss);
    r.status = BallStatus::below_at_top;
    r.eps_lower = 0.2;
    EXPECT_EQ(ball_outcome(r, 0.15), BallOutcome::hit);
    EXPECT_EQ(ball_outcome(r, 0.3), BallOutcome::undetermined);
    r.status = BallStatus::above_at_floor;
    r.eps_upper = 0.01;
    EXPECT_EQ(ball_outcome(r, 0.02), BallOutcome::miss);
    EXPECT_EQ(ball_outcome(r, 0.005), BallOutcome::undetermined);
}

// With gamma = 0 the quantum ball of mass delta is the Euclidean disc of area
// delta, so Delta equals x.
TEST(QuantumExponent, LebesgueLimitIsIdentity) {
    const Grid g(512);
    const FractalMask masks[] = {make_fractal(MaskKind::segment, {}, g), make_fractal(MaskKind::point, {}, g)};
    QuantumOptions q;
    q.n_fields = 4;
    q.n_points = 20000;
    q.seed = 3;
    q.ladder.eps_max = 0.25;
    q.window = {0.25, 0.75};
    q.n_boot = 50;
    q.workers = 1;
    const auto deltas = geometric(3e-2, 1.0 / std::sqrt(10.0), 5);
    const auto est = quantum_exponents(masks, 0.0, deltas, q);
    EXPECT_NEAR(est[0].exponent, 0.5, 0.05);
    EXPECT_NEAR(est[1].exponent, 1.0, 0.1);
    EXPECT_THROW(quantum_exponents(masks, 2.0, deltas, q), std::invalid_argument);
}

TEST(QuantumExponent, DeterministicAcrossWorkers) {
    const Grid g(128);
    const FractalMask masks[] = {make_fractal(MaskKind::segment, {}, g)};
    QuantumOptions q;
    q.n_fields = 6;
    q.n_points = 200;
    q.window = {0.25, 0.75};
    q.n_boot = 20;
    q.workers = 1;
    const auto deltas = geometric(1e-2, 0.5, 4);
    const auto a = quantum_exponents(masks, 1.0, deltas, q);
    q.workers = 3;
    const auto b = quantum_exponents(masks, 1.0, deltas, q);
    EXPECT_EQ(a[0].scales.size(), b[0].scales.size());
    for (std::size_t k = 0; k < a[0].scales.size(); ++k) EXPECT_EQ(a[0].scales[k].hits, b[0].scales[k].hits);
    if (!std::isnan(a[0].exponent)) {
        EXPECT_EQ(a[0].exponent, b[0].exponent);
        EXPECT_EQ(a[0].std_error, b[0].std_error);
    }
}

TEST(Kpz, PredictionHelper) {
    EXPECT_EQ(kpz_prediction(0.0, 0.3), 0.3);
    EXPECT_NEAR(kpz_prediction(std::sqrt(8.0 / 3.0), 0.5), (std::sqrt(13.0) - 1.0) / 4.0, 1e-14);
}
