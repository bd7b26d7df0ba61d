#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "adasynth/driver.hpp"

using namespace adasynth;

TEST(RightLane, Values) {
    const DecisionParams p;
    EXPECT_EQ(p_change_from_right(0.0, p), 1.0);
    EXPECT_NEAR(p_change_from_right(1.0, p), 0.36787944117144233, 1e-15);
    EXPECT_LT(p_change_from_right(10.0, p), 1e-4);
    EXPECT_THROW(p_change_from_right(-0.1, p), DomainError);
}

TEST(LeftLane, Values) {
    const DecisionParams p;
    EXPECT_EQ(p_change_from_left(0.0, p), 0.0);
    EXPECT_DOUBLE_EQ(p_change_from_left(500.0, p), 1.0);
    EXPECT_NEAR(p_change_from_left(100.0, p), std::log(6.0) / std::log(26.0), 1e-15);
    EXPECT_NEAR(p_change_from_left(100.0, p), 0.5499, 1e-4);
    EXPECT_EQ(p_change_from_left(-5.0, p), 0.0);
    EXPECT_DOUBLE_EQ(p_change_from_left(900.0, p), 1.0);
}

TEST(Monotonicity, OverGrid) {
    const DecisionParams p;
    for (double x = 0.0; x < 20.0; x += 0.25) {
        EXPECT_GT(p_change_from_right(x, p), p_change_from_right(x + 0.25, p));
    }
    for (double d = 0.0; d < 500.0; d += 2.5) {
        EXPECT_LT(p_change_from_left(d, p), p_change_from_left(d + 2.5, p));
    }
}

TEST(GaussianMass, OneSigmaWindow) {
    DecisionParams p;
    p.sigma = 1.5;
    p.delta = 3.0;
    EXPECT_NEAR(gaussian_interval_mass(0.0, p), 0.682689492137086, 1e-12);
}

TEST(GaussianMass, VanishingWidth) {
    DecisionParams p;
    p.delta = 1e-12;
    EXPECT_LT(gaussian_interval_mass(0.0, p), 1e-12);
    p.sigma = 0.0;
    EXPECT_THROW(gaussian_interval_mass(0.0, p), DomainError);
}

TEST(GaussianMass, WindowSumsToOne) {
    // Trapezoid quadrature of the density as an independent check.
    DecisionParams p;
    p.sigma = 2.0;
    p.delta = 0.5;
    p.window = 24;  // L*delta = 12 = 6 sigma
    const NoiseWindow w(p);
    EXPECT_NEAR(w.total_mass, 1.0, 1e-6);
    for (std::size_t i = 0; i < w.offsets.size(); ++i) {
        const double lo = w.offsets[i] - p.delta / 2, hi = w.offsets[i] + p.delta / 2;
        double q = 0.0;
        const int m = 2000;
        for (int k = 0; k <= m; ++k) {
            const double z = lo + (hi - lo) * k / m;
            const double f = std::exp(-z * z / (2 * p.sigma * p.sigma)) / (p.sigma * std::sqrt(2 * M_PI));
            q += (k == 0 || k == m ? 0.5 : 1.0) * f;
        }
        q *= (hi - lo) / m;
        EXPECT_NEAR(w.masses[i], q, 1e-9);
    }
}

TEST(Noisy, NoiselessLimitExact) {
    DecisionParams p;
    p.sigma = 1e-10;
    for (double d = 0.0; d <= 200.0; d += 7.5) {
        for (double v : {5.0, 20.0, 31.0}) {
            EXPECT_EQ(noisy_decision_prob(d, v, 0, p), p_change_from_right(std::min(d / v, 10.0), p));
            EXPECT_EQ(noisy_decision_prob(d, v, 1, p), p_change_from_left(d, p));
        }
    }
}

TEST(Noisy, WithinHullOfWindow) {
    const DecisionParams p;
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> ud(0.0, 300.0), uv(1.0, 40.0);
    for (int i = 0; i < 2000; ++i) {
        const double d = ud(rng), v = uv(rng);
        const int lane = static_cast<int>(rng() % 2);
        double lo = 1.0, hi = 0.0;
        for (int k = -p.window; k <= p.window; ++k) {
            const double q = lane_change_probability(d + k * p.delta, v, lane, p, 10.0);
            lo = std::min(lo, q);
            hi = std::max(hi, q);
        }
        const double got = noisy_decision_prob(d, v, lane, p);
        EXPECT_GE(got, lo - 1e-15);
        EXPECT_LE(got, hi + 1e-15);
    }
}

TEST(Noisy, MatchesMonteCarloExpectation) {
    // E[P(d + w)] with w ~ N(0, sigma) truncated to the window span.
    const DecisionParams p;
    std::mt19937_64 rng(99);
    std::normal_distribution<double> noise(0.0, p.sigma);
    const double span = (p.window + 0.5) * p.delta;
    double sum = 0.0;
    int n = 0;
    while (n < 1000000) {
        const double w = noise(rng);
        if (std::abs(w) > span) continue;
        sum += p_change_from_left(100.0 + w, p);
        ++n;
    }
    EXPECT_NEAR(noisy_decision_prob(100.0, 25.0, 1, p), sum / n, 1e-3);
}

TEST(Noisy, RangeProperty) {
    std::mt19937_64 rng(4);
    for (int i = 0; i < 500; ++i) {
        DecisionParams p;
        p.alpha = 0.1 + (rng() % 100) / 20.0;
        p.beta = 0.001 + (rng() % 100) / 100.0;
        p.sigma = (rng() % 50) / 10.0;
        const double d = static_cast<double>(rng() % 600);
        const double q = noisy_decision_prob(d, 1.0 + rng() % 40, static_cast<int>(rng() % 2), p);
        EXPECT_GE(q, 0.0);
        EXPECT_LE(q, 1.0);
    }
}

TEST(Noisy, IntegerOffsetsAtUnitDelta) {
    const DecisionParams p;  // delta = 1
    const NoiseWindow w(p);
    for (std::size_t i = 0; i < w.offsets.size(); ++i) {
        EXPECT_EQ(w.offsets[i], static_cast<double>(static_cast<int>(i) - p.window));
    }
}

TEST(DecisionTable, CsvLayout) {
    const DecisionParams p;
    std::ostringstream out;
    const double ds[] = {0.0, 50.0};
    const double vs[] = {25.0};
    write_decision_table_csv(out, ds, vs, p);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "lane,d,v,p_lc");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 4);
}

TEST(Params, Validation) {
    DecisionParams p;
    p.alpha = 0.0;
    EXPECT_THROW(p.validate(), ConfigError);
    p = {};
    p.window = -1;
    EXPECT_THROW(p.validate(), ConfigError);
    p = {};
    p.sigma = 0.0;
    EXPECT_NO_THROW(p.validate());
}
