#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "regimetrade/prices.hpp"
#include "regimetrade/transforms.hpp"

using namespace regimetrade;

namespace {

PriceSeries make_prices(std::vector<double> closes) {
    PriceSeries s;
    Date d{2020, 1, 6};
    for (double c : closes) {
        s.points.push_back({d, c});
        d = next_weekday(d);
    }
    return s;
}

}  // namespace

TEST_CASE("to_ccr computes log return differences") {
    CHECK(to_ccr(make_prices({100, 100})) == std::vector<double>{0.0});
    CHECK(to_ccr(make_prices({1.0, std::exp(1.0)}))[0] == Catch::Approx(1.0).epsilon(1e-15));

    auto ccr = to_ccr(make_prices({100, 110, 99}));
    REQUIRE(ccr.size() == 2);
    CHECK(ccr[0] == Catch::Approx(0.09531017980432486).epsilon(1e-14));
    CHECK(ccr[1] == Catch::Approx(-0.10536051565782630).epsilon(1e-14));

    CHECK_THROWS_AS(to_ccr(make_prices({100})), ValidationError);
}

TEST_CASE("cut_window slides over the CCR series") {
    std::vector<double> ccr(20);
    for (std::size_t k = 0; k < ccr.size(); ++k) ccr[k] = static_cast<double>(k);

    auto w = cut_window(ccr, 5, 5);
    CHECK(w == std::vector<double>{0, 1, 2, 3, 4, 5});

    auto w2 = cut_window(ccr, 6, 5);
    CHECK(w2 == std::vector<double>{1, 2, 3, 4, 5, 6});
    CHECK(std::equal(w.begin() + 1, w.end(), w2.begin()));

    CHECK_THROWS_WITH(cut_window(ccr, 4, 5),
                      Catch::Matchers::ContainsSubstring("insufficient history"));
    CHECK_THROWS_AS(cut_window(ccr, 25, 5), ValidationError);
}

TEST_CASE("normalize produces mean 0 variance 1") {
    auto norm = normalize(std::vector<double>{1, 2, 3});
    REQUIRE(norm);
    const double root = std::sqrt(1.5);
    CHECK((*norm)[0] == Catch::Approx(-root).epsilon(1e-14));
    CHECK((*norm)[1] == Catch::Approx(0.0).margin(1e-14));
    CHECK((*norm)[2] == Catch::Approx(root).epsilon(1e-14));
}

TEST_CASE("normalize is idempotent and flags constants") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> gauss;
    std::vector<double> w(101);
    for (auto& v : w) v = gauss(rng);
    auto once = normalize(w);
    REQUIRE(once);

    double mean = 0.0, var = 0.0;
    for (double v : *once) mean += v;
    mean /= static_cast<double>(once->size());
    for (double v : *once) var += (v - mean) * (v - mean);
    var /= static_cast<double>(once->size());
    CHECK(std::abs(mean) < 1e-12);
    CHECK(std::abs(var - 1.0) < 1e-12);

    auto twice = normalize(*once);
    REQUIRE(twice);
    for (std::size_t k = 0; k < once->size(); ++k) {
        CHECK((*twice)[k] == Catch::Approx((*once)[k]).margin(1e-12));
    }

    CHECK_FALSE(normalize(std::vector<double>{2, 2, 2, 2}));
}

TEST_CASE("apply_transforms matches the closed forms") {
    SECTION("alternating signs") {
        std::vector<double> w(11);
        for (std::size_t n = 0; n < w.size(); ++n) w[n] = (n % 2 == 0) ? 1.0 : -1.0;
        auto comps = apply_transforms(w);
        for (double v : comps[1]) CHECK(v == 1.0);   // squares
        for (double v : comps[3]) CHECK(v == -1.0);  // adjacent products
    }
    SECTION("constant input power law") {
        const double a = 1.7;  // bypasses normalization on purpose
        std::vector<double> w(8, a);
        auto comps = apply_transforms(w);
        for (double v : comps[2]) CHECK(v == Catch::Approx(a * a * a).epsilon(1e-15));
    }
    SECTION("offsets and lengths for N = 100") {
        std::vector<double> w(101, 0.5);
        auto comps = apply_transforms(w);
        for (int t = 0; t < kTransformCount; ++t) {
            CHECK(comps[static_cast<std::size_t>(t)].size() ==
                  101 - static_cast<std::size_t>(kTransformOffsets[static_cast<std::size_t>(t)]));
        }
        CHECK(comps[18].size() == 97);
    }
}

TEST_CASE("transform parity under window negation") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> gauss;
    std::vector<double> w(31), neg(31);
    for (std::size_t k = 0; k < w.size(); ++k) {
        w[k] = gauss(rng);
        neg[k] = -w[k];
    }
    auto plus = apply_transforms(w);
    auto minus = apply_transforms(neg);
    for (int t = 0; t < kTransformCount; ++t) {
        const double sign = kTransformDegrees[static_cast<std::size_t>(t)] % 2 == 0 ? 1.0 : -1.0;
        const auto& a = plus[static_cast<std::size_t>(t)];
        const auto& b = minus[static_cast<std::size_t>(t)];
        REQUIRE(a.size() == b.size());
        for (std::size_t k = 0; k < a.size(); ++k) {
            CHECK(b[k] == Catch::Approx(sign * a[k]).margin(1e-12));
        }
    }
}

TEST_CASE("build_pairs enumerates 171 pairs on common support") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> gauss;
    std::vector<double> w(101);
    for (auto& v : w) v = gauss(rng);
    auto pairs = build_pairs(apply_transforms(w));
    REQUIRE(pairs.size() == kPairCount);

    // lexicographic order and lengths
    std::size_t idx = 0;
    for (int i = 0; i < kTransformCount; ++i) {
        for (int j = i + 1; j < kTransformCount; ++j, ++idx) {
            const auto& p = pairs[idx];
            CHECK(p.first == i);
            CHECK(p.second == j);
            const int offset = std::max(kTransformOffsets[static_cast<std::size_t>(i)],
                                        kTransformOffsets[static_cast<std::size_t>(j)]);
            CHECK(p.offset == offset);
            CHECK(p.a.size() == p.b.size());
            CHECK(p.size() == 101 - static_cast<std::size_t>(offset));
            for (double v : p.a) CHECK(std::isfinite(v));
            for (double v : p.b) CHECK(std::isfinite(v));
        }
    }

    // spot checks from the offset table
    const auto& p_0_18 = pairs[17];  // (0,18)
    CHECK(p_0_18.offset == 4);
    CHECK(p_0_18.size() == 97);
    const auto& p_1_2 = pairs[18];  // (1,2)
    CHECK(p_1_2.offset == 0);
    CHECK(p_1_2.size() == 101);
}
