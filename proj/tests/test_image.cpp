#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "helpers.hpp"
#include "thermforge/image.hpp"

using namespace thermforge;

TEST_CASE("rgb_to_gray analytic values", "[imaging]") {
    RgbFrame f;
    f.width = 2;
    f.height = 1;
    f.rgb = {255, 255, 255, 255, 0, 0};
    const GrayImage g = rgb_to_gray(f);
    CHECK(g.at(0, 0) == Catch::Approx(255.0).margin(1e-12));
    CHECK(g.at(1, 0) == Catch::Approx(76.245).margin(1e-12));
}

TEST_CASE("rgb_to_gray matches per-pixel weighted sum", "[imaging]") {
    Rng rng(11);
    const RgbFrame f = helpers::random_rgb(rng, 2, 2);
    const GrayImage g = rgb_to_gray(f);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 2; ++x) {
            const auto* p = f.pixel(x, y);
            const double expected = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
            CHECK(g.at(x, y) == Catch::Approx(expected).margin(1e-12));
        }
}

TEST_CASE("rgb_to_gray stays in [0,255] and weights sum to 1", "[imaging]") {
    CHECK(0.299 + 0.587 + 0.114 == Catch::Approx(1.0).margin(1e-15));
    Rng rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        const RgbFrame f = helpers::random_rgb(rng, 7, 5);
        for (double v : rgb_to_gray(f).values) {
            CHECK(v >= 0.0);
            CHECK(v <= 255.0);
        }
    }
}

TEST_CASE("upsample_bilinear identity and constants", "[imaging]") {
    Rng rng(13);
    const GrayImage img = helpers::random_gray(rng, 5, 4);
    const GrayImage same = upsample_bilinear(img, 1);
    CHECK(same.values == img.values);

    const GrayImage flat(3, 3, 42.5);
    for (int factor : {2, 3, 5})
        for (double v : upsample_bilinear(flat, factor).values)
            CHECK(v == Catch::Approx(42.5).margin(1e-12));
}

TEST_CASE("upsample_bilinear matches hand-evaluated samples", "[imaging]") {
    GrayImage img(2, 2);
    img.values = {0.0, 10.0, 20.0, 30.0};
    const GrayImage up = upsample_bilinear(img, 2);
    REQUIRE(up.width == 4);
    REQUIRE(up.height == 4);
    // (i+0.5)/2 - 0.5 sample positions, borders clamped
    const std::vector<double> expected = {0.0, 2.5, 7.5, 10.0, 5.0, 7.5, 12.5, 15.0,
                                          15.0, 17.5, 22.5, 25.0, 20.0, 22.5, 27.5, 30.0};
    for (std::size_t i = 0; i < expected.size(); ++i)
        CHECK(up.values[i] == Catch::Approx(expected[i]).margin(1e-12));
}

TEST_CASE("upsample_bilinear rejects factor 0", "[imaging]") {
    CHECK_THROWS_AS(upsample_bilinear(GrayImage(2, 2), 0), InvariantError);
}

TEST_CASE("downsample_area analytic and oracle", "[imaging]") {
    GrayImage block(2, 2);
    block.values = {0.0, 10.0, 20.0, 30.0};
    CHECK(downsample_area(block, 2).values[0] == Catch::Approx(15.0).margin(1e-12));

    Rng rng(14);
    const GrayImage img = helpers::random_gray(rng, 8, 8);
    CHECK(downsample_area(img, 1).values == img.values);
    const GrayImage down = downsample_area(img, 4);
    REQUIRE(down.width == 2);
    REQUIRE(down.height == 2);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 2; ++x) {
            double sum = 0.0;
            for (int dy = 0; dy < 4; ++dy)
                for (int dx = 0; dx < 4; ++dx) sum += img.at(4 * x + dx, 4 * y + dy);
            CHECK(down.at(x, y) == Catch::Approx(sum / 16.0).margin(1e-12));
        }
}

TEST_CASE("downsample_area rejects non-divisible dims", "[imaging]") {
    CHECK_THROWS_AS(downsample_area(GrayImage(5, 4), 2), InvariantError);
}

TEST_CASE("upsample then downsample reproduces constants exactly", "[imaging]") {
    const GrayImage flat(6, 4, -3.25);
    for (int factor : {2, 3}) {
        const GrayImage round = downsample_area(upsample_bilinear(flat, factor), factor);
        for (double v : round.values) CHECK(v == -3.25);
    }
}

TEST_CASE("histogram_match self and constant reference", "[imaging]") {
    Rng rng(15);
    const GrayImage img = helpers::random_gray(rng, 9, 7);
    const double bin_width =
        (*std::max_element(img.values.begin(), img.values.end()) -
         *std::min_element(img.values.begin(), img.values.end())) / 256.0;
    const GrayImage matched = histogram_match(img, img);
    for (std::size_t i = 0; i < img.size(); ++i)
        CHECK(std::fabs(matched.values[i] - img.values[i]) <= bin_width + 1e-12);

    const GrayImage flat(4, 4, 77.0);
    for (double v : histogram_match(img, flat).values) CHECK(v == Catch::Approx(77.0).margin(1e-12));
}

TEST_CASE("histogram_match agrees with sort-based CDF oracle", "[imaging]") {
    Rng rng(16);
    const GrayImage source = helpers::random_gray(rng, 3, 3);
    const GrayImage reference = helpers::random_gray(rng, 3, 3, 50.0, 200.0);
    const GrayImage matched = histogram_match(source, reference);

    auto sorted_src = source.values;
    auto sorted_ref = reference.values;
    std::sort(sorted_src.begin(), sorted_src.end());
    std::sort(sorted_ref.begin(), sorted_ref.end());
    const double ref_bin =
        (sorted_ref.back() - sorted_ref.front()) / 256.0;

    for (std::size_t i = 0; i < source.size(); ++i) {
        // quantile of the source pixel, then the reference value at that quantile
        const auto rank = std::upper_bound(sorted_src.begin(), sorted_src.end(), source.values[i]) -
                          sorted_src.begin();
        const double u = static_cast<double>(rank) / static_cast<double>(sorted_src.size());
        const std::size_t k = std::min<std::size_t>(
            sorted_ref.size() - 1,
            static_cast<std::size_t>(std::ceil(u * static_cast<double>(sorted_ref.size()))) - 1);
        const double oracle = sorted_ref[k];
        CHECK(std::fabs(matched.values[i] - oracle) <= ref_bin + 1e-9);
    }
}

TEST_CASE("histogram_match output range stays near reference range", "[imaging]") {
    Rng rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        const GrayImage source = helpers::random_gray(rng, 8, 8, -40.0, 900.0);
        const GrayImage reference = helpers::random_gray(rng, 6, 6, 10.0, 20.0);
        const auto [ref_min, ref_max] =
            std::minmax_element(reference.values.begin(), reference.values.end());
        const double bin = (*ref_max - *ref_min) / 256.0;
        const GrayImage matched = histogram_match(source, reference);
        for (double v : matched.values) {
            CHECK(v >= *ref_min - bin - 1e-12);
            CHECK(v <= *ref_max + bin + 1e-12);
        }
    }
}
