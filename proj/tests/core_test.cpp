#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "butterfly/core/bfm.hpp"
#include "butterfly/core/box.hpp"
#include "butterfly/core/image.hpp"
#include "butterfly/core/png.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace butterfly;
using testing_support::TempDir;

TEST_CASE("image and mask constructors reject bad buffers", "[core]")
{
    CHECK_THROWS_AS(Image(0, 4), std::invalid_argument);
    CHECK_THROWS_AS(Image(Shape{2, 2}, std::vector<std::uint8_t>(11)), std::invalid_argument);
    CHECK_THROWS_AS(FilterMask(Shape{1, 1}, {0, 256, 0}), std::out_of_range);
    CHECK_THROWS_AS(FilterMask(Shape{1, 1}, {0, 0, -256}), std::out_of_range);
    CHECK_NOTHROW(FilterMask(Shape{1, 1}, {255, -255, 0}));
}

TEST_CASE("apply_mask adds and saturates", "[core]")
{
    Image img(3, 4, 0);
    for (std::size_t k = 0; k < img.data().size(); ++k) {
        img.data()[k] = static_cast<std::uint8_t>(k * 7 % 256);
    }
    SECTION("zero mask is the identity")
    {
        CHECK(apply_mask(img, FilterMask(img.shape())) == img);
    }
    SECTION("clamps at 255")
    {
        Image one(1, 1, 250);
        FilterMask m(1, 1);
        m(0, 0, 0) = 20;
        CHECK(apply_mask(one, m)(0, 0, 0) == 255);
    }
    SECTION("clamps at 0")
    {
        Image one(1, 1, 10);
        FilterMask m(1, 1);
        m(0, 0, 2) = -30;
        CHECK(apply_mask(one, m)(0, 0, 2) == 0);
    }
    SECTION("plain addition in range")
    {
        Image one(1, 1, 100);
        FilterMask m(1, 1);
        m(0, 0, 1) = -7;
        auto const out = apply_mask(one, m);
        CHECK(out(0, 0, 0) == 100);
        CHECK(out(0, 0, 1) == 93);
    }
    SECTION("shape mismatch")
    {
        CHECK_THROWS_AS(apply_mask(img, FilterMask(4, 3)), ShapeMismatch);
    }
}

TEST_CASE("project_mask zeroes disallowed pixels", "[core]")
{
    Shape const s{4, 6};
    FilterMask m(s);
    for (std::size_t p = 0; p < s.pixels(); ++p) {
        m.pixel(p)[0] = static_cast<FilterMask::value_type>(p + 1);
    }
    CHECK(project_mask(m, RegionMask::all(s)) == m);
    CHECK(project_mask(m, RegionMask::none(s)).is_zero());

    auto const right = project_mask(m, RegionMask::right_half(s));
    for (std::size_t i = 0; i < s.height; ++i) {
        for (std::size_t j = 0; j < s.width; ++j) {
            if (j < s.width / 2) {
                CHECK(right(i, j, 0) == 0);
            } else {
                CHECK(right(i, j, 0) == m(i, j, 0));
            }
        }
    }
    CHECK(satisfies_region(right, RegionMask::right_half(s)));
    CHECK_FALSE(satisfies_region(m, RegionMask::right_half(s)));
    CHECK_THROWS_AS(project_mask(m, RegionMask::all({6, 4})), ShapeMismatch);
}

TEST_CASE("half regions partition the columns", "[core]")
{
    for (std::size_t w : {1u, 2u, 5u, 64u}) {
        Shape const s{3, w};
        auto const right = RegionMask::right_half(s);
        auto const left = RegionMask::left_half(s);
        for (std::size_t j = 0; j < w; ++j) {
            CHECK(right.allowed(1, j) != left.allowed(1, j));
            CHECK(right.allowed(1, j) == (j >= w / 2));
        }
    }
    // Odd width: the middle column may be perturbed.
    CHECK(RegionMask::right_half({1, 5}).allowed(0, 2));
}

TEST_CASE("iou closed-form cases", "[core][iou]")
{
    BoundingBox const a{1, 0, 0, 10, 10};
    CHECK(iou(a, a) == 1.0);
    CHECK(iou(a, BoundingBox{1, 30, 0, 10, 10}) == 0.0);
    CHECK(iou(a, BoundingBox{1, 10, 0, 10, 10}) == 0.0); // touching edges
    CHECK(iou(a, BoundingBox{1, 5, 0, 10, 10}) == Catch::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(iou(a, BoundingBox{1, 5, 0, 10, 10}) == iou(BoundingBox{1, 5, 0, 10, 10}, a));
    CHECK(iou(a, BoundingBox{1, 0, 0, 0, 10}) == 0.0);
    CHECK(iou(BoundingBox{1, 0, 0, 0, 0}, BoundingBox{1, 0, 0, 0, 0}) == 0.0);
}

TEST_CASE("iou agrees with a pixel-counting oracle", "[core][iou]")
{
    std::mt19937_64 rng(20240611);
    std::uniform_int_distribution<int> corner(-6, 12);
    std::uniform_int_distribution<int> extent(0, 9);
    for (int trial = 0; trial < 500; ++trial) {
        oracle::GridBox a{};
        oracle::GridBox b{};
        for (auto* g : {&a, &b}) {
            g->x0 = corner(rng);
            g->x1 = g->x0 + extent(rng);
            g->y0 = corner(rng);
            g->y1 = g->y0 + extent(rng);
        }
        auto const expected = oracle::pixel_iou(a, b);
        INFO("a=[" << a.x0 << "," << a.x1 << ")x[" << a.y0 << "," << a.y1 << ") b=[" << b.x0 << "," << b.x1 << ")x[" << b.y0 << ","
                   << b.y1 << ")");
        CHECK(iou(a.to_box(), b.to_box()) == static_cast<double>(expected.num) / static_cast<double>(expected.den));
    }
}

TEST_CASE("count_valid ignores the no-object class", "[core]")
{
    DetectionSet const boxes{{0, 1, 1, 2, 2}, {3, 1, 1, 2, 2}, {kNoObject, 0, 0, 5, 5}};
    CHECK(count_valid(boxes) == 1);
    CHECK_FALSE(boxes[0].valid());
}

TEST_CASE("BFM round trip and validation", "[core][bfm]")
{
    FilterMask m(3, 5);
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> value(-255, 255);
    for (auto& v : m.values()) {
        v = static_cast<FilterMask::value_type>(value(rng));
    }
    std::stringstream ss;
    write_bfm(ss, m);
    auto const bytes = ss.str();
    REQUIRE(bytes.size() == 4 + 4 + 4 + 3 * 5 * 3 * 2);
    CHECK(bytes.substr(0, 4) == "BFM1");
    CHECK(static_cast<unsigned char>(bytes[4]) == 3); // little-endian height
    CHECK(static_cast<unsigned char>(bytes[8]) == 5);
    CHECK(read_bfm(ss) == m);

    SECTION("bad magic")
    {
        std::istringstream is("XFM1" + bytes.substr(4));
        CHECK_THROWS_AS(read_bfm(is), FormatError);
    }
    SECTION("truncated")
    {
        std::istringstream is(bytes.substr(0, bytes.size() - 1));
        CHECK_THROWS_AS(read_bfm(is), FormatError);
    }
    SECTION("out of range value")
    {
        auto bad = bytes;
        bad[12] = static_cast<char>(0x00); // 256 = 0x0100
        bad[13] = static_cast<char>(0x01);
        std::istringstream is(bad);
        CHECK_THROWS_AS(read_bfm(is), FormatError);
    }
    SECTION("file round trip")
    {
        TempDir dir("bfm");
        save_bfm(dir.path() / "m.bfm", m);
        CHECK(load_bfm(dir.path() / "m.bfm") == m);
        CHECK_THROWS(load_bfm(dir.path() / "missing.bfm"));
    }
}

TEST_CASE("PNG round trip", "[core][png]")
{
    TempDir dir("png");
    Image img(7, 9);
    for (std::size_t k = 0; k < img.data().size(); ++k) {
        img.data()[k] = static_cast<std::uint8_t>((k * 37 + 11) % 256);
    }
    write_png(dir.path() / "a.png", img);
    CHECK(read_png(dir.path() / "a.png") == img);

    // Same input, same bytes.
    write_png(dir.path() / "b.png", img);
    CHECK(testing_support::read_file(dir.path() / "a.png") == testing_support::read_file(dir.path() / "b.png"));

    CHECK_THROWS_AS(read_png(dir.path() / "missing.png"), PngError);
    std::ofstream(dir.path() / "junk.png") << "not a png";
    CHECK_THROWS_AS(read_png(dir.path() / "junk.png"), PngError);
}
