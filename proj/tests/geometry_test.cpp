#include <doctest.h>

#include <algorithm>
#include <random>

#include "patterns/geometry.hpp"

using namespace patterns;

namespace {

PatternInstance make_instance(std::vector<NotePoint> points, int tpqn) {
    normalize_points(points);
    return {"piece", 0, tpqn, std::move(points)};
}

}  // namespace

TEST_CASE("to_common_resolution worked example at 480 to 6") {
    const std::vector<NotePoint> points = {{0, 0}, {545, 3}, {682, 10}, {818, 12}};
    const std::vector<NotePoint> scaled = to_common_resolution(points, 480, 6);
    const std::vector<NotePoint> expected = {{0, 0}, {6, 3}, {8, 10}, {10, 12}};
    CHECK(scaled == expected);
}

TEST_CASE("to_common_resolution is the identity when resolutions agree") {
    const std::vector<NotePoint> points = {{0, 10}, {7, 20}, {123, 30}};
    CHECK(to_common_resolution(points, 96, 96) == points);
}

TEST_CASE("to_common_resolution rounds down") {
    // floor(479 * 6 / 480) = floor(5.9875) = 5
    const std::vector<NotePoint> points = {{0, 60}, {479, 62}};
    const std::vector<NotePoint> expected = {{0, 60}, {5, 62}};
    CHECK(to_common_resolution(points, 480, 6) == expected);
}

TEST_CASE("to_common_resolution merges points that coincide after coarsening") {
    const std::vector<NotePoint> points = {{0, 60}, {10, 60}, {20, 60}};
    const std::vector<NotePoint> expected = {{0, 60}};
    CHECK(to_common_resolution(points, 480, 6) == expected);
}

TEST_CASE("canonical_key reproduces the worked example") {
    const PatternInstance inst =
        make_instance({{0, 60}, {545, 63}, {682, 70}, {818, 72}}, 480);
    CHECK(serialize_key(canonical_key(inst, 6)) == "(0|0)(6|3)(8|10)(10|12)");
}

TEST_CASE("canonical_key anchors time and pitch on the first note") {
    const PatternInstance inst = make_instance({{960, 67}, {1440, 70}}, 480);
    CHECK(serialize_key(canonical_key(inst, 6)) == "(0|0)(6|3)");
    const PatternInstance at_origin = make_instance({{0, 0}, {480, 3}}, 480);
    CHECK(canonical_key(inst, 6) == canonical_key(at_origin, 6));
}

TEST_CASE("canonical_key of a single point is the origin") {
    CHECK(serialize_key(canonical_key(make_instance({{1234, 77}}, 96), 6)) == "(0|0)");
}

TEST_CASE("canonical_key re-anchors when coarsening reorders pitches") {
    // The 40-tick gap collapses to position 0, putting the lower pitch first.
    const PatternInstance inst = make_instance({{0, 60}, {40, 55}, {480, 62}}, 480);
    const PatternKey key = canonical_key(inst, 6);
    REQUIRE(!key.cells.empty());
    CHECK(key.cells.front() == KeyCell{0, 0});
    CHECK(serialize_key(key) == "(0|0)(0|5)(6|7)");
}

TEST_CASE("canonical_key is invariant under translation") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 500; ++trial) {
        const int count = 1 + static_cast<int>(rng() % 8);
        std::vector<NotePoint> points;
        for (int i = 0; i < count; ++i)
            points.push_back({static_cast<Tick>(rng() % 2000), static_cast<int>(rng() % 128)});
        const PatternInstance inst = make_instance(std::move(points), 480);

        const Tick dt = static_cast<Tick>(rng() % 5000);
        const int dp = static_cast<int>(rng() % 41) - 20;
        std::vector<NotePoint> moved;
        for (const NotePoint& p : inst.points) moved.push_back({p.onset + dt, p.pitch + dp});
        const PatternInstance shifted = make_instance(std::move(moved), 480);

        CHECK(canonical_key(inst, 6) == canonical_key(shifted, 6));
    }
}

TEST_CASE("floor scaling is monotone") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const int native = 1 + static_cast<int>(rng() % 960);
        const int common = 1 + static_cast<int>(rng() % 24);
        std::vector<NotePoint> points;
        for (int i = 0; i < 20; ++i)
            points.push_back({static_cast<Tick>(rng() % 10000), 60});
        normalize_points(points);
        const std::vector<NotePoint> scaled = to_common_resolution(points, native, common);
        CHECK(std::is_sorted(scaled.begin(), scaled.end()));
    }
}

TEST_CASE("serialize and parse round-trip") {
    PatternKey key;
    key.cells = {{0, 0}, {6, 3}};
    CHECK(serialize_key(key) == "(0|0)(6|3)");
    CHECK(parse_key("(0|0)(6|3)") == key);
}

TEST_CASE("parse_key accepts negative pitch deltas") {
    const PatternKey key = parse_key("(0|0)(6|-3)");
    CHECK(key.cells == std::vector<KeyCell>{{0, 0}, {6, -3}});
    CHECK(serialize_key(key) == "(0|0)(6|-3)");
}

TEST_CASE("parse_key rejects anything serialize_key cannot produce") {
    CHECK_THROWS_AS(parse_key(""), std::invalid_argument);
    CHECK_THROWS_AS(parse_key("(6|3)(0|0)"), std::invalid_argument);  // origin not first
    CHECK_THROWS_AS(parse_key("(0|0"), std::invalid_argument);
    CHECK_THROWS_AS(parse_key("(0|0)(0|0)"), std::invalid_argument);  // duplicate
    CHECK_THROWS_AS(parse_key("(0|0)(3|2)(1|5)"), std::invalid_argument);  // unsorted
    CHECK_THROWS_AS(parse_key("(0|0)(03|2)"), std::invalid_argument);  // leading zero
    CHECK_THROWS_AS(parse_key("(0|0)(1|-0)"), std::invalid_argument);
    CHECK_THROWS_AS(parse_key("(0|0) (1|2)"), std::invalid_argument);
    CHECK_THROWS_AS(parse_key("(0|0)(1|2)x"), std::invalid_argument);
    CHECK_THROWS_AS(parse_key("(0|0)(+1|2)"), std::invalid_argument);
    CHECK_THROWS_AS(parse_key("(1|0)"), std::invalid_argument);  // not the origin
}

TEST_CASE("parse_key inverts serialize_key on random valid keys") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 500; ++trial) {
        PatternKey key;
        key.cells.push_back({0, 0});
        Tick pos = 0;
        int pitch = 0;
        const int extra = static_cast<int>(rng() % 10);
        for (int i = 0; i < extra; ++i) {
            const bool advance_pos = rng() % 2 == 0;
            if (advance_pos) {
                pos += 1 + static_cast<Tick>(rng() % 8);
                pitch = static_cast<int>(rng() % 25) - 12;
            } else {
                pitch += 1 + static_cast<int>(rng() % 5);
            }
            key.cells.push_back({pos, pitch});
        }
        std::sort(key.cells.begin(), key.cells.end());
        key.cells.erase(std::unique(key.cells.begin(), key.cells.end()), key.cells.end());
        CHECK(parse_key(serialize_key(key)) == key);
    }
}
