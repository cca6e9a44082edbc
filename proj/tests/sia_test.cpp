#include <doctest.h>

#include <map>
#include <random>

#include "patterns/sia.hpp"
#include "support/oracles.hpp"

using namespace patterns;

namespace {

TrackPointSet make_track(std::vector<NotePoint> points, int tpqn = 480) {
    normalize_points(points);
    return {"piece", 0, tpqn, std::move(points)};
}

TrackPointSet random_track(std::mt19937_64& rng, int max_points, Tick max_onset,
                           int tpqn = 480) {
    std::vector<NotePoint> points;
    const int count = 1 + static_cast<int>(rng() % max_points);
    for (int i = 0; i < count; ++i)
        points.push_back({static_cast<Tick>(rng() % (max_onset + 1)),
                          static_cast<int>(rng() % 128)});
    return make_track(std::move(points), tpqn);
}

std::map<TranslationVector, std::vector<NotePoint>> as_map(const std::vector<MtpResult>& mtps) {
    std::map<TranslationVector, std::vector<NotePoint>> out;
    for (const MtpResult& m : mtps) out[m.vector] = m.origin_points;
    return out;
}

}  // namespace

TEST_CASE("sia_mtps on the three-point diagonal") {
    const TrackPointSet track = make_track({{0, 0}, {1, 1}, {2, 2}});
    const auto mtps = as_map(sia_mtps(track));
    REQUIRE(mtps.size() == 2);
    CHECK(mtps.at({1, 1}) == std::vector<NotePoint>{{0, 0}, {1, 1}});
    CHECK(mtps.at({2, 2}) == std::vector<NotePoint>{{0, 0}});
}

TEST_CASE("sia_mtps of a single point is empty") {
    CHECK(sia_mtps(make_track({{5, 60}})).empty());
}

TEST_CASE("sia_mtps finds the repeated two-note figure") {
    const TrackPointSet track = make_track({{0, 60}, {1, 62}, {4, 60}, {5, 62}});
    const auto mtps = as_map(sia_mtps(track));
    CHECK(mtps.at({4, 0}) == std::vector<NotePoint>{{0, 60}, {1, 62}});
    // full agreement with the brute-force oracle
    CHECK(mtps == testsupport::brute_force_mtps(track.points));
}

TEST_CASE("sia_mtps equals the brute-force oracle on random point sets") {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 200; ++trial) {
        const TrackPointSet track = random_track(rng, 50, 100);
        CHECK(as_map(sia_mtps(track)) == testsupport::brute_force_mtps(track.points));
    }
}

TEST_CASE("sia_mtps output is maximal and conserves the pair count") {
    std::mt19937_64 rng(102);
    for (int trial = 0; trial < 50; ++trial) {
        const TrackPointSet track = random_track(rng, 40, 60);
        const auto mtps = sia_mtps(track);

        std::size_t total = 0;
        for (const MtpResult& mtp : mtps) {
            total += mtp.origin_points.size();
            for (const NotePoint& p : track.points) {
                const bool in_origin = std::binary_search(mtp.origin_points.begin(),
                                                          mtp.origin_points.end(), p);
                const bool translatable = std::binary_search(
                    track.points.begin(), track.points.end(), p + mtp.vector);
                CHECK(in_origin == translatable);
            }
        }
        const std::size_t n = track.points.size();
        CHECK(total == n * (n - 1) / 2);
    }
}

TEST_CASE("sia_mtps enforces the size cap") {
    std::vector<NotePoint> points;
    for (int i = 0; i < 20; ++i) points.push_back({i, 60});
    const TrackPointSet track = make_track(std::move(points));
    CHECK_THROWS_AS(sia_mtps(track, 10), std::length_error);
}

TEST_CASE("compactness fixtures") {
    const TrackPointSet piece =
        make_track({{0, 60}, {7, 61}, {10, 62}, {12, 63}, {24, 64}});
    const std::vector<NotePoint> half = {{0, 60}, {12, 63}};
    CHECK(compactness(half, piece) == doctest::Approx(0.5));
    CHECK(compactness(piece.points, piece) == doctest::Approx(1.0));
    const std::vector<NotePoint> seven_tenths = {{0, 60}, {7, 61}};
    const TrackPointSet ten = make_track({{0, 60}, {7, 61}, {10, 62}});
    CHECK(compactness(seven_tenths, ten) == doctest::Approx(0.7));
}

TEST_CASE("compactness of a single-onset piece is one") {
    const TrackPointSet chord = make_track({{5, 60}, {5, 64}, {5, 67}});
    const std::vector<NotePoint> part = {{5, 60}};
    CHECK(compactness(part, chord) == doctest::Approx(1.0));
}

TEST_CASE("compactness requires the pattern to be a subset") {
    const TrackPointSet piece = make_track({{0, 60}, {10, 62}});
    const std::vector<NotePoint> outside = {{0, 61}};
    CHECK_THROWS_AS(compactness(outside, piece), std::invalid_argument);
}

TEST_CASE("temporal_density fixtures") {
    const std::vector<NotePoint> three_over_60 = {{0, 60}, {30, 62}, {60, 64}};
    CHECK(temporal_density(three_over_60, 6, 6) == doctest::Approx(0.05));
    const std::vector<NotePoint> three_over_12 = {{0, 60}, {6, 62}, {12, 64}};
    CHECK(temporal_density(three_over_12, 6, 6) == doctest::Approx(0.25));
    const std::vector<NotePoint> one = {{100, 60}};
    CHECK(temporal_density(one, 480, 6) == doctest::Approx(1.0));
}

TEST_CASE("temporal_density measures the span in common ticks") {
    // 480 native ticks -> 6 common ticks; 3 notes / 6 ticks
    const std::vector<NotePoint> pattern = {{0, 60}, {240, 62}, {480, 64}};
    CHECK(temporal_density(pattern, 480, 6) == doctest::Approx(0.5));
}

TEST_CASE("sia_extract drops short patterns") {
    SiaConfig cfg;
    cfg.min_length = 3;
    CHECK(sia_extract(make_track({{0, 0}, {1, 1}, {2, 2}}), cfg).empty());
}

TEST_CASE("sia_extract with vacuous filters returns every MTP") {
    SiaConfig cfg;
    cfg.min_length = 1;
    cfg.compactness_min = 0.0;
    cfg.density_min = 0.0;
    std::mt19937_64 rng(103);
    const TrackPointSet track = random_track(rng, 30, 50);
    CHECK(sia_extract(track, cfg).size() == sia_mtps(track).size());
}

TEST_CASE("raising thresholds never admits more patterns") {
    std::mt19937_64 rng(104);
    for (int trial = 0; trial < 30; ++trial) {
        const TrackPointSet track = random_track(rng, 40, 200);
        SiaConfig loose;
        loose.min_length = 3;
        loose.compactness_min = 0.4;
        loose.density_min = 0.05;
        SiaConfig tight = loose;
        tight.density_min = 0.25;
        CHECK(sia_extract(track, tight).size() <= sia_extract(track, loose).size());
    }
}

TEST_CASE("sia presets carry their fixed thresholds") {
    const SiaConfig s1 = sia_preset("Sia-1");
    CHECK(s1.compactness_min == doctest::Approx(0.7));
    CHECK(s1.density_min == doctest::Approx(0.05));
    const SiaConfig s2 = sia_preset("Sia-2");
    CHECK(s2.compactness_min == doctest::Approx(0.4));
    CHECK(s2.density_min == doctest::Approx(0.05));
    const SiaConfig s3 = sia_preset("Sia-3");
    CHECK(s3.compactness_min == doctest::Approx(0.4));
    CHECK(s3.density_min == doctest::Approx(0.25));
    const SiaConfig s4 = sia_preset("Sia-4");
    CHECK(s4.compactness_min == doctest::Approx(0.7));
    CHECK(s4.density_min == doctest::Approx(0.25));
    CHECK(s1.min_length == 3);
    CHECK_THROWS_AS(sia_preset("Sia-9"), std::invalid_argument);
}
