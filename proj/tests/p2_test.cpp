#include <doctest.h>

#include <map>
#include <random>

#include "patterns/geometry.hpp"
#include "patterns/p2.hpp"
#include "support/oracles.hpp"

using namespace patterns;

namespace {

TrackPointSet make_track(std::vector<NotePoint> points, int tpqn = 480) {
    normalize_points(points);
    return {"piece", 0, tpqn, std::move(points)};
}

std::map<TranslationVector, int> as_map(const std::vector<P2Match>& matches) {
    std::map<TranslationVector, int> out;
    for (const P2Match& m : matches) out[m.translation] = m.matched_count;
    return out;
}

}  // namespace

TEST_CASE("p2_matches finds both full occurrences") {
    const std::vector<NotePoint> query = {{0, 60}, {1, 62}, {2, 64}};
    const TrackPointSet text =
        make_track({{0, 60}, {1, 62}, {2, 64}, {10, 67}, {11, 69}, {12, 71}});
    const auto matches = as_map(p2_matches(query, text));
    CHECK(matches.at({0, 0}) == 3);
    CHECK(matches.at({10, 7}) == 3);
    for (const P2Match& m : p2_matches(query, text))
        CHECK(m.similarity == doctest::Approx(m.matched_count / 3.0));
}

TEST_CASE("query equal to text yields the identity match") {
    const TrackPointSet text = make_track({{0, 60}, {3, 64}, {7, 67}});
    const auto matches = as_map(p2_matches(text.points, text));
    CHECK(matches.at({0, 0}) == 3);
}

TEST_CASE("single-point query against single-point text") {
    const std::vector<NotePoint> query = {{0, 60}};
    const TrackPointSet text = make_track({{5, 70}});
    const auto matches = p2_matches(query, text);
    REQUIRE(matches.size() == 1);
    CHECK(matches[0].translation == TranslationVector{5, 10});
    CHECK(matches[0].matched_count == 1);
    CHECK(matches[0].similarity == doctest::Approx(1.0));
}

TEST_CASE("p2_matches rejects an empty query") {
    const TrackPointSet text = make_track({{0, 60}});
    CHECK_THROWS_AS(p2_matches({}, text), std::invalid_argument);
}

TEST_CASE("p2_matches equals the brute-force oracle on random inputs") {
    std::mt19937_64 rng(201);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<NotePoint> query;
        const int m = 1 + static_cast<int>(rng() % 10);
        for (int i = 0; i < m; ++i)
            query.push_back({static_cast<Tick>(rng() % 40), static_cast<int>(rng() % 40)});
        normalize_points(query);

        std::vector<NotePoint> text;
        const int n = 1 + static_cast<int>(rng() % 60);
        for (int i = 0; i < n; ++i)
            text.push_back({static_cast<Tick>(rng() % 80), static_cast<int>(rng() % 40)});
        const TrackPointSet track = make_track(std::move(text));

        CHECK(as_map(p2_matches(query, track)) ==
              testsupport::brute_force_p2(query, track.points));
    }
}

TEST_CASE("reversing query and text mirrors every matched count at -f") {
    std::mt19937_64 rng(204);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<NotePoint> a, b;
        const int m = 1 + static_cast<int>(rng() % 8);
        const int n = 1 + static_cast<int>(rng() % 30);
        for (int i = 0; i < m; ++i)
            a.push_back({static_cast<Tick>(rng() % 30), static_cast<int>(rng() % 20)});
        for (int i = 0; i < n; ++i)
            b.push_back({static_cast<Tick>(rng() % 40), static_cast<int>(rng() % 20)});
        const TrackPointSet ta = make_track(std::move(a));
        const TrackPointSet tb = make_track(std::move(b));

        const auto forward = as_map(p2_matches(ta.points, tb));
        const auto backward = as_map(p2_matches(tb.points, ta));
        CHECK(forward.size() == backward.size());
        for (const auto& [f, count] : forward) {
            const TranslationVector reversed{-f.dt, -f.dp};
            REQUIRE(backward.count(reversed) == 1);
            CHECK(backward.at(reversed) == count);
        }
    }
}

TEST_CASE("the identity translation of a window always has similarity one") {
    std::mt19937_64 rng(202);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<NotePoint> points;
        for (int i = 0; i < 20; ++i)
            points.push_back({static_cast<Tick>(rng() % 100), static_cast<int>(rng() % 50)});
        const TrackPointSet track = make_track(std::move(points));
        for (const auto window : segment_windows(track, 4)) {
            const auto matches = as_map(p2_matches(window, track));
            CHECK(matches.at({0, 0}) == static_cast<int>(window.size()));
        }
    }
}

TEST_CASE("segment_windows counts") {
    const TrackPointSet five = make_track({{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}});
    CHECK(segment_windows(five, 3).size() == 3);
    const TrackPointSet three = make_track({{0, 1}, {1, 2}, {2, 3}});
    CHECK(segment_windows(three, 3).size() == 1);
    const TrackPointSet two = make_track({{0, 1}, {1, 2}});
    CHECK(segment_windows(two, 3).empty());
}

TEST_CASE("segment_windows are consecutive and overlap with stride one") {
    const TrackPointSet track = make_track({{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}});
    const auto windows = segment_windows(track, 3);
    for (std::size_t i = 0; i < windows.size(); ++i) {
        CHECK(windows[i].data() == track.points.data() + i);
        CHECK(windows[i].size() == 3);
    }
}

TEST_CASE("intervening_count fixtures") {
    // clean contiguous occurrence
    const TrackPointSet clean = make_track({{0, 60}, {2, 62}, {4, 64}, {20, 60}, {22, 62}, {24, 64}});
    const std::vector<NotePoint> query(clean.points.begin(), clean.points.begin() + 3);
    const P2Match shifted{{20, 0}, 3, 1.0};
    CHECK(intervening_count(shifted, query, clean) == 0);

    // one unmatched note inside the translated span
    const TrackPointSet with_extra =
        make_track({{0, 60}, {2, 62}, {4, 64}, {20, 60}, {21, 99}, {22, 62}, {24, 64}});
    CHECK(intervening_count({{20, 0}, 3, 1.0}, query, with_extra) == 1);

    // two unmatched chord tones inside the span
    const TrackPointSet with_chord = make_track(
        {{0, 60}, {2, 62}, {4, 64}, {20, 60}, {22, 62}, {22, 65}, {22, 69}, {24, 64}});
    CHECK(intervening_count({{20, 0}, 3, 1.0}, query, with_chord) == 2);
}

TEST_CASE("intervening_count spans are closed: boundary chord tones count") {
    const TrackPointSet track =
        make_track({{0, 60}, {2, 62}, {10, 60}, {10, 72}, {12, 62}, {12, 75}});
    const std::vector<NotePoint> query = {{0, 60}, {2, 62}};
    CHECK(intervening_count({{10, 0}, 2, 1.0}, query, track) == 2);
}

TEST_CASE("p2_extract finds a transposed repeat under P2-5") {
    std::vector<NotePoint> notes;
    for (int occ = 0; occ < 2; ++occ) {
        const Tick base = occ * 100;
        const int shift = occ * 5;  // transposed second occurrence
        notes.push_back({base + 0, 60 + shift});
        notes.push_back({base + 2, 62 + shift});
        notes.push_back({base + 4, 64 + shift});
        notes.push_back({base + 6, 65 + shift});
        notes.push_back({base + 8, 67 + shift});
    }
    const TrackPointSet track = make_track(std::move(notes));
    const auto instances = p2_extract(track, p2_preset("P2-5"));
    CHECK(!instances.empty());
    // the two exact occurrence windows each contribute identity + repeat
    int full_window_instances = 0;
    for (const PatternInstance& inst : instances)
        if (inst.points.front().onset % 100 == 0 && inst.points.size() == 5)
            ++full_window_instances;
    CHECK(full_window_instances >= 4);
}

TEST_CASE("p2_extract emits nothing when only the identity matches") {
    // strictly increasing intervals: no window repeats at >= 0.9 similarity
    const TrackPointSet track =
        make_track({{0, 60}, {1, 61}, {3, 63}, {7, 67}, {15, 75}, {31, 83}});
    P2Config cfg;
    cfg.window_length = 3;
    cfg.offset_allowance = 2;
    cfg.similarity_min = 0.9;
    CHECK(p2_extract(track, cfg).empty());
}

TEST_CASE("P2-5 keeps three-of-five matches and drops two-of-five") {
    // All inter-point vectors of the window are distinct, so no accidental
    // within-window repeat can reach three matched notes.
    const std::vector<NotePoint> window = {{0, 60}, {2, 62}, {4, 65}, {6, 69}, {8, 74}};
    const P2Config cfg = p2_preset("P2-5");

    // second occurrence matches 3 of the 5 window notes: 0.6 >= 0.5
    std::vector<NotePoint> notes = window;
    notes.insert(notes.end(), {{100, 60}, {102, 62}, {104, 65}, {106, 99}, {108, 98}});
    const TrackPointSet three_of_five = make_track(std::move(notes));
    bool window0_emitted = false;
    for (const PatternInstance& inst : p2_extract(three_of_five, cfg))
        if (inst.points.front() == NotePoint{0, 60} && inst.points.size() == 5 &&
            inst.points.back() == NotePoint{8, 74})
            window0_emitted = true;
    CHECK(window0_emitted);

    // second occurrence matches only 2 of 5: 0.4 < 0.5, window never qualifies
    std::vector<NotePoint> notes2 = window;
    notes2.insert(notes2.end(), {{100, 60}, {102, 62}, {104, 20}, {106, 21}, {108, 22}});
    const TrackPointSet two_of_five = make_track(std::move(notes2));
    for (const auto& [v, count] : as_map(p2_matches(window, two_of_five)))
        if (v != TranslationVector{0, 0}) CHECK(count < 3);
    for (const PatternInstance& inst : p2_extract(two_of_five, cfg))
        CHECK(!(inst.points.front() == NotePoint{0, 60} &&
                inst.points.back() == NotePoint{8, 74}));
}

TEST_CASE("raising similarity_min never admits more instances") {
    std::mt19937_64 rng(203);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<NotePoint> points;
        for (int i = 0; i < 40; ++i)
            points.push_back({static_cast<Tick>(rng() % 200), static_cast<int>(rng() % 24)});
        const TrackPointSet track = make_track(std::move(points));
        P2Config loose;
        loose.window_length = 4;
        loose.offset_allowance = 3;
        loose.similarity_min = 0.5;
        P2Config tight = loose;
        tight.similarity_min = 0.75;
        CHECK(p2_extract(track, tight).size() <= p2_extract(track, loose).size());
    }
}

TEST_CASE("the offset allowance excludes cluttered occurrences") {
    // repeat at distance 100 with two extra notes inside its span
    std::vector<NotePoint> notes = {{0, 60}, {2, 62}, {4, 64},
                                    {100, 60}, {101, 90}, {102, 62}, {103, 91}, {104, 64}};
    const TrackPointSet track = make_track(std::move(notes));
    P2Config strict;
    strict.window_length = 3;
    strict.offset_allowance = 1;
    strict.similarity_min = 0.9;
    P2Config lax = strict;
    lax.offset_allowance = 2;

    // under the strict allowance the first window's repeat is rejected
    bool emitted_strict = false;
    for (const PatternInstance& inst : p2_extract(track, strict))
        if (inst.points.front() == NotePoint{0, 60}) emitted_strict = true;
    CHECK(!emitted_strict);

    bool emitted_lax = false;
    for (const PatternInstance& inst : p2_extract(track, lax))
        if (inst.points.front() == NotePoint{0, 60}) emitted_lax = true;
    CHECK(emitted_lax);
}

TEST_CASE("p2 presets carry their fixed thresholds") {
    const P2Config p3 = p2_preset("P2-3");
    CHECK(p3.window_length == 3);
    CHECK(p3.offset_allowance == 2);
    CHECK(p3.similarity_min == doctest::Approx(0.9));
    const P2Config p4 = p2_preset("P2-4");
    CHECK(p4.window_length == 4);
    CHECK(p4.offset_allowance == 2);
    CHECK(p4.similarity_min == doctest::Approx(0.9));
    const P2Config p5 = p2_preset("P2-5");
    CHECK(p5.window_length == 5);
    CHECK(p5.offset_allowance == 3);
    CHECK(p5.similarity_min == doctest::Approx(0.5));
    const P2Config p8 = p2_preset("P2-8");
    CHECK(p8.window_length == 8);
    const P2Config p10 = p2_preset("P2-10");
    CHECK(p10.window_length == 10);
    const P2Config p15 = p2_preset("P2-15");
    CHECK(p15.window_length == 15);
    CHECK_THROWS_AS(p2_preset("P2-99"), std::invalid_argument);
}
