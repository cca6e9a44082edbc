#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace patterns {

using Tick = std::int64_t;

// A note as a 2-D integer point: absolute onset in ticks, MIDI pitch.
struct NotePoint {
    Tick onset{};
    int pitch{};

    friend auto operator<=>(const NotePoint&, const NotePoint&) = default;
};

// Difference between two note points: tick delta and constant pitch shift.
struct TranslationVector {
    Tick dt{};
    int dp{};

    friend auto operator<=>(const TranslationVector&, const TranslationVector&) = default;
};

inline NotePoint operator+(const NotePoint& p, const TranslationVector& v) {
    return {p.onset + v.dt, p.pitch + v.dp};
}

inline TranslationVector operator-(const NotePoint& a, const NotePoint& b) {
    return {a.onset - b.onset, a.pitch - b.pitch};
}

// Sorted, deduplicated point set for one track of one piece.
struct TrackPointSet {
    std::string piece_id;
    int track_index{};
    int tpqn{};
    std::vector<NotePoint> points;  // sorted by (onset, pitch), no duplicates
};

// Sorts by (onset, pitch) and removes duplicate points.
void normalize_points(std::vector<NotePoint>& points);

// One concrete occurrence of a pattern, in the file's native tick resolution.
struct PatternInstance {
    std::string piece_id;
    int track_index{};
    int native_tpqn{};
    std::vector<NotePoint> points;  // sorted, non-empty
};

struct KeyCell {
    Tick rel_pos{};
    int rel_pitch{};

    friend auto operator<=>(const KeyCell&, const KeyCell&) = default;
};

// Canonical resolution- and transposition-normalized pattern identity.
// First cell is always (0,0); cells are sorted and unique.
struct PatternKey {
    std::vector<KeyCell> cells;

    friend bool operator==(const PatternKey&, const PatternKey&) = default;
};

// Rescales onsets from native_tpqn to common_tpqn by floor division; pitches
// are untouched. Points that coincide after coarsening are merged.
std::vector<NotePoint> to_common_resolution(std::span<const NotePoint> points,
                                            int native_tpqn, int common_tpqn);

inline std::vector<NotePoint> to_common_resolution(const PatternInstance& instance,
                                                   int common_tpqn) {
    return to_common_resolution(instance.points, instance.native_tpqn, common_tpqn);
}

// Canonical key of an instance: onsets made relative to the first note in
// native ticks, floor-scaled to common_tpqn, pitches made relative to the
// first note, then re-anchored on the lexicographically first cell.
//
// The relative-first order matters: scaling absolute onsets would make the
// key depend on where in the piece the occurrence sits. Re-anchoring is
// needed because coarsening can pull a later, lower-pitched note onto
// position 0, ahead of the original first note.
PatternKey canonical_key(const PatternInstance& instance, int common_tpqn);
PatternKey canonical_key(std::span<const NotePoint> points, int native_tpqn,
                         int common_tpqn);

// Exact wire format "(p|t)(p|t)...", no whitespace.
std::string serialize_key(const PatternKey& key);

// Strict inverse of serialize_key: rejects any string serialize_key cannot
// produce (bad tuple syntax, non-canonical integers, first cell not (0|0),
// unsorted or duplicate cells). Throws std::invalid_argument.
PatternKey parse_key(std::string_view s);

}  // namespace patterns
