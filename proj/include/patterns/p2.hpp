#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "patterns/geometry.hpp"

namespace patterns {

struct P2Config {
    int window_length = 5;      // m, in notes
    int offset_allowance = 3;   // intervening unmatched notes allowed per occurrence
    double similarity_min = 0.5;
    int common_tpqn = 6;
};

struct P2Match {
    TranslationVector translation;
    int matched_count{};   // query points landing on text points, 1..m
    double similarity{};   // matched_count / m
};

// All translations under which at least one query point lands on a text
// point, with the matched count for each. Implemented as an m-way ordered
// merge of the translated difference lists, O(mn log m) time. Matches come
// out sorted by translation. Throws std::invalid_argument on an empty query.
std::vector<P2Match> p2_matches(std::span<const NotePoint> query,
                                const TrackPointSet& text);

// Overlapping windows of m consecutive points in (onset, pitch) order,
// stride 1. Fewer than m points gives an empty list.
std::vector<std::span<const NotePoint>> segment_windows(const TrackPointSet& points,
                                                        int window_length);

// Number of text points inside the closed onset span of the translated
// matched occurrence that are not themselves matched points.
int intervening_count(const P2Match& match, std::span<const NotePoint> query,
                      const TrackPointSet& text);

// Slides every window over its own piece, keeps matches with
// similarity >= similarity_min and intervening_count <= offset_allowance,
// and emits one PatternInstance per occurrence of every window that repeats
// somewhere besides its own position. The identity occurrence is counted
// once a window qualifies, so every emitted pattern has at least two
// occurrences.
std::vector<PatternInstance> p2_extract(const TrackPointSet& track, const P2Config& cfg);

// Named threshold bundles P2-3..P2-15. Throws std::invalid_argument for
// unknown names.
P2Config p2_preset(std::string_view name);

}  // namespace patterns
