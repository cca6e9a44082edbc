#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "patterns/geometry.hpp"

namespace patterns {

struct SiaConfig {
    int min_length = 3;            // patterns shorter than this are dropped
    double compactness_min = 0.0;  // keep if compactness >= this
    double density_min = 0.0;      // keep if temporal density >= this
    int common_tpqn = 6;
    std::size_t max_points = 8192;  // per-track cap on the quadratic table
};

// Maximal translatable pattern: the set of all points p with p + vector in
// the source set, for one nonzero translation vector.
struct MtpResult {
    TranslationVector vector;
    std::vector<NotePoint> origin_points;  // sorted by (onset, pitch)
};

// Enumerates every MTP of the point set by sorting all inter-point
// difference vectors. O(n^2 log n) time, O(n^2) memory. Results are ordered
// by vector. Throws std::length_error when the set exceeds max_points.
std::vector<MtpResult> sia_mtps(const TrackPointSet& track,
                                std::size_t max_points = 8192);

// Span of the pattern relative to the span of the whole piece, both in
// ticks. A piece whose notes share one onset has compactness 1 by
// convention. Throws std::invalid_argument if pattern is not a subset of
// the piece.
double compactness(std::span<const NotePoint> pattern, const TrackPointSet& piece);

// Notes per common-TPQN tick over the pattern's span; the span is floored
// at one tick so single-onset patterns get density = note count.
double temporal_density(std::span<const NotePoint> pattern, int native_tpqn,
                        int common_tpqn);

// SIA discovery followed by the length, compactness and density filters.
// Each surviving MTP origin set becomes one PatternInstance.
std::vector<PatternInstance> sia_extract(const TrackPointSet& track,
                                         const SiaConfig& cfg);

// Named threshold bundles Sia-1..Sia-4. Throws std::invalid_argument for
// unknown names.
SiaConfig sia_preset(std::string_view name);

}  // namespace patterns
