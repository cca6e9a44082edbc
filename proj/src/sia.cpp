#include "patterns/sia.hpp"

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace patterns {

std::vector<MtpResult> sia_mtps(const TrackPointSet& track, std::size_t max_points) {
    const std::vector<NotePoint>& pts = track.points;
    if (pts.size() > max_points)
        throw std::length_error("sia_mtps: track of " + std::to_string(pts.size()) +
                                " points exceeds cap " + std::to_string(max_points));
    if (pts.size() < 2) return {};

    // 16-byte table entries keep the quadratic sort memory-light; origins
    // are indices into the sorted point vector, so index order within a
    // vector group is already point order.
    struct Entry {
        Tick dt;
        std::int32_t dp;
        std::uint32_t origin;

        auto operator<=>(const Entry&) const = default;
    };
    static_assert(sizeof(Entry) == 16);

    const std::size_t n = pts.size();
    std::vector<Entry> table;
    table.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i + 1 < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            table.push_back({pts[j].onset - pts[i].onset, pts[j].pitch - pts[i].pitch,
                             static_cast<std::uint32_t>(i)});

    std::sort(table.begin(), table.end());

    std::size_t distinct = table.empty() ? 0 : 1;
    for (std::size_t k = 1; k < table.size(); ++k)
        distinct += table[k].dt != table[k - 1].dt || table[k].dp != table[k - 1].dp;

    std::vector<MtpResult> mtps;
    mtps.reserve(distinct);
    std::size_t i = 0;
    while (i < table.size()) {
        std::size_t j = i;
        while (j < table.size() && table[j].dt == table[i].dt &&
               table[j].dp == table[i].dp)
            ++j;
        MtpResult mtp;
        mtp.vector = {table[i].dt, table[i].dp};
        mtp.origin_points.reserve(j - i);
        for (std::size_t k = i; k < j; ++k)
            mtp.origin_points.push_back(pts[table[k].origin]);
        mtps.push_back(std::move(mtp));
        i = j;
    }
    return mtps;
}

double compactness(std::span<const NotePoint> pattern, const TrackPointSet& piece) {
    if (pattern.empty())
        throw std::invalid_argument("compactness: empty pattern");
    for (const NotePoint& p : pattern)
        if (!std::binary_search(piece.points.begin(), piece.points.end(), p))
            throw std::invalid_argument("compactness: pattern is not a subset of the piece");
    const Tick piece_span = piece.points.back().onset - piece.points.front().onset;
    if (piece_span == 0) return 1.0;
    const Tick pattern_span = pattern.back().onset - pattern.front().onset;
    return static_cast<double>(pattern_span) / static_cast<double>(piece_span);
}

double temporal_density(std::span<const NotePoint> pattern, int native_tpqn,
                        int common_tpqn) {
    if (pattern.empty())
        throw std::invalid_argument("temporal_density: empty pattern");
    if (native_tpqn <= 0 || common_tpqn <= 0)
        throw std::invalid_argument("temporal_density: tpqn must be positive");
    const Tick native_span = pattern.back().onset - pattern.front().onset;
    const Tick common_span =
        std::max<Tick>(1, native_span * common_tpqn / native_tpqn);
    return static_cast<double>(pattern.size()) / static_cast<double>(common_span);
}

std::vector<PatternInstance> sia_extract(const TrackPointSet& track, const SiaConfig& cfg) {
    if (cfg.min_length < 1)
        throw std::invalid_argument("sia_extract: min_length must be positive");

    std::vector<MtpResult> mtps = sia_mtps(track, cfg.max_points);
    std::vector<PatternInstance> instances;
    for (MtpResult& mtp : mtps) {
        if (std::ssize(mtp.origin_points) < cfg.min_length) continue;
        if (compactness(mtp.origin_points, track) < cfg.compactness_min) continue;
        if (temporal_density(mtp.origin_points, track.tpqn, cfg.common_tpqn) <
            cfg.density_min)
            continue;
        instances.push_back({track.piece_id, track.track_index, track.tpqn,
                             std::move(mtp.origin_points)});
    }
    return instances;
}

SiaConfig sia_preset(std::string_view name) {
    SiaConfig cfg;
    if (name == "Sia-1") {
        cfg.compactness_min = 0.7;
        cfg.density_min = 0.05;
    } else if (name == "Sia-2") {
        cfg.compactness_min = 0.4;
        cfg.density_min = 0.05;
    } else if (name == "Sia-3") {
        cfg.compactness_min = 0.4;
        cfg.density_min = 0.25;
    } else if (name == "Sia-4") {
        cfg.compactness_min = 0.7;
        cfg.density_min = 0.25;
    } else {
        throw std::invalid_argument("unknown SIA preset: " + std::string(name));
    }
    return cfg;
}

}  // namespace patterns
