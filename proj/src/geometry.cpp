#include "patterns/geometry.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <stdexcept>

namespace patterns {

void normalize_points(std::vector<NotePoint>& points) {
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());
}

namespace {

Tick floor_scale(Tick value, int native_tpqn, int common_tpqn) {
    // value is non-negative for every caller, so integer division is floor.
    return value * static_cast<Tick>(common_tpqn) / static_cast<Tick>(native_tpqn);
}

}  // namespace

std::vector<NotePoint> to_common_resolution(std::span<const NotePoint> points,
                                            int native_tpqn, int common_tpqn) {
    if (native_tpqn <= 0 || common_tpqn <= 0)
        throw std::invalid_argument("to_common_resolution: tpqn must be positive");
    std::vector<NotePoint> scaled;
    scaled.reserve(points.size());
    for (const NotePoint& p : points)
        scaled.push_back({floor_scale(p.onset, native_tpqn, common_tpqn), p.pitch});
    normalize_points(scaled);
    return scaled;
}

PatternKey canonical_key(std::span<const NotePoint> points, int native_tpqn,
                         int common_tpqn) {
    if (points.empty())
        throw std::invalid_argument("canonical_key: empty instance");
    if (native_tpqn <= 0 || common_tpqn <= 0)
        throw std::invalid_argument("canonical_key: tpqn must be positive");

    const Tick t0 = points.front().onset;
    const int p0 = points.front().pitch;

    PatternKey key;
    key.cells.reserve(points.size());
    for (const NotePoint& p : points)
        key.cells.push_back({floor_scale(p.onset - t0, native_tpqn, common_tpqn),
                             p.pitch - p0});
    std::sort(key.cells.begin(), key.cells.end());
    key.cells.erase(std::unique(key.cells.begin(), key.cells.end()), key.cells.end());

    // Coarsening can move a lower-pitched later note onto position 0; shift
    // pitches so the first cell ends up exactly (0,0).
    const int anchor_pitch = key.cells.front().rel_pitch;
    if (anchor_pitch != 0)
        for (KeyCell& c : key.cells) c.rel_pitch -= anchor_pitch;
    return key;
}

PatternKey canonical_key(const PatternInstance& instance, int common_tpqn) {
    return canonical_key(instance.points, instance.native_tpqn, common_tpqn);
}

std::string serialize_key(const PatternKey& key) {
    std::string out;
    out.reserve(key.cells.size() * 8);
    for (const KeyCell& c : key.cells) {
        out += '(';
        out += std::to_string(c.rel_pos);
        out += '|';
        out += std::to_string(c.rel_pitch);
        out += ')';
    }
    return out;
}

namespace {

// Canonical decimal integer: optional '-', no leading zeros, no '-0'.
std::int64_t parse_cell_int(std::string_view s, std::size_t& pos, std::string_view what) {
    const std::size_t start = pos;
    bool negative = false;
    if (pos < s.size() && s[pos] == '-') {
        negative = true;
        ++pos;
    }
    std::size_t digits_start = pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    const std::size_t ndigits = pos - digits_start;
    if (ndigits == 0)
        throw std::invalid_argument("parse_key: missing " + std::string(what) +
                                    " at offset " + std::to_string(start));
    if (ndigits > 1 && s[digits_start] == '0')
        throw std::invalid_argument("parse_key: leading zero at offset " +
                                    std::to_string(digits_start));
    if (negative && ndigits == 1 && s[digits_start] == '0')
        throw std::invalid_argument("parse_key: negative zero at offset " +
                                    std::to_string(start));
    std::int64_t value = 0;
    auto res = std::from_chars(s.data() + start, s.data() + pos, value);
    if (res.ec != std::errc{} || res.ptr != s.data() + pos)
        throw std::invalid_argument("parse_key: integer out of range at offset " +
                                    std::to_string(start));
    return value;
}

}  // namespace

PatternKey parse_key(std::string_view s) {
    PatternKey key;
    std::size_t pos = 0;
    while (pos < s.size()) {
        if (s[pos] != '(')
            throw std::invalid_argument("parse_key: expected '(' at offset " +
                                        std::to_string(pos));
        ++pos;
        const std::int64_t rel_pos = parse_cell_int(s, pos, "position");
        if (pos >= s.size() || s[pos] != '|')
            throw std::invalid_argument("parse_key: expected '|' at offset " +
                                        std::to_string(pos));
        ++pos;
        const std::int64_t rel_pitch = parse_cell_int(s, pos, "tone");
        if (pos >= s.size() || s[pos] != ')')
            throw std::invalid_argument("parse_key: expected ')' at offset " +
                                        std::to_string(pos));
        ++pos;
        if (rel_pitch < INT32_MIN || rel_pitch > INT32_MAX)
            throw std::invalid_argument("parse_key: tone out of range");
        key.cells.push_back({rel_pos, static_cast<int>(rel_pitch)});
    }
    if (key.cells.empty())
        throw std::invalid_argument("parse_key: empty key");
    if (key.cells.front() != KeyCell{0, 0})
        throw std::invalid_argument("parse_key: first cell is not (0|0)");
    for (std::size_t i = 1; i < key.cells.size(); ++i)
        if (key.cells[i] <= key.cells[i - 1])
            throw std::invalid_argument("parse_key: cells not strictly increasing at cell " +
                                        std::to_string(i));
    return key;
}

}  // namespace patterns
