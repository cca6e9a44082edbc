#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "patterns/geometry.hpp"

namespace patterns {

class MidiError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct MidiHeader {
    int format{};       // 0 or 1
    int track_count{};  // number of MTrk chunks actually parsed
    int tpqn{};         // ticks per quarter note, metrical division only
};

struct MidiFile {
    MidiHeader header;
    // One entry per track chunk that contains at least one note-on.
    std::vector<TrackPointSet> tracks;
};

// Standard SMF variable-length quantity. Reads at most 4 bytes starting at
// `cursor` and advances it. Throws MidiError on a truncated quantity or a
// continuation bit on the 4th byte.
std::uint32_t read_vlq(std::span<const std::uint8_t> bytes, std::size_t& cursor);

// Parses an SMF format 0/1 file into per-track note point sets. Note-ons
// with velocity 0 count as note-offs; durations, note-offs, tempo and other
// meta events are discarded. All channels are kept, percussion included.
// Unknown chunk types are skipped. Throws MidiError on a malformed header,
// SMPTE time division, format 2, or a truncated chunk.
MidiFile parse_midi(std::span<const std::uint8_t> bytes, std::string piece_id);

}  // namespace patterns
