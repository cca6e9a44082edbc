#include "patterns/midi.hpp"

#include <algorithm>

namespace patterns {

namespace {

class ByteReader {
public:
    ByteReader(std::span<const std::uint8_t> bytes, std::size_t cursor)
        : bytes_(bytes), cursor_(cursor) {}

    std::size_t cursor() const { return cursor_; }
    std::size_t remaining() const { return bytes_.size() - cursor_; }

    std::uint8_t u8() {
        require(1, "byte");
        return bytes_[cursor_++];
    }

    std::uint16_t u16be() {
        require(2, "16-bit field");
        std::uint16_t v = static_cast<std::uint16_t>(bytes_[cursor_] << 8 | bytes_[cursor_ + 1]);
        cursor_ += 2;
        return v;
    }

    std::uint32_t u32be() {
        require(4, "32-bit field");
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = v << 8 | bytes_[cursor_ + i];
        cursor_ += 4;
        return v;
    }

    void skip(std::size_t n, const char* what) {
        require(n, what);
        cursor_ += n;
    }

    void require(std::size_t n, const char* what) const {
        if (remaining() < n)
            throw MidiError(std::string("truncated input: expected ") + what +
                            " at offset " + std::to_string(cursor_));
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t cursor_;
};

constexpr std::uint8_t kNoteOff = 0x80;
constexpr std::uint8_t kNoteOn = 0x90;
constexpr std::uint8_t kPolyPressure = 0xA0;
constexpr std::uint8_t kController = 0xB0;
constexpr std::uint8_t kProgram = 0xC0;
constexpr std::uint8_t kChannelPressure = 0xD0;
constexpr std::uint8_t kPitchBend = 0xE0;

std::uint8_t data_byte(ByteReader& r) {
    std::uint8_t b = r.u8();
    if (b & 0x80)
        throw MidiError("status byte where a data byte was expected at offset " +
                        std::to_string(r.cursor() - 1));
    return b;
}

// Parses one MTrk chunk body; returns the note-on points in event order.
// Events are not allowed to read past the chunk's declared end.
std::vector<NotePoint> parse_track_events(std::span<const std::uint8_t> bytes,
                                          std::size_t begin, std::size_t end) {
    const std::span<const std::uint8_t> chunk = bytes.first(end);
    std::vector<NotePoint> notes;
    ByteReader r(chunk, begin);
    Tick now = 0;
    std::uint8_t running_status = 0;

    while (r.cursor() < end) {
        std::size_t cur = r.cursor();
        now += read_vlq(chunk, cur);
        r = ByteReader(chunk, cur);

        std::uint8_t status;
        std::uint8_t first_data;
        std::uint8_t lead = r.u8();
        if (lead & 0x80) {
            status = lead;
            first_data = 0;  // read below where needed
        } else {
            if (running_status == 0)
                throw MidiError("data byte without running status at offset " +
                                std::to_string(r.cursor() - 1));
            status = running_status;
            first_data = lead;
        }
        const bool have_first = !(lead & 0x80);

        if (status < 0xF0) {
            running_status = status;
            const std::uint8_t kind = status & 0xF0;
            const std::uint8_t d1 = have_first ? first_data : data_byte(r);
            switch (kind) {
                case kNoteOn: {
                    const std::uint8_t velocity = data_byte(r);
                    if (velocity > 0) notes.push_back({now, d1});
                    break;
                }
                case kNoteOff:
                case kPolyPressure:
                case kController:
                case kPitchBend:
                    data_byte(r);
                    break;
                case kProgram:
                case kChannelPressure:
                    break;  // single data byte, already consumed
                default:
                    throw MidiError("unreachable channel status");
            }
        } else if (status == 0xFF) {
            running_status = 0;
            const std::uint8_t type = r.u8();
            std::size_t c = r.cursor();
            const std::uint32_t len = read_vlq(chunk, c);
            r = ByteReader(chunk, c);
            if (type == 0x2F) return notes;  // end of track
            r.skip(len, "meta event payload");
        } else if (status == 0xF0 || status == 0xF7) {
            running_status = 0;
            std::size_t c = r.cursor();
            const std::uint32_t len = read_vlq(chunk, c);
            r = ByteReader(chunk, c);
            r.skip(len, "sysex payload");
        } else {
            throw MidiError("unsupported status byte " + std::to_string(status) +
                            " at offset " + std::to_string(r.cursor() - 1));
        }
    }
    return notes;
}

}  // namespace

std::uint32_t read_vlq(std::span<const std::uint8_t> bytes, std::size_t& cursor) {
    std::uint32_t value = 0;
    for (int i = 0; i < 4; ++i) {
        if (cursor >= bytes.size())
            throw MidiError("truncated variable-length quantity at offset " +
                            std::to_string(cursor));
        const std::uint8_t b = bytes[cursor++];
        value = value << 7 | (b & 0x7F);
        if ((b & 0x80) == 0) return value;
    }
    throw MidiError("variable-length quantity longer than 4 bytes at offset " +
                    std::to_string(cursor));
}

MidiFile parse_midi(std::span<const std::uint8_t> bytes, std::string piece_id) {
    ByteReader r(bytes, 0);

    r.require(8, "chunk header");
    if (!(bytes[0] == 'M' && bytes[1] == 'T' && bytes[2] == 'h' && bytes[3] == 'd'))
        throw MidiError("malformed header: missing MThd tag");
    r.skip(4, "MThd tag");
    const std::uint32_t header_len = r.u32be();
    if (header_len < 6)
        throw MidiError("malformed header: length " + std::to_string(header_len));
    r.require(header_len, "header chunk body");
    const std::size_t header_end = r.cursor() + header_len;

    MidiFile file;
    const std::uint16_t format = r.u16be();
    if (format > 1)
        throw MidiError("unsupported SMF format " + std::to_string(format));
    file.header.format = format;
    r.u16be();  // declared track count; actual parsed chunks are authoritative
    const std::uint16_t division = r.u16be();
    if (division & 0x8000)
        throw MidiError("SMPTE time division is not supported");
    if (division == 0)
        throw MidiError("malformed header: zero ticks per quarter note");
    file.header.tpqn = division;
    r = ByteReader(bytes, header_end);

    int track_index = 0;
    while (r.remaining() > 0) {
        r.require(8, "chunk header");
        const std::size_t tag_at = r.cursor();
        const bool is_track = bytes[tag_at] == 'M' && bytes[tag_at + 1] == 'T' &&
                              bytes[tag_at + 2] == 'r' && bytes[tag_at + 3] == 'k';
        r.skip(4, "chunk tag");
        const std::uint32_t chunk_len = r.u32be();
        r.require(chunk_len, "chunk body");
        const std::size_t body_begin = r.cursor();
        const std::size_t body_end = body_begin + chunk_len;

        if (is_track) {
            std::vector<NotePoint> notes = parse_track_events(bytes, body_begin, body_end);
            if (!notes.empty()) {
                normalize_points(notes);
                file.tracks.push_back({piece_id, track_index, file.header.tpqn,
                                       std::move(notes)});
            }
            ++track_index;
        }
        r = ByteReader(bytes, body_end);
    }
    file.header.track_count = track_index;
    return file;
}

}  // namespace patterns
