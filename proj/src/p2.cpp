#include "patterns/p2.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace patterns {

namespace {

// Streams the ordered merge of the m lists {text[k] - query[j] : k} and
// reports every translation whose run length reaches min_count. A hand-kept
// binary min-heap holds one cursor per list; advancing a cursor replaces
// the root and sifts down once, so each of the m*n steps costs O(log m).
template <typename Sink>
void merge_translations(std::span<const NotePoint> query,
                        std::span<const NotePoint> text, int min_count, Sink&& sink) {
    const std::size_t m = query.size();
    const std::size_t n = text.size();
    if (n == 0) return;

    struct Head {
        TranslationVector value;
        std::uint32_t list;    // query index j
        std::uint32_t cursor;  // text index k
    };
    std::vector<Head> heap;
    heap.reserve(m);
    for (std::size_t j = 0; j < m; ++j)
        heap.push_back({text[0] - query[j], static_cast<std::uint32_t>(j), 0});

    const auto sift_down = [&heap](std::size_t i) {
        const std::size_t size = heap.size();
        while (true) {
            std::size_t smallest = i;
            const std::size_t left = 2 * i + 1;
            const std::size_t right = left + 1;
            if (left < size && heap[left].value < heap[smallest].value) smallest = left;
            if (right < size && heap[right].value < heap[smallest].value) smallest = right;
            if (smallest == i) return;
            std::swap(heap[i], heap[smallest]);
            i = smallest;
        }
    };
    for (std::size_t i = m / 2; i-- > 0;) sift_down(i);

    TranslationVector run{};
    int run_count = 0;
    bool have_run = false;
    while (!heap.empty()) {
        const Head head = heap.front();
        if (have_run && head.value == run) {
            ++run_count;
        } else {
            if (have_run && run_count >= min_count) sink(run, run_count);
            run = head.value;
            run_count = 1;
            have_run = true;
        }

        if (head.cursor + 1 < n) {
            heap.front() = {text[head.cursor + 1] - query[head.list], head.list,
                            head.cursor + 1};
        } else {
            heap.front() = heap.back();
            heap.pop_back();
            if (heap.empty()) break;
        }
        sift_down(0);
    }
    if (have_run && run_count >= min_count) sink(run, run_count);
}

// Smallest matched count whose similarity clears the threshold.
int min_count_for(double similarity_min, int m) {
    for (int c = 1; c <= m; ++c)
        if (static_cast<double>(c) / static_cast<double>(m) >= similarity_min) return c;
    return m + 1;
}

}  // namespace

std::vector<P2Match> p2_matches(std::span<const NotePoint> query,
                                const TrackPointSet& text) {
    if (query.empty())
        throw std::invalid_argument("p2_matches: empty query");
    const int m = static_cast<int>(query.size());
    std::vector<P2Match> matches;
    merge_translations(query, text.points, 1, [&](TranslationVector v, int count) {
        matches.push_back({v, count, static_cast<double>(count) / static_cast<double>(m)});
    });
    return matches;
}

std::vector<std::span<const NotePoint>> segment_windows(const TrackPointSet& points,
                                                        int window_length) {
    if (window_length < 1)
        throw std::invalid_argument("segment_windows: window_length must be positive");
    std::vector<std::span<const NotePoint>> windows;
    const std::size_t m = static_cast<std::size_t>(window_length);
    if (points.points.size() < m) return windows;
    windows.reserve(points.points.size() - m + 1);
    for (std::size_t i = 0; i + m <= points.points.size(); ++i)
        windows.push_back(std::span<const NotePoint>(points.points).subspan(i, m));
    return windows;
}

int intervening_count(const P2Match& match, std::span<const NotePoint> query,
                      const TrackPointSet& text) {
    const std::vector<NotePoint>& pts = text.points;
    Tick lo = 0, hi = 0;
    int matched = 0;
    for (const NotePoint& q : query) {
        const NotePoint t = q + match.translation;
        if (!std::binary_search(pts.begin(), pts.end(), t)) continue;
        if (matched == 0) lo = t.onset;
        hi = t.onset;
        ++matched;
    }
    if (matched != match.matched_count)
        throw std::invalid_argument("intervening_count: match does not belong to this "
                                    "query/text pair");
    auto first = std::lower_bound(pts.begin(), pts.end(),
                                  NotePoint{lo, std::numeric_limits<int>::min()});
    auto last = std::upper_bound(pts.begin(), pts.end(),
                                 NotePoint{hi, std::numeric_limits<int>::max()});
    return static_cast<int>(last - first) - matched;
}

std::vector<PatternInstance> p2_extract(const TrackPointSet& track, const P2Config& cfg) {
    if (cfg.window_length < 1)
        throw std::invalid_argument("p2_extract: window_length must be positive");
    if (cfg.similarity_min <= 0.0 || cfg.similarity_min > 1.0)
        throw std::invalid_argument("p2_extract: similarity_min must be in (0,1]");

    const int m = cfg.window_length;
    const int min_count = min_count_for(cfg.similarity_min, m);
    const TranslationVector identity{0, 0};

    std::vector<PatternInstance> instances;
    std::vector<P2Match> candidates;
    for (std::span<const NotePoint> window : segment_windows(track, m)) {
        candidates.clear();
        merge_translations(window, track.points, min_count,
                           [&](TranslationVector v, int count) {
                               candidates.push_back(
                                   {v, count,
                                    static_cast<double>(count) / static_cast<double>(m)});
                           });

        int occurrences = 0;
        for (const P2Match& match : candidates) {
            if (match.translation == identity) continue;
            if (intervening_count(match, window, track) > cfg.offset_allowance) continue;
            ++occurrences;
        }
        if (occurrences == 0) continue;  // only the trivial self-match

        // One instance per repeat plus the identity occurrence itself.
        PatternInstance inst{track.piece_id, track.track_index, track.tpqn,
                             std::vector<NotePoint>(window.begin(), window.end())};
        for (int i = 0; i < occurrences + 1; ++i) instances.push_back(inst);
    }
    return instances;
}

P2Config p2_preset(std::string_view name) {
    P2Config cfg;
    if (name == "P2-3") {
        cfg.window_length = 3;
        cfg.offset_allowance = 2;
        cfg.similarity_min = 0.9;
    } else if (name == "P2-4") {
        cfg.window_length = 4;
        cfg.offset_allowance = 2;
        cfg.similarity_min = 0.9;
    } else if (name == "P2-5") {
        cfg.window_length = 5;
        cfg.offset_allowance = 3;
        cfg.similarity_min = 0.5;
    } else if (name == "P2-8") {
        cfg.window_length = 8;
        cfg.offset_allowance = 3;
        cfg.similarity_min = 0.5;
    } else if (name == "P2-10") {
        cfg.window_length = 10;
        cfg.offset_allowance = 3;
        cfg.similarity_min = 0.5;
    } else if (name == "P2-15") {
        cfg.window_length = 15;
        cfg.offset_allowance = 3;
        cfg.similarity_min = 0.5;
    } else {
        throw std::invalid_argument("unknown P2 preset: " + std::string(name));
    }
    return cfg;
}

}  // namespace patterns
