#include "patterns/feature_matrix.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <functional>
#include <stdexcept>

namespace patterns {

std::uint64_t PatternVocabulary::hash() const {
    std::uint64_t h = 1469598103934665603ull;  // FNV offset basis
    auto mix = [&h](char c) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;  // FNV prime
    };
    for (const std::string& key : keys) {
        for (char c : key) mix(c);
        mix('\n');
    }
    return h;
}

std::int64_t FeatureMatrix::total() const {
    std::int64_t sum = 0;
    for (std::int64_t c : counts) sum += c;
    return sum;
}

std::int64_t FeatureMatrix::at(std::size_t row, int col) const {
    for (std::size_t i = row_start[row]; i < row_start[row + 1]; ++i)
        if (cols[i] == col) return counts[i];
    return 0;
}

void OccurrenceAggregator::add(const std::string& piece_id, const std::string& key,
                               std::int64_t count) {
    if (count <= 0)
        throw std::invalid_argument("OccurrenceAggregator::add: count must be positive");
    counts_[piece_id][key] += count;
}

void OccurrenceAggregator::merge(OccurrenceAggregator&& other) {
    for (auto& [piece, keys] : other.counts_) {
        auto& mine = counts_[piece];
        if (mine.empty()) {
            mine = std::move(keys);
        } else {
            for (auto& [key, count] : keys) mine[key] += count;
        }
    }
    other.counts_.clear();
}

std::pair<FeatureMatrix, PatternVocabulary> OccurrenceAggregator::build() const {
    PatternVocabulary vocab;
    for (const auto& [piece, keys] : counts_)
        for (const auto& [key, count] : keys)
            if (vocab.index.emplace(key, 0).second) vocab.keys.push_back(key);
    std::sort(vocab.keys.begin(), vocab.keys.end());
    for (std::size_t i = 0; i < vocab.keys.size(); ++i)
        vocab.index[vocab.keys[i]] = static_cast<int>(i);

    FeatureMatrix matrix;
    matrix.piece_ids.reserve(counts_.size());
    for (const auto& [piece, keys] : counts_) matrix.piece_ids.push_back(piece);
    std::sort(matrix.piece_ids.begin(), matrix.piece_ids.end());

    matrix.row_start.reserve(matrix.piece_ids.size() + 1);
    matrix.row_start.push_back(0);
    std::vector<std::pair<int, std::int64_t>> row;
    for (const std::string& piece : matrix.piece_ids) {
        const auto& keys = counts_.at(piece);
        row.clear();
        row.reserve(keys.size());
        for (const auto& [key, count] : keys)
            row.emplace_back(vocab.index.at(key), count);
        std::sort(row.begin(), row.end());
        for (const auto& [col, count] : row) {
            matrix.cols.push_back(col);
            matrix.counts.push_back(count);
        }
        matrix.row_start.push_back(matrix.cols.size());
    }
    return {std::move(matrix), std::move(vocab)};
}

std::pair<FeatureMatrix, PatternVocabulary> aggregate(
    const std::vector<std::pair<std::string, std::string>>& piece_key_stream) {
    OccurrenceAggregator agg;
    for (const auto& [piece, key] : piece_key_stream) agg.add(piece, key);
    return agg.build();
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path.string());
    return out;
}

}  // namespace

void export_patterns(const FeatureMatrix& matrix, const PatternVocabulary& vocabulary,
                     const std::filesystem::path& vocabulary_path,
                     const std::filesystem::path& occurrences_path) {
    {
        std::ofstream out = open_for_write(vocabulary_path);
        for (const std::string& key : vocabulary.keys) out << key << '\n';
        if (!out) throw std::runtime_error("write failed: " + vocabulary_path.string());
    }
    {
        std::ofstream out = open_for_write(occurrences_path);
        for (std::size_t r = 0; r < matrix.rows(); ++r)
            for (std::size_t i = matrix.row_start[r]; i < matrix.row_start[r + 1]; ++i)
                out << matrix.piece_ids[r] << '\t' << matrix.cols[i] << '\t'
                    << matrix.counts[i] << '\n';
        if (!out) throw std::runtime_error("write failed: " + occurrences_path.string());
    }
}

AnnotationScheme scheme_from_name(std::string_view name) {
    if (name == "MAGD") return AnnotationScheme::magd;
    if (name == "top-MAGD") return AnnotationScheme::top_magd;
    if (name == "MASD") return AnnotationScheme::masd;
    throw std::invalid_argument("unknown annotation scheme: " + std::string(name));
}

std::string_view scheme_name(AnnotationScheme scheme) {
    switch (scheme) {
        case AnnotationScheme::magd: return "MAGD";
        case AnnotationScheme::top_magd: return "top-MAGD";
        case AnnotationScheme::masd: return "MASD";
    }
    return "?";
}

namespace {

bool is_top_magd_genre(const std::string& label) {
    // The 13 top genres, under the spellings the annotation files use plus
    // the slash/ampersand variants seen elsewhere.
    static const std::array<std::string_view, 16> names = {
        "Pop_Rock", "Pop/Rock", "Electronic", "Country", "RnB",         "R&B",
        "Jazz",     "Latin",    "International", "Rap",  "Vocal",       "New Age",
        "New_Age",  "Folk",     "Reggae",        "Blues",
    };
    return std::find(names.begin(), names.end(), label) != names.end();
}

// label/midi_file -> track_id pairs; skips blanks and comment lines.
void read_two_column_tsv(const std::filesystem::path& path,
                         std::size_t& line_count,
                         const std::function<void(std::string&&, std::string&&)>& emit) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#' || line[0] == '%') continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 == line.size() ||
            line.find('\t', tab + 1) != std::string::npos)
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": malformed line, expected two tab-separated fields");
        ++line_count;
        emit(line.substr(0, tab), line.substr(tab + 1));
    }
}

}  // namespace

AnnotationSet load_annotations(const std::filesystem::path& annotations_path,
                               const std::filesystem::path& mapping_path,
                               AnnotationScheme scheme) {
    AnnotationSet result;

    std::unordered_map<std::string, std::set<std::string>> labels_by_track;
    read_two_column_tsv(annotations_path, result.annotation_lines,
                        [&](std::string&& label, std::string&& track_id) {
                            if (scheme == AnnotationScheme::top_magd &&
                                !is_top_magd_genre(label))
                                return;
                            labels_by_track[std::move(track_id)].insert(std::move(label));
                        });

    std::unordered_map<std::string, bool> track_seen;
    for (const auto& [track, labels] : labels_by_track) track_seen.emplace(track, false);

    read_two_column_tsv(mapping_path, result.mapping_lines,
                        [&](std::string&& midi_file, std::string&& track_id) {
                            auto it = labels_by_track.find(track_id);
                            if (it == labels_by_track.end()) {
                                ++result.unlabeled_mappings;
                                return;
                            }
                            track_seen[track_id] = true;
                            auto& labels = result.labels_by_piece[std::move(midi_file)];
                            labels.insert(it->second.begin(), it->second.end());
                        });

    for (const auto& [track, seen] : track_seen)
        if (!seen) result.unmatched_annotations += labels_by_track.at(track).size();

    return result;
}

}  // namespace patterns
