#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace patterns {

// Distinct pattern keys in lexicographic order of their serialized form;
// the position in `keys` is the column index.
struct PatternVocabulary {
    std::vector<std::string> keys;
    std::unordered_map<std::string, int> index;

    int column_of(const std::string& key) const { return index.at(key); }
    std::size_t size() const { return keys.size(); }

    // FNV-1a over the newline-joined keys; pins a model file to the
    // vocabulary it was trained against.
    std::uint64_t hash() const;
};

// Sparse piece x pattern occurrence counts in CSR form. Rows are sorted by
// piece_id, columns within a row are sorted; absent cells are zero.
struct FeatureMatrix {
    std::vector<std::string> piece_ids;
    std::vector<std::size_t> row_start;  // size piece_ids.size() + 1
    std::vector<int> cols;
    std::vector<std::int64_t> counts;

    std::size_t rows() const { return piece_ids.size(); }
    std::int64_t total() const;
    std::int64_t at(std::size_t row, int col) const;  // 0 when absent
};

// Order-independent accumulator for (piece, key) occurrence counts.
// Partial aggregators built concurrently merge associatively.
class OccurrenceAggregator {
public:
    void add(const std::string& piece_id, const std::string& key, std::int64_t count = 1);
    void merge(OccurrenceAggregator&& other);

    std::pair<FeatureMatrix, PatternVocabulary> build() const;

    bool empty() const { return counts_.empty(); }

private:
    std::unordered_map<std::string, std::unordered_map<std::string, std::int64_t>> counts_;
};

// Convenience over OccurrenceAggregator for a materialized instance stream.
std::pair<FeatureMatrix, PatternVocabulary> aggregate(
    const std::vector<std::pair<std::string, std::string>>& piece_key_stream);

// Writes the vocabulary (one key per line, line number = column index) and
// the occurrences file (piece_id<TAB>column<TAB>count, sorted by piece then
// column). Byte-deterministic for a given matrix; UTF-8, LF endings.
void export_patterns(const FeatureMatrix& matrix, const PatternVocabulary& vocabulary,
                     const std::filesystem::path& vocabulary_path,
                     const std::filesystem::path& occurrences_path);

enum class AnnotationScheme { magd, top_magd, masd };

AnnotationScheme scheme_from_name(std::string_view name);
std::string_view scheme_name(AnnotationScheme scheme);

struct AnnotationSet {
    // piece_id -> label set; only pieces with at least one label appear.
    std::map<std::string, std::set<std::string>> labels_by_piece;
    std::size_t annotation_lines{};
    std::size_t mapping_lines{};
    // Annotation rows whose track id never shows up in the mapping.
    std::size_t unmatched_annotations{};
    // Mapping rows whose track id carries no annotation.
    std::size_t unlabeled_mappings{};
};

// Joins `label<TAB>track_id` annotation rows with `midi_file<TAB>track_id`
// mapping rows. Under top-MAGD only the 13 top genres survive. Blank lines
// and lines starting with '#' or '%' are skipped; any other line that is
// not exactly two tab-separated fields raises std::runtime_error with its
// line number.
AnnotationSet load_annotations(const std::filesystem::path& annotations_path,
                               const std::filesystem::path& mapping_path,
                               AnnotationScheme scheme);

}  // namespace patterns
