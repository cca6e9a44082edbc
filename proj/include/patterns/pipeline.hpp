#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "patterns/classifier.hpp"
#include "patterns/feature_matrix.hpp"
#include "patterns/p2.hpp"
#include "patterns/sia.hpp"

namespace patterns {

enum class Algorithm { sia, p2 };

Algorithm algorithm_from_name(std::string_view name);  // "SIA" | "P2"

struct RunConfig {
    Algorithm algorithm = Algorithm::p2;
    std::string preset;  // empty = explicit thresholds below

    SiaConfig sia;
    P2Config p2;

    std::string scheme = "top-MAGD";
    int common_tpqn = 6;
    std::uint64_t seed = 1;
    int workers = 1;
    double reg_strength = 1.0;

    std::filesystem::path corpus;
    std::filesystem::path annotations;
    std::filesystem::path mapping;
    std::filesystem::path out;

    std::size_t max_track_points = 8192;
    std::uintmax_t max_file_bytes = 16ull << 20;
    double max_file_seconds = 0.0;  // 0 disables the per-file deadline

    // Applies the named preset (if any) and mirrors shared knobs into the
    // algorithm configs. Throws on unknown preset or algorithm mismatch.
    void resolve();

    std::string config_name() const;  // preset name, or "custom"
};

// Reads a JSON config file and overlays it on *this. Unknown keys raise.
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

struct ExtractStats {
    std::size_t files_processed{};
    std::size_t files_failed{};
    std::size_t files_skipped_size{};
    std::size_t tracks_processed{};
    std::size_t tracks_skipped_size{};
    std::int64_t total_instances{};
    std::size_t distinct_keys{};
};

// Scans the corpus for .mid/.midi files, extracts pattern instances from
// every track with the configured algorithm, and writes the instance store
// to cfg.out: instances.tsv (piece<TAB>key<TAB>count, sorted), pieces.txt
// (every successfully processed piece), stats.json, and run.log (one JSON
// event per line; event order follows completion and is not deterministic
// under several workers, everything else is byte-stable). Per-file parse or
// size failures are logged and counted, never fatal. Throws on an
// unreadable or empty corpus.
ExtractStats run_extract(const RunConfig& cfg);

struct ResultsRow {
    std::string name;
    std::string scheme;
    MetricSummary auc;
    MetricSummary f1;
    MetricSummary accuracy;
    std::size_t pattern_count{};
};

std::string format_results_header();
std::string format_results_row(const ResultsRow& row);

struct ClassifyOutcome {
    ResultsRow row;
    CrossValResult cv;
    std::size_t labeled_pieces{};
    std::size_t label_count{};
};

// Loads the instance store from cfg.out, joins it with the annotations,
// builds the occurrence matrix over the labeled pieces, runs seeded k-fold
// one-vs-rest logistic regression, and writes results.tsv and folds.tsv
// plus model.txt to cfg.out. Throws when no labeled piece intersects the
// corpus.
ClassifyOutcome run_classify(const RunConfig& cfg);

// Re-aggregates the instance store and writes vocabulary.txt and
// occurrences.tsv to cfg.out.
void run_export(const RunConfig& cfg);

// Concatenates results.tsv files into one table, rows sorted by
// (name, scheme); returns the table text and optionally writes it.
std::string build_report(const std::vector<std::filesystem::path>& results_files,
                         const std::optional<std::filesystem::path>& out_path);

}  // namespace patterns
