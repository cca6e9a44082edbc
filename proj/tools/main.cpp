#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "patterns/pipeline.hpp"

namespace {

struct CliOptions {
    patterns::RunConfig cfg;
    std::string config_file;
    std::string algorithm;

    int min_length = 0;
    double compactness = 0.0;
    double density = 0.0;
    int window = 0;
    int offset = 0;
    double similarity = 0.0;
};

void add_shared_options(CLI::App* cmd, CliOptions& opt) {
    cmd->add_option("--config", opt.config_file, "JSON config file; flags override it");
    cmd->add_option("--algorithm", opt.algorithm, "SIA or P2");
    cmd->add_option("--preset", opt.cfg.preset,
                    "named thresholds: Sia-1..Sia-4, P2-3..P2-15");
    cmd->add_option("--scheme", opt.cfg.scheme, "MAGD, top-MAGD or MASD");
    cmd->add_option("--tpqn", opt.cfg.common_tpqn, "common ticks per quarter note");
    cmd->add_option("--seed", opt.cfg.seed, "seed for fold assignment");
    cmd->add_option("--workers", opt.cfg.workers, "extraction worker threads");
    cmd->add_option("--reg", opt.cfg.reg_strength, "L2 regularization strength");
    cmd->add_option("--corpus", opt.cfg.corpus, "MIDI corpus root directory");
    cmd->add_option("--annotations", opt.cfg.annotations,
                    "label<TAB>track_id annotation file");
    cmd->add_option("--mapping", opt.cfg.mapping, "midi_file<TAB>track_id mapping file");
    cmd->add_option("--out", opt.cfg.out, "run output directory");
    cmd->add_option("--min-length", opt.min_length, "SIA: minimum pattern length (notes)");
    cmd->add_option("--compactness", opt.compactness, "SIA: minimum compactness");
    cmd->add_option("--density", opt.density, "SIA: minimum temporal density");
    cmd->add_option("--window", opt.window, "P2: window length (notes)");
    cmd->add_option("--offset", opt.offset, "P2: intervening notes allowed");
    cmd->add_option("--similarity", opt.similarity, "P2: minimum similarity");
    cmd->add_option("--max-track-points", opt.cfg.max_track_points,
                    "skip tracks with more points than this");
    cmd->add_option("--max-file-bytes", opt.cfg.max_file_bytes,
                    "skip files larger than this");
    cmd->add_option("--max-file-seconds", opt.cfg.max_file_seconds,
                    "per-file extraction deadline, 0 = unlimited");
}

// Precedence: defaults < config file < flags; explicit threshold flags win
// over a preset.
patterns::RunConfig finalize(CLI::App* cmd, CliOptions& opt) {
    patterns::RunConfig cfg;
    if (cmd->count("--config")) patterns::apply_config_file(cfg, opt.config_file);

    if (cmd->count("--algorithm"))
        cfg.algorithm = patterns::algorithm_from_name(opt.algorithm);
    if (cmd->count("--preset")) cfg.preset = opt.cfg.preset;
    if (cmd->count("--scheme")) cfg.scheme = opt.cfg.scheme;
    if (cmd->count("--tpqn")) cfg.common_tpqn = opt.cfg.common_tpqn;
    if (cmd->count("--seed")) cfg.seed = opt.cfg.seed;
    if (cmd->count("--workers")) cfg.workers = opt.cfg.workers;
    if (cmd->count("--reg")) cfg.reg_strength = opt.cfg.reg_strength;
    if (cmd->count("--corpus")) cfg.corpus = opt.cfg.corpus;
    if (cmd->count("--annotations")) cfg.annotations = opt.cfg.annotations;
    if (cmd->count("--mapping")) cfg.mapping = opt.cfg.mapping;
    if (cmd->count("--out")) cfg.out = opt.cfg.out;
    if (cmd->count("--max-track-points")) cfg.max_track_points = opt.cfg.max_track_points;
    if (cmd->count("--max-file-bytes")) cfg.max_file_bytes = opt.cfg.max_file_bytes;
    if (cmd->count("--max-file-seconds")) cfg.max_file_seconds = opt.cfg.max_file_seconds;

    cfg.resolve();

    if (cmd->count("--min-length")) cfg.sia.min_length = opt.min_length;
    if (cmd->count("--compactness")) cfg.sia.compactness_min = opt.compactness;
    if (cmd->count("--density")) cfg.sia.density_min = opt.density;
    if (cmd->count("--window")) cfg.p2.window_length = opt.window;
    if (cmd->count("--offset")) cfg.p2.offset_allowance = opt.offset;
    if (cmd->count("--similarity")) cfg.p2.similarity_min = opt.similarity;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Repeating-pattern extraction from MIDI corpora and multi-label "
                 "genre classification"};
    app.require_subcommand(1);

    CliOptions opt;
    CLI::App* extract = app.add_subcommand(
        "extract", "scan a MIDI corpus and build the pattern instance store");
    CLI::App* classify = app.add_subcommand(
        "classify", "cross-validated genre classification from an instance store");
    CLI::App* export_cmd = app.add_subcommand(
        "export-patterns", "write the pattern vocabulary and occurrence files");
    CLI::App* report = app.add_subcommand("report", "merge results tables");
    add_shared_options(extract, opt);
    add_shared_options(classify, opt);
    add_shared_options(export_cmd, opt);

    std::vector<std::string> report_inputs;
    std::string report_out;
    report->add_option("inputs", report_inputs, "results.tsv files")->required();
    report->add_option("--out", report_out, "write the merged table here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (extract->parsed()) {
            const patterns::RunConfig cfg = finalize(extract, opt);
            const patterns::ExtractStats stats = patterns::run_extract(cfg);
            std::printf("processed %zu files (%zu failed, %zu skipped), "
                        "%lld instances, %zu distinct patterns\n",
                        stats.files_processed, stats.files_failed,
                        stats.files_skipped_size,
                        static_cast<long long>(stats.total_instances),
                        stats.distinct_keys);
        } else if (classify->parsed()) {
            const patterns::RunConfig cfg = finalize(classify, opt);
            const patterns::ClassifyOutcome outcome = patterns::run_classify(cfg);
            std::printf("%s\n%s\n", patterns::format_results_header().c_str(),
                        patterns::format_results_row(outcome.row).c_str());
            std::printf("(%zu labeled pieces, %zu labels)\n", outcome.labeled_pieces,
                        outcome.label_count);
        } else if (export_cmd->parsed()) {
            const patterns::RunConfig cfg = finalize(export_cmd, opt);
            patterns::run_export(cfg);
            std::printf("wrote %s and %s\n", (cfg.out / "vocabulary.txt").c_str(),
                        (cfg.out / "occurrences.tsv").c_str());
        } else if (report->parsed()) {
            const std::vector<std::filesystem::path> inputs(report_inputs.begin(),
                                                            report_inputs.end());
            std::optional<std::filesystem::path> out;
            if (!report_out.empty()) out = report_out;
            std::cout << patterns::build_report(inputs, out);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
