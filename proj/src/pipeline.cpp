#include "patterns/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "patterns/midi.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace patterns {

Algorithm algorithm_from_name(std::string_view name) {
    if (name == "SIA" || name == "sia") return Algorithm::sia;
    if (name == "P2" || name == "p2") return Algorithm::p2;
    throw std::invalid_argument("unknown algorithm: " + std::string(name));
}

void RunConfig::resolve() {
    if (!preset.empty()) {
        if (preset.starts_with("Sia")) {
            algorithm = Algorithm::sia;
            const SiaConfig p = sia_preset(preset);
            sia.min_length = p.min_length;
            sia.compactness_min = p.compactness_min;
            sia.density_min = p.density_min;
        } else if (preset.starts_with("P2")) {
            algorithm = Algorithm::p2;
            const P2Config p = p2_preset(preset);
            p2.window_length = p.window_length;
            p2.offset_allowance = p.offset_allowance;
            p2.similarity_min = p.similarity_min;
        } else {
            throw std::invalid_argument("unknown preset: " + preset);
        }
    }
    sia.common_tpqn = common_tpqn;
    p2.common_tpqn = common_tpqn;
    sia.max_points = max_track_points;
    if (workers < 1) throw std::invalid_argument("workers must be >= 1");
    scheme_from_name(scheme);  // validate early
}

std::string RunConfig::config_name() const { return preset.empty() ? "custom" : preset; }

void apply_config_file(RunConfig& cfg, const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path.string());
    json doc = json::parse(in);
    if (!doc.is_object()) throw std::runtime_error("config root must be an object");

    for (const auto& [key, value] : doc.items()) {
        if (key == "algorithm") cfg.algorithm = algorithm_from_name(value.get<std::string>());
        else if (key == "preset") cfg.preset = value.get<std::string>();
        else if (key == "scheme") cfg.scheme = value.get<std::string>();
        else if (key == "tpqn") cfg.common_tpqn = value.get<int>();
        else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
        else if (key == "workers") cfg.workers = value.get<int>();
        else if (key == "reg") cfg.reg_strength = value.get<double>();
        else if (key == "corpus") cfg.corpus = value.get<std::string>();
        else if (key == "annotations") cfg.annotations = value.get<std::string>();
        else if (key == "mapping") cfg.mapping = value.get<std::string>();
        else if (key == "out") cfg.out = value.get<std::string>();
        else if (key == "min_length") cfg.sia.min_length = value.get<int>();
        else if (key == "compactness") cfg.sia.compactness_min = value.get<double>();
        else if (key == "density") cfg.sia.density_min = value.get<double>();
        else if (key == "window") cfg.p2.window_length = value.get<int>();
        else if (key == "offset") cfg.p2.offset_allowance = value.get<int>();
        else if (key == "similarity") cfg.p2.similarity_min = value.get<double>();
        else if (key == "max_track_points") cfg.max_track_points = value.get<std::size_t>();
        else if (key == "max_file_bytes") cfg.max_file_bytes = value.get<std::uintmax_t>();
        else if (key == "max_file_seconds") cfg.max_file_seconds = value.get<double>();
        else throw std::runtime_error("unknown config key: " + key);
    }
}

namespace {

std::vector<fs::path> scan_corpus(const fs::path& root) {
    if (!fs::exists(root) || !fs::is_directory(root))
        throw std::runtime_error("corpus root is not a readable directory: " +
                                 root.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (ext == ".mid" || ext == ".midi") files.push_back(entry.path());
    }
    if (files.empty())
        throw std::runtime_error("empty corpus: no .mid/.midi files under " +
                                 root.string());
    std::sort(files.begin(), files.end(), [&](const fs::path& a, const fs::path& b) {
        return fs::relative(a, root).generic_string() <
               fs::relative(b, root).generic_string();
    });
    return files;
}

std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

struct FileOutcome {
    std::string piece;
    std::string status;  // ok | failed | skipped
    std::string error;
    std::size_t tracks = 0;
    std::size_t tracks_skipped = 0;
    std::int64_t instances = 0;
    double millis = 0.0;
};

struct WorkerState {
    OccurrenceAggregator aggregator;
    std::vector<std::string> pieces_ok;
    std::vector<std::pair<std::string, std::string>> failures;  // piece, error
    ExtractStats stats;
};

class RunLog {
public:
    explicit RunLog(const fs::path& path) : out_(path, std::ios::binary) {
        if (!out_) throw std::runtime_error("cannot open run log: " + path.string());
    }

    void event(const json& e) {
        std::lock_guard<std::mutex> lock(mutex_);
        out_ << e.dump() << '\n';
        out_.flush();
    }

private:
    std::ofstream out_;
    std::mutex mutex_;
};

FileOutcome process_file(const fs::path& path, const std::string& piece_id,
                         const RunConfig& cfg, OccurrenceAggregator& sink) {
    using clock = std::chrono::steady_clock;
    const auto started = clock::now();
    const auto deadline =
        cfg.max_file_seconds > 0.0
            ? std::optional(started + std::chrono::duration_cast<clock::duration>(
                                          std::chrono::duration<double>(cfg.max_file_seconds)))
            : std::nullopt;

    FileOutcome outcome;
    outcome.piece = piece_id;

    std::error_code ec;
    const std::uintmax_t size = fs::file_size(path, ec);
    if (!ec && size > cfg.max_file_bytes) {
        outcome.status = "skipped";
        outcome.error = "file exceeds max_file_bytes";
        return outcome;
    }

    try {
        const std::vector<std::uint8_t> bytes = read_file_bytes(path);
        const MidiFile file = parse_midi(bytes, piece_id);
        OccurrenceAggregator local;
        for (const TrackPointSet& track : file.tracks) {
            if (deadline && clock::now() > *deadline)
                throw std::runtime_error("per-file deadline exceeded");
            if (track.points.size() > cfg.max_track_points) {
                ++outcome.tracks_skipped;
                continue;
            }
            std::vector<PatternInstance> instances =
                cfg.algorithm == Algorithm::sia ? sia_extract(track, cfg.sia)
                                                : p2_extract(track, cfg.p2);
            for (const PatternInstance& inst : instances)
                local.add(piece_id, serialize_key(canonical_key(inst, cfg.common_tpqn)));
            outcome.instances += std::ssize(instances);
            ++outcome.tracks;
        }
        sink.merge(std::move(local));
        outcome.status = "ok";
    } catch (const std::exception& e) {
        outcome.status = "failed";
        outcome.error = e.what();
        outcome.instances = 0;
    }
    outcome.millis = std::chrono::duration<double, std::milli>(clock::now() - started).count();
    return outcome;
}

void write_instance_store(const fs::path& out_dir, const OccurrenceAggregator& aggregator,
                          const std::vector<std::string>& pieces_ok, ExtractStats& stats) {
    const auto [matrix, vocab] = aggregator.build();
    stats.total_instances = matrix.total();
    stats.distinct_keys = vocab.size();

    {
        std::ofstream out(out_dir / "instances.tsv", std::ios::binary);
        if (!out) throw std::runtime_error("cannot write instances.tsv");
        for (std::size_t r = 0; r < matrix.rows(); ++r)
            for (std::size_t i = matrix.row_start[r]; i < matrix.row_start[r + 1]; ++i)
                out << matrix.piece_ids[r] << '\t' << vocab.keys[matrix.cols[i]] << '\t'
                    << matrix.counts[i] << '\n';
        if (!out) throw std::runtime_error("write failed: instances.tsv");
    }
    {
        std::ofstream out(out_dir / "pieces.txt", std::ios::binary);
        if (!out) throw std::runtime_error("cannot write pieces.txt");
        for (const std::string& piece : pieces_ok) out << piece << '\n';
        if (!out) throw std::runtime_error("write failed: pieces.txt");
    }
}

json stats_to_json(const ExtractStats& stats,
                   const std::vector<std::pair<std::string, std::string>>& failures) {
    json failed = json::object();
    for (const auto& [piece, error] : failures) failed[piece] = error;
    return json{{"files_processed", stats.files_processed},
                {"files_failed", stats.files_failed},
                {"files_skipped_size", stats.files_skipped_size},
                {"tracks_processed", stats.tracks_processed},
                {"tracks_skipped_size", stats.tracks_skipped_size},
                {"total_instances", stats.total_instances},
                {"distinct_keys", stats.distinct_keys},
                {"failed_files", failed}};
}

}  // namespace

ExtractStats run_extract(const RunConfig& raw_cfg) {
    RunConfig cfg = raw_cfg;
    cfg.resolve();
    fs::create_directories(cfg.out);

    const std::vector<fs::path> files = scan_corpus(cfg.corpus);
    std::vector<std::string> piece_ids;
    piece_ids.reserve(files.size());
    for (const fs::path& f : files)
        piece_ids.push_back(fs::relative(f, cfg.corpus).generic_string());

    RunLog log(cfg.out / "run.log");
    log.event({{"event", "start"},
               {"algorithm", cfg.algorithm == Algorithm::sia ? "SIA" : "P2"},
               {"config", cfg.config_name()},
               {"files", files.size()},
               {"workers", cfg.workers}});

    const int workers = std::min<int>(cfg.workers, static_cast<int>(files.size()));
    std::vector<WorkerState> states(workers);
    std::atomic<std::size_t> next{0};

    auto worker = [&](WorkerState& state) {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= files.size()) break;
            FileOutcome outcome =
                process_file(files[i], piece_ids[i], cfg, state.aggregator);

            json e{{"event", "file"}, {"piece", outcome.piece}, {"status", outcome.status}};
            if (outcome.status == "ok") {
                e["tracks"] = outcome.tracks;
                e["tracks_skipped"] = outcome.tracks_skipped;
                e["instances"] = outcome.instances;
                e["ms"] = outcome.millis;
                state.pieces_ok.push_back(outcome.piece);
                ++state.stats.files_processed;
                state.stats.tracks_processed += outcome.tracks;
                state.stats.tracks_skipped_size += outcome.tracks_skipped;
            } else if (outcome.status == "skipped") {
                e["reason"] = outcome.error;
                ++state.stats.files_skipped_size;
            } else {
                e["error"] = outcome.error;
                state.failures.emplace_back(outcome.piece, outcome.error);
                ++state.stats.files_failed;
            }
            log.event(e);
        }
    };

    if (workers == 1) {
        worker(states[0]);
    } else {
        std::vector<std::thread> threads;
        threads.reserve(workers);
        for (WorkerState& state : states)
            threads.emplace_back(worker, std::ref(state));
        for (std::thread& t : threads) t.join();
    }

    OccurrenceAggregator aggregator;
    std::vector<std::string> pieces_ok;
    std::vector<std::pair<std::string, std::string>> failures;
    ExtractStats stats;
    for (WorkerState& state : states) {
        aggregator.merge(std::move(state.aggregator));
        pieces_ok.insert(pieces_ok.end(), state.pieces_ok.begin(), state.pieces_ok.end());
        failures.insert(failures.end(), state.failures.begin(), state.failures.end());
        stats.files_processed += state.stats.files_processed;
        stats.files_failed += state.stats.files_failed;
        stats.files_skipped_size += state.stats.files_skipped_size;
        stats.tracks_processed += state.stats.tracks_processed;
        stats.tracks_skipped_size += state.stats.tracks_skipped_size;
    }
    std::sort(pieces_ok.begin(), pieces_ok.end());
    std::sort(failures.begin(), failures.end());

    write_instance_store(cfg.out, aggregator, pieces_ok, stats);

    const json stats_json = stats_to_json(stats, failures);
    {
        std::ofstream out(cfg.out / "stats.json", std::ios::binary);
        if (!out) throw std::runtime_error("cannot write stats.json");
        out << stats_json.dump(2) << '\n';
    }
    log.event({{"event", "summary"}, {"stats", stats_json}});
    return stats;
}

namespace {

std::string format_mean_std(const MetricSummary& m) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f (%.3f)", m.mean, m.stddev);
    return buf;
}

struct InstanceStore {
    std::vector<std::string> pieces;                                   // sorted
    std::map<std::string, std::vector<std::pair<std::string, std::int64_t>>> by_piece;
};

InstanceStore load_instance_store(const fs::path& dir) {
    InstanceStore store;
    {
        std::ifstream in(dir / "pieces.txt", std::ios::binary);
        if (!in)
            throw std::runtime_error("cannot open " + (dir / "pieces.txt").string() +
                                     " (run extract first)");
        std::string line;
        while (std::getline(in, line))
            if (!line.empty()) store.pieces.push_back(line);
    }
    {
        std::ifstream in(dir / "instances.tsv", std::ios::binary);
        if (!in)
            throw std::runtime_error("cannot open " + (dir / "instances.tsv").string());
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            const std::size_t t1 = line.find('\t');
            const std::size_t t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
            if (t2 == std::string::npos)
                throw std::runtime_error("instances.tsv:" + std::to_string(line_no) +
                                         ": malformed line");
            store.by_piece[line.substr(0, t1)].emplace_back(
                line.substr(t1 + 1, t2 - t1 - 1), std::stoll(line.substr(t2 + 1)));
        }
    }
    return store;
}

}  // namespace

std::string format_results_header() {
    return "name\tscheme\tauc_roc\tf1\taccuracy\tpatterns";
}

std::string format_results_row(const ResultsRow& row) {
    std::ostringstream out;
    out << row.name << '\t' << row.scheme << '\t' << format_mean_std(row.auc) << '\t'
        << format_mean_std(row.f1) << '\t' << format_mean_std(row.accuracy) << '\t'
        << row.pattern_count;
    return out.str();
}

ClassifyOutcome run_classify(const RunConfig& raw_cfg) {
    RunConfig cfg = raw_cfg;
    cfg.resolve();

    const InstanceStore store = load_instance_store(cfg.out);
    const AnnotationSet annotations =
        load_annotations(cfg.annotations, cfg.mapping, scheme_from_name(cfg.scheme));

    // Rows: corpus pieces carrying at least one label, in sorted order.
    std::vector<std::string> rows;
    for (const std::string& piece : store.pieces)
        if (annotations.labels_by_piece.count(piece)) rows.push_back(piece);
    if (rows.empty())
        throw std::runtime_error("no labeled pieces: the annotation join with the corpus "
                                 "is empty");

    // Vocabulary over the labeled pieces only; unlabeled pieces are outside
    // the experiment.
    std::set<std::string> key_set;
    for (const std::string& piece : rows) {
        auto it = store.by_piece.find(piece);
        if (it == store.by_piece.end()) continue;
        for (const auto& [key, count] : it->second) key_set.insert(key);
    }
    std::vector<std::string> vocab(key_set.begin(), key_set.end());
    std::unordered_map<std::string, int> column;
    for (std::size_t i = 0; i < vocab.size(); ++i) column[vocab[i]] = static_cast<int>(i);

    SparseRowMatrix X(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(vocab.size()));
    std::vector<Eigen::Triplet<double>> triplets;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        auto it = store.by_piece.find(rows[r]);
        if (it == store.by_piece.end()) continue;
        for (const auto& [key, count] : it->second)
            triplets.emplace_back(static_cast<Eigen::Index>(r), column.at(key),
                                  static_cast<double>(count));
    }
    X.setFromTriplets(triplets.begin(), triplets.end());

    std::set<std::string> label_set;
    for (const std::string& piece : rows)
        for (const std::string& label : annotations.labels_by_piece.at(piece))
            label_set.insert(label);
    LabelMatrix labels;
    labels.names.assign(label_set.begin(), label_set.end());
    labels.columns.assign(labels.names.size(), std::vector<std::uint8_t>(rows.size(), 0));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (const std::string& label : annotations.labels_by_piece.at(rows[r])) {
            const auto pos = std::lower_bound(labels.names.begin(), labels.names.end(), label);
            labels.columns[pos - labels.names.begin()][r] = 1;
        }

    CrossValConfig cv_cfg;
    cv_cfg.seed = cfg.seed;
    cv_cfg.workers = cfg.workers;
    cv_cfg.train.reg_strength = cfg.reg_strength;
    const CrossValResult cv = cross_validate(X, labels, cv_cfg);

    ClassifyOutcome outcome;
    outcome.cv = cv;
    outcome.labeled_pieces = rows.size();
    outcome.label_count = labels.names.size();
    outcome.row = {cfg.config_name(), cfg.scheme, cv.auc, cv.f1, cv.accuracy, vocab.size()};

    fs::create_directories(cfg.out);
    {
        std::ofstream out(cfg.out / "results.tsv", std::ios::binary);
        if (!out) throw std::runtime_error("cannot write results.tsv");
        out << format_results_header() << '\n' << format_results_row(outcome.row) << '\n';
    }
    {
        std::ofstream out(cfg.out / "folds.tsv", std::ios::binary);
        if (!out) throw std::runtime_error("cannot write folds.tsv");
        out << "fold\tauc_roc\tf1\taccuracy\tlabels\tskipped\n";
        char buf[128];
        for (std::size_t f = 0; f < cv.folds.size(); ++f) {
            const FoldMetrics& fm = cv.folds[f];
            std::snprintf(buf, sizeof buf, "%zu\t%.6f\t%.6f\t%.6f\t%zu\t%zu", f,
                          fm.auc_roc, fm.f1, fm.accuracy, fm.per_label.size(),
                          fm.skipped_labels.size());
            out << buf << '\n';
        }
    }
    {
        // Final model over all labeled rows, for reuse outside the CV loop.
        PatternVocabulary pv;
        pv.keys = vocab;
        TrainConfig tc;
        tc.reg_strength = cfg.reg_strength;
        const TrainedModel model = train(X, labels, tc, pv.hash());
        model.save(cfg.out / "model.txt");
    }
    return outcome;
}

void run_export(const RunConfig& raw_cfg) {
    RunConfig cfg = raw_cfg;
    cfg.resolve();
    const InstanceStore store = load_instance_store(cfg.out);
    OccurrenceAggregator aggregator;
    for (const auto& [piece, keys] : store.by_piece)
        for (const auto& [key, count] : keys) aggregator.add(piece, key, count);
    const auto [matrix, vocab] = aggregator.build();
    export_patterns(matrix, vocab, cfg.out / "vocabulary.txt",
                    cfg.out / "occurrences.tsv");
}

std::string build_report(const std::vector<fs::path>& results_files,
                         const std::optional<fs::path>& out_path) {
    std::vector<std::string> rows;
    for (const fs::path& file : results_files) {
        std::ifstream in(file, std::ios::binary);
        if (!in) throw std::runtime_error("cannot open results file: " + file.string());
        std::string line;
        if (!std::getline(in, line) || line != format_results_header())
            throw std::runtime_error(file.string() + ": not a results table");
        while (std::getline(in, line))
            if (!line.empty()) rows.push_back(line);
    }
    std::sort(rows.begin(), rows.end());
    std::string table = format_results_header() + "\n";
    for (const std::string& row : rows) table += row + "\n";
    if (out_path) {
        std::ofstream out(*out_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write report: " + out_path->string());
        out << table;
    }
    return table;
}

}  // namespace patterns
