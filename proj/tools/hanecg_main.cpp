#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hanecg/dataset.hpp"
#include "hanecg/errors.hpp"
#include "hanecg/explain.hpp"
#include "hanecg/model.hpp"
#include "hanecg/qrs.hpp"
#include "hanecg/rng.hpp"
#include "hanecg/synth.hpp"
#include "hanecg/train.hpp"
#include "hanecg/wavelet.hpp"

namespace fs = std::filesystem;
using namespace hanecg;

namespace {

constexpr uint64_t kSplitStream = 0x73706c74;  // keeps the split independent of training streams

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> class_names_for(const Dataset& d, size_t n) {
    if (d.class_names.size() == n) return d.class_names;
    std::vector<std::string> names;
    for (size_t i = 0; i < n; ++i) names.push_back("class" + std::to_string(i));
    return names;
}

size_t window_length(const Dataset& d, const char* verb) {
    if (d.windows.empty()) throw ConfigError(std::string(verb) + ": dataset holds no windows");
    return d.windows[0].samples.size();
}

// Aligns the configured geometry with the dataset's window length, deriving
// segment_len when the length divides evenly into the requested segments.
void fit_segments(HanConfig& config, size_t window_len, std::optional<size_t> segments) {
    if (segments) config.num_segments = *segments;
    if (config.window_len() == window_len) return;
    if (config.num_segments == 0 || window_len % config.num_segments != 0)
        throw ConfigError("config: " + std::to_string(window_len) +
                          "-sample windows cannot form " + std::to_string(config.num_segments) +
                          " equal segments");
    config.segment_len = window_len / config.num_segments;
    std::cerr << "note: segment_len = " << config.segment_len << " derived from " << window_len
              << "-sample windows\n";
}

void run_synth(const std::string& out_dir, uint64_t seed, size_t classes, size_t beats) {
    if (classes < 1 || classes > 5) throw ConfigError("synth: --classes must be in [1, 5]");
    if (beats < 1) throw ConfigError("synth: --beats-per-class must be at least 1");
    fs::create_directories(fs::path(out_dir) / "records");
    fs::create_directories(fs::path(out_dir) / "annotations");

    Dataset all;
    all.class_names = aami_class_names();
    for (size_t c = 0; c < classes; ++c) {
        SynthConfig sc;
        sc.seed = Rng::mix(seed, c);
        sc.beat_classes = {static_cast<int>(c)};
        sc.record_id = "class" + std::to_string(c);
        // size the record for exactly `beats` beats: R-peaks sit at
        // period/2 + k*period while r + tail < n, so n = beats*period + tail
        const double fs_hz = sc.sampling_rate;
        const auto period = static_cast<size_t>(std::lround(fs_hz * 60.0 / sc.bpm));
        const auto tail = static_cast<size_t>(std::lround(0.35 * fs_hz));
        sc.duration_s = (static_cast<double>(beats * period + tail) + 0.5) / fs_hz;

        SynthResult res = synth_ecg(sc);
        const fs::path rec_base = fs::path(out_dir) / "records" / sc.record_id;
        save_record(res.record, rec_base.string() + ".f32le", rec_base.string() + ".hdr",
                    "f32le");
        const fs::path ann_path = fs::path(out_dir) / "annotations" / (sc.record_id + ".csv");
        save_annotations(res.annotations, ann_path.string());

        std::vector<size_t> peaks;
        peaks.reserve(res.annotations.size());
        for (const Annotation& a : res.annotations) peaks.push_back(a.sample_index);
        LabeledWindows lw = build_beat_windows(res.record, res.annotations, peaks, 99, 201);
        std::cerr << sc.record_id << ": " << res.annotations.size() << " beats, "
                  << lw.dataset.windows.size() << " windows\n";
        for (BeatWindow& w : lw.dataset.windows) all.windows.push_back(std::move(w));
    }
    save_dataset(all, out_dir);
    std::cerr << "wrote " << all.windows.size() << " windows to " << out_dir << "\n";
}

struct RecordOutcome {
    std::string id;
    bool wrong_lead = false;
    LabeledWindows lw;
};

void run_preprocess(const std::string& data, const std::string& out, size_t before, size_t after,
                    const std::string& lead, bool use_annotations, int jobs) {
    const fs::path records_dir = fs::path(data) / "records";
    if (!fs::is_directory(records_dir))
        throw IoError("preprocess: no records/ directory under '" + data + "'");
    std::vector<fs::path> headers;
    for (const auto& entry : fs::directory_iterator(records_dir))
        if (entry.path().extension() == ".hdr") headers.push_back(entry.path());
    std::sort(headers.begin(), headers.end());
    if (headers.empty())
        throw IoError("preprocess: no .hdr records under '" + records_dir.string() + "'");

    std::vector<RecordOutcome> outcomes(headers.size());
    std::exception_ptr first_error = nullptr;
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, jobs))
    for (size_t i = 0; i < headers.size(); ++i) {
        try {
            fs::path signal = headers[i];
            signal.replace_extension(".f32le");
            if (!fs::exists(signal)) signal.replace_extension(".csv");
            if (!fs::exists(signal))
                throw IoError("preprocess: no signal file next to '" + headers[i].string() + "'");
            Record rec = load_record(signal.string(), headers[i].string());
            outcomes[i].id = rec.record_id;
            if (!lead.empty() && rec.lead_name != lead) {
                outcomes[i].wrong_lead = true;
                continue;
            }
            const fs::path ann_path =
                fs::path(data) / "annotations" / (headers[i].stem().string() + ".csv");
            if (!fs::exists(ann_path))
                throw IoError("preprocess: missing annotations '" + ann_path.string() + "'");
            std::vector<Annotation> anns = load_annotations(ann_path.string());

            Record clean = denoise(rec);
            std::vector<size_t> peaks;
            if (use_annotations) {
                peaks.reserve(anns.size());
                for (const Annotation& a : anns) peaks.push_back(a.sample_index);
            } else {
                peaks = detect_r_peaks(clean);
            }
            outcomes[i].lw = build_beat_windows(clean, anns, peaks, before, after);
        } catch (...) {
#pragma omp critical(hanecg_cli_preprocess)
            if (!first_error) first_error = std::current_exception();
        }
    }
    if (first_error) std::rethrow_exception(first_error);

    Dataset all;
    all.class_names = aami_class_names();
    for (RecordOutcome& o : outcomes) {
        if (o.wrong_lead) {
            std::cerr << o.id << ": skipped (lead filter)\n";
            continue;
        }
        std::cerr << o.id << ": " << o.lw.dataset.windows.size() << " windows ("
                  << o.lw.skipped_boundary << " at boundary, " << o.lw.skipped_unlabeled
                  << " unlabeled)\n";
        for (BeatWindow& w : o.lw.dataset.windows) all.windows.push_back(std::move(w));
    }
    if (all.windows.empty()) throw ConfigError("preprocess: no labeled windows produced");
    save_dataset(all, out);
    std::cerr << "wrote " << all.windows.size() << " windows to " << out << "\n";
}

void run_train(const std::string& config_path, const std::string& data, const std::string& out,
               const std::string& history_path, std::optional<uint64_t> seed,
               std::optional<size_t> segments, int jobs) {
    TrainFile tf = parse_train_file(config_path);
    if (seed) tf.hp.seed = *seed;
    Dataset ds = load_dataset(data);
    fit_segments(tf.config, window_length(ds, "train"), segments);

    SplitResult parts = split(ds, {0.6, 0.2, 0.2}, Rng::mix(tf.hp.seed, kSplitStream));
    std::cerr << "split: " << parts.train.windows.size() << " train / "
              << parts.validation.windows.size() << " val / " << parts.test.windows.size()
              << " test\n";
    Dataset train_set = apply_balance(parts.train, tf.balance, tf.hp.seed, jobs);
    if (tf.balance.enabled)
        std::cerr << "balance: " << parts.train.windows.size() << " -> "
                  << train_set.windows.size() << " training windows\n";

    HanModel model = build(tf.config, tf.hp.seed);
    std::cerr << "model: " << param_count(tf.config) << " parameters\n";
    TrainResult result = train(model, train_set, parts.validation, tf.hp, jobs);
    for (size_t e = 0; e < result.history.size(); ++e)
        std::cerr << "epoch " << e + 1 << ": train_loss=" << result.history[e].train_loss
                  << " train_acc=" << result.history[e].train_acc
                  << " val_acc=" << result.history[e].val_acc << "\n";

    save_weights(result.model, out);
    std::cerr << "saved model to " << out << "\n";
    if (!history_path.empty()) save_history(result.history, history_path);
    if (parts.test.windows.empty()) {
        std::cerr << "test split is empty; skipping the final evaluation\n";
        return;
    }
    Metrics test = evaluate(result.model, parts.test, jobs);
    std::cout << "test_accuracy," << fmt17(test.accuracy) << "\n";
}

void run_evaluate(const std::string& model_path, const std::string& data, int jobs) {
    HanModel model = load_weights(model_path);
    Dataset ds = load_dataset(data);
    Metrics met = evaluate(model, ds, jobs);

    std::cout << "accuracy," << fmt17(met.accuracy) << "\n";
    const std::vector<std::string> names = class_names_for(ds, model.config.num_classes);
    std::cout << "class";
    for (const std::string& n : names) std::cout << "," << n;
    std::cout << "\n";
    for (size_t i = 0; i < met.confusion.size(); ++i) {
        std::cout << names[i];
        for (size_t j = 0; j < met.confusion[i].size(); ++j) std::cout << "," << met.confusion[i][j];
        std::cout << "\n";
    }
}

void run_gridsearch(const std::string& config_path, const std::string& data,
                    const std::string& out, std::optional<uint64_t> seed,
                    std::optional<size_t> segments, int jobs) {
    TrainFile tf = parse_train_file(config_path);
    if (seed) {
        tf.hp.seed = *seed;
        tf.grid.base_hp.seed = *seed;
    }
    Dataset ds = load_dataset(data);
    fit_segments(tf.grid.base, window_length(ds, "gridsearch"), segments);

    SplitResult parts = split(ds, {0.6, 0.2, 0.2}, Rng::mix(tf.hp.seed, kSplitStream));
    Dataset train_set = apply_balance(parts.train, tf.balance, tf.hp.seed, jobs);
    std::cerr << "grid: " << tf.grid.combinations() << " configurations on "
              << train_set.windows.size() << " training windows\n";

    GridResult gr = grid_search(tf.grid, train_set, parts.validation, jobs);
    save_leaderboard(gr.leaderboard, out);
    std::cerr << "wrote " << gr.leaderboard.size() << " leaderboard rows to " << out << "\n";
    std::cout << "best_config_id," << gr.leaderboard.front().config_id << "\n";
    std::cout << "best_val_acc," << fmt17(gr.leaderboard.front().val_acc) << "\n";
}

void run_explain(const std::string& model_path, const std::string& data, const std::string& out,
                 size_t count) {
    HanModel model = load_weights(model_path);
    Dataset ds = load_dataset(data);
    if (ds.windows.empty()) throw ConfigError("explain: dataset holds no windows");
    const size_t n = std::min(count, ds.windows.size());
    for (size_t i = 0; i < n; ++i) {
        ExplainReport report = extract_attention(model, ds.windows[i], i);
        ExportPaths paths = export_report(report, out);
        std::cerr << "window " << i << ": predicted class " << report.predicted_class << "\n";
        std::cout << paths.csv_path << "\n" << paths.svg_path << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hierarchical-attention ECG beat classification toolkit"};
    app.require_subcommand(1);

    std::string synth_out;
    uint64_t synth_seed = 1;
    size_t classes = 5, beats = 200;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a labeled synthetic dataset");
    synth_cmd->add_option("--out", synth_out, "Output dataset directory")->required();
    synth_cmd->add_option("--seed", synth_seed, "Random seed");
    synth_cmd->add_option("--classes", classes, "Number of beat classes (1-5)");
    synth_cmd->add_option("--beats-per-class", beats, "Beats per class");

    std::string pre_data, pre_out, pre_lead;
    size_t before = 99, after = 201;
    bool use_annotations = false;
    int pre_jobs = 1;
    auto* pre_cmd = app.add_subcommand("preprocess", "Denoise, detect beats, cut windows");
    pre_cmd->add_option("--data", pre_data, "Directory with records/ and annotations/")
        ->required();
    pre_cmd->add_option("--out", pre_out, "Output dataset directory")->required();
    pre_cmd->add_option("--before", before, "Samples kept before each R-peak");
    pre_cmd->add_option("--after", after, "Samples kept after each R-peak");
    pre_cmd->add_option("--lead", pre_lead, "Keep only records of this lead");
    pre_cmd->add_flag("--use-annotations", use_annotations,
                      "Take R-peak positions from the annotation files");
    pre_cmd->add_option("--jobs", pre_jobs, "Records processed in parallel");

    std::string train_cfg, train_data, train_out, train_history;
    std::optional<uint64_t> train_seed;
    std::optional<size_t> train_segments;
    int train_jobs = 1;
    auto* train_cmd = app.add_subcommand("train", "Train a model on a dataset directory");
    train_cmd->add_option("--config", train_cfg, "key=value training configuration")->required();
    train_cmd->add_option("--data", train_data, "Dataset directory")->required();
    train_cmd->add_option("--out", train_out, "Model weights file to write")->required();
    train_cmd->add_option("--history", train_history, "Write per-epoch metrics CSV here");
    train_cmd->add_option("--seed", train_seed, "Override the config file seed");
    train_cmd->add_option("--segments", train_segments, "Override the segment count");
    train_cmd->add_option("--jobs", train_jobs, "Worker threads");

    std::string eval_model, eval_data;
    int eval_jobs = 1;
    auto* eval_cmd = app.add_subcommand("evaluate", "Print accuracy and the confusion matrix");
    eval_cmd->add_option("--model", eval_model, "Model weights file")->required();
    eval_cmd->add_option("--data", eval_data, "Dataset directory")->required();
    eval_cmd->add_option("--jobs", eval_jobs, "Worker threads");

    std::string grid_cfg, grid_data, grid_out;
    std::optional<uint64_t> grid_seed;
    std::optional<size_t> grid_segments;
    int grid_jobs = 1;
    auto* grid_cmd = app.add_subcommand("gridsearch", "Train every grid configuration");
    grid_cmd->add_option("--config", grid_cfg, "key=value configuration with grid.* axes")
        ->required();
    grid_cmd->add_option("--data", grid_data, "Dataset directory")->required();
    grid_cmd->add_option("--out", grid_out, "Leaderboard CSV to write")->required();
    grid_cmd->add_option("--seed", grid_seed, "Override the config file seed");
    grid_cmd->add_option("--segments", grid_segments, "Override the segment count");
    grid_cmd->add_option("--jobs", grid_jobs, "Configurations trained in parallel");

    std::string exp_model, exp_data, exp_out;
    size_t exp_count = 5;
    auto* exp_cmd = app.add_subcommand("explain", "Export attention-weight reports");
    exp_cmd->add_option("--model", exp_model, "Model weights file")->required();
    exp_cmd->add_option("--data", exp_data, "Dataset directory")->required();
    exp_cmd->add_option("--out", exp_out, "Directory for CSV/SVG reports")->required();
    exp_cmd->add_option("--count", exp_count, "Number of windows to explain");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n(run with --help for usage)\n";
        return 2;
    }

    try {
        if (*synth_cmd) run_synth(synth_out, synth_seed, classes, beats);
        if (*pre_cmd)
            run_preprocess(pre_data, pre_out, before, after, pre_lead, use_annotations, pre_jobs);
        if (*train_cmd)
            run_train(train_cfg, train_data, train_out, train_history, train_seed, train_segments,
                      train_jobs);
        if (*eval_cmd) run_evaluate(eval_model, eval_data, eval_jobs);
        if (*grid_cmd)
            run_gridsearch(grid_cfg, grid_data, grid_out, grid_seed, grid_segments, grid_jobs);
        if (*exp_cmd) run_explain(exp_model, exp_data, exp_out, exp_count);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
