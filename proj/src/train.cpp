#include "hanecg/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hanecg/errors.hpp"

namespace hanecg {

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

size_t argmax_low(const std::vector<double>& v) {
    size_t best = 0;
    for (size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;  // strict: ties keep the lower index
    return best;
}

// every window must fit the model before any parallel region runs, so the
// worker loops below stay exception-free
void validate_for_model(const HanModel& m, const Dataset& d, const std::string& what) {
    const size_t want = m.config.window_len();
    const size_t classes = m.config.num_classes;
    for (size_t i = 0; i < d.windows.size(); ++i) {
        const BeatWindow& w = d.windows[i];
        if (w.samples.size() != want)
            throw ShapeError(what + ": window " + std::to_string(i) + " has " +
                             std::to_string(w.samples.size()) + " samples, model expects " +
                             std::to_string(want));
        if (w.label < 0 || static_cast<size_t>(w.label) >= classes)
            throw ShapeError(what + ": window " + std::to_string(i) + " label " +
                             std::to_string(w.label) + " out of range");
        for (double v : w.samples)
            if (!std::isfinite(v))
                throw NumericError(what + ": window " + std::to_string(i) +
                                   " holds a non-finite sample");
    }
}

// independent seed streams derived from the run seed
constexpr uint64_t kShuffleStream = 0x73687566;
constexpr uint64_t kDropoutStream = 0x64726f70;
constexpr uint64_t kUndersampleStream = 0x756e6472;
constexpr uint64_t kSmoteStream = 0x736d6f74;

}  // namespace

BatchStats accumulate_batch(const HanModel& model, const std::vector<BeatWindow>& windows,
                            std::span<const size_t> indices, uint64_t dropout_seed,
                            size_t batch_start, int jobs) {
    const size_t nb = indices.size();
    if (nb == 0) throw ConfigError("accumulate_batch: empty batch");
    for (size_t idx : indices)
        if (idx >= windows.size())
            throw ShapeError("accumulate_batch: index " + std::to_string(idx) + " out of range");

    // one gradient slot per example; the reduction below walks them in
    // example order, which makes the sum independent of the thread count
    std::vector<HanModel> slots(nb);
    std::vector<double> losses(nb, 0.0);
    std::vector<char> hits(nb, 0);
    std::string error;

#pragma omp parallel for schedule(static) num_threads(jobs > 0 ? jobs : 1) if (jobs > 1)
    for (size_t i = 0; i < nb; ++i) {
        try {
            const BeatWindow& w = windows[indices[i]];
            Rng rng(Rng::mix(dropout_seed, batch_start + i));
            BackwardResult r =
                backward(model, w.samples, static_cast<size_t>(w.label), true, rng);
            losses[i] = r.loss;
            hits[i] = argmax_low(r.probs) == static_cast<size_t>(w.label) ? 1 : 0;
            slots[i] = std::move(r.grads);
        } catch (const std::exception& e) {
#pragma omp critical
            if (error.empty()) error = e.what();
        }
    }
    if (!error.empty()) throw NumericError("accumulate_batch: " + error);

    BatchStats out;
    out.grads = slots[0];
    for (size_t i = 1; i < nb; ++i) add_scaled(out.grads, slots[i], 1.0);
    for (size_t i = 0; i < nb; ++i) {
        out.loss_sum += losses[i];
        out.correct += hits[i];
    }
    return out;
}

Metrics evaluate(const HanModel& model, const Dataset& dataset, int jobs) {
    const size_t n = dataset.windows.size();
    if (n == 0) throw ConfigError("evaluate: empty dataset");
    validate_for_model(model, dataset, "evaluate");

    std::vector<size_t> preds(n, 0);
    std::string error;
#pragma omp parallel for schedule(static) num_threads(jobs > 0 ? jobs : 1) if (jobs > 1)
    for (size_t i = 0; i < n; ++i) {
        try {
            ForwardResult f = forward(model, dataset.windows[i].samples);
            preds[i] = argmax_low(f.probs);
        } catch (const std::exception& e) {
#pragma omp critical
            if (error.empty()) error = e.what();
        }
    }
    if (!error.empty()) throw NumericError("evaluate: " + error);

    const size_t classes = model.config.num_classes;
    Metrics m;
    m.confusion.assign(classes, std::vector<size_t>(classes, 0));
    for (size_t i = 0; i < n; ++i)
        ++m.confusion[static_cast<size_t>(dataset.windows[i].label)][preds[i]];

    size_t trace = 0;
    m.precision.assign(classes, 0.0);
    m.recall.assign(classes, 0.0);
    for (size_t k = 0; k < classes; ++k) {
        trace += m.confusion[k][k];
        size_t row = 0, col = 0;
        for (size_t j = 0; j < classes; ++j) {
            row += m.confusion[k][j];
            col += m.confusion[j][k];
        }
        if (col > 0) m.precision[k] = static_cast<double>(m.confusion[k][k]) / static_cast<double>(col);
        if (row > 0) m.recall[k] = static_cast<double>(m.confusion[k][k]) / static_cast<double>(row);
    }
    m.accuracy = static_cast<double>(trace) / static_cast<double>(n);
    return m;
}

TrainResult train(const HanModel& model, const Dataset& train_set, const Dataset& val_set,
                  const Hyperparams& hp, int jobs) {
    if (hp.learning_rate < 0.0) throw ConfigError("train: negative learning rate");
    if (hp.epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (hp.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (train_set.windows.empty()) throw ConfigError("train: empty training set");
    if (val_set.windows.empty()) throw ConfigError("train: empty validation set");
    if (hp.dropout_rate < 0.0 || hp.dropout_rate >= 1.0)
        throw ConfigError("train: dropout_rate must be in [0, 1)");

    TrainResult out;
    out.model = model;
    out.model.config.dropout_rate = hp.dropout_rate;
    validate_for_model(out.model, train_set, "train");
    validate_for_model(out.model, val_set, "train (validation)");

    AdamState adam = AdamState::make(const_param_blocks(out.model), hp.learning_rate);
    Rng shuffle_rng(Rng::mix(hp.seed, kShuffleStream));

    const size_t n = train_set.windows.size();
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;

    for (size_t epoch = 0; epoch < hp.epochs; ++epoch) {
        shuffle(order, shuffle_rng);
        const uint64_t dropout_seed = Rng::mix(Rng::mix(hp.seed, kDropoutStream), epoch);

        double loss_total = 0.0;
        size_t correct_total = 0;
        size_t batch_index = 0;
        for (size_t start = 0; start < n; start += hp.batch_size, ++batch_index) {
            const size_t nb = std::min(hp.batch_size, n - start);
            std::span<const size_t> slice(order.data() + start, nb);
            BatchStats stats =
                accumulate_batch(out.model, train_set.windows, slice, dropout_seed, start, jobs);

            const double mean_loss = stats.loss_sum / static_cast<double>(nb);
            if (!std::isfinite(mean_loss))
                throw NumericError("train: non-finite loss at epoch " +
                                   std::to_string(epoch + 1) + ", batch " +
                                   std::to_string(batch_index + 1));

            // average the summed gradients over the batch
            HanModel avg = zeros_like(out.model);
            add_scaled(avg, stats.grads, 1.0 / static_cast<double>(nb));
            auto params = param_blocks(out.model);
            auto grads = const_param_blocks(avg);
            adam_step(params, grads, adam);

            loss_total += stats.loss_sum;
            correct_total += stats.correct;
        }

        EpochStats es;
        es.train_loss = loss_total / static_cast<double>(n);
        es.train_acc = static_cast<double>(correct_total) / static_cast<double>(n);
        es.val_acc = evaluate(out.model, val_set, jobs).accuracy;
        out.history.push_back(es);
    }
    return out;
}

void save_history(const std::vector<EpochStats>& history, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("save_history: cannot write '" + path + "'");
    out << "epoch,train_loss,train_acc,val_acc\n";
    for (size_t i = 0; i < history.size(); ++i)
        out << (i + 1) << ',' << format_double(history[i].train_loss) << ','
            << format_double(history[i].train_acc) << ',' << format_double(history[i].val_acc)
            << '\n';
    if (!out) throw IoError("save_history: write failed for '" + path + "'");
}

void GridSpace::fill_defaults() {
    if (learning_rates.empty()) learning_rates = {base_hp.learning_rate};
    if (conv_strides.empty()) conv_strides = {base.conv_stride};
    if (conv_filters.empty()) conv_filters = {base.conv_filters};
    if (conv_kernels.empty()) conv_kernels = {base.conv_kernel};
    if (lstm_units.empty()) lstm_units = {base.lstm_units};
    if (fc_units.empty()) fc_units = {base.fc_units};
    if (dropout_rates.empty()) dropout_rates = {base_hp.dropout_rate};
}

size_t GridSpace::combinations() const {
    return learning_rates.size() * conv_strides.size() * conv_filters.size() *
           conv_kernels.size() * lstm_units.size() * fc_units.size() * dropout_rates.size();
}

GridResult grid_search(const GridSpace& space, const Dataset& train_set, const Dataset& val_set,
                       int jobs) {
    if (space.combinations() == 0) throw ConfigError("grid_search: empty grid");

    std::vector<GridEntry> entries;
    entries.reserve(space.combinations());
    for (double lr : space.learning_rates)
        for (size_t stride : space.conv_strides)
            for (size_t filters : space.conv_filters)
                for (size_t kernel : space.conv_kernels)
                    for (size_t lstm : space.lstm_units)
                        for (size_t fc : space.fc_units)
                            for (double drop : space.dropout_rates) {
                                GridEntry e;
                                e.config_id = entries.size();
                                e.config = space.base;
                                e.config.conv_stride = stride;
                                e.config.conv_filters = filters;
                                e.config.conv_kernel = kernel;
                                e.config.lstm_units = lstm;
                                e.config.fc_units = fc;
                                e.config.dropout_rate = drop;
                                e.hp = space.base_hp;
                                e.hp.learning_rate = lr;
                                e.hp.dropout_rate = drop;
                                entries.push_back(std::move(e));
                            }

    // fail on bad combinations before any training starts
    for (const GridEntry& e : entries) e.config.validate();

    std::string error;
#pragma omp parallel for schedule(dynamic) num_threads(jobs > 0 ? jobs : 1) if (jobs > 1)
    for (size_t i = 0; i < entries.size(); ++i) {
        try {
            HanModel m = build(entries[i].config, entries[i].hp.seed);
            TrainResult r = train(m, train_set, val_set, entries[i].hp, 1);
            entries[i].val_acc = r.history.back().val_acc;
        } catch (const std::exception& e) {
#pragma omp critical
            if (error.empty())
                error = "config " + std::to_string(entries[i].config_id) + ": " + e.what();
        }
    }
    if (!error.empty()) throw NumericError("grid_search: " + error);

    std::stable_sort(entries.begin(), entries.end(), [](const GridEntry& a, const GridEntry& b) {
        return a.val_acc > b.val_acc;  // stable: equal scores keep declaration order
    });

    GridResult out;
    out.best_config = entries.front().config;
    out.best_hp = entries.front().hp;
    out.leaderboard = std::move(entries);
    return out;
}

void save_leaderboard(const std::vector<GridEntry>& leaderboard, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("save_leaderboard: cannot write '" + path + "'");
    out << "config_id,val_acc,learning_rate,conv_stride,conv_filters,conv_kernel,"
           "lstm_units,fc_units,dropout_rate\n";
    for (const GridEntry& e : leaderboard)
        out << e.config_id << ',' << format_double(e.val_acc) << ','
            << format_double(e.hp.learning_rate) << ',' << e.config.conv_stride << ','
            << e.config.conv_filters << ',' << e.config.conv_kernel << ',' << e.config.lstm_units
            << ',' << e.config.fc_units << ',' << format_double(e.config.dropout_rate) << '\n';
    if (!out) throw IoError("save_leaderboard: write failed for '" + path + "'");
}

namespace {

double parse_real(const std::string& text, const std::string& key) {
    size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &pos);
    } catch (const std::exception&) {
        throw ParseError("train file: cannot parse '" + text + "' for key '" + key + "'");
    }
    if (pos != text.size())
        throw ParseError("train file: trailing characters in '" + text + "' for key '" + key + "'");
    if (!std::isfinite(v)) throw ParseError("train file: non-finite value for key '" + key + "'");
    return v;
}

size_t parse_count(const std::string& text, const std::string& key) {
    size_t pos = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(text, &pos);
    } catch (const std::exception&) {
        throw ParseError("train file: cannot parse count '" + text + "' for key '" + key + "'");
    }
    if (pos != text.size())
        throw ParseError("train file: trailing characters in '" + text + "' for key '" + key + "'");
    return static_cast<size_t>(v);
}

bool parse_flag(const std::string& text, const std::string& key) {
    if (text == "1" || text == "true") return true;
    if (text == "0" || text == "false") return false;
    throw ParseError("train file: expected 0/1/true/false for key '" + key + "', got '" + text +
                     "'");
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) out.push_back(item);
    return out;
}

}  // namespace

Dataset apply_balance(const Dataset& dataset, const BalanceSpec& spec, uint64_t seed, int jobs) {
    if (!spec.enabled) return dataset;
    Dataset out = dataset;
    if (spec.majority_target > 0)
        out = undersample(out, spec.majority_class, spec.majority_target,
                          Rng::mix(seed, kUndersampleStream));
    if (spec.minority_target > 0) {
        const auto factors = minority_smote_factors(out, spec.majority_class,
                                                    spec.minority_target);
        out = smote(out, spec.smote_k, factors, Rng::mix(seed, kSmoteStream), nullptr, jobs);
    }
    return out;
}

TrainFile parse_train_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("parse_train_file: cannot open '" + path + "'");

    TrainFile f;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        // trim
        const size_t first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        const size_t last = line.find_last_not_of(" \t");
        line = line.substr(first, last - first + 1);

        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("train file: line " + std::to_string(line_no) + " has no '='");
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);

        if (key == "num_segments") f.config.num_segments = parse_count(value, key);
        else if (key == "segment_len") f.config.segment_len = parse_count(value, key);
        else if (key == "conv_filters") f.config.conv_filters = parse_count(value, key);
        else if (key == "conv_kernel") f.config.conv_kernel = parse_count(value, key);
        else if (key == "conv_stride") f.config.conv_stride = parse_count(value, key);
        else if (key == "lstm_units") f.config.lstm_units = parse_count(value, key);
        else if (key == "fc_units") f.config.fc_units = parse_count(value, key);
        else if (key == "num_classes") f.config.num_classes = parse_count(value, key);
        else if (key == "hierarchy_levels") f.config.hierarchy_levels = parse_count(value, key);
        else if (key == "level3_groups") f.config.level3_groups = parse_count(value, key);
        else if (key == "bidirectional") f.config.bidirectional = parse_flag(value, key);
        else if (key == "dropout_rate") {
            f.config.dropout_rate = parse_real(value, key);
            f.hp.dropout_rate = f.config.dropout_rate;
        } else if (key == "learning_rate") f.hp.learning_rate = parse_real(value, key);
        else if (key == "epochs") f.hp.epochs = parse_count(value, key);
        else if (key == "batch_size") f.hp.batch_size = parse_count(value, key);
        else if (key == "seed") f.hp.seed = parse_count(value, key);
        else if (key == "balance.majority_class") {
            f.balance.majority_class = static_cast<int>(parse_count(value, key));
            f.balance.enabled = true;
        } else if (key == "balance.majority_target") {
            f.balance.majority_target = parse_count(value, key);
            f.balance.enabled = true;
        } else if (key == "balance.minority_target") {
            f.balance.minority_target = parse_count(value, key);
            f.balance.enabled = true;
        } else if (key == "balance.smote_k") {
            f.balance.smote_k = parse_count(value, key);
            f.balance.enabled = true;
        } else if (key == "grid.learning_rate" || key == "grid.dropout_rate") {
            std::vector<double>& dst = key == "grid.learning_rate" ? f.grid.learning_rates
                                                                   : f.grid.dropout_rates;
            dst.clear();
            for (const std::string& item : split_list(value)) dst.push_back(parse_real(item, key));
        } else if (key == "grid.conv_stride" || key == "grid.conv_filters" ||
                   key == "grid.conv_kernel" || key == "grid.lstm_units" ||
                   key == "grid.fc_units") {
            std::vector<size_t>& dst = key == "grid.conv_stride"    ? f.grid.conv_strides
                                       : key == "grid.conv_filters" ? f.grid.conv_filters
                                       : key == "grid.conv_kernel"  ? f.grid.conv_kernels
                                       : key == "grid.lstm_units"   ? f.grid.lstm_units
                                                                    : f.grid.fc_units;
            dst.clear();
            for (const std::string& item : split_list(value)) dst.push_back(parse_count(item, key));
        } else {
            throw ParseError("train file: unknown key '" + key + "' on line " +
                             std::to_string(line_no));
        }
    }

    f.grid.base = f.config;
    f.grid.base_hp = f.hp;
    f.grid.fill_defaults();
    return f;
}

}  // namespace hanecg
