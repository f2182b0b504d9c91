#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hanecg/dataset.hpp"
#include "hanecg/model.hpp"

namespace hanecg {

struct Hyperparams {
    double learning_rate = 0.001;
    size_t epochs = 30;
    size_t batch_size = 64;
    double dropout_rate = 0.2;  // copied into the model config when training starts
    uint64_t seed = 1;
};

struct EpochStats {
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_acc = 0.0;
};

struct TrainResult {
    HanModel model;
    std::vector<EpochStats> history;  // one entry per epoch
};

struct Metrics {
    double accuracy = 0.0;
    std::vector<double> precision;               // per class; 0 when the class was never predicted
    std::vector<double> recall;                  // per class; 0 when the class never occurs
    std::vector<std::vector<size_t>> confusion;  // [true class][predicted class]
};

struct BatchStats {
    HanModel grads;  // gradient sum over the batch (not averaged)
    double loss_sum = 0.0;
    size_t correct = 0;
};

// Sums per-example gradients over windows[indices]. The dropout stream of
// the example at position i is seeded with mix(dropout_seed, batch_start + i),
// so results are bit-identical for every job count, including jobs == 1.
BatchStats accumulate_batch(const HanModel& model, const std::vector<BeatWindow>& windows,
                            std::span<const size_t> indices, uint64_t dropout_seed,
                            size_t batch_start, int jobs = 1);

// Eval-mode argmax predictions; ties break toward the lower class index.
Metrics evaluate(const HanModel& model, const Dataset& dataset, int jobs = 1);

// Adam over seeded, reshuffled mini-batches; gradients averaged per batch;
// fixed epoch count, no early stopping. hp.dropout_rate replaces the value
// carried by the model config. A non-finite batch loss aborts with the
// epoch/batch location in the message.
TrainResult train(const HanModel& model, const Dataset& train_set, const Dataset& val_set,
                  const Hyperparams& hp, int jobs = 1);

// CSV: epoch,train_loss,train_acc,val_acc (epoch is 1-based).
void save_history(const std::vector<EpochStats>& history, const std::string& path);

// Cartesian hyperparameter grid. Axes left empty by hand must be filled
// (fill_defaults copies the base value in); combinations are enumerated with
// learning rate outermost and dropout innermost, and that enumeration index
// is the config_id used for tie-breaking.
struct GridSpace {
    HanConfig base;
    Hyperparams base_hp;
    std::vector<double> learning_rates;
    std::vector<size_t> conv_strides;
    std::vector<size_t> conv_filters;
    std::vector<size_t> conv_kernels;
    std::vector<size_t> lstm_units;
    std::vector<size_t> fc_units;
    std::vector<double> dropout_rates;

    void fill_defaults();  // empty axis -> the base value
    size_t combinations() const;
};

struct GridEntry {
    size_t config_id = 0;
    HanConfig config;
    Hyperparams hp;
    double val_acc = 0.0;
};

struct GridResult {
    HanConfig best_config;
    Hyperparams best_hp;
    std::vector<GridEntry> leaderboard;  // val_acc descending, ties by config_id
};

// Trains every combination (each run isolated and internally sequential;
// jobs > 1 spreads whole runs across threads) and picks the best validation
// accuracy; ties go to the earliest declared combination.
GridResult grid_search(const GridSpace& space, const Dataset& train_set, const Dataset& val_set,
                       int jobs = 1);

// CSV: config_id,val_acc,learning_rate,conv_stride,conv_filters,conv_kernel,
// lstm_units,fc_units,dropout_rate.
void save_leaderboard(const std::vector<GridEntry>& leaderboard, const std::string& path);

// Optional class-rebalancing recipe, meant for the training split only.
struct BalanceSpec {
    bool enabled = false;     // set when any balance.* key appears
    int majority_class = 0;   // balance.majority_class
    size_t majority_target = 0;  // undersample the majority to this count (0 = skip)
    size_t minority_target = 0;  // SMOTE minorities to this combined total (0 = skip)
    size_t smote_k = 5;          // balance.smote_k
};

// Majority undersample followed by ratio-preserving SMOTE of the minority
// classes. A no-op unless spec.enabled.
Dataset apply_balance(const Dataset& dataset, const BalanceSpec& spec, uint64_t seed,
                      int jobs = 1);

struct TrainFile {
    HanConfig config;
    Hyperparams hp;
    GridSpace grid;  // axes already filled with defaults
    BalanceSpec balance;
};

// key=value text; '#' comments and blank lines allowed; unknown keys are
// errors. Model keys (num_segments, conv_filters, ...), training keys
// (learning_rate, epochs, batch_size, seed), the shared dropout_rate,
// balancing keys (balance.majority_class, balance.majority_target,
// balance.minority_target, balance.smote_k), and comma-separated grid axes
// (grid.learning_rate, grid.conv_stride, grid.conv_filters,
// grid.conv_kernel, grid.lstm_units, grid.fc_units, grid.dropout_rate).
TrainFile parse_train_file(const std::string& path);

}  // namespace hanecg
