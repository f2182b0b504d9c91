#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hanecg/model.hpp"
#include "hanecg/record.hpp"

namespace hanecg {

struct ExplainReport {
    std::string record_id;
    size_t window_index = 0;
    HanConfig config;            // the model config the map was extracted under
    std::vector<double> window;  // raw samples
    AttentionMap attention;
    size_t predicted_class = 0;
    std::vector<double> probs;
};

// Eval-mode forward pass capturing both attention levels. The model is not
// mutated; the window must match the model's expected length.
ExplainReport extract_attention(const HanModel& model, const BeatWindow& window,
                                size_t window_index);

// Per-sample projection of the attention weights, piecewise constant:
// the sequence weight of sample i is the weight of segment i / segment_len;
// the segment weight of sample i belongs to the conv step whose receptive
// field center lies nearest (ties toward the earlier step).
std::vector<double> sequence_weight_per_sample(const ExplainReport& report);
std::vector<double> segment_weight_per_sample(const ExplainReport& report);

struct ExportPaths {
    std::string csv_path;
    std::string svg_path;
};

// Writes {record_id}_{window_index}.csv and .svg into out_dir (created if
// missing). CSV columns: sample_index,amplitude,sequence_weight_at_sample,
// segment_weight_at_sample. The SVG overlays the trace with one step curve
// per attention level — exactly one path element per plotted series.
ExportPaths export_report(const ExplainReport& report, const std::string& out_dir);

}  // namespace hanecg
