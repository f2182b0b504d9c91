#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hanecg/record.hpp"

namespace hanecg {

struct Annotation {
    size_t sample_index = 0;
    char symbol = 'N';
};

struct Dataset {
    std::vector<BeatWindow> windows;
    std::vector<std::string> class_names;
};

// The five AAMI beat classes, in label-index order.
std::vector<std::string> aami_class_names();

// Header file: key=value lines with record_id, lead_name, sampling_rate,
// sample_format (csv | f32le), num_samples. Signal file: one decimal per
// line (csv) or raw little-endian 32-bit floats (f32le).
Record load_record(const std::string& signal_path, const std::string& header_path);
void save_record(const Record& record, const std::string& signal_path,
                 const std::string& header_path, const std::string& sample_format);

// Lines "sample_index,symbol", strictly ascending by sample index.
std::vector<Annotation> load_annotations(const std::string& path);
void save_annotations(const std::vector<Annotation>& annotations, const std::string& path);

// AAMI grouping: N<-{N,L,R,e,j}, S<-{A,a,J,S}, V<-{V,E}, F<-{F},
// Q<-{/,f,Q} and any unrecognized symbol. Total and deterministic.
int map_beat_label(char symbol);

struct SplitResult {
    Dataset train, validation, test;
};

// Seeded shuffle, then largest-remainder rounding of the ratio targets.
// Ratios must be nonnegative and sum to 1 within 1e-9.
SplitResult split(const Dataset& dataset, const std::array<double, 3>& ratios, uint64_t seed);

// Provenance of one synthetic window: indices into the input dataset's
// window list plus the interpolation coefficient.
struct SmoteDraw {
    int class_index = 0;
    size_t parent = 0;
    size_t neighbor = 0;
    double lambda = 0.0;
};

// Per class c with factor f: emits round(count_c * f) - count_c synthetic
// windows, each x_p + lambda * (x_nn - x_p) for a parent drawn uniformly
// from the class and one of its k nearest same-class neighbors (Euclidean
// distance on raw samples). Draw order per synthetic window: parent index,
// neighbor choice, lambda — all from one RNG derived per class. Factors
// must be >= 1; a class needs at least 2 members to be oversampled.
Dataset smote(const Dataset& dataset, size_t k, const std::map<int, double>& per_class_factor,
              uint64_t seed, std::vector<SmoteDraw>* provenance = nullptr, int jobs = 1);

// k nearest same-class neighbors of every window, brute force. jobs > 1
// parallelizes over windows; the result is independent of jobs.
std::vector<std::vector<size_t>> knn_same_class(const Dataset& dataset, size_t k, int jobs = 1);

// Uniform subset (without replacement) of one class; other classes and all
// retained windows are untouched, original order preserved.
Dataset undersample(const Dataset& dataset, int class_index, size_t target_count, uint64_t seed);

// One common factor target_total / (current minority total) for every class
// except the majority one — a common multiplier preserves the minority
// ratios exactly.
std::map<int, double> minority_smote_factors(const Dataset& dataset, int majority_class,
                                             size_t target_total);

struct LabeledWindows {
    Dataset dataset;
    size_t skipped_boundary = 0;   // too close to a record edge
    size_t skipped_unlabeled = 0;  // no annotation within 150 ms
};

// Cuts windows around `peaks` and labels each by the nearest annotation
// within 150 ms. Annotations must be sorted ascending.
LabeledWindows build_beat_windows(const Record& record, const std::vector<Annotation>& annotations,
                                  const std::vector<size_t>& peaks, size_t before, size_t after);

// Dataset directory: windows.f32le (concatenated float32 windows),
// labels.csv (index,label,source_record,r_peak_offset), class_names.txt.
void save_dataset(const Dataset& dataset, const std::string& dir);
Dataset load_dataset(const std::string& dir);

}  // namespace hanecg
