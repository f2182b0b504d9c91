#include "hanecg/explain.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "hanecg/errors.hpp"

namespace hanecg {

namespace {

std::string format_weight(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string safe_name(const std::string& id) {
    std::string out = id.empty() ? "window" : id;
    for (char& c : out)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '_' && c != '-')
            c = '_';
    return out;
}

}  // namespace

ExplainReport extract_attention(const HanModel& model, const BeatWindow& window,
                                size_t window_index) {
    ExplainReport r;
    r.record_id = window.source_record;
    r.window_index = window_index;
    r.config = model.config;
    r.window = window.samples;

    ForwardResult f = forward(model, window.samples);
    r.attention = std::move(f.attention);
    r.probs = std::move(f.probs);
    r.predicted_class = 0;
    for (size_t k = 1; k < r.probs.size(); ++k)
        if (r.probs[k] > r.probs[r.predicted_class]) r.predicted_class = k;
    return r;
}

std::vector<double> sequence_weight_per_sample(const ExplainReport& report) {
    const HanConfig& c = report.config;
    std::vector<double> out(c.window_len(), 0.0);
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = report.attention.sequence_weights[i / c.segment_len];
    return out;
}

std::vector<double> segment_weight_per_sample(const ExplainReport& report) {
    const HanConfig& c = report.config;
    const size_t steps = c.conv_steps();
    const size_t half_kernel = (c.conv_kernel - 1) / 2;
    std::vector<double> out(c.window_len(), 0.0);
    for (size_t s = 0; s < c.num_segments; ++s) {
        for (size_t o = 0; o < c.segment_len; ++o) {
            // the conv step whose receptive-field center is nearest, earlier
            // step on ties
            size_t t = 0;
            if (o > half_kernel) {
                t = (o - half_kernel + (c.conv_stride - 1) / 2) / c.conv_stride;
                t = std::min(t, steps - 1);
            }
            out[s * c.segment_len + o] = report.attention.segment_weights[s][t];
        }
    }
    return out;
}

namespace {

// one polyline path mapping x in [0,n) and y in [lo,hi] (data range) into the
// given pixel band (SVG y grows downward)
std::string series_path(const std::vector<double>& y, double y_top, double y_bottom,
                        double data_lo, double data_hi, double width) {
    const double span = data_hi - data_lo;
    const double scale = span > 0.0 ? (y_bottom - y_top) / span : 0.0;
    std::string d;
    char buf[64];
    for (size_t i = 0; i < y.size(); ++i) {
        const double px = width * static_cast<double>(i) / static_cast<double>(y.size() - 1);
        const double py = y_bottom - (y[i] - data_lo) * scale;
        std::snprintf(buf, sizeof(buf), "%s%.2f %.2f", i == 0 ? "M" : " L", px, py);
        d += buf;
    }
    return d;
}

}  // namespace

ExportPaths export_report(const ExplainReport& report, const std::string& out_dir) {
    const HanConfig& c = report.config;
    if (report.window.size() != c.window_len())
        throw ShapeError("export_report: window length " + std::to_string(report.window.size()) +
                         " does not match the config");

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    const std::string stem =
        safe_name(report.record_id) + "_" + std::to_string(report.window_index);

    ExportPaths paths;
    paths.csv_path = (std::filesystem::path(out_dir) / (stem + ".csv")).string();
    paths.svg_path = (std::filesystem::path(out_dir) / (stem + ".svg")).string();

    const std::vector<double> seq_w = sequence_weight_per_sample(report);
    const std::vector<double> seg_w = segment_weight_per_sample(report);

    std::ofstream csv(paths.csv_path);
    if (!csv) throw IoError("export_report: cannot write '" + paths.csv_path + "'");
    csv << "sample_index,amplitude,sequence_weight_at_sample,segment_weight_at_sample\n";
    for (size_t i = 0; i < report.window.size(); ++i)
        csv << i << ',' << format_weight(report.window[i]) << ',' << format_weight(seq_w[i])
            << ',' << format_weight(seg_w[i]) << '\n';
    if (!csv) throw IoError("export_report: write failed for '" + paths.csv_path + "'");
    csv.close();

    // three series, three paths: the trace on the upper band, both attention
    // overlays sharing the lower band
    const double width = 900.0;
    const auto [sig_min_it, sig_max_it] =
        std::minmax_element(report.window.begin(), report.window.end());
    double w_max = 0.0;
    for (double v : seq_w) w_max = std::max(w_max, v);
    for (double v : seg_w) w_max = std::max(w_max, v);
    if (w_max == 0.0) w_max = 1.0;

    std::ofstream svg(paths.svg_path);
    if (!svg) throw IoError("export_report: cannot write '" + paths.svg_path + "'");
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 940 320\" "
           "font-family=\"sans-serif\" font-size=\"12\">\n"
        << "  <rect x=\"0\" y=\"0\" width=\"940\" height=\"320\" fill=\"white\"/>\n"
        << "  <text x=\"20\" y=\"20\">" << safe_name(report.record_id) << " window "
        << report.window_index << " — predicted class " << report.predicted_class << " (p="
        << format_weight(report.probs[report.predicted_class]) << ")</text>\n"
        << "  <g transform=\"translate(20,0)\">\n"
        << "    <path d=\"" << series_path(report.window, 40.0, 170.0, *sig_min_it, *sig_max_it,
                                           width)
        << "\" fill=\"none\" stroke=\"#222222\" stroke-width=\"1\"/>\n"
        << "    <path d=\"" << series_path(seq_w, 190.0, 300.0, 0.0, w_max, width)
        << "\" fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.5\"/>\n"
        << "    <path d=\"" << series_path(seg_w, 190.0, 300.0, 0.0, w_max, width)
        << "\" fill=\"none\" stroke=\"#2980b9\" stroke-width=\"1\"/>\n"
        << "  </g>\n"
        << "  <text x=\"20\" y=\"185\" fill=\"#c0392b\">sequence weights</text>\n"
        << "  <text x=\"200\" y=\"185\" fill=\"#2980b9\">segment weights</text>\n"
        << "</svg>\n";
    if (!svg) throw IoError("export_report: write failed for '" + paths.svg_path + "'");
    return paths;
}

}  // namespace hanecg
