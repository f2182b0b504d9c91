#include "hanecg/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "hanecg/errors.hpp"
#include "hanecg/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

static_assert(std::endian::native == std::endian::little,
              "f32le serialization assumes a little-endian host");

namespace hanecg {

namespace {

std::string read_whole_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

double parse_double(const std::string& text, const std::string& context) {
    size_t pos = 0;
    double v;
    try {
        v = std::stod(text, &pos);
    } catch (const std::exception&) {
        throw ParseError(context + ": cannot parse number '" + text + "'");
    }
    if (pos != text.size()) throw ParseError(context + ": trailing characters in '" + text + "'");
    return v;
}

size_t parse_count(const std::string& text, const std::string& context) {
    size_t pos = 0;
    unsigned long long v;
    try {
        v = std::stoull(text, &pos);
    } catch (const std::exception&) {
        throw ParseError(context + ": cannot parse count '" + text + "'");
    }
    if (pos != text.size()) throw ParseError(context + ": trailing characters in '" + text + "'");
    return static_cast<size_t>(v);
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<size_t> class_counts(const Dataset& ds) {
    std::vector<size_t> counts(ds.class_names.empty() ? 5 : ds.class_names.size(), 0);
    for (const BeatWindow& w : ds.windows) {
        if (w.label < 0 || static_cast<size_t>(w.label) >= counts.size())
            throw ShapeError("dataset: label " + std::to_string(w.label) + " out of range");
        ++counts[static_cast<size_t>(w.label)];
    }
    return counts;
}

}  // namespace

std::vector<std::string> aami_class_names() { return {"N", "S", "V", "F", "Q"}; }

Record load_record(const std::string& signal_path, const std::string& header_path) {
    std::ifstream hdr(header_path);
    if (!hdr) throw IoError("load_record: cannot open header '" + header_path + "'");
    std::map<std::string, std::string> kv;
    std::string line;
    size_t line_no = 0;
    while (std::getline(hdr, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("load_record: header line " + std::to_string(line_no) +
                             " has no '=' in '" + header_path + "'");
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    for (const char* key : {"record_id", "lead_name", "sampling_rate", "sample_format",
                            "num_samples"})
        if (!kv.count(key))
            throw ParseError("load_record: missing header key '" + std::string(key) + "' in '" +
                             header_path + "'");

    Record r;
    r.record_id = kv["record_id"];
    r.lead_name = kv["lead_name"];
    r.sampling_rate = parse_double(kv["sampling_rate"], "load_record: sampling_rate");
    if (r.sampling_rate <= 0.0)
        throw ParseError("load_record: sampling_rate must be positive");
    const size_t num_samples = parse_count(kv["num_samples"], "load_record: num_samples");
    const std::string& format = kv["sample_format"];

    if (format == "csv") {
        std::ifstream sig(signal_path);
        if (!sig) throw IoError("load_record: cannot open signal '" + signal_path + "'");
        size_t sig_line = 0;
        while (std::getline(sig, line)) {
            ++sig_line;
            line = strip_cr(line);
            if (line.empty()) continue;
            r.samples.push_back(
                parse_double(line, "load_record: '" + signal_path + "' line " +
                                       std::to_string(sig_line)));
        }
    } else if (format == "f32le") {
        const std::string bytes = read_whole_file(signal_path);
        if (bytes.size() % 4 != 0)
            throw ParseError("load_record: '" + signal_path + "' size " +
                             std::to_string(bytes.size()) + " is not a multiple of 4");
        r.samples.resize(bytes.size() / 4);
        for (size_t i = 0; i < r.samples.size(); ++i) {
            float f;
            std::memcpy(&f, bytes.data() + 4 * i, 4);
            r.samples[i] = static_cast<double>(f);
        }
    } else {
        throw ParseError("load_record: unknown sample_format '" + format + "'");
    }

    if (r.samples.empty()) throw ParseError("load_record: '" + signal_path + "' holds no samples");
    if (r.samples.size() != num_samples)
        throw ParseError("load_record: '" + signal_path + "' holds " +
                         std::to_string(r.samples.size()) + " samples, header declares " +
                         std::to_string(num_samples));
    for (size_t i = 0; i < r.samples.size(); ++i)
        if (!std::isfinite(r.samples[i]))
            throw ParseError("load_record: non-finite sample at index " + std::to_string(i));
    return r;
}

void save_record(const Record& record, const std::string& signal_path,
                 const std::string& header_path, const std::string& sample_format) {
    if (sample_format != "csv" && sample_format != "f32le")
        throw ConfigError("save_record: unknown sample_format '" + sample_format + "'");
    std::ofstream hdr(header_path);
    if (!hdr) throw IoError("save_record: cannot write header '" + header_path + "'");
    hdr << "record_id=" << record.record_id << "\n"
        << "lead_name=" << record.lead_name << "\n"
        << "sampling_rate=" << format_double(record.sampling_rate) << "\n"
        << "sample_format=" << sample_format << "\n"
        << "num_samples=" << record.samples.size() << "\n";

    std::ofstream sig(signal_path, std::ios::binary);
    if (!sig) throw IoError("save_record: cannot write signal '" + signal_path + "'");
    if (sample_format == "csv") {
        for (double v : record.samples) sig << format_double(v) << "\n";
    } else {
        for (double v : record.samples) {
            const float f = static_cast<float>(v);
            sig.write(reinterpret_cast<const char*>(&f), 4);
        }
    }
}

std::vector<Annotation> load_annotations(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_annotations: cannot open '" + path + "'");
    std::vector<Annotation> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        const size_t comma = line.find(',');
        if (comma == std::string::npos || comma + 2 != line.size())
            throw ParseError("load_annotations: malformed line " + std::to_string(line_no) +
                             " in '" + path + "'");
        Annotation a;
        a.sample_index = parse_count(line.substr(0, comma),
                                     "load_annotations: line " + std::to_string(line_no));
        a.symbol = line[comma + 1];
        if (!out.empty() && a.sample_index <= out.back().sample_index)
            throw ParseError("load_annotations: line " + std::to_string(line_no) +
                             " is not strictly ascending in '" + path + "'");
        out.push_back(a);
    }
    return out;
}

void save_annotations(const std::vector<Annotation>& annotations, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("save_annotations: cannot write '" + path + "'");
    for (const Annotation& a : annotations) out << a.sample_index << "," << a.symbol << "\n";
}

int map_beat_label(char symbol) {
    switch (symbol) {
        case 'N':
        case 'L':
        case 'R':
        case 'e':
        case 'j':
            return 0;
        case 'A':
        case 'a':
        case 'J':
        case 'S':
            return 1;
        case 'V':
        case 'E':
            return 2;
        case 'F':
            return 3;
        default:
            return 4;  // '/', 'f', 'Q' and anything unrecognized
    }
}

SplitResult split(const Dataset& dataset, const std::array<double, 3>& ratios, uint64_t seed) {
    double sum = 0.0;
    for (double r : ratios) {
        if (r < 0.0) throw ConfigError("split: negative ratio");
        sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ConfigError("split: ratios sum to " + format_double(sum) + ", expected 1");

    const size_t n = dataset.windows.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    shuffle(order, rng);

    // largest-remainder rounding of the three targets
    std::array<size_t, 3> sizes{};
    std::array<double, 3> frac{};
    size_t assigned = 0;
    for (int i = 0; i < 3; ++i) {
        const double target = ratios[static_cast<size_t>(i)] * static_cast<double>(n);
        sizes[static_cast<size_t>(i)] = static_cast<size_t>(std::floor(target));
        frac[static_cast<size_t>(i)] = target - std::floor(target);
        assigned += sizes[static_cast<size_t>(i)];
    }
    std::array<int, 3> by_frac = {0, 1, 2};
    std::stable_sort(by_frac.begin(), by_frac.end(),
                     [&](int a, int b) { return frac[static_cast<size_t>(a)] > frac[static_cast<size_t>(b)]; });
    for (size_t leftover = n - assigned, i = 0; i < leftover; ++i)
        ++sizes[static_cast<size_t>(by_frac[i % 3])];

    SplitResult out;
    out.train.class_names = out.validation.class_names = out.test.class_names =
        dataset.class_names;
    size_t cursor = 0;
    for (int part = 0; part < 3; ++part) {
        Dataset& dst = part == 0 ? out.train : part == 1 ? out.validation : out.test;
        for (size_t i = 0; i < sizes[static_cast<size_t>(part)]; ++i)
            dst.windows.push_back(dataset.windows[order[cursor++]]);
    }
    return out;
}

std::vector<std::vector<size_t>> knn_same_class(const Dataset& dataset, size_t k, int jobs) {
    if (k < 1) throw ConfigError("knn_same_class: k must be >= 1");
    const size_t n = dataset.windows.size();
    if (n == 0) return {};
    for (const BeatWindow& w : dataset.windows)
        if (w.samples.size() != dataset.windows.front().samples.size())
            throw ShapeError("knn_same_class: window lengths differ");

    std::vector<std::vector<size_t>> members_by_class;
    for (size_t i = 0; i < n; ++i) {
        const size_t c = static_cast<size_t>(dataset.windows[i].label);
        if (c >= members_by_class.size()) members_by_class.resize(c + 1);
        members_by_class[c].push_back(i);
    }

    std::vector<std::vector<size_t>> result(n);
    for (const std::vector<size_t>& members : members_by_class) {
        const long m = static_cast<long>(members.size());
        if (m < 2) continue;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(jobs > 0 ? jobs : 1) if (jobs > 1)
#endif
        for (long a = 0; a < m; ++a) {
            const size_t i = members[static_cast<size_t>(a)];
            const std::vector<double>& xi = dataset.windows[i].samples;
            std::vector<std::pair<double, size_t>> dist;
            dist.reserve(members.size() - 1);
            for (size_t j : members) {
                if (j == i) continue;
                const std::vector<double>& xj = dataset.windows[j].samples;
                double d2 = 0.0;
                for (size_t t = 0; t < xi.size(); ++t) {
                    const double d = xi[t] - xj[t];
                    d2 += d * d;
                }
                dist.emplace_back(d2, j);
            }
            const size_t k_eff = std::min(k, dist.size());
            std::partial_sort(dist.begin(), dist.begin() + static_cast<long>(k_eff), dist.end());
            std::vector<size_t>& nn = result[i];
            nn.reserve(k_eff);
            for (size_t t = 0; t < k_eff; ++t) nn.push_back(dist[t].second);
        }
    }
    return result;
}

Dataset smote(const Dataset& dataset, size_t k, const std::map<int, double>& per_class_factor,
              uint64_t seed, std::vector<SmoteDraw>* provenance, int jobs) {
    if (k < 1) throw ConfigError("smote: k must be >= 1");
    for (const auto& [cls, factor] : per_class_factor)
        if (factor < 1.0)
            throw ConfigError("smote: factor " + format_double(factor) + " for class " +
                              std::to_string(cls) + " is below 1");

    const std::vector<size_t> counts = class_counts(dataset);
    std::vector<std::vector<size_t>> members(counts.size());
    for (size_t i = 0; i < dataset.windows.size(); ++i)
        members[static_cast<size_t>(dataset.windows[i].label)].push_back(i);

    // how many synthetic windows each class needs
    std::map<int, size_t> synth_count;
    for (const auto& [cls, factor] : per_class_factor) {
        if (cls < 0 || static_cast<size_t>(cls) >= counts.size())
            throw ConfigError("smote: unknown class " + std::to_string(cls));
        const size_t n_c = counts[static_cast<size_t>(cls)];
        const size_t target = static_cast<size_t>(std::llround(static_cast<double>(n_c) * factor));
        if (target <= n_c) continue;
        if (n_c < 2) {
            const std::string name = static_cast<size_t>(cls) < dataset.class_names.size()
                                         ? dataset.class_names[static_cast<size_t>(cls)]
                                         : std::to_string(cls);
            throw ConfigError("smote: class " + name + " has " + std::to_string(n_c) +
                              " window(s), cannot oversample");
        }
        synth_count[cls] = target - n_c;
    }

    Dataset out;
    out.class_names = dataset.class_names;
    out.windows = dataset.windows;
    if (synth_count.empty()) return out;

    const std::vector<std::vector<size_t>> nn = knn_same_class(dataset, k, jobs);

    for (const auto& [cls, n_synth] : synth_count) {
        const std::vector<size_t>& cls_members = members[static_cast<size_t>(cls)];
        Rng rng(Rng::mix(seed, static_cast<uint64_t>(cls)));
        for (size_t s = 0; s < n_synth; ++s) {
            const size_t parent = cls_members[rng.index(cls_members.size())];
            const std::vector<size_t>& neigh = nn[parent];
            const size_t neighbor = neigh[rng.index(neigh.size())];
            const double lambda = rng.uniform();

            const BeatWindow& a = dataset.windows[parent];
            const BeatWindow& b = dataset.windows[neighbor];
            BeatWindow w;
            w.samples.resize(a.samples.size());
            for (size_t t = 0; t < a.samples.size(); ++t)
                w.samples[t] = a.samples[t] + lambda * (b.samples[t] - a.samples[t]);
            w.r_peak_offset = a.r_peak_offset;
            w.label = cls;
            w.source_record = a.source_record;
            out.windows.push_back(std::move(w));
            if (provenance) provenance->push_back({cls, parent, neighbor, lambda});
        }
    }
    return out;
}

Dataset undersample(const Dataset& dataset, int class_index, size_t target_count, uint64_t seed) {
    std::vector<size_t> members;
    for (size_t i = 0; i < dataset.windows.size(); ++i)
        if (dataset.windows[i].label == class_index) members.push_back(i);
    if (members.size() <= target_count) return dataset;

    Rng rng(seed);
    shuffle(members, rng);
    std::vector<char> keep(dataset.windows.size(), 1);
    for (size_t i = target_count; i < members.size(); ++i) keep[members[i]] = 0;

    Dataset out;
    out.class_names = dataset.class_names;
    for (size_t i = 0; i < dataset.windows.size(); ++i)
        if (keep[i]) out.windows.push_back(dataset.windows[i]);
    return out;
}

std::map<int, double> minority_smote_factors(const Dataset& dataset, int majority_class,
                                             size_t target_total) {
    const std::vector<size_t> counts = class_counts(dataset);
    size_t minority_total = 0;
    for (size_t c = 0; c < counts.size(); ++c)
        if (static_cast<int>(c) != majority_class) minority_total += counts[c];
    if (minority_total == 0)
        throw ConfigError("minority_smote_factors: no minority windows present");
    if (target_total < minority_total)
        throw ConfigError("minority_smote_factors: target " + std::to_string(target_total) +
                          " below current total " + std::to_string(minority_total));
    const double factor =
        static_cast<double>(target_total) / static_cast<double>(minority_total);
    std::map<int, double> out;
    for (size_t c = 0; c < counts.size(); ++c)
        if (static_cast<int>(c) != majority_class && counts[c] > 0)
            out[static_cast<int>(c)] = factor;
    return out;
}

LabeledWindows build_beat_windows(const Record& record, const std::vector<Annotation>& annotations,
                                  const std::vector<size_t>& peaks, size_t before, size_t after) {
    if (before == 0 || after == 0)
        throw ConfigError("build_beat_windows: before and after must be positive");
    if (!std::is_sorted(annotations.begin(), annotations.end(),
                        [](const Annotation& a, const Annotation& b) {
                            return a.sample_index < b.sample_index;
                        }))
        throw ConfigError("build_beat_windows: annotations not sorted");

    const double tol = 0.150 * record.sampling_rate;
    LabeledWindows out;
    out.dataset.class_names = aami_class_names();
    const size_t n = record.samples.size();

    for (size_t p : peaks) {
        if (p < before || p + after > n) {
            ++out.skipped_boundary;
            continue;
        }
        // nearest annotation by sample index
        const Annotation* best = nullptr;
        auto it = std::lower_bound(annotations.begin(), annotations.end(), p,
                                   [](const Annotation& a, size_t v) { return a.sample_index < v; });
        auto consider = [&](decltype(it) cand) {
            if (cand == annotations.end()) return;
            if (!best || std::abs(static_cast<double>(cand->sample_index) -
                                  static_cast<double>(p)) <
                             std::abs(static_cast<double>(best->sample_index) -
                                      static_cast<double>(p)))
                best = &*cand;
        };
        consider(it);
        if (it != annotations.begin()) consider(std::prev(it));
        if (!best || std::abs(static_cast<double>(best->sample_index) - static_cast<double>(p)) >
                         tol) {
            ++out.skipped_unlabeled;
            continue;
        }

        BeatWindow w;
        w.samples.assign(record.samples.begin() + static_cast<long>(p - before),
                         record.samples.begin() + static_cast<long>(p + after));
        w.r_peak_offset = before;
        w.label = map_beat_label(best->symbol);
        w.source_record = record.record_id;
        out.dataset.windows.push_back(std::move(w));
    }
    return out;
}

void save_dataset(const Dataset& dataset, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path base(dir);

    size_t window_len = 0;
    for (const BeatWindow& w : dataset.windows) {
        if (window_len == 0) window_len = w.samples.size();
        if (w.samples.size() != window_len)
            throw ShapeError("save_dataset: window lengths are not uniform");
    }

    std::ofstream bin(base / "windows.f32le", std::ios::binary);
    if (!bin) throw IoError("save_dataset: cannot write windows.f32le in '" + dir + "'");
    for (const BeatWindow& w : dataset.windows)
        for (double v : w.samples) {
            const float f = static_cast<float>(v);
            bin.write(reinterpret_cast<const char*>(&f), 4);
        }

    std::ofstream csv(base / "labels.csv");
    if (!csv) throw IoError("save_dataset: cannot write labels.csv in '" + dir + "'");
    csv << "index,label,source_record,r_peak_offset\n";
    for (size_t i = 0; i < dataset.windows.size(); ++i) {
        const BeatWindow& w = dataset.windows[i];
        csv << i << "," << w.label << "," << w.source_record << "," << w.r_peak_offset << "\n";
    }

    std::ofstream names(base / "class_names.txt");
    if (!names) throw IoError("save_dataset: cannot write class_names.txt in '" + dir + "'");
    for (const std::string& name : dataset.class_names) names << name << "\n";
}

Dataset load_dataset(const std::string& dir) {
    const std::filesystem::path base(dir);
    Dataset out;

    {
        std::ifstream names(base / "class_names.txt");
        if (names) {
            std::string line;
            while (std::getline(names, line)) {
                line = strip_cr(line);
                if (!line.empty()) out.class_names.push_back(line);
            }
        }
        if (out.class_names.empty()) out.class_names = aami_class_names();
    }

    std::ifstream csv(base / "labels.csv");
    if (!csv) throw IoError("load_dataset: cannot open labels.csv in '" + dir + "'");
    std::string line;
    if (!std::getline(csv, line))
        throw ParseError("load_dataset: labels.csv is empty in '" + dir + "'");
    size_t line_no = 1;
    struct Row {
        int label;
        std::string source;
        size_t offset;
    };
    std::vector<Row> rows;
    while (std::getline(csv, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        std::array<std::string, 4> fields;
        size_t start = 0;
        for (int f = 0; f < 3; ++f) {
            const size_t comma = line.find(',', start);
            if (comma == std::string::npos)
                throw ParseError("load_dataset: labels.csv line " + std::to_string(line_no) +
                                 " has too few fields");
            fields[static_cast<size_t>(f)] = line.substr(start, comma - start);
            start = comma + 1;
        }
        fields[3] = line.substr(start);
        Row row;
        const std::string ctx = "load_dataset: labels.csv line " + std::to_string(line_no);
        if (parse_count(fields[0], ctx) != rows.size())
            throw ParseError(ctx + ": unexpected index " + fields[0]);
        row.label = static_cast<int>(parse_count(fields[1], ctx));
        if (static_cast<size_t>(row.label) >= out.class_names.size())
            throw ParseError(ctx + ": label " + fields[1] + " out of range");
        row.source = fields[2];
        row.offset = parse_count(fields[3], ctx);
        rows.push_back(std::move(row));
    }

    const std::string bytes = read_whole_file((base / "windows.f32le").string());
    if (bytes.size() % 4 != 0)
        throw ParseError("load_dataset: windows.f32le size is not a multiple of 4");
    const size_t total_floats = bytes.size() / 4;
    if (rows.empty()) {
        if (total_floats != 0)
            throw ParseError("load_dataset: windows.f32le holds data but labels.csv has no rows");
        return out;
    }
    if (total_floats % rows.size() != 0)
        throw ParseError("load_dataset: windows.f32le holds " + std::to_string(total_floats) +
                         " floats, not divisible by " + std::to_string(rows.size()) + " windows");
    const size_t window_len = total_floats / rows.size();

    out.windows.resize(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        BeatWindow& w = out.windows[i];
        w.label = rows[i].label;
        w.source_record = rows[i].source;
        w.r_peak_offset = rows[i].offset;
        w.samples.resize(window_len);
        for (size_t t = 0; t < window_len; ++t) {
            float f;
            std::memcpy(&f, bytes.data() + 4 * (i * window_len + t), 4);
            w.samples[t] = static_cast<double>(f);
        }
    }
    return out;
}

}  // namespace hanecg
