// Wall-clock comparison of the OpenMP kernels against their serial (jobs=1)
// reference paths. Usage: hanecg-bench [jobs], default: all hardware threads.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <thread>
#include <vector>

#include "hanecg/dataset.hpp"
#include "hanecg/model.hpp"
#include "hanecg/rng.hpp"
#include "hanecg/train.hpp"

using namespace hanecg;

namespace {

Dataset random_dataset(const HanConfig& c, size_t n, uint64_t seed) {
    Rng rng(seed);
    Dataset d;
    for (size_t i = 0; i < n; ++i) {
        BeatWindow w;
        w.label = rng.index(c.num_classes);
        w.samples.resize(c.window_len());
        for (double& v : w.samples) v = rng.uniform(-1.0, 1.0);
        d.windows.push_back(std::move(w));
    }
    return d;
}

template <typename F>
double best_ms(F&& body, int repeats = 3) {
    double best = 1e300;
    for (int r = 0; r < repeats; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        body();
        const auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

void report(const char* name, double serial_ms, double parallel_ms, int jobs) {
    std::printf("%-22s %10.1f ms %10.1f ms (jobs=%d)  x%.2f\n", name, serial_ms, parallel_ms,
                jobs, serial_ms / parallel_ms);
}

}  // namespace

int main(int argc, char** argv) {
    int jobs = static_cast<int>(std::thread::hardware_concurrency());
    if (argc > 1) jobs = std::atoi(argv[1]);
    if (jobs < 1) jobs = 1;

    HanConfig config;  // default full-size geometry
    HanModel model = build(config, 1);
    Dataset batch = random_dataset(config, 16, 2);
    Dataset eval_set = random_dataset(config, 64, 3);
    std::vector<size_t> idx(batch.windows.size());
    std::iota(idx.begin(), idx.end(), size_t{0});

    std::printf("kernel                      serial      parallel\n");

    const double acc_s = best_ms([&] { accumulate_batch(model, batch.windows, idx, 7, 0, 1); });
    const double acc_p =
        best_ms([&] { accumulate_batch(model, batch.windows, idx, 7, 0, jobs); });
    report("batch gradients (16)", acc_s, acc_p, jobs);

    const double ev_s = best_ms([&] { evaluate(model, eval_set, 1); });
    const double ev_p = best_ms([&] { evaluate(model, eval_set, jobs); });
    report("evaluate (64)", ev_s, ev_p, jobs);

    Dataset nn_set = random_dataset(config, 400, 4);
    const double nn_s = best_ms([&] { knn_same_class(nn_set, 5, 1); });
    const double nn_p = best_ms([&] { knn_same_class(nn_set, 5, jobs); });
    report("knn (400 windows)", nn_s, nn_p, jobs);

    return 0;
}
