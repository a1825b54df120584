// Times the OpenMP kernels against the serial reference implementations and
// checks that both produce the same bits.

#ifdef _OPENMP
#include <omp.h>
#endif

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <vector>

#include "fedagg/aggregation.hpp"
#include "reference.hpp"

namespace {

using clock_type = std::chrono::steady_clock;

double time_best_of(int reps, const std::function<void()>& body) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = clock_type::now();
        body();
        best = std::min(best,
                        std::chrono::duration<double>(clock_type::now() - t0).count());
    }
    return best;
}

std::vector<fedagg::UpdateVector> random_updates(std::size_t n, std::size_t d,
                                                 std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> value(0.0, 1.0);
    std::vector<fedagg::UpdateVector> updates(n, fedagg::UpdateVector(d));
    for (auto& u : updates)
        for (double& v : u)
            v = value(gen);
    return updates;
}

}  // namespace

int main(int argc, char** argv) {
    const bool quick = argc > 1 && std::strcmp(argv[1], "--quick") == 0;
    const std::size_t n = quick ? 64 : 256;
    const std::size_t d = quick ? 512 : 4096;
    const int reps = quick ? 2 : 3;

#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (built without OpenMP)\n");
#endif
    std::printf("%-28s %10s %10s %8s %s\n", "kernel", "parallel", "serial", "speedup",
                "outputs");

    const auto updates = random_updates(n, d, 99);
    const fedagg::UpdateSet set{updates};

    {
        fedagg::DistanceMatrix mat;
        std::vector<std::vector<double>> ref;
        const double par = time_best_of(reps, [&] { mat = fedagg::pairwise_sq_distances(set); });
        const double ser = time_best_of(reps, [&] { ref = fedref::pairwise_sq_distances(updates); });
        bool equal = true;
        for (std::size_t i = 0; i < n && equal; ++i)
            for (std::size_t j = 0; j < n && equal; ++j)
                equal = mat.at(i, j) == ref[i][j];
        std::printf("%-28s %9.4fs %9.4fs %7.2fx %s\n",
                    "pairwise distances", par, ser, ser / par, equal ? "match" : "MISMATCH");
    }

    {
        const std::size_t f = n / 3;
        fedagg::AggregationResult ours;
        fedref::KrumResult ref;
        const double par = time_best_of(reps, [&] { ours = fedagg::aggregate_krum(set, f); });
        const double ser = time_best_of(reps, [&] { ref = fedref::krum_select(updates, f); });
        const bool equal = ours.selected_index == ref.selected;
        std::printf("%-28s %9.4fs %9.4fs %7.2fx %s\n",
                    "krum select (vs brute)", par, ser, ser / par, equal ? "match" : "MISMATCH");
    }

#ifdef _OPENMP
    {
        fedagg::AggregationResult multi, single;
        const double par = time_best_of(reps, [&] { multi = fedagg::aggregate_arkrum(set); });
        const int saved = omp_get_max_threads();
        omp_set_num_threads(1);
        const double ser = time_best_of(reps, [&] { single = fedagg::aggregate_arkrum(set); });
        omp_set_num_threads(saved);
        const bool equal = multi.aggregate == single.aggregate &&
                           multi.averaged_indices == single.averaged_indices;
        std::printf("%-28s %9.4fs %9.4fs %7.2fx %s\n",
                    "arkrum (vs 1 thread)", par, ser, ser / par, equal ? "match" : "MISMATCH");
    }
#endif
    return 0;
}
