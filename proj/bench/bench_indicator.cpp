// Serial vs OpenMP timing of the tau sweep.

#include "enclosure/indicator.hpp"
#include "enclosure/forward.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

using namespace enclosure;

namespace {

double median_seconds(int reps, const std::function<void()>& f) {
    std::vector<double> t;
    for (int r = 0; r < reps; ++r) {
        auto t0 = std::chrono::steady_clock::now();
        f();
        t.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    std::nth_element(t.begin(), t.begin() + t.size() / 2, t.end());
    return t[t.size() / 2];
}

bool same(const IndicatorSamples& a, const IndicatorSamples& b) {
    if (a.entries.size() != b.entries.size()) return false;
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
        const auto &x = a.entries[i], &y = b.entries[i];
        if (x.flag != y.flag || x.I.log() != y.I.log()) return false;
    }
    return true;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"indicator sweep benchmark"};
    int reps = 5, points = 48, threads = 0;
    std::size_t nx = 400, nt = 2000;
    app.add_option("--reps", reps, "repetitions per timing (median reported)")->check(CLI::PositiveNumber);
    app.add_option("--per-decade", points, "tau samples per decade")->check(CLI::PositiveNumber);
    app.add_option("--threads", threads, "OpenMP threads for the parallel path (0 = runtime default)");
    app.add_option("--nx", nx, "forward solver space cells");
    app.add_option("--nt", nt, "forward solver time steps");
    CLI11_PARSE(app, argc, argv);
    if (threads > 0) omp_set_num_threads(threads);

    ForwardOptions fo;
    fo.nx = nx;
    fo.nt = nt;
    fo.reference = false;
    auto flux = [](double) { return 1.0; };
    const double T = 1.2;

    LayeredMedium three({0, 0.4, 0.9, 1.4}, {1, 4, 2.25});
    auto smooth = SmoothMedium::from_expression(1.5, "(1+x)^2");
    auto rec_b = solve_forward(three, flux, RightBC::neumann(), T, fo).record;
    auto rec_c = solve_forward(SmoothSegment{smooth, 1.0}, flux, RightBC::neumann(), T, fo).record;

    struct Case {
        const char* name;
        const BoundaryRecord* rec;
        KnownMedium known;
    };
    std::vector<Case> cases{{"A  gamma1=1", &rec_b, KnownA{1.0}},
                            {"B  m=3", &rec_b, KnownB{LayerStack({0.4, 0.9}, {1, 4, 2.25})}},
                            {"C  (1+x)^2", &rec_c, KnownC{smooth, 1.5}}};

    auto taus = geometric_tau_grid(17.0, 2000.0, points);
    std::printf("record: %zu samples, tau grid: %zu points, threads: %d\n", rec_b.size(), taus.size(),
                omp_get_max_threads());
    std::printf("%-14s %12s %12s %9s %s\n", "known medium", "serial [s]", "parallel [s]", "speedup", "identical");
    for (const auto& cs : cases) {
        IndicatorOptions o;
        o.c = 0.25;
        IndicatorSamples ser, par;
        o.execution = Execution::Serial;
        double ts = median_seconds(reps, [&] { ser = compute_indicator(*cs.rec, nullptr, cs.known, taus, o); });
        o.execution = Execution::Parallel;
        double tp = median_seconds(reps, [&] { par = compute_indicator(*cs.rec, nullptr, cs.known, taus, o); });
        std::printf("%-14s %12.4f %12.4f %9.2f %s\n", cs.name, ts, tp, ts / tp, same(ser, par) ? "yes" : "NO");
    }
    return 0;
}
