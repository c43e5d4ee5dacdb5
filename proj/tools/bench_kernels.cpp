#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "ivskew/mcoracle.hpp"
#include "ivskew/parallel.hpp"
#include "ivskew/pdepricer.hpp"
#include "ivskew/riskdrivers.hpp"
#include "ivskew/svmodels.hpp"

using namespace ivskew;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

McEstimate bench_mc(long paths) {
    const SvModel model = make_arctan_ou(5.0, 0.0, 1.0, -0.2, -1.0);
    McConfig cfg;
    cfg.paths = paths;
    cfg.steps = 200;
    cfg.seed = 42;
    return mc_adjusted_price(model, 0.2, PutContract(100.0, 0.25), 100.0, 0.15,
                             cfg);
}

std::vector<double> bench_sweep() {
    const SvModel model = make_arctan_ou(5.0, 0.0, 1.0, -0.2, -1.0);
    GridSpec grid;
    grid.nx = 99;
    grid.ny = 63;
    grid.nt = 64;
    const std::vector<double> gammas{0.25, 0.5, 1.0};
    std::vector<double> prices(gammas.size());
    parallel_for(static_cast<int>(gammas.size()), [&](int i) {
        const PdeSolution sol =
            solve_value(model, DriverSpec::distorted_entropic(gammas[i], 0.2),
                        PutContract(100.0, 0.25), grid);
        prices[i] = indifference_price(sol, 0.25, -0.1, 0.15);
    });
    return prices;
}

}  // namespace

int main(int argc, char** argv) {
    const long paths = argc > 1 ? std::atol(argv[1]) : 200000;

    std::printf("worker threads: %d\n", worker_threads());

    set_parallel_enabled(false);
    auto t0 = std::chrono::steady_clock::now();
    const McEstimate mc_serial = bench_mc(paths);
    const double mc_serial_s = seconds_since(t0);

    set_parallel_enabled(true);
    t0 = std::chrono::steady_clock::now();
    const McEstimate mc_parallel = bench_mc(paths);
    const double mc_parallel_s = seconds_since(t0);

    std::printf("mc %ld paths: serial %.3fs, parallel %.3fs, price %.6f (se %.6f)\n",
                paths, mc_serial_s, mc_parallel_s, mc_parallel.price,
                mc_parallel.stderr_);
    if (mc_serial.price != mc_parallel.price ||
        mc_serial.stderr_ != mc_parallel.stderr_) {
        std::printf("FAIL: mc serial and parallel results differ\n");
        return 1;
    }

    set_parallel_enabled(false);
    t0 = std::chrono::steady_clock::now();
    const std::vector<double> sweep_serial = bench_sweep();
    const double sweep_serial_s = seconds_since(t0);

    set_parallel_enabled(true);
    t0 = std::chrono::steady_clock::now();
    const std::vector<double> sweep_parallel = bench_sweep();
    const double sweep_parallel_s = seconds_since(t0);

    std::printf("gamma sweep (3 solves, 99x63x64): serial %.3fs, parallel %.3fs\n",
                sweep_serial_s, sweep_parallel_s);
    for (std::size_t i = 0; i < sweep_serial.size(); ++i)
        std::printf("  leg %zu price %.10f\n", i, sweep_parallel[i]);
    if (sweep_serial != sweep_parallel) {
        std::printf("FAIL: sweep serial and parallel results differ\n");
        return 1;
    }

    std::printf("serial and parallel paths agree bitwise\n");
    return 0;
}
