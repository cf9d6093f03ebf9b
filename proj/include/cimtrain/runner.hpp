#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cimtrain/config.hpp"
#include "cimtrain/mapping.hpp"
#include "cimtrain/report.hpp"

namespace cimtrain {

struct RunResult {
    std::vector<EpochReport> reports;
    Floorplan floorplan;
    long long buffer_bits = 0;
    std::string output_dir;
};

// Full benchmark pipeline: floorplan, network build, scale calibration,
// per-epoch train / evaluate / hardware estimation, then report emission.
// Prints one progress line per epoch (epoch, accuracy, latency, energy).
// Reports are written only after every epoch has completed, so a failing run
// leaves no partial report directory.
RunResult run_benchmark(const RunConfig& cfg, std::ostream& progress);

// One device parameter varied over a grid: "c2c_sigma=0,0.01,0.03,0.05",
// "d2d_sigma=..." or "nl=..." (nl sets a +x/-x label pair).
struct SweepSpec {
    std::string param;
    std::vector<double> values;
};

// Parses the --sweep argument; throws ConfigError on unknown parameters or
// empty grids.
SweepSpec parse_sweep(const std::string& arg);

// Runs every grid point with the shared base seed (runs stay pairwise
// comparable; pulse-noise streams are keyed independently of the sigmas).
// Each point writes under <output_dir>/<param>_<value>/.
std::vector<RunResult> run_sweep(const RunConfig& base, const SweepSpec& sweep,
                                 std::ostream& progress);

}  // namespace cimtrain
