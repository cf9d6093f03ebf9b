#pragma once

#include <string>
#include <vector>

#include "cimtrain/costmodel.hpp"
#include "cimtrain/trace.hpp"

namespace cimtrain {

// One row of the floorplan summary table embedded in each breakdown file.
struct FloorplanRow {
    int layer = 0;        // weight-layer index, forward order
    int arrays_used = 0;  // physical arrays hosting the layer (duplicates included)
    int duplication = 0;  // weight-duplication factor within each array
};

// Everything the CSV suite needs for one epoch, fully materialized: emission
// only formats these values, it never recomputes them.
struct EpochReport {
    int epoch = 0;  // 1-based
    double accuracy = 0.0;
    double mean_loss = 0.0;
    std::vector<FloorplanRow> floorplan_rows;
    double memory_utilization = 0.0;
    AreaBreakdown area;
    EpochTotals totals;   // latency/energy by component and by operation
    PeakMetrics peak;
    std::vector<LayerDistribution> distributions;  // weight layers, forward order
    std::vector<double> input_activity;            // per weight layer
    double normalized_delta_mean = 0.0;
};

// Writes the full report suite under `out_dir`:
//   NeuroSim_Results_Each_Epoch/Breakdown_Epoch_<i>.csv   (i = 1..epochs)
//   NeuroSim_Output.csv          hardware summary, one row per epoch
//   PythonWrapper_Output.csv     training-side summary, one row per epoch
//   Weight_dist.csv              per epoch x layer weight mean/std
//   Delta_dist.csv               per epoch x layer delta mean/std + network mean
//   Input_activity.csv           per epoch x layer ones-fraction
// Comma-separated with a header row; numbers printed with %.9g (at least six
// significant digits); byte-identical across runs given identical reports.
// Throws IoError naming the path when the directory cannot be written.
void emit_reports(const std::vector<EpochReport>& reports, const std::string& out_dir);

// %.9g rendering used for every CSV number (exposed for tests).
std::string format_csv_number(double v);

}  // namespace cimtrain
