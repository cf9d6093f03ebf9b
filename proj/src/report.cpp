#include "cimtrain/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "cimtrain/errors.hpp"

namespace cimtrain {

namespace fs = std::filesystem;

std::string format_csv_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

namespace {

class CsvWriter {
  public:
    explicit CsvWriter(const fs::path& path) : path_(path.string()), out_(path) {
        if (!out_) throw IoError("cannot open report file for writing: " + path_);
    }
    CsvWriter& field(const std::string& s) {
        if (!first_) out_ << ',';
        out_ << s;
        first_ = false;
        return *this;
    }
    CsvWriter& field(double v) { return field(format_csv_number(v)); }
    CsvWriter& field(int v) { return field(std::to_string(v)); }
    void endrow() {
        out_ << '\n';
        first_ = true;
    }
    void close() {
        out_.close();
        if (!out_) throw IoError("write failure on report file: " + path_);
    }

  private:
    std::string path_;
    std::ofstream out_;
    bool first_ = true;
};

const char* kStepNames[4] = {"feed_forward", "error", "weight_gradient", "weight_update"};

void write_breakdown(const fs::path& path, const EpochReport& r) {
    CsvWriter w(path);
    w.field("section").field("name").field("value");
    w.endrow();
    auto row = [&](const char* section, const char* name, double v) {
        w.field(section).field(name).field(v);
        w.endrow();
    };

    for (const FloorplanRow& f : r.floorplan_rows) {
        const std::string tag = "layer" + std::to_string(f.layer);
        row("floorplan", (tag + "_arrays_used").c_str(), f.arrays_used);
        row("floorplan", (tag + "_duplication").c_str(), f.duplication);
    }
    row("floorplan", "memory_utilization", r.memory_utilization);

    row("area_mm2", "array", r.area.array);
    row("area_mm2", "adc", r.area.adc);
    row("area_mm2", "accumulation", r.area.accumulation);
    row("area_mm2", "buffer", r.area.buffer);
    row("area_mm2", "interconnect", r.area.interconnect);
    row("area_mm2", "other", r.area.other);
    row("area_mm2", "total", r.area.total());

    auto parts = [&](const char* section, const CostBreakdown& b) {
        row(section, "adc", b.adc);
        row(section, "accumulation", b.accumulation);
        row(section, "buffer", b.buffer);
        row(section, "interconnect", b.interconnect);
        row(section, "dram", b.dram);
        row(section, "array", b.array);
        row(section, "other", b.other);
        row(section, "total", b.total());
    };
    parts("latency_component_s", r.totals.latency_parts);
    parts("energy_component_j", r.totals.energy_parts);

    double lat_sum = 0.0, en_sum = 0.0;
    for (int i = 0; i < 4; ++i) {
        row("latency_operation_s", kStepNames[i], r.totals.step_latency[i]);
        lat_sum += r.totals.step_latency[i];
    }
    row("latency_operation_s", "total", lat_sum);
    for (int i = 0; i < 4; ++i) {
        row("energy_operation_j", kStepNames[i], r.totals.step_energy[i]);
        en_sum += r.totals.step_energy[i];
    }
    row("energy_operation_j", "total", en_sum);

    row("leakage_energy_j", "total", r.totals.leakage_energy);
    row("peak", "latency_s", r.peak.peak_latency);
    row("peak", "dynamic_energy_j", r.peak.peak_energy);
    row("peak", "tops", r.peak.peak_tops);
    row("peak", "tops_per_watt", r.peak.peak_tops_per_watt);
    row("total", "latency_s", r.totals.latency);
    row("total", "dynamic_energy_j", r.totals.dynamic_energy);
    row("total", "tops", r.peak.total_tops);
    row("total", "tops_per_watt", r.peak.total_tops_per_watt);
    row("total", "ops", r.totals.ops);
    row("training", "accuracy", r.accuracy);
    w.close();
}

}  // namespace

void emit_reports(const std::vector<EpochReport>& reports, const std::string& out_dir) {
    if (reports.empty()) throw IoError("no epoch reports to emit for " + out_dir);

    const fs::path root(out_dir);
    const fs::path epoch_dir = root / "NeuroSim_Results_Each_Epoch";
    std::error_code ec;
    fs::create_directories(epoch_dir, ec);
    if (ec || !fs::is_directory(epoch_dir))
        throw IoError("cannot create report directory: " + epoch_dir.string());

    for (const EpochReport& r : reports) {
        write_breakdown(epoch_dir / ("Breakdown_Epoch_" + std::to_string(r.epoch) + ".csv"),
                        r);
    }

    {
        CsvWriter w(root / "NeuroSim_Output.csv");
        w.field("epoch")
            .field("accuracy")
            .field("latency_s")
            .field("dynamic_energy_j")
            .field("leakage_energy_j")
            .field("area_mm2")
            .field("peak_latency_s")
            .field("peak_energy_j")
            .field("total_tops")
            .field("total_tops_per_watt")
            .field("peak_tops")
            .field("peak_tops_per_watt")
            .field("ops");
        w.endrow();
        for (const EpochReport& r : reports) {
            w.field(r.epoch)
                .field(r.accuracy)
                .field(r.totals.latency)
                .field(r.totals.dynamic_energy)
                .field(r.totals.leakage_energy)
                .field(r.area.total())
                .field(r.peak.peak_latency)
                .field(r.peak.peak_energy)
                .field(r.peak.total_tops)
                .field(r.peak.total_tops_per_watt)
                .field(r.peak.peak_tops)
                .field(r.peak.peak_tops_per_watt)
                .field(r.totals.ops);
            w.endrow();
        }
        w.close();
    }

    {
        CsvWriter w(root / "PythonWrapper_Output.csv");
        w.field("epoch").field("accuracy").field("mean_loss");
        w.endrow();
        for (const EpochReport& r : reports) {
            w.field(r.epoch).field(r.accuracy).field(r.mean_loss);
            w.endrow();
        }
        w.close();
    }

    {
        CsvWriter w(root / "Weight_dist.csv");
        w.field("epoch").field("layer").field("weight_mean").field("weight_std");
        w.endrow();
        for (const EpochReport& r : reports) {
            for (std::size_t j = 0; j < r.distributions.size(); ++j) {
                w.field(r.epoch)
                    .field(static_cast<int>(j))
                    .field(r.distributions[j].weight_mean)
                    .field(r.distributions[j].weight_std);
                w.endrow();
            }
        }
        w.close();
    }

    {
        CsvWriter w(root / "Delta_dist.csv");
        w.field("epoch")
            .field("layer")
            .field("delta_mean")
            .field("delta_std")
            .field("network_normalized_mean");
        w.endrow();
        for (const EpochReport& r : reports) {
            for (std::size_t j = 0; j < r.distributions.size(); ++j) {
                w.field(r.epoch)
                    .field(static_cast<int>(j))
                    .field(r.distributions[j].delta_mean)
                    .field(r.distributions[j].delta_std)
                    .field(r.normalized_delta_mean);
                w.endrow();
            }
        }
        w.close();
    }

    {
        CsvWriter w(root / "Input_activity.csv");
        w.field("epoch").field("layer").field("input_activity");
        w.endrow();
        for (const EpochReport& r : reports) {
            for (std::size_t j = 0; j < r.input_activity.size(); ++j) {
                w.field(r.epoch).field(static_cast<int>(j)).field(r.input_activity[j]);
                w.endrow();
            }
        }
        w.close();
    }
}

}  // namespace cimtrain
