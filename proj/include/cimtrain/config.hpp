#pragma once

#include <cstdint>
#include <string>

#include "cimtrain/adc.hpp"
#include "cimtrain/device.hpp"
#include "cimtrain/mapping.hpp"
#include "cimtrain/net.hpp"
#include "cimtrain/train.hpp"

namespace cimtrain {

// One benchmark run, fully described. JSON on disk; CLI flags override file
// values. Defaults: momentum beta 0.9, 6-bit ADC, 128x128 arrays.
struct RunConfig {
    // device: by catalog name, or inline with every DeviceSpec field
    std::string device_name = "FeFET";
    bool inline_device = false;
    DeviceSpec device;  // resolved during validation

    std::string topology = "default";
    // 0 = keep the topology's built-in precision
    int weight_bits = 0;
    int activation_bits = 0;
    int error_bits = 0;
    int gradient_bits = 0;

    int batch_size = 32;
    int epochs = 3;
    int batches_per_epoch = 0;  // 0 = every full batch in the training set

    double lr = 0.1;
    double beta = 0.9;
    bool use_momentum = true;

    HierarchyParams hw;  // array geometry and chip hierarchy

    int adc_bits = 6;
    std::string adc_mode = "linear";   // off | linear | quantile
    std::string readout = "parallel";  // parallel | sequential
    std::string compute = "cim";       // cim | exact

    std::string cost_table_path;  // empty = shipped defaults
    double buffer_overhead_constraint = 1.0;

    int train_samples = 256;
    int test_samples = 128;

    std::uint64_t seed = 1;
    std::string output_dir = "results";

    // Resolves the device and checks every invariant; throws ConfigError
    // naming the offending field.
    void validate();

    AdcMode adc_mode_enum() const;
    ReadoutMode readout_enum() const;
    ComputeMode compute_enum() const;
    TrainParams train_params() const;
};

// Parse / render the canonical JSON form. parse_config validates.
RunConfig parse_config(const std::string& text);
std::string serialize_config(const RunConfig& cfg);

// File wrappers; load_config throws IoError when the file is unreadable.
RunConfig load_config(const std::string& path);
void save_config(const RunConfig& cfg, const std::string& path);

}  // namespace cimtrain
