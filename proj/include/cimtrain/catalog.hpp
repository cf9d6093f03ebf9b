#pragma once

#include <string>
#include <vector>

#include "cimtrain/device.hpp"

namespace cimtrain {

// Built-in synaptic-device table: four SRAM design points (7 nm / 32 nm,
// sequential / parallel read-out) and six published analog eNVM devices.
const std::vector<DeviceSpec>& device_catalog();

// Case-insensitive lookup by catalog name (plus the "SRAM" alias for the
// 32 nm parallel entry). Throws ConfigError("device") when absent.
DeviceSpec device_by_name(const std::string& name);

// JSON catalog file: an array of records carrying every DeviceSpec field.
std::vector<DeviceSpec> load_device_catalog(const std::string& path);
void save_device_catalog(const std::vector<DeviceSpec>& devices, const std::string& path);

}  // namespace cimtrain
