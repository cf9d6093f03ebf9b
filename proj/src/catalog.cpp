#include "cimtrain/catalog.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include <json.hpp>

#include "cimtrain/errors.hpp"

namespace cimtrain {

namespace {

using json = nlohmann::json;

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

DeviceSpec sram_entry(const std::string& name, const std::string& notes) {
    DeviceSpec d;
    d.name = name;
    d.kind = DeviceKind::sram;
    d.num_states = 31;  // 31 signed 5-bit weight levels -> 30 update steps
    d.sram_cells_per_weight = 5;
    // R_on / on-off have no physical meaning for SRAM; nominal values keep the
    // conductance map well defined
    d.r_on = 1e5;
    d.on_off_ratio = 10.0;
    d.nl_ltp = 0.01;
    d.nl_ltd = 0.01;
    d.c2c_sigma = 0.0;
    d.d2d_sigma = 0.0;
    d.write_voltage_ltp = 0.7;
    d.write_voltage_ltd = 0.7;
    d.write_pulse_width = 1e-9;
    d.notes = notes;
    return d;
}

DeviceSpec envm_entry(const std::string& name, int states, double r_on, double on_off,
                      double nl_ltp, double nl_ltd_mag, bool ltd_negative, double c2c,
                      double v_ltp, double v_ltd, double width, const std::string& notes) {
    DeviceSpec d;
    d.name = name;
    d.kind = DeviceKind::analog_envm;
    d.num_states = states;
    d.r_on = r_on;
    d.on_off_ratio = on_off;
    d.nl_ltp = nl_ltp;
    d.nl_ltd = nl_ltd_mag;
    d.nl_ltd_negative = ltd_negative;
    d.c2c_sigma = c2c;
    d.d2d_sigma = 0.0;
    d.write_voltage_ltp = v_ltp;
    d.write_voltage_ltd = v_ltd;
    d.write_pulse_width = width;
    d.notes = notes;
    return d;
}

std::vector<DeviceSpec> build_catalog() {
    std::vector<DeviceSpec> v;
    v.push_back(sram_entry("SRAM_7nm_sequential", "7 nm LSTP; sequential read-out; "
                                                  "5-bit weights, 1-bit cells"));
    v.push_back(sram_entry("SRAM_7nm_parallel", "7 nm LSTP; parallel read-out; "
                                                "5-bit weights, 1-bit cells"));
    v.push_back(sram_entry("SRAM_32nm_sequential", "32 nm LSTP; sequential read-out; "
                                                   "5-bit weights, 1-bit cells"));
    v.push_back(sram_entry("SRAM_32nm_parallel", "32 nm LSTP; parallel read-out; "
                                                 "5-bit weights, 1-bit cells"));
    v.push_back(envm_entry("Ag:a-Si", 97, 26e6, 12.5, 2.4, 4.88, true, 0.035, 3.2, 2.8,
                           300e-6,
                           "32 nm; 6-bit weights; write polarity +3.2 V / -2.8 V"));
    v.push_back(envm_entry("PCMO", 50, 23e6, 6.84, 3.58, 6.76, true, 0.01, 2.0, 2.0, 1e-3,
                           "32 nm; 5-bit weights; C2C spec '<1%'; "
                           "write polarity -2 V / +2 V"));
    v.push_back(envm_entry("AlOx/HfO2", 40, 16.9e3, 4.43, 1.94, 0.61, true, 0.05, 0.9, 1.0,
                           100e-6,
                           "32 nm; 5-bit weights; write polarity +0.9 V / -1 V"));
    v.push_back(envm_entry("TaOx/HfOx", 128, 100e3, 10.0, 0.04, 0.63, true, 0.037, 1.6,
                           1.5, 50e-9,
                           "32 nm; 7-bit weights; write polarity +1.6 V / +1.5 V"));
    v.push_back(envm_entry("EpiRAM", 64, 81e3, 50.2, 0.5, 0.5, true, 0.02, 5.0, 3.0, 5e-6,
                           "32 nm; 6-bit weights; write polarity +5 V / -3 V"));
    v.push_back(envm_entry("FeFET", 32, 500e3, 100.0, 1.75, 1.46, false, 0.005, 3.65,
                           2.95, 75e-9,
                           "HZO FeFET; 32 nm; 5-bit weights; C2C spec '<0.5%'; "
                           "write polarity +3.65 V / -2.95 V"));
    for (const DeviceSpec& d : v) d.validate();
    return v;
}

json device_to_json(const DeviceSpec& d) {
    json j;
    j["name"] = d.name;
    j["kind"] = d.kind == DeviceKind::sram ? "sram" : "analog_envm";
    j["num_states"] = d.num_states;
    j["r_on"] = d.r_on;
    j["on_off_ratio"] = d.on_off_ratio;
    j["nl_ltp"] = d.nl_ltp;
    j["nl_ltd"] = d.nl_ltd;
    j["nl_ltd_negative"] = d.nl_ltd_negative;
    j["c2c_sigma"] = d.c2c_sigma;
    j["d2d_sigma"] = d.d2d_sigma;
    j["write_voltage_ltp"] = d.write_voltage_ltp;
    j["write_voltage_ltd"] = d.write_voltage_ltd;
    j["write_pulse_width"] = d.write_pulse_width;
    j["sram_cells_per_weight"] = d.sram_cells_per_weight;
    j["notes"] = d.notes;
    return j;
}

DeviceSpec device_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("device", "catalog record must be an object");
    DeviceSpec d;
    try {
        d.name = j.at("name").get<std::string>();
        const std::string kind = j.value("kind", std::string("analog_envm"));
        if (kind == "sram")
            d.kind = DeviceKind::sram;
        else if (kind == "analog_envm")
            d.kind = DeviceKind::analog_envm;
        else
            throw ConfigError("device.kind", "must be 'sram' or 'analog_envm'");
        d.num_states = j.value("num_states", d.num_states);
        d.r_on = j.value("r_on", d.r_on);
        d.on_off_ratio = j.value("on_off_ratio", d.on_off_ratio);
        d.nl_ltp = j.value("nl_ltp", d.nl_ltp);
        d.nl_ltd = j.value("nl_ltd", d.nl_ltd);
        d.nl_ltd_negative = j.value("nl_ltd_negative", d.nl_ltd_negative);
        d.c2c_sigma = j.value("c2c_sigma", d.c2c_sigma);
        d.d2d_sigma = j.value("d2d_sigma", d.d2d_sigma);
        d.write_voltage_ltp = j.value("write_voltage_ltp", d.write_voltage_ltp);
        d.write_voltage_ltd = j.value("write_voltage_ltd", d.write_voltage_ltd);
        d.write_pulse_width = j.value("write_pulse_width", d.write_pulse_width);
        d.sram_cells_per_weight = j.value("sram_cells_per_weight", d.sram_cells_per_weight);
        d.notes = j.value("notes", std::string());
    } catch (const json::exception& e) {
        throw ConfigError("device", std::string("bad catalog record: ") + e.what());
    }
    try {
        d.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("device", "record '" + d.name + "': " + e.what());
    }
    return d;
}

}  // namespace

const std::vector<DeviceSpec>& device_catalog() {
    static const std::vector<DeviceSpec> catalog = build_catalog();
    return catalog;
}

DeviceSpec device_by_name(const std::string& name) {
    const std::string want = lower(name);
    if (want == "sram") return device_by_name("SRAM_32nm_parallel");
    for (const DeviceSpec& d : device_catalog())
        if (lower(d.name) == want) return d;
    std::string known;
    for (const DeviceSpec& d : device_catalog()) {
        if (!known.empty()) known += ", ";
        known += d.name;
    }
    throw ConfigError("device", "unknown device '" + name + "' (catalog: " + known + ")");
}

std::vector<DeviceSpec> load_device_catalog(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open device catalog: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("device_catalog", "parse failure in " + path + ": " + e.what());
    }
    if (!j.is_array()) throw ConfigError("device_catalog", "top level must be an array");
    std::vector<DeviceSpec> out;
    for (const json& rec : j) out.push_back(device_from_json(rec));
    return out;
}

void save_device_catalog(const std::vector<DeviceSpec>& devices, const std::string& path) {
    json j = json::array();
    for (const DeviceSpec& d : devices) j.push_back(device_to_json(d));
    std::ofstream out(path);
    if (!out) throw IoError("cannot write device catalog: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace cimtrain
