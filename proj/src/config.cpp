#include "cimtrain/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cimtrain/catalog.hpp"
#include "cimtrain/errors.hpp"

namespace cimtrain {

namespace {

using json = nlohmann::json;

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "device",        "topology",       "weight_bits",
        "activation_bits", "error_bits",   "gradient_bits",
        "batch_size",    "epochs",         "batches_per_epoch",
        "lr",            "beta",           "use_momentum",
        "array_rows",    "array_cols",     "arrays_per_pe",
        "pes_per_tile",  "max_tiles",      "adc_bits",
        "adc_mode",      "readout",        "compute",
        "cost_table",    "buffer_overhead_constraint",
        "train_samples", "test_samples",   "seed",
        "output_dir"};
    return keys;
}

template <typename T>
T get_field(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(key, "wrong type");
    }
}

DeviceSpec inline_device_from(const json& j);

}  // namespace

void RunConfig::validate() {
    if (!inline_device) device = device_by_name(device_name);
    try {
        device.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("device", e.what());
    }
    if (topology.empty()) throw ConfigError("topology", "must name a topology");
    auto bits_ok = [](const char* field, int b) {
        if (b != 0 && (b < 2 || b > 16))
            throw ConfigError(field, "precision must be 0 (default) or 2..16 bits");
    };
    bits_ok("weight_bits", weight_bits);
    bits_ok("activation_bits", activation_bits);
    bits_ok("error_bits", error_bits);
    bits_ok("gradient_bits", gradient_bits);
    if (batch_size < 1) throw ConfigError("batch_size", "must be >= 1");
    if (epochs < 1) throw ConfigError("epochs", "must be >= 1");
    if (batches_per_epoch < 0) throw ConfigError("batches_per_epoch", "must be >= 0");
    if (!(lr > 0)) throw ConfigError("lr", "must be > 0");
    if (!(beta >= 0 && beta < 1)) throw ConfigError("beta", "must lie in [0, 1)");
    if (hw.array_rows < 1 || hw.array_cols < 1)
        throw ConfigError("array_rows", "array geometry must be positive");
    if (hw.arrays_per_pe < 1) throw ConfigError("arrays_per_pe", "must be >= 1");
    if (hw.pes_per_tile < 1) throw ConfigError("pes_per_tile", "must be >= 1");
    if (hw.max_tiles < 0) throw ConfigError("max_tiles", "must be >= 0");
    if (adc_bits < 1 || adc_bits > 16) throw ConfigError("adc_bits", "must be 1..16");
    if (adc_mode != "off" && adc_mode != "linear" && adc_mode != "quantile")
        throw ConfigError("adc_mode", "must be off, linear or quantile");
    if (readout != "parallel" && readout != "sequential")
        throw ConfigError("readout", "must be parallel or sequential");
    if (compute != "cim" && compute != "exact")
        throw ConfigError("compute", "must be cim or exact");
    if (!cost_table_path.empty() && !std::filesystem::exists(cost_table_path))
        throw ConfigError("cost_table", "file does not exist: " + cost_table_path);
    if (!(buffer_overhead_constraint >= 1.0))
        throw ConfigError("buffer_overhead_constraint", "ratio must be >= 1");
    if (train_samples < batch_size)
        throw ConfigError("train_samples", "must cover at least one batch");
    if (test_samples < 1) throw ConfigError("test_samples", "must be >= 1");
    if (output_dir.empty()) throw ConfigError("output_dir", "must not be empty");
}

AdcMode RunConfig::adc_mode_enum() const {
    if (adc_mode == "off") return AdcMode::off;
    if (adc_mode == "quantile") return AdcMode::quantile;
    return AdcMode::linear;
}

ReadoutMode RunConfig::readout_enum() const {
    return readout == "sequential" ? ReadoutMode::sequential : ReadoutMode::parallel;
}

ComputeMode RunConfig::compute_enum() const {
    return compute == "exact" ? ComputeMode::exact : ComputeMode::cim;
}

TrainParams RunConfig::train_params() const {
    TrainParams p;
    p.batch_size = batch_size;
    p.lr = lr;
    p.beta = beta;
    p.use_momentum = use_momentum;
    return p;
}

namespace {

DeviceSpec inline_device_from(const json& dj) {
    DeviceSpec d;
    try {
        d.name = dj.at("name").get<std::string>();
        const std::string kind = dj.value("kind", std::string("analog_envm"));
        if (kind == "sram")
            d.kind = DeviceKind::sram;
        else if (kind == "analog_envm")
            d.kind = DeviceKind::analog_envm;
        else
            throw ConfigError("device.kind", "must be 'sram' or 'analog_envm'");
        d.num_states = dj.value("num_states", d.num_states);
        d.r_on = dj.value("r_on", d.r_on);
        d.on_off_ratio = dj.value("on_off_ratio", d.on_off_ratio);
        d.nl_ltp = dj.value("nl_ltp", d.nl_ltp);
        d.nl_ltd = dj.value("nl_ltd", d.nl_ltd);
        d.nl_ltd_negative = dj.value("nl_ltd_negative", d.nl_ltd_negative);
        d.c2c_sigma = dj.value("c2c_sigma", d.c2c_sigma);
        d.d2d_sigma = dj.value("d2d_sigma", d.d2d_sigma);
        d.write_voltage_ltp = dj.value("write_voltage_ltp", d.write_voltage_ltp);
        d.write_voltage_ltd = dj.value("write_voltage_ltd", d.write_voltage_ltd);
        d.write_pulse_width = dj.value("write_pulse_width", d.write_pulse_width);
        d.sram_cells_per_weight = dj.value("sram_cells_per_weight", d.sram_cells_per_weight);
        d.notes = dj.value("notes", std::string());
    } catch (const json::exception& e) {
        throw ConfigError("device", std::string("bad inline device: ") + e.what());
    }
    return d;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError("config", std::string("JSON parse failure: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config", "top level must be an object");
    for (const auto& [key, val] : j.items()) {
        (void)val;
        if (known_keys().count(key) == 0)
            throw ConfigError(key, "unknown config field");
    }

    RunConfig cfg;
    if (j.contains("device")) {
        const json& dj = j.at("device");
        if (dj.is_string()) {
            cfg.device_name = dj.get<std::string>();
        } else if (dj.is_object()) {
            cfg.inline_device = true;
            cfg.device = inline_device_from(dj);
            cfg.device_name = cfg.device.name;
        } else {
            throw ConfigError("device", "must be a catalog name or an object");
        }
    }
    cfg.topology = get_field(j, "topology", cfg.topology);
    cfg.weight_bits = get_field(j, "weight_bits", cfg.weight_bits);
    cfg.activation_bits = get_field(j, "activation_bits", cfg.activation_bits);
    cfg.error_bits = get_field(j, "error_bits", cfg.error_bits);
    cfg.gradient_bits = get_field(j, "gradient_bits", cfg.gradient_bits);
    cfg.batch_size = get_field(j, "batch_size", cfg.batch_size);
    cfg.epochs = get_field(j, "epochs", cfg.epochs);
    cfg.batches_per_epoch = get_field(j, "batches_per_epoch", cfg.batches_per_epoch);
    cfg.lr = get_field(j, "lr", cfg.lr);
    cfg.beta = get_field(j, "beta", cfg.beta);
    cfg.use_momentum = get_field(j, "use_momentum", cfg.use_momentum);
    cfg.hw.array_rows = get_field(j, "array_rows", cfg.hw.array_rows);
    cfg.hw.array_cols = get_field(j, "array_cols", cfg.hw.array_cols);
    cfg.hw.arrays_per_pe = get_field(j, "arrays_per_pe", cfg.hw.arrays_per_pe);
    cfg.hw.pes_per_tile = get_field(j, "pes_per_tile", cfg.hw.pes_per_tile);
    cfg.hw.max_tiles = get_field(j, "max_tiles", cfg.hw.max_tiles);
    cfg.adc_bits = get_field(j, "adc_bits", cfg.adc_bits);
    cfg.adc_mode = get_field(j, "adc_mode", cfg.adc_mode);
    cfg.readout = get_field(j, "readout", cfg.readout);
    cfg.compute = get_field(j, "compute", cfg.compute);
    cfg.cost_table_path = get_field(j, "cost_table", cfg.cost_table_path);
    cfg.buffer_overhead_constraint =
        get_field(j, "buffer_overhead_constraint", cfg.buffer_overhead_constraint);
    cfg.train_samples = get_field(j, "train_samples", cfg.train_samples);
    cfg.test_samples = get_field(j, "test_samples", cfg.test_samples);
    cfg.seed = get_field(j, "seed", cfg.seed);
    cfg.output_dir = get_field(j, "output_dir", cfg.output_dir);

    cfg.validate();
    return cfg;
}

std::string serialize_config(const RunConfig& cfg) {
    json j;
    if (cfg.inline_device) {
        json dj;
        dj["name"] = cfg.device.name;
        dj["kind"] = cfg.device.kind == DeviceKind::sram ? "sram" : "analog_envm";
        dj["num_states"] = cfg.device.num_states;
        dj["r_on"] = cfg.device.r_on;
        dj["on_off_ratio"] = cfg.device.on_off_ratio;
        dj["nl_ltp"] = cfg.device.nl_ltp;
        dj["nl_ltd"] = cfg.device.nl_ltd;
        dj["nl_ltd_negative"] = cfg.device.nl_ltd_negative;
        dj["c2c_sigma"] = cfg.device.c2c_sigma;
        dj["d2d_sigma"] = cfg.device.d2d_sigma;
        dj["write_voltage_ltp"] = cfg.device.write_voltage_ltp;
        dj["write_voltage_ltd"] = cfg.device.write_voltage_ltd;
        dj["write_pulse_width"] = cfg.device.write_pulse_width;
        dj["sram_cells_per_weight"] = cfg.device.sram_cells_per_weight;
        dj["notes"] = cfg.device.notes;
        j["device"] = dj;
    } else {
        j["device"] = cfg.device_name;
    }
    j["topology"] = cfg.topology;
    j["weight_bits"] = cfg.weight_bits;
    j["activation_bits"] = cfg.activation_bits;
    j["error_bits"] = cfg.error_bits;
    j["gradient_bits"] = cfg.gradient_bits;
    j["batch_size"] = cfg.batch_size;
    j["epochs"] = cfg.epochs;
    j["batches_per_epoch"] = cfg.batches_per_epoch;
    j["lr"] = cfg.lr;
    j["beta"] = cfg.beta;
    j["use_momentum"] = cfg.use_momentum;
    j["array_rows"] = cfg.hw.array_rows;
    j["array_cols"] = cfg.hw.array_cols;
    j["arrays_per_pe"] = cfg.hw.arrays_per_pe;
    j["pes_per_tile"] = cfg.hw.pes_per_tile;
    j["max_tiles"] = cfg.hw.max_tiles;
    j["adc_bits"] = cfg.adc_bits;
    j["adc_mode"] = cfg.adc_mode;
    j["readout"] = cfg.readout;
    j["compute"] = cfg.compute;
    j["cost_table"] = cfg.cost_table_path;
    j["buffer_overhead_constraint"] = cfg.buffer_overhead_constraint;
    j["train_samples"] = cfg.train_samples;
    j["test_samples"] = cfg.test_samples;
    j["seed"] = cfg.seed;
    j["output_dir"] = cfg.output_dir;
    return j.dump(2) + "\n";
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void save_config(const RunConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write config: " + path);
    out << serialize_config(cfg);
}

}  // namespace cimtrain
