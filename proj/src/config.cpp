#include "sqzpulse/config.hpp"

#include "sqzpulse/errors.hpp"
#include "sqzpulse/io.hpp"

#include <json.hpp>

#include <fstream>
#include <set>

namespace sqz {

namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::set<std::string>& allowed,
                  const std::string& where) {
    for (const auto& item : obj.items())
        if (!allowed.contains(item.key()))
            throw ConfigError(where + ": unknown key '" + item.key() + "'");
}

double number(const json& obj, const std::string& key, double fallback,
              const std::string& where) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
    return v.get<double>();
}

size_t count_of(const json& obj, const std::string& key, size_t fallback,
                const std::string& where) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_unsigned())
        throw ConfigError(where + "." + key + ": expected a non-negative integer");
    return v.get<size_t>();
}

std::string text(const json& obj, const std::string& key, const std::string& fallback,
                 const std::string& where) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_string()) throw ConfigError(where + "." + key + ": expected a string");
    return v.get<std::string>();
}

bool flag(const json& obj, const std::string& key, bool fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_boolean()) throw ConfigError(where + "." + key + ": expected true or false");
    return v.get<bool>();
}

std::optional<double> maybe_number(const json& obj, const std::string& key,
                                   const std::string& where) {
    if (!obj.contains(key)) return std::nullopt;
    const json& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
    return v.get<double>();
}

void parse_pulse(const json& obj, PulseSpec& pulse) {
    require_keys(obj, {"shape", "polarity", "duration_s", "baseline_db", "peak_db",
                       "dt_s", "repetition_period_s"}, "pulse");
    pulse.shape = shape_from_name(text(obj, "shape", shape_name(pulse.shape), "pulse"));
    pulse.polarity =
        polarity_from_name(text(obj, "polarity", polarity_name(pulse.polarity), "pulse"));
    pulse.duration_s = number(obj, "duration_s", pulse.duration_s, "pulse");
    pulse.baseline_db = number(obj, "baseline_db", pulse.baseline_db, "pulse");
    pulse.peak_db = number(obj, "peak_db", pulse.peak_db, "pulse");
    pulse.dt_s = number(obj, "dt_s", pulse.dt_s, "pulse");
    if (obj.contains("repetition_period_s"))
        pulse.repetition_period_s = maybe_number(obj, "repetition_period_s", "pulse");
}

void parse_actuator(const json& obj, std::optional<ActuatorModel>& actuator) {
    require_keys(obj, {"enabled", "bandwidth_hz", "natural_frequency_hz", "damping_ratio",
                       "dc_gain", "slew_limit_mg_per_s", "amplitude_limit_mg"}, "actuator");
    if (!flag(obj, "enabled", true, "actuator")) {
        actuator.reset();
        return;
    }
    ActuatorModel m = actuator.value_or(ActuatorModel::from_bandwidth(1.0e4));
    m.damping_ratio = number(obj, "damping_ratio", m.damping_ratio, "actuator");
    if (obj.contains("natural_frequency_hz") && obj.contains("bandwidth_hz"))
        throw ConfigError("actuator: give either bandwidth_hz or natural_frequency_hz");
    if (obj.contains("natural_frequency_hz"))
        m.natural_frequency_hz = number(obj, "natural_frequency_hz", 0.0, "actuator");
    else if (obj.contains("bandwidth_hz"))
        m = ActuatorModel::from_bandwidth(number(obj, "bandwidth_hz", 0.0, "actuator"),
                                          m.damping_ratio);
    m.dc_gain = number(obj, "dc_gain", m.dc_gain, "actuator");
    if (obj.contains("slew_limit_mg_per_s"))
        m.slew_limit_mg_per_s = maybe_number(obj, "slew_limit_mg_per_s", "actuator");
    if (obj.contains("amplitude_limit_mg"))
        m.amplitude_limit_mg = maybe_number(obj, "amplitude_limit_mg", "actuator");
    m.validate();
    actuator = m;
}

void parse_compile(const json& obj, CompileOptions& opt) {
    require_keys(obj, {"branch", "compensate", "lambda", "clamp_tolerance_db",
                       "rise_time_s", "lead_in_s", "lead_out_s", "periods"}, "compile");
    const std::string branch = text(obj, "branch", opt.branch == Branch::positive
                                                       ? "positive" : "negative", "compile");
    if (branch == "positive") opt.branch = Branch::positive;
    else if (branch == "negative") opt.branch = Branch::negative;
    else throw ConfigError("compile.branch: expected 'positive' or 'negative'");
    opt.compensate = flag(obj, "compensate", opt.compensate, "compile");
    opt.lambda = number(obj, "lambda", opt.lambda, "compile");
    opt.clamp_tolerance_db = number(obj, "clamp_tolerance_db", opt.clamp_tolerance_db, "compile");
    if (obj.contains("rise_time_s")) opt.rise_time_s = maybe_number(obj, "rise_time_s", "compile");
    if (obj.contains("lead_in_s")) opt.lead_in_s = maybe_number(obj, "lead_in_s", "compile");
    if (obj.contains("lead_out_s")) opt.lead_out_s = maybe_number(obj, "lead_out_s", "compile");
    opt.periods = static_cast<int>(
        count_of(obj, "periods", static_cast<size_t>(opt.periods), "compile"));
    if (opt.periods == 0) throw ConfigError("compile.periods: must be at least 1");
}

void parse_budget(const json& obj, LossBudget& budget) {
    require_keys(obj, {"optical_transmission", "detector_qe", "shot_cal_offset_db"}, "budget");
    budget.optical_transmission =
        number(obj, "optical_transmission", budget.optical_transmission, "budget");
    budget.detector_qe = number(obj, "detector_qe", budget.detector_qe, "budget");
    budget.shot_cal_offset_db =
        number(obj, "shot_cal_offset_db", budget.shot_cal_offset_db, "budget");
    budget.validate();
}

void parse_detection(const json& obj, DetectionConfig& det) {
    require_keys(obj, {"center_frequency_hz", "rbw_hz", "vbw_hz", "sample_rate_hz",
                       "n_averages", "seed", "mode", "convention", "apply_budget", "budget"},
                 "detection");
    det.center_frequency_hz =
        number(obj, "center_frequency_hz", det.center_frequency_hz, "detection");
    det.rbw_hz = number(obj, "rbw_hz", det.rbw_hz, "detection");
    det.vbw_hz = number(obj, "vbw_hz", det.vbw_hz, "detection");
    det.sample_rate_hz = number(obj, "sample_rate_hz", det.sample_rate_hz, "detection");
    det.n_averages = static_cast<int>(
        count_of(obj, "n_averages", static_cast<size_t>(det.n_averages), "detection"));
    det.seed = static_cast<uint64_t>(
        count_of(obj, "seed", static_cast<size_t>(det.seed), "detection"));
    det.mode = mode_from_name(text(obj, "mode", mode_name(det.mode), "detection"));
    const std::string conv =
        text(obj, "convention",
             det.convention == ShotConvention::raw ? "raw" : "corrected", "detection");
    if (conv == "raw") det.convention = ShotConvention::raw;
    else if (conv == "corrected") det.convention = ShotConvention::corrected;
    else throw ConfigError("detection.convention: expected 'raw' or 'corrected'");
    det.apply_budget = flag(obj, "apply_budget", det.apply_budget, "detection");
    if (obj.contains("budget")) parse_budget(obj.at("budget"), det.budget);
}

void parse_spectrum(const json& obj, SpectrumRequest& req) {
    require_keys(obj, {"depth_db", "excess_db", "corner_lo_hz", "corner_hi_hz", "lo_order",
                       "hi_order", "f_min_hz", "f_max_hz", "n_points"}, "spectrum");
    req.model.depth_db = number(obj, "depth_db", req.model.depth_db, "spectrum");
    req.model.excess_db = number(obj, "excess_db", req.model.excess_db, "spectrum");
    req.model.corner_lo_hz = number(obj, "corner_lo_hz", req.model.corner_lo_hz, "spectrum");
    req.model.corner_hi_hz = number(obj, "corner_hi_hz", req.model.corner_hi_hz, "spectrum");
    req.model.lo_order = number(obj, "lo_order", req.model.lo_order, "spectrum");
    req.model.hi_order = number(obj, "hi_order", req.model.hi_order, "spectrum");
    req.f_min_hz = number(obj, "f_min_hz", req.f_min_hz, "spectrum");
    req.f_max_hz = number(obj, "f_max_hz", req.f_max_hz, "spectrum");
    req.n_points = count_of(obj, "n_points", req.n_points, "spectrum");
    req.model.validate();
}

} // namespace

JobConfig parse_job(const std::string& json_text, const std::string& origin) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    if (!root.is_object()) throw ConfigError(origin + ": top level must be an object");
    require_keys(root, {"pulse", "actuator", "compile", "detection", "spectrum", "calibration"},
                 origin);
    JobConfig job;
    try {
        if (root.contains("pulse")) {
            parse_pulse(root.at("pulse"), job.pulse);
            job.has_pulse = true;
            job.pulse.validate();
        }
        if (root.contains("actuator")) parse_actuator(root.at("actuator"), job.actuator);
        if (root.contains("compile")) parse_compile(root.at("compile"), job.compile);
        if (root.contains("detection")) parse_detection(root.at("detection"), job.detection);
        if (root.contains("spectrum")) parse_spectrum(root.at("spectrum"), job.spectrum);
        job.calibration_path = text(root, "calibration", "", origin);
        job.detection.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    return job;
}

JobConfig load_job(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open job file: " + path);
    std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_job(body, path);
}

std::vector<std::string> config_echo(const JobConfig& job) {
    std::vector<std::string> lines;
    if (job.has_pulse)
        lines.push_back("pulse: shape=" + std::string(shape_name(job.pulse.shape)) +
                    " polarity=" + std::string(polarity_name(job.pulse.polarity)) +
                    " duration_s=" + format_double(job.pulse.duration_s) +
                    " baseline_db=" + format_double(job.pulse.baseline_db) +
                    " peak_db=" + format_double(job.pulse.peak_db) +
                    " dt_s=" + format_double(job.pulse.dt_s) +
                    (job.pulse.repetition_period_s
                         ? " repetition_period_s=" + format_double(*job.pulse.repetition_period_s)
                         : std::string()));
    if (job.actuator) {
        const ActuatorModel& m = *job.actuator;
        lines.push_back("actuator: natural_frequency_hz=" +
                        format_double(m.natural_frequency_hz) +
                        " damping_ratio=" + format_double(m.damping_ratio) +
                        " dc_gain=" + format_double(m.dc_gain) +
                        (m.slew_limit_mg_per_s
                             ? " slew_limit_mg_per_s=" + format_double(*m.slew_limit_mg_per_s)
                             : std::string()) +
                        (m.amplitude_limit_mg
                             ? " amplitude_limit_mg=" + format_double(*m.amplitude_limit_mg)
                             : std::string()));
    } else {
        lines.push_back("actuator: disabled");
    }
    lines.push_back(std::string("compile: branch=") +
                    (job.compile.branch == Branch::positive ? "positive" : "negative") +
                    " compensate=" + (job.compile.compensate ? "true" : "false") +
                    " lambda=" + format_double(job.compile.lambda) +
                    " clamp_tolerance_db=" + format_double(job.compile.clamp_tolerance_db) +
                    " periods=" + std::to_string(job.compile.periods));
    const DetectionConfig& d = job.detection;
    lines.push_back("detection: mode=" + std::string(mode_name(d.mode)) +
                    " center_frequency_hz=" + format_double(d.center_frequency_hz) +
                    " rbw_hz=" + format_double(d.rbw_hz) + " vbw_hz=" + format_double(d.vbw_hz) +
                    " sample_rate_hz=" + format_double(d.sample_rate_hz) +
                    " n_averages=" + std::to_string(d.n_averages) +
                    " seed=" + std::to_string(d.seed));
    lines.push_back(std::string("convention: ") +
                    (d.convention == ShotConvention::raw ? "raw" : "corrected") +
                    " apply_budget=" + (d.apply_budget ? "true" : "false") +
                    " optical_transmission=" + format_double(d.budget.optical_transmission) +
                    " detector_qe=" + format_double(d.budget.detector_qe) +
                    " shot_cal_offset_db=" + format_double(d.budget.shot_cal_offset_db));
    if (!job.calibration_path.empty()) lines.push_back("calibration: " + job.calibration_path);
    return lines;
}

} // namespace sqz
