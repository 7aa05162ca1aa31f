#include "sqzpulse/calibration.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

using nlohmann::json;

namespace sqz {

namespace {

constexpr double kInverseTolDb = 1e-6; // bisection stop in noise units
constexpr int kFormatVersion = 1;
constexpr const char* kFormatName = "sqzpulse-transfer-function";

bool parse_double(const std::string& text, double& out) {
    try {
        size_t pos = 0;
        out = std::stod(text, &pos);
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
            ++pos;
        return pos == text.size() && std::isfinite(out);
    } catch (const std::exception&) {
        return false;
    }
}

std::string strip(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos)
        return {};
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void row_error(const std::string& source, size_t line, const std::string& what) {
    std::ostringstream msg;
    msg << source << ":" << line << ": " << what;
    throw IngestionError(msg.str());
}

} // namespace

CalibrationSet load_calibration(std::istream& in, const std::string& source_name) {
    CalibrationSet set;
    set.source = source_name;

    std::string line;
    size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = strip(line);
        if (t.empty())
            continue;
        if (t[0] == '#') {
            // Metadata comments of the form "# key: value".
            const auto colon = t.find(':');
            if (colon != std::string::npos) {
                const std::string key = strip(t.substr(1, colon - 1));
                const std::string val = strip(t.substr(colon + 1));
                double num = 0.0;
                if (key == "center_frequency_hz" && parse_double(val, num))
                    set.center_frequency_hz = num;
                else if (key == "rbw_hz" && parse_double(val, num))
                    set.rbw_hz = num;
            }
            continue;
        }
        if (!header_seen) {
            std::string h = t;
            h.erase(std::remove_if(h.begin(), h.end(),
                                   [](unsigned char c) { return std::isspace(c); }),
                    h.end());
            if (h != "b_mG,squeezed_dB,antisqueezed_dB")
                row_error(source_name, line_no,
                          "expected header 'b_mG,squeezed_dB,antisqueezed_dB', got '" + t + "'");
            header_seen = true;
            continue;
        }
        std::array<std::string, 3> field;
        size_t start = 0;
        for (int i = 0; i < 3; ++i) {
            const auto comma = t.find(',', start);
            if (i < 2 && comma == std::string::npos)
                row_error(source_name, line_no, "expected 3 comma-separated values");
            field[i] = strip(t.substr(start, comma == std::string::npos ? std::string::npos
                                                                        : comma - start));
            start = comma + 1;
            if (i == 2 && comma != std::string::npos)
                row_error(source_name, line_no, "expected 3 comma-separated values");
        }
        CalibrationPoint p;
        if (!parse_double(field[0], p.b_mg) || !parse_double(field[1], p.squeezed_db) ||
            !parse_double(field[2], p.antisqueezed_db))
            row_error(source_name, line_no, "malformed numeric value");
        if (p.squeezed_db > p.antisqueezed_db)
            row_error(source_name, line_no, "squeezed_dB above antisqueezed_dB");
        set.points.push_back(p);
    }
    if (!header_seen)
        throw IngestionError(source_name + ": empty calibration file");
    if (set.points.empty())
        throw IngestionError(source_name + ": no data rows");

    std::sort(set.points.begin(), set.points.end(),
              [](const CalibrationPoint& a, const CalibrationPoint& b) { return a.b_mg < b.b_mg; });
    for (size_t i = 1; i < set.points.size(); ++i)
        if (set.points[i].b_mg == set.points[i - 1].b_mg) {
            std::ostringstream msg;
            msg << source_name << ": duplicate field value " << set.points[i].b_mg << " mG";
            throw IngestionError(msg.str());
        }

    // A sign branch that contributes data must have enough of it to fit.
    // (A branch with no data at all is fine: the fit mirrors the other one.)
    size_t neg = 0, pos = 0, origin = 0;
    for (const auto& p : set.points) {
        if (p.b_mg < 0.0)
            ++neg;
        else if (p.b_mg > 0.0)
            ++pos;
        else
            ++origin;
    }
    const auto check = [&](size_t side, const char* name) {
        if (side > 0 && side + origin < 4) {
            std::ostringstream msg;
            msg << source_name << ": " << name << " branch has " << (side + origin)
                << " points, need at least 4";
            throw IngestionError(msg.str());
        }
    };
    check(neg, "negative");
    check(pos, "positive");
    if (neg == 0 && pos == 0)
        throw IngestionError(source_name + ": sweep contains only B = 0");
    if (neg + origin < 4 && pos + origin < 4)
        throw IngestionError(source_name + ": fewer than 4 points on every branch");
    return set;
}

CalibrationSet load_calibration_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IngestionError(path + ": cannot open calibration file");
    return load_calibration(in, path);
}

double synth_squeezed_db(double b_mg, const SynthParams& p) {
    return -p.depth_db * std::exp(-std::fabs(b_mg) / p.b0_mg);
}

double synth_antisqueezed_db(double b_mg, const SynthParams& p) {
    return p.anti_base_db + p.anti_rise_db * (1.0 - std::exp(-std::fabs(b_mg) / p.anti_b0_mg));
}

CalibrationSet synth_calibration(const SynthParams& p) {
    if (p.n_points < 2 || !(p.b_max_mg > 0.0) || !(p.b0_mg > 0.0) || !(p.anti_b0_mg > 0.0))
        throw std::invalid_argument("synth_calibration: bad grid or scale parameters");
    std::mt19937_64 rng(p.seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    CalibrationSet set;
    set.source = "synthetic";
    for (int i = 0; i < p.n_points; ++i) {
        const double b = -p.b_max_mg + 2.0 * p.b_max_mg * double(i) / double(p.n_points - 1);
        CalibrationPoint pt;
        pt.b_mg = b;
        pt.squeezed_db = synth_squeezed_db(b, p);
        pt.antisqueezed_db = synth_antisqueezed_db(b, p);
        if (p.noise_sigma_db > 0.0) {
            pt.squeezed_db += p.noise_sigma_db * noise(rng);
            pt.antisqueezed_db += p.noise_sigma_db * noise(rng);
        }
        set.points.push_back(pt);
    }
    return set;
}

namespace {

struct BranchData {
    std::vector<double> b_abs;   // 0 = origin knot, then |B| ascending
    std::vector<double> y[2];    // raw values per quadrature
};

double value_of(const CalibrationPoint& p, Quadrature q) {
    return q == Quadrature::squeezed ? p.squeezed_db : p.antisqueezed_db;
}

} // namespace

TransferFunction fit_transfer(const CalibrationSet& set, const FitOptions& options) {
    const auto& pts = set.points;
    if (pts.size() < 4)
        throw FitError("fit_transfer: fewer than 4 calibration points", 0.0);

    std::vector<CalibrationPoint> neg, pos;
    const CalibrationPoint* origin = nullptr;
    for (const auto& p : pts) {
        if (p.b_mg < 0.0)
            neg.push_back(p);
        else if (p.b_mg > 0.0)
            pos.push_back(p);
        else
            origin = &p;
    }
    std::reverse(neg.begin(), neg.end()); // ascending |B|

    TransferFunction tf;
    tf.source_ = set.source;
    tf.center_frequency_hz_ = set.center_frequency_hz;
    tf.rbw_hz_ = set.rbw_hz;

    // Origin knot shared by both branches. Without a measured B = 0 row it
    // is taken from the straight line between the innermost points (or its
    // one-sided analogue for single-sign sweeps), never above the innermost
    // value so branch monotonicity survives.
    double origin_val[2];
    for (int qi = 0; qi < 2; ++qi) {
        const Quadrature q = static_cast<Quadrature>(qi);
        if (origin) {
            origin_val[qi] = value_of(*origin, q);
        } else if (!neg.empty() && !pos.empty()) {
            const double bl = -neg.front().b_mg, yl = value_of(neg.front(), q);
            const double br = pos.front().b_mg, yr = value_of(pos.front(), q);
            const double interp = (yl * br + yr * bl) / (bl + br);
            origin_val[qi] = std::min(interp, std::min(yl, yr));
        } else {
            const auto& side = pos.empty() ? neg : pos;
            const double b1 = std::fabs(side[0].b_mg), y1 = value_of(side[0], q);
            const double b2 = std::fabs(side[1].b_mg), y2 = value_of(side[1], q);
            const double extrap = y1 - (y2 - y1) / (b2 - b1) * b1;
            origin_val[qi] = std::min(extrap, y1);
        }
    }

    const bool mirror = neg.empty() || pos.empty();
    tf.symmetry_assumed_ = mirror;
    const std::vector<CalibrationPoint>& lone = pos.empty() ? neg : pos;

    const auto assemble = [&](const std::vector<CalibrationPoint>& side) {
        BranchData d;
        d.b_abs.push_back(0.0);
        d.y[0].push_back(origin_val[0]);
        d.y[1].push_back(origin_val[1]);
        for (const auto& p : side) {
            d.b_abs.push_back(std::fabs(p.b_mg));
            d.y[0].push_back(value_of(p, Quadrature::squeezed));
            d.y[1].push_back(value_of(p, Quadrature::antisqueezed));
        }
        return d;
    };

    BranchData data[2]; // [Branch::negative, Branch::positive]
    data[0] = assemble(mirror ? lone : neg);
    data[1] = assemble(mirror ? lone : pos);

    for (int qi = 0; qi < 2; ++qi) {
        std::vector<double> fit[2];
        for (int bi = 0; bi < 2; ++bi) {
            fit[bi] = isotonic_non_decreasing(data[bi].y[qi]);
            double ss = 0.0;
            for (size_t k = 0; k < fit[bi].size(); ++k) {
                const double r = fit[bi][k] - data[bi].y[qi][k];
                ss += r * r;
            }
            const double rms = std::sqrt(ss / double(fit[bi].size()));
            tf.isotonic_rms_[qi][bi] = rms;
            if (rms > options.max_isotonic_rms_db) {
                std::ostringstream msg;
                msg << "fit_transfer: " << (bi == 0 ? "negative" : "positive")
                    << " branch of the " << (qi == 0 ? "squeezed" : "antisqueezed")
                    << " quadrature is not monotone in |B| (isotonic RMS residual " << rms
                    << " dB exceeds " << options.max_isotonic_rms_db << " dB)";
                throw FitError(msg.str(), rms);
            }
        }
        // Pin the shared origin to the lower of the two branch fits; this
        // keeps both branches non-decreasing and the map continuous at 0.
        const double shared = std::min(fit[0].front(), fit[1].front());
        fit[0].front() = shared;
        fit[1].front() = shared;
        for (int bi = 0; bi < 2; ++bi)
            tf.curves_[qi][bi] = MonotoneCubic(data[bi].b_abs, fit[bi]);
    }
    return tf;
}

const MonotoneCubic& TransferFunction::curve(Quadrature q, Branch b) const {
    return curves_[static_cast<int>(q)][static_cast<int>(b)];
}

double TransferFunction::noise_at_field(double b_mg, Quadrature q, bool* clamped) const {
    const Branch br = b_mg < 0.0 ? Branch::negative : Branch::positive;
    const MonotoneCubic& c = curve(q, br);
    const double babs = std::fabs(b_mg);
    if (clamped)
        *clamped = babs > c.back_x();
    return c(babs);
}

double TransferFunction::field_for_noise(double target_db, Branch branch, Quadrature q) const {
    const MonotoneCubic& c = curve(q, branch);
    const double lo = c.front_y();
    const double hi = c.back_y();
    if (target_db < lo - 1e-9 || target_db > hi + 1e-9) {
        std::ostringstream msg;
        msg << "field_for_noise: target " << target_db << " dB outside the reachable interval ["
            << lo << ", " << hi << "] dB on the " << (branch == Branch::negative ? "negative" : "positive")
            << " branch";
        throw UnreachableTargetError(msg.str(), lo, hi);
    }
    const double t = std::clamp(target_db, lo, hi);
    double a = 0.0, b = c.back_x();
    // The branch map is non-decreasing in |B|; plain bisection suffices.
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (a + b);
        const double v = c(mid);
        if (std::fabs(v - t) < kInverseTolDb || (b - a) < 1e-13 * std::max(1.0, c.back_x())) {
            a = b = mid;
            break;
        }
        if (v < t)
            a = mid;
        else
            b = mid;
    }
    const double babs = 0.5 * (a + b);
    return branch == Branch::negative ? -babs : babs;
}

double TransferFunction::n_min_db(Quadrature q) const {
    return curve(q, Branch::positive).front_y();
}

double TransferFunction::n_sat_db(Branch branch, Quadrature q) const {
    return curve(q, branch).back_y();
}

double TransferFunction::field_limit_mg(Branch branch) const {
    return curve(Quadrature::squeezed, branch).back_x();
}

double TransferFunction::isotonic_rms_db(Quadrature q, Branch b) const {
    return isotonic_rms_[static_cast<int>(q)][static_cast<int>(b)];
}

std::string TransferFunction::to_json() const {
    json j;
    j["format"] = kFormatName;
    j["version"] = kFormatVersion;
    j["symmetry_assumed"] = symmetry_assumed_;
    j["n_min_db"] = n_min_db();
    const char* branch_name[2] = {"negative", "positive"};
    const char* quad_name[2] = {"squeezed", "antisqueezed"};
    for (int bi = 0; bi < 2; ++bi) {
        json b;
        b["b_abs_mg"] = curves_[0][bi].knots();
        for (int qi = 0; qi < 2; ++qi)
            b[std::string(quad_name[qi]) + "_db"] = curves_[qi][bi].values();
        j["branches"][branch_name[bi]] = b;
    }
    for (int qi = 0; qi < 2; ++qi)
        for (int bi = 0; bi < 2; ++bi)
            j["fit"]["isotonic_rms_db"][quad_name[qi]][branch_name[bi]] = isotonic_rms_[qi][bi];
    j["metadata"]["source"] = source_;
    if (center_frequency_hz_)
        j["metadata"]["center_frequency_hz"] = *center_frequency_hz_;
    if (rbw_hz_)
        j["metadata"]["rbw_hz"] = *rbw_hz_;
    return j.dump(2) + "\n";
}

TransferFunction TransferFunction::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw IngestionError(std::string("transfer function: invalid JSON: ") + e.what());
    }
    if (j.value("format", "") != kFormatName)
        throw IngestionError("transfer function: unrecognized format tag");
    if (j.value("version", -1) != kFormatVersion)
        throw IngestionError("transfer function: unsupported version");
    TransferFunction tf;
    try {
        tf.symmetry_assumed_ = j.at("symmetry_assumed").get<bool>();
        const char* branch_name[2] = {"negative", "positive"};
        const char* quad_name[2] = {"squeezed", "antisqueezed"};
        for (int bi = 0; bi < 2; ++bi) {
            const json& b = j.at("branches").at(branch_name[bi]);
            const auto knots = b.at("b_abs_mg").get<std::vector<double>>();
            for (int qi = 0; qi < 2; ++qi) {
                auto vals = b.at(std::string(quad_name[qi]) + "_db").get<std::vector<double>>();
                tf.curves_[qi][bi] = MonotoneCubic(knots, std::move(vals));
            }
        }
        if (j.contains("fit") && j["fit"].contains("isotonic_rms_db"))
            for (int qi = 0; qi < 2; ++qi)
                for (int bi = 0; bi < 2; ++bi)
                    tf.isotonic_rms_[qi][bi] =
                        j["fit"]["isotonic_rms_db"][quad_name[qi]].value(branch_name[bi], 0.0);
        const json& meta = j.value("metadata", json::object());
        tf.source_ = meta.value("source", "");
        if (meta.contains("center_frequency_hz"))
            tf.center_frequency_hz_ = meta["center_frequency_hz"].get<double>();
        if (meta.contains("rbw_hz"))
            tf.rbw_hz_ = meta["rbw_hz"].get<double>();
    } catch (const json::exception& e) {
        throw IngestionError(std::string("transfer function: missing or bad field: ") + e.what());
    }
    return tf;
}

void TransferFunction::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write transfer function to " + path);
    out << to_json();
}

TransferFunction TransferFunction::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IngestionError("cannot open transfer function " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

} // namespace sqz
