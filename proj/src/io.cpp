#include "sqzpulse/io.hpp"

#include "sqzpulse/errors.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace sqz {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

namespace {

std::string trimmed(const std::string& s) {
    size_t a = 0;
    size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(line);
    while (std::getline(in, cur, ',')) out.push_back(trimmed(cur));
    return out;
}

double parse_field(const std::string& s, const std::string& path) {
    try {
        size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IngestionError(path + ": cannot parse numeric field '" + s + "'");
    }
}

} // namespace

void write_csv(const std::string& path, const CsvTable& table) {
    std::ofstream out(path);
    if (!out) throw IngestionError("cannot open for writing: " + path);
    for (const auto& m : table.metadata) out << "# " << m << "\n";
    for (size_t c = 0; c < table.column_names.size(); ++c)
        out << (c ? "," : "") << table.column_names[c];
    out << "\n";
    const size_t rows = table.columns.empty() ? 0 : table.columns.front().size();
    for (const auto& col : table.columns)
        if (col.size() != rows)
            throw IngestionError("ragged table while writing " + path);
    for (size_t r = 0; r < rows; ++r) {
        for (size_t c = 0; c < table.columns.size(); ++c)
            out << (c ? "," : "") << format_double(table.columns[c][r]);
        out << "\n";
    }
    if (!out) throw IngestionError("write failed: " + path);
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot open: " + path);
    CsvTable table;
    std::string line;
    bool have_header = false;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trimmed(line);
        if (t.empty()) continue;
        if (t.front() == '#') {
            if (!have_header) table.metadata.push_back(trimmed(t.substr(1)));
            continue;
        }
        if (!have_header) {
            table.column_names = split_fields(t);
            table.columns.assign(table.column_names.size(), {});
            have_header = true;
            continue;
        }
        const auto fields = split_fields(t);
        if (fields.size() != table.column_names.size())
            throw IngestionError(path + " line " + std::to_string(line_no) + ": row has " +
                                 std::to_string(fields.size()) + " fields, expected " +
                                 std::to_string(table.column_names.size()));
        for (size_t c = 0; c < fields.size(); ++c)
            table.columns[c].push_back(parse_field(fields[c], path));
    }
    if (!have_header) throw IngestionError(path + ": no header row");
    return table;
}

namespace {

const std::vector<double>& column(const CsvTable& t, const std::string& name,
                                  const std::string& path) {
    for (size_t c = 0; c < t.column_names.size(); ++c)
        if (t.column_names[c] == name) return t.columns[c];
    throw IngestionError(path + ": missing column '" + name + "'");
}

std::string metadata_value(const CsvTable& t, const std::string& key) {
    const std::string prefix = key + ":";
    for (const auto& m : t.metadata)
        if (m.rfind(prefix, 0) == 0) return trimmed(m.substr(prefix.size()));
    return {};
}

double grid_step(const std::vector<double>& t, const std::string& path) {
    if (t.size() < 2) throw IngestionError(path + ": need at least two rows");
    return (t.back() - t.front()) / static_cast<double>(t.size() - 1);
}

} // namespace

void save_waveform(const std::string& path, const Waveform& w,
                   std::span<const std::string> extra_metadata) {
    w.validate();
    CsvTable table;
    table.metadata.assign(extra_metadata.begin(), extra_metadata.end());
    table.metadata.push_back(std::string("unit: ") + unit_name(w.unit));
    table.column_names = {"t_s", "value"};
    std::vector<double> t(w.size());
    for (size_t i = 0; i < t.size(); ++i) t[i] = w.time(i);
    table.columns = {std::move(t), w.samples};
    write_csv(path, table);
}

Waveform load_waveform(const std::string& path) {
    const CsvTable table = read_csv(path);
    const auto& t = column(table, "t_s", path);
    Waveform w;
    w.samples = column(table, "value", path);
    w.dt = grid_step(t, path);
    const std::string unit = metadata_value(table, "unit");
    w.unit = unit.empty() ? WaveformUnit::milligauss : unit_from_name(unit);
    w.validate();
    return w;
}

void save_compiled(const std::string& path, const CompiledDrive& compiled,
                   std::span<const std::string> extra_metadata) {
    CsvTable table;
    table.metadata.assign(extra_metadata.begin(), extra_metadata.end());
    table.column_names = {"t_s", "target_dB", "drive_mG", "field_mG", "predicted_dB"};
    const Waveform& ref = compiled.target_noise;
    std::vector<double> t(ref.size());
    for (size_t i = 0; i < t.size(); ++i) t[i] = ref.time(i);
    table.columns = {std::move(t), compiled.target_noise.samples,
                     compiled.drive_field.samples, compiled.predicted_field.samples,
                     compiled.predicted_noise.samples};
    write_csv(path, table);
}

CompiledDrive load_compiled(const std::string& path) {
    const CsvTable table = read_csv(path);
    const auto& t = column(table, "t_s", path);
    const double dt = grid_step(t, path);
    CompiledDrive compiled;
    compiled.target_noise = {column(table, "target_dB", path), dt, WaveformUnit::decibel};
    compiled.drive_field = {column(table, "drive_mG", path), dt, WaveformUnit::milligauss};
    compiled.predicted_field = {column(table, "field_mG", path), dt, WaveformUnit::milligauss};
    compiled.predicted_noise = {column(table, "predicted_dB", path), dt, WaveformUnit::decibel};
    compiled.target_noise.validate();
    return compiled;
}

void save_trace(const std::string& path, const NoiseTrace& trace,
                std::span<const std::string> extra_metadata) {
    CsvTable table;
    table.metadata.assign(extra_metadata.begin(), extra_metadata.end());
    table.metadata.push_back(std::string("mode: ") + mode_name(trace.mode));
    table.metadata.push_back("seed: " + std::to_string(trace.seed));
    table.column_names = {"t_s", "noise_dB", "shot_dB"};
    std::vector<double> ref(trace.level_db.size(), trace.reference_db);
    table.columns = {trace.time_s, trace.level_db, std::move(ref)};
    write_csv(path, table);
}

void save_spectrum(const std::string& path, const SqueezingSpectrum& spectrum,
                   std::span<const std::string> extra_metadata) {
    CsvTable table;
    table.metadata.assign(extra_metadata.begin(), extra_metadata.end());
    table.column_names = {"f_Hz", "squeezed_dB", "antisqueezed_dB"};
    table.columns = {spectrum.frequency_hz, spectrum.squeezed_db, spectrum.antisqueezed_db};
    write_csv(path, table);
}

} // namespace sqz
