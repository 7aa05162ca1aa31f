#pragma once

// Plain-text table output with reproducible formatting: '#' metadata lines,
// a column-name header, and %.12g values. No timestamps anywhere, so a rerun
// with the same inputs is byte-identical.

#include "sqzpulse/compiler.hpp"
#include "sqzpulse/detection.hpp"
#include "sqzpulse/waveform.hpp"

#include <span>
#include <string>
#include <vector>

namespace sqz {

std::string format_double(double v); // %.12g

struct CsvTable {
    std::vector<std::string> metadata;      // '#' lines without the prefix
    std::vector<std::string> column_names;
    std::vector<std::vector<double>> columns;
};

void write_csv(const std::string& path, const CsvTable& table);
CsvTable read_csv(const std::string& path);

/// Waveform round trip as `t_s,value` with a `# unit: ...` metadata line.
void save_waveform(const std::string& path, const Waveform& w,
                   std::span<const std::string> extra_metadata = {});
Waveform load_waveform(const std::string& path);

/// Compiled pulse as the four traces on the shared grid:
/// t_s, target_dB, drive_mG, field_mG, predicted_dB.
void save_compiled(const std::string& path, const CompiledDrive& compiled,
                   std::span<const std::string> extra_metadata = {});
CompiledDrive load_compiled(const std::string& path);

void save_trace(const std::string& path, const NoiseTrace& trace,
                std::span<const std::string> extra_metadata = {});

void save_spectrum(const std::string& path, const SqueezingSpectrum& spectrum,
                   std::span<const std::string> extra_metadata = {});

} // namespace sqz
