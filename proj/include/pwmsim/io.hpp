// Copyright 2026 The pwmsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pwmsim/experiments.hpp"

namespace pwmsim {

inline constexpr int kSchemaVersion = 1;

struct SignalConfig {
    std::string kind = "sinusoid";  // sinusoid | sum | triangle | sawtooth | constant | tabulated
    double amp = 1.0;
    double freq_mhz = 0.05;
    double phase_rad = 0.0;
    std::vector<Tone> tones;
    bool normalize = true;
    double value = 0.0;
    double t0_us = 0.0;
    double dt_us = 0.0;
    std::vector<double> samples;
    double band_min_mhz = 0.0;
    double band_max_mhz = 0.0;
    std::optional<double> period_us;
    std::string file;  // two-column CSV (t_us, value) the table was read from

    [[nodiscard]] ControlSignal build() const;
    [[nodiscard]] nlohmann::json to_json() const;
};

/// Everything a run needs. Study fields left unset take per-command defaults.
struct RunConfig {
    // model
    int qubits = 1;
    double kappa1 = 1.0;
    double kappa2 = 0.0;
    std::vector<SignalConfig> signals{SignalConfig{}};
    // method
    int pulse_number = 20;
    std::optional<double> xi;
    int l_max = 50;
    std::optional<int> n_max;
    bool gaussian = false;
    double reference_tolerance = 1e-10;
    int reference_max_refinement = 1 << 14;
    // study
    std::optional<std::string> axis;
    std::optional<std::vector<double>> times_us;
    std::optional<std::vector<double>> values;
    std::optional<std::vector<int>> pulse_numbers;
    std::optional<std::vector<std::string>> methods;
    std::optional<bool> priori;
    std::optional<std::string> bench_mode;
    std::optional<std::vector<int>> qubit_counts;
    std::optional<std::vector<double>> target_epsilons;
    std::optional<int> repetitions;
    std::optional<double> time_us;
    std::optional<int> trials;
    std::optional<std::vector<double>> deltas_us;
    unsigned threads = 0;
    // output
    std::string out_dir = "out";
    std::vector<std::string> formats{"csv", "json"};
    std::optional<std::uint64_t> seed;

    [[nodiscard]] nlohmann::json to_json() const;
    [[nodiscard]] bool wants(const std::string& format) const;
    [[nodiscard]] std::vector<ControlSignal> controls() const;
    [[nodiscard]] ModelSpec model() const;
    [[nodiscard]] ReferenceOptions reference() const;
};

/// Strict parse: unknown keys and wrong types raise ConfigInvalid with the
/// offending key path (and line/column for syntax errors).
/// Relative table paths are resolved against base_dir.
[[nodiscard]] RunConfig parse_config(const std::string& text, const std::string& base_dir = "");
[[nodiscard]] RunConfig load_config(const std::string& path);

/// Uniform two-column table (t_us, value); '#' lines and a non-numeric
/// header row are skipped.
void read_signal_table(const std::string& path, double& t0_us, double& dt_us, std::vector<double>& values);

/// FNV-1a 64 over the canonical (sorted-key) JSON dump.
[[nodiscard]] std::uint64_t fnv1a64(const std::string& bytes);
[[nodiscard]] std::string hex64(std::uint64_t v);
[[nodiscard]] std::string config_hash(const nlohmann::json& resolved);

/// Shortest round-trip decimal.
[[nodiscard]] std::string format_number(double v);

struct CsvTable {
    std::string kind;
    std::string config_hash;
    int schema = kSchemaVersion;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row);
    [[nodiscard]] std::size_t column(const std::string& name) const;
    [[nodiscard]] double number(std::size_t row, const std::string& name) const;
};

[[nodiscard]] std::string render_csv(const CsvTable& table);
void write_csv(const std::string& path, const CsvTable& table);
[[nodiscard]] CsvTable parse_csv(const std::string& text);
[[nodiscard]] CsvTable read_csv(const std::string& path);

struct SvgSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

struct SvgChart {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_y = false;
    bool stems = false;  // draw vertical stems (spectra) instead of lines
    std::vector<SvgSeries> series;
    std::vector<double> x_markers;  // dashed vertical lines, e.g. the scope
};

[[nodiscard]] std::string render_svg(const SvgChart& chart);

void write_text(const std::string& path, const std::string& text);

}  // namespace pwmsim
