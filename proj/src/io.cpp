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

#include "pwmsim/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace pwmsim {

namespace {

using nlohmann::json;

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorKind::ConfigInvalid, msg); }

// Object reader that remembers which keys were consumed.
class Obj {
public:
    Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j.is_object()) {
            invalid("'" + name() + "' must be an object");
        }
    }

    [[nodiscard]] const json* find(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() || it->is_null() ? nullptr : &*it;
    }

    template <class T>
    [[nodiscard]] std::optional<T> get(const std::string& key) {
        const json* v = find(key);
        if (!v) {
            return std::nullopt;
        }
        return convert<T>(*v, where(key));
    }

    template <class T>
    void read(const std::string& key, T& into) {
        if (auto v = get<T>(key)) {
            into = std::move(*v);
        }
    }

    template <class T>
    [[nodiscard]] std::optional<std::vector<T>> list(const std::string& key) {
        const json* v = find(key);
        if (!v) {
            return std::nullopt;
        }
        if (!v->is_array()) {
            invalid("key '" + where(key) + "': expected an array");
        }
        std::vector<T> out;
        for (std::size_t i = 0; i < v->size(); ++i) {
            out.push_back(convert<T>((*v)[i], where(key) + "[" + std::to_string(i) + "]"));
        }
        return out;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) {
                invalid("unknown key '" + where(it.key()) + "'");
            }
        }
    }

    [[nodiscard]] std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    [[nodiscard]] std::string name() const { return path_.empty() ? "<root>" : path_; }

private:
    template <class T>
    static T convert(const json& v, const std::string& at) {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) invalid("key '" + at + "': expected true/false");
            return v.get<bool>();
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) invalid("key '" + at + "': expected a string");
            return v.get<std::string>();
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
            if (!v.is_number_unsigned()) invalid("key '" + at + "': expected a non-negative integer");
            return v.get<std::uint64_t>();
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) invalid("key '" + at + "': expected an integer");
            return static_cast<T>(v.get<long long>());
        } else {
            if (!v.is_number()) invalid("key '" + at + "': expected a number");
            const double d = v.get<double>();
            if (!std::isfinite(d)) invalid("key '" + at + "': expected a finite number");
            return d;
        }
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

SignalConfig parse_signal(const json& j, const std::string& path, const std::string& base_dir) {
    Obj o(j, path);
    SignalConfig s;
    auto kind = o.get<std::string>("kind");
    if (!kind) {
        invalid("key '" + o.where("kind") + "' is required");
    }
    s.kind = *kind;
    if (s.kind == "sinusoid" || s.kind == "triangle" || s.kind == "sawtooth") {
        o.read("amp", s.amp);
        o.read("freq_mhz", s.freq_mhz);
        o.read("phase", s.phase_rad);
    } else if (s.kind == "sum") {
        const json* tones = o.find("tones");
        if (!tones || !tones->is_array() || tones->empty()) {
            invalid("key '" + o.where("tones") + "': expected a non-empty array");
        }
        for (std::size_t i = 0; i < tones->size(); ++i) {
            Obj t((*tones)[i], o.where("tones") + "[" + std::to_string(i) + "]");
            Tone tone;
            t.read("amp", tone.amp);
            auto f = t.get<double>("freq_mhz");
            if (!f) {
                invalid("key '" + t.where("freq_mhz") + "' is required");
            }
            tone.freq_mhz = *f;
            t.read("phase", tone.phase);
            t.finish();
            s.tones.push_back(tone);
        }
        o.read("normalize", s.normalize);
    } else if (s.kind == "constant") {
        o.read("value", s.value);
        o.read("freq_mhz", s.freq_mhz);
    } else if (s.kind == "tabulated") {
        auto band = o.list<double>("band_mhz");
        if (!band || band->size() != 2) {
            invalid("key '" + o.where("band_mhz") + "': expected [min, max]");
        }
        s.band_min_mhz = (*band)[0];
        s.band_max_mhz = (*band)[1];
        if (auto file = o.get<std::string>("file")) {
            if (o.find("samples") || o.find("dt_us") || o.find("t0_us")) {
                invalid("'" + path + "': give either file or samples/dt_us, not both");
            }
            std::filesystem::path fp(*file);
            if (fp.is_relative() && !base_dir.empty()) {
                fp = std::filesystem::path(base_dir) / fp;
            }
            s.file = *file;
            read_signal_table(fp.string(), s.t0_us, s.dt_us, s.samples);
        } else {
            o.read("t0_us", s.t0_us);
            auto dt = o.get<double>("dt_us");
            auto samples = o.list<double>("samples");
            if (!dt || !samples) {
                invalid("'" + path + "': tabulated signals need file, or dt_us and samples");
            }
            s.dt_us = *dt;
            s.samples = *samples;
        }
        s.period_us = o.get<double>("period_us");
    } else {
        invalid("key '" + o.where("kind") + "': unknown signal kind '" + s.kind +
                "' (sinusoid, sum, triangle, sawtooth, constant, tabulated)");
    }
    o.finish();
    return s;
}

std::pair<int, int> line_col(const std::string& text, std::size_t byte) {
    int line = 1;
    int col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<':
                out += "&lt;";
                break;
            case '>':
                out += "&gt;";
                break;
            case '&':
                out += "&amp;";
                break;
            case '"':
                out += "&quot;";
                break;
            default:
                out += c;
        }
    }
    return out;
}

std::string fixed(double v, int digits) {
    std::ostringstream os;
    os.precision(digits);
    os << v;
    return os.str();
}

}  // namespace

ControlSignal SignalConfig::build() const {
    if (kind == "sinusoid") return ControlSignal::sinusoid(amp, freq_mhz, phase_rad);
    if (kind == "triangle") return ControlSignal::triangle(amp, freq_mhz, phase_rad);
    if (kind == "sawtooth") return ControlSignal::sawtooth(amp, freq_mhz, phase_rad);
    if (kind == "sum") return ControlSignal::sum_of_sinusoids(tones, normalize);
    if (kind == "constant") return ControlSignal::constant(value, freq_mhz);
    if (kind == "tabulated") {
        return ControlSignal::tabulated(t0_us, dt_us, samples,
                                        {angular_from_mhz(band_min_mhz), angular_from_mhz(band_max_mhz)}, period_us);
    }
    invalid("unknown signal kind '" + kind + "'");
}

nlohmann::json SignalConfig::to_json() const {
    json j{{"kind", kind}};
    if (kind == "sinusoid" || kind == "triangle" || kind == "sawtooth") {
        j["amp"] = amp;
        j["freq_mhz"] = freq_mhz;
        j["phase"] = phase_rad;
    } else if (kind == "sum") {
        j["tones"] = json::array();
        for (const auto& t : tones) {
            j["tones"].push_back({{"amp", t.amp}, {"freq_mhz", t.freq_mhz}, {"phase", t.phase}});
        }
        j["normalize"] = normalize;
    } else if (kind == "constant") {
        j["value"] = value;
        j["freq_mhz"] = freq_mhz;
    } else {
        if (!file.empty()) {
            j["file"] = file;
        }
        j["t0_us"] = t0_us;
        j["dt_us"] = dt_us;
        j["samples"] = samples;
        j["band_mhz"] = {band_min_mhz, band_max_mhz};
        if (period_us) {
            j["period_us"] = *period_us;
        }
    }
    return j;
}

nlohmann::json RunConfig::to_json() const {
    json model{{"qubits", qubits}, {"kappa1", kappa1}, {"kappa2", kappa2}, {"signals", json::array()}};
    for (const auto& s : signals) {
        model["signals"].push_back(s.to_json());
    }
    json method{{"pulse_number", pulse_number},
                {"l_max", l_max},
                {"gaussian", gaussian},
                {"reference_tolerance", reference_tolerance},
                {"reference_max_refinement", reference_max_refinement}};
    if (xi) method["xi"] = *xi;
    if (n_max) method["n_max"] = *n_max;
    json study{{"threads", threads}};
    if (axis) study["axis"] = *axis;
    if (times_us) study["times_us"] = *times_us;
    if (values) study["values"] = *values;
    if (pulse_numbers) study["pulse_numbers"] = *pulse_numbers;
    if (methods) study["methods"] = *methods;
    if (priori) study["priori"] = *priori;
    if (bench_mode) study["bench_mode"] = *bench_mode;
    if (qubit_counts) study["qubit_counts"] = *qubit_counts;
    if (target_epsilons) study["target_epsilons"] = *target_epsilons;
    if (repetitions) study["repetitions"] = *repetitions;
    if (time_us) study["time_us"] = *time_us;
    if (trials) study["trials"] = *trials;
    if (deltas_us) study["deltas_us"] = *deltas_us;
    json j{{"model", model},
           {"method", method},
           {"study", study},
           {"output", {{"directory", out_dir}, {"formats", formats}}}};
    if (seed) {
        j["seed"] = *seed;
    }
    return j;
}

bool RunConfig::wants(const std::string& format) const {
    return std::find(formats.begin(), formats.end(), format) != formats.end();
}

std::vector<ControlSignal> RunConfig::controls() const {
    std::vector<ControlSignal> out;
    for (const auto& s : signals) {
        out.push_back(s.build());
    }
    return out;
}

ModelSpec RunConfig::model() const {
    ModelSpec m;
    m.n_qubits = qubits;
    m.kappa1 = kappa1;
    m.kappa2 = kappa2;
    m.controls = controls();
    return m;
}

ReferenceOptions RunConfig::reference() const {
    ReferenceOptions r;
    r.tolerance = reference_tolerance;
    r.max_refinement = reference_max_refinement;
    return r;
}

RunConfig parse_config(const std::string& text, const std::string& base_dir) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_col(text, e.byte);
        invalid("syntax error at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                e.what());
    }
    RunConfig c;
    Obj top(root, "");
    c.seed = top.get<std::uint64_t>("seed");
    if (const json* m = top.find("model")) {
        Obj o(*m, "model");
        o.read("qubits", c.qubits);
        o.read("kappa1", c.kappa1);
        o.read("kappa2", c.kappa2);
        if (const json* sig = o.find("signals")) {
            if (!sig->is_array() || sig->empty() || sig->size() > 2) {
                invalid("key 'model.signals': expected an array of one or two signals");
            }
            c.signals.clear();
            for (std::size_t i = 0; i < sig->size(); ++i) {
                c.signals.push_back(parse_signal((*sig)[i], "model.signals[" + std::to_string(i) + "]", base_dir));
            }
        }
        o.finish();
    }
    if (const json* m = top.find("method")) {
        Obj o(*m, "method");
        o.read("pulse_number", c.pulse_number);
        c.xi = o.get<double>("xi");
        o.read("l_max", c.l_max);
        c.n_max = o.get<int>("n_max");
        o.read("gaussian", c.gaussian);
        o.read("reference_tolerance", c.reference_tolerance);
        o.read("reference_max_refinement", c.reference_max_refinement);
        o.finish();
    }
    if (const json* m = top.find("study")) {
        Obj o(*m, "study");
        c.axis = o.get<std::string>("axis");
        c.times_us = o.list<double>("times_us");
        c.values = o.list<double>("values");
        c.pulse_numbers = o.list<int>("pulse_numbers");
        c.methods = o.list<std::string>("methods");
        c.priori = o.get<bool>("priori");
        c.bench_mode = o.get<std::string>("bench_mode");
        c.qubit_counts = o.list<int>("qubit_counts");
        c.target_epsilons = o.list<double>("target_epsilons");
        c.repetitions = o.get<int>("repetitions");
        c.time_us = o.get<double>("time_us");
        c.trials = o.get<int>("trials");
        c.deltas_us = o.list<double>("deltas_us");
        o.read("threads", c.threads);
        o.finish();
    }
    if (const json* m = top.find("output")) {
        Obj o(*m, "output");
        o.read("directory", c.out_dir);
        if (auto f = o.list<std::string>("formats")) {
            c.formats = *f;
        }
        o.finish();
    }
    top.finish();

    for (const auto& f : c.formats) {
        if (f != "csv" && f != "json" && f != "svg") {
            invalid("key 'output.formats': unknown format '" + f + "' (csv, json, svg)");
        }
    }
    if (c.qubits < 1 || c.qubits > 10) invalid("key 'model.qubits': must be within 1..10");
    if (c.pulse_number < 1) invalid("key 'method.pulse_number': must be >= 1");
    if (c.l_max < 0) invalid("key 'method.l_max': must be >= 0");
    if (c.xi && !(*c.xi > 0.0)) invalid("key 'method.xi': must be positive");
    if (!(c.reference_tolerance > 0.0)) invalid("key 'method.reference_tolerance': must be positive");
    if (c.reference_max_refinement < 2) invalid("key 'method.reference_max_refinement': must be >= 2");
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        invalid("cannot read config file '" + path + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::filesystem::path(path).parent_path().string());
}

void read_signal_table(const std::string& path, double& t0_us, double& dt_us, std::vector<double>& values) {
    std::ifstream in(path);
    if (!in) {
        invalid("cannot read signal table '" + path + "'");
    }
    std::vector<double> t;
    values.clear();
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            invalid(path + ":" + std::to_string(lineno) + ": expected two columns");
        }
        double a = 0.0, b = 0.0;
        const char* s0 = line.data();
        auto r1 = std::from_chars(s0, s0 + comma, a);
        auto r2 = std::from_chars(s0 + comma + 1, s0 + line.size(), b);
        if (r1.ec != std::errc() || r2.ec != std::errc()) {
            if (t.empty()) continue;  // header row
            invalid(path + ":" + std::to_string(lineno) + ": not a number");
        }
        t.push_back(a);
        values.push_back(b);
    }
    if (t.size() < 2) {
        invalid("signal table '" + path + "' needs at least two rows");
    }
    t0_us = t.front();
    dt_us = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
    for (std::size_t i = 1; i < t.size(); ++i) {
        if (std::abs(t[i] - t0_us - dt_us * static_cast<double>(i)) > 1e-9 * std::max(1.0, std::abs(t.back()))) {
            throw Error(ErrorKind::NonUniformGrid, "signal table '" + path + "' is not uniformly sampled");
        }
    }
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string config_hash(const nlohmann::json& resolved) { return hex64(fnv1a64(resolved.dump())); }

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

void CsvTable::add_row(std::vector<std::string> row) {
    if (row.size() != columns.size()) {
        throw Error(ErrorKind::InvalidArgument, "CSV row width differs from the header");
    }
    rows.push_back(std::move(row));
}

std::size_t CsvTable::column(const std::string& name) const {
    auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) {
        throw Error(ErrorKind::InvalidArgument, "no CSV column '" + name + "'");
    }
    return static_cast<std::size_t>(it - columns.begin());
}

double CsvTable::number(std::size_t row, const std::string& name) const {
    const std::string& s = rows.at(row).at(column(name));
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
        throw Error(ErrorKind::InvalidArgument, "CSV cell '" + s + "' is not a number");
    }
    return v;
}

std::string render_csv(const CsvTable& t) {
    std::string out = "# pwmsim schema=" + std::to_string(t.schema) + " kind=" + t.kind +
                      " config_hash=" + t.config_hash + "\n";
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (cells[i].find_first_of(",\n") != std::string::npos) {
                throw Error(ErrorKind::InvalidArgument, "CSV cell contains a separator: " + cells[i]);
            }
            out += (i ? "," : "") + cells[i];
        }
        out += "\n";
    };
    line(t.columns);
    for (const auto& r : t.rows) {
        line(r);
    }
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::filesystem::create_directories(p.parent_path());
    }
    std::ofstream out(p, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::ConfigInvalid, "cannot write '" + path + "'");
    }
    out << text;
}

void write_csv(const std::string& path, const CsvTable& table) { write_text(path, render_csv(table)); }

CsvTable parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    CsvTable t;
    if (!std::getline(in, line) || line.rfind("# pwmsim ", 0) != 0) {
        throw Error(ErrorKind::ConfigInvalid, "CSV lacks the '# pwmsim' schema header");
    }
    std::istringstream head(line.substr(9));
    std::string field;
    bool has_schema = false;
    while (head >> field) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = field.substr(0, eq);
        const std::string val = field.substr(eq + 1);
        if (key == "schema") {
            t.schema = std::stoi(val);
            has_schema = true;
        } else if (key == "kind") {
            t.kind = val;
        } else if (key == "config_hash") {
            t.config_hash = val;
        }
    }
    if (!has_schema || t.schema != kSchemaVersion) {
        throw Error(ErrorKind::ConfigInvalid, "unsupported CSV schema");
    }
    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(s);
        while (std::getline(ls, cell, ',')) {
            cells.push_back(cell);
        }
        if (!s.empty() && s.back() == ',') cells.emplace_back();
        return cells;
    };
    if (!std::getline(in, line)) {
        throw Error(ErrorKind::ConfigInvalid, "CSV lacks a column header");
    }
    t.columns = split(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split(line);
        if (cells.size() != t.columns.size()) {
            throw Error(ErrorKind::ConfigInvalid, "CSV row width differs from the header");
        }
        t.rows.push_back(std::move(cells));
    }
    return t;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::ConfigInvalid, "cannot read '" + path + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str());
}

std::string render_svg(const SvgChart& c) {
    constexpr double W = 720, H = 440, L = 80, R = 170, T = 40, B = 60;
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    auto ty = [&](double y) { return c.log_y ? (y > 0 ? std::log10(y) : NAN) : y; };
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& s : c.series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double y = ty(s.y[i]);
            if (!std::isfinite(y) || !std::isfinite(s.x[i])) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    }
    if (!std::isfinite(x0)) {
        x0 = 0;
        x1 = 1;
        y0 = 0;
        y1 = 1;
    }
    if (c.stems && !c.log_y) y0 = std::min(y0, 0.0);
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(c.title)
      << "</text>\n";
    o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = x0 + (x1 - x0) * i / 4.0;
        const double yv = y0 + (y1 - y0) * i / 4.0;
        o << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << fixed(xv, 4)
          << "</text>\n";
        const std::string ylab = c.log_y ? "1e" + fixed(yv, 3) : fixed(yv, 4);
        o << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << ylab << "</text>\n";
    }
    o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 18 << "\" text-anchor=\"middle\">"
      << xml_escape(c.x_label) << "</text>\n";
    o << "<text x=\"18\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << (T + H - B) / 2 << ")\">" << xml_escape(c.y_label) << "</text>\n";
    for (double m : c.x_markers) {
        if (m < x0 || m > x1) continue;
        o << "<line x1=\"" << px(m) << "\" y1=\"" << T << "\" x2=\"" << px(m) << "\" y2=\"" << H - B
          << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
    }
    for (std::size_t k = 0; k < c.series.size(); ++k) {
        const auto& s = c.series[k];
        const char* color = palette[k % 10];
        if (c.stems) {
            const double base = py(c.log_y ? y0 : 0.0);
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                const double y = ty(s.y[i]);
                if (!std::isfinite(y)) continue;
                o << "<line x1=\"" << px(s.x[i]) << "\" y1=\"" << base << "\" x2=\"" << px(s.x[i]) << "\" y2=\""
                  << py(y) << "\" stroke=\"" << color << "\"/>\n";
            }
        } else {
            o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                const double y = ty(s.y[i]);
                if (!std::isfinite(y)) continue;
                o << px(s.x[i]) << "," << py(y) << " ";
            }
            o << "\"/>\n";
        }
        o << "<line x1=\"" << W - R + 12 << "\" y1=\"" << T + 14 + 18 * k << "\" x2=\"" << W - R + 32 << "\" y2=\""
          << T + 14 + 18 * k << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << W - R + 38 << "\" y=\"" << T + 18 + 18 * k << "\">" << xml_escape(s.name)
          << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

}  // namespace pwmsim
