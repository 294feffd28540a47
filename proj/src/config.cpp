#include "stylebalance/config.hpp"

#include <charconv>
#include <sstream>

#include "stylebalance/dataset.hpp"
#include "stylebalance/error.hpp"

namespace stylebalance {

std::filesystem::path RunConfig::manifest_path() const {
    return manifest.is_absolute() ? manifest : dataset_root / manifest;
}

HazeParams RunConfig::haze_for(std::string_view domain) const {
    const auto it = haze.find(std::string(domain));
    return it == haze.end() ? default_haze(domain) : it->second;
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view value) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in{std::string(value)};
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string join_list(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out += ',';
        out += items[i];
    }
    return out;
}

double to_double(std::string_view key, std::string_view value) {
    double d = 0;
    const auto v = trim(value);
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
    if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
        throw ConfigError("config key '" + std::string(key) + "': not a number: '" + v + "'");
    }
    return d;
}

long long to_int(std::string_view key, std::string_view value) {
    long long i = 0;
    const auto v = trim(value);
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), i);
    if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
        throw ConfigError("config key '" + std::string(key) + "': not an integer: '" + v + "'");
    }
    return i;
}

void require(bool ok, std::string_view key, const std::string& what) {
    if (!ok) throw ConfigError("config key '" + std::string(key) + "': " + what);
}

std::string fmt(double d) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, d);
    return std::string(buf, ptr);
}

}  // namespace

void apply_config_value(RunConfig& c, std::string_view key_in, std::string_view value_in) {
    const std::string key = trim(key_in);
    const std::string value = trim(value_in);
    if (key == "dataset_root") c.dataset_root = value;
    else if (key == "manifest") c.manifest = value;
    else if (key == "work_dir") c.work_dir = value;
    else if (key == "out_dir") c.out_dir = value;
    else if (key == "vocabulary") c.vocabulary = split_list(value);
    else if (key == "domains") c.domains = split_list(value);
    else if (key == "anchors_file") c.anchors_file = value;
    else if (key == "overrides_file") c.overrides_file = value;
    else if (key == "minority_threshold") {
        c.minority_threshold = parse_ratio(value);
        require(Ratio{0, 1} < c.minority_threshold && c.minority_threshold <= Ratio{1, 1}, key, "must lie in (0, 1]");
    }
    else if (key == "minority") c.minority = split_list(value);
    else if (key == "lambda") {
        c.lambda = to_double(key, value);
        require(c.lambda >= 0, key, "must be non-negative");
    }
    else if (key == "tolerance") {
        c.tolerance = parse_ratio(value);
        require(!c.tolerance.is_infinite() && Ratio{1, 1} <= c.tolerance, key, "must be a finite ratio >= 1");
    }
    else if (key == "max_copies_per_pair") {
        c.max_copies_per_pair = static_cast<int>(to_int(key, value));
        require(c.max_copies_per_pair >= 1, key, "must be at least 1");
    }
    else if (key == "max_total_jobs") {
        c.max_total_jobs = static_cast<int>(to_int(key, value));
        require(c.max_total_jobs >= 0, key, "must be non-negative");
    }
    else if (key == "translator") c.translator = parse_translator_kind(value);
    else if (key == "translator_command") c.translator_command = value;
    else if (key == "translator_timeout_s") c.translator_timeout_s = static_cast<int>(to_int(key, value));
    else if (key == "max_concurrent_commands") c.max_concurrent_commands = static_cast<int>(to_int(key, value));
    else if (key == "std_floor") c.std_floor = to_double(key, value);
    else if (key == "qc.clip_warn") c.qc.clip_warn = to_double(key, value);
    else if (key == "qc.clip_block") c.qc.clip_block = to_double(key, value);
    else if (key == "qc.structure_warn") c.qc.structure_warn = to_double(key, value);
    else if (key == "qc.structure_block") c.qc.structure_block = to_double(key, value);
    else if (key == "export_pending") c.export_pending = parse_pending_policy(value);
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(to_int(key, value));
    else if (key == "bind_address") c.bind_address = value;
    else if (key == "port") c.port = static_cast<int>(to_int(key, value));
    else if (key == "ui_dir") c.ui_dir = value;
    else if (key.rfind("haze.", 0) == 0 && key.size() > 5) {
        std::istringstream in(value);
        HazeParams h;
        std::string extra;
        if (!(in >> h.airlight[0] >> h.airlight[1] >> h.airlight[2] >> h.transmission) || (in >> extra)) {
            throw ConfigError("config key '" + key + "': expected 'r g b transmission'");
        }
        if (!(h.transmission > 0 && h.transmission <= 1)) {
            throw ConfigError("config key '" + key + "': transmission must lie in (0, 1]");
        }
        c.haze[key.substr(5)] = h;
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

RunConfig parse_run_config(std::string_view text) {
    RunConfig config;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        try {
            apply_config_value(config, line.substr(0, eq), line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    config.qc.validate();
    return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    RunConfig config = parse_run_config(read_file(path));
    // Relative paths are relative to the config file.
    const auto base = path.parent_path();
    for (auto* p : {&config.dataset_root, &config.work_dir, &config.out_dir, &config.anchors_file, &config.overrides_file,
                    &config.ui_dir}) {
        if (!p->empty() && p->is_relative()) *p = (base / *p).lexically_normal();
    }
    return config;
}

std::map<std::string, std::string> config_snapshot(const RunConfig& c) {
    std::map<std::string, std::string> m;
    m["dataset_root"] = c.dataset_root.generic_string();
    m["manifest"] = c.manifest.generic_string();
    m["work_dir"] = c.work_dir.generic_string();
    m["out_dir"] = c.out_dir.generic_string();
    m["vocabulary"] = join_list(c.vocabulary);
    m["domains"] = join_list(c.domains);
    m["anchors_file"] = c.anchors_file.generic_string();
    m["overrides_file"] = c.overrides_file.generic_string();
    m["minority_threshold"] = c.minority_threshold.str();
    m["minority"] = join_list(c.minority);
    m["lambda"] = fmt(c.lambda);
    m["tolerance"] = c.tolerance.str();
    m["max_copies_per_pair"] = std::to_string(c.max_copies_per_pair);
    m["max_total_jobs"] = std::to_string(c.max_total_jobs);
    m["translator"] = to_string(c.translator);
    m["translator_command"] = c.translator_command;
    m["translator_timeout_s"] = std::to_string(c.translator_timeout_s);
    m["max_concurrent_commands"] = std::to_string(c.max_concurrent_commands);
    m["std_floor"] = fmt(c.std_floor);
    m["qc.clip_warn"] = fmt(c.qc.clip_warn);
    m["qc.clip_block"] = fmt(c.qc.clip_block);
    m["qc.structure_warn"] = fmt(c.qc.structure_warn);
    m["qc.structure_block"] = fmt(c.qc.structure_block);
    m["export_pending"] = to_string(c.export_pending);
    m["seed"] = std::to_string(c.seed);
    m["bind_address"] = c.bind_address;
    m["port"] = std::to_string(c.port);
    m["ui_dir"] = c.ui_dir.generic_string();
    for (const auto& [domain, h] : c.haze) {
        m["haze." + domain] = fmt(h.airlight[0]) + " " + fmt(h.airlight[1]) + " " + fmt(h.airlight[2]) + " " + fmt(h.transmission);
    }
    return m;
}

std::string format_run_config(const RunConfig& config) {
    std::string out;
    for (const auto& [k, v] : config_snapshot(config)) out += k + " = " + v + "\n";
    return out;
}

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed) noexcept {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

std::string config_hash(const RunConfig& config) { return hex64(fnv1a64(format_run_config(config))); }

}  // namespace stylebalance
