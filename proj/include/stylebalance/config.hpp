#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stylebalance/export.hpp"
#include "stylebalance/qc_review.hpp"
#include "stylebalance/rational.hpp"
#include "stylebalance/style_transfer.hpp"

namespace stylebalance {

// Everything a run depends on besides its input files. The text form is
// `key = value` lines; see README for the schema.
struct RunConfig {
    std::filesystem::path dataset_root = ".";
    std::filesystem::path manifest = "manifest.txt";  // relative to dataset_root unless absolute
    std::filesystem::path work_dir = "work";
    std::filesystem::path out_dir = "balanced";

    std::vector<std::string> vocabulary{"seacucumber", "seaurchin", "scallop", "starfish"};
    std::vector<std::string> domains{"green", "blue", "deepblue", "white"};
    std::filesystem::path anchors_file;    // empty: built-in anchors
    std::filesystem::path overrides_file;  // empty: none

    Ratio minority_threshold{1, 2};
    std::vector<std::string> minority;  // explicit list wins over the threshold
    double lambda = 1.0;
    Ratio tolerance{5, 4};
    int max_copies_per_pair = 3;
    int max_total_jobs = 10000;

    TranslatorKind translator = TranslatorKind::StatTransfer;
    std::string translator_command;
    int translator_timeout_s = 120;
    int max_concurrent_commands = 1;
    std::map<std::string, HazeParams> haze;  // per domain; missing domains use default_haze
    double std_floor = kStdFloor;

    QcThresholds qc;
    PendingPolicy export_pending = PendingPolicy::Block;

    std::uint64_t seed = 0;
    std::string bind_address = "127.0.0.1";
    int port = 8080;
    std::filesystem::path ui_dir;  // optional static assets for the review UI

    std::filesystem::path manifest_path() const;
    HazeParams haze_for(std::string_view domain) const;
};

/// Throws ConfigError naming the line of an unknown key or bad value.
RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Applies one `key=value` override with the same rules as the file form.
void apply_config_value(RunConfig& config, std::string_view key, std::string_view value);

/// Canonical key-value form: every key, fixed order. Parsing it yields an equal config.
std::map<std::string, std::string> config_snapshot(const RunConfig& config);
std::string format_run_config(const RunConfig& config);

/// FNV-1a 64 of format_run_config, as 16 hex digits.
std::string config_hash(const RunConfig& config);

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 14695981039346656037ULL) noexcept;
std::string hex64(std::uint64_t value);

}  // namespace stylebalance
