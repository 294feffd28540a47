#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stylebalance/dataset.hpp"
#include "stylebalance/qc_review.hpp"
#include "stylebalance/selection.hpp"

namespace stylebalance {

enum class EntryOrigin { Original, Augmented };

struct ExportEntry {
    std::filesystem::path image;       // relative to the export root
    std::filesystem::path annotation;  // relative to the export root
    EntryOrigin origin = EntryOrigin::Original;
    std::string record_id;
    // Augmented entries only.
    std::string source_id;
    std::string source_domain;
    std::string target_domain;
    std::string translator;
    int copy_index = 0;

    friend bool operator==(const ExportEntry&, const ExportEntry&) = default;
};

struct ExportManifest {
    std::vector<ExportEntry> entries;  // sorted by image path
    ClassDistribution final_distribution;
    std::map<std::string, std::string> config_snapshot;
    std::size_t skipped_items = 0;  // planned copies not exported (rejected, failed or pending-rejected)

    friend bool operator==(const ExportManifest&, const ExportManifest&) = default;
};

inline constexpr const char* kManifestName = "manifest.tsv";

std::string format_export_manifest(const ExportManifest& manifest);
ExportManifest parse_export_manifest(std::string_view text);

enum class PendingPolicy { Block, Accept, Reject };

PendingPolicy parse_pending_policy(std::string_view text);
std::string to_string(PendingPolicy policy);

struct ExportOptions {
    PendingPolicy pending = PendingPolicy::Block;
    std::map<std::string, std::string> config_snapshot;
};

/// Writes originals plus accepted copies into `out_dir` (images/, annotations/,
/// manifest.tsv). The output is staged in a sibling temp directory and renamed
/// into place; any failure removes the staging directory. final_distribution
/// is a recount of the written annotation files.
///
/// Throws Error when out_dir is non-empty, pending items exist under
/// PendingPolicy::Block, an accepted item's generated file is missing, or an
/// augmented id collides with an existing one.
ExportManifest export_balanced_dataset(const Dataset& dataset, const std::filesystem::path& dataset_root,
                                       std::span<const ReviewItem> items,
                                       const std::map<std::string, ReviewState>& states,
                                       const std::filesystem::path& out_dir, const ExportOptions& options);

struct BalanceReport {
    bool balanced = false;
    std::optional<Ratio> ratio;
    ClassDistribution counts;
};

/// Recounts every annotation listed in `<root>/manifest.tsv` and compares the
/// max/min ratio with `tolerance`. Throws IntegrityError listing every missing
/// file, invalid annotation or count mismatch against the manifest.
BalanceReport verify_balance(const std::filesystem::path& export_root, const Ratio& tolerance);

}  // namespace stylebalance
