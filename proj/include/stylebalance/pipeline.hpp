#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "stylebalance/config.hpp"
#include "stylebalance/dataset.hpp"
#include "stylebalance/export.hpp"
#include "stylebalance/selection.hpp"
#include "stylebalance/style_domain.hpp"

namespace stylebalance {

// Exit-code contract shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUnbalanced = 2;

// Work-directory artifacts passed between stages.
inline constexpr const char* kPlanFileName = "plan.tsv";
inline constexpr const char* kGeneratedDirName = "generated";
inline constexpr const char* kFailuresFileName = "failures.tsv";

struct PipelineContext {
    RunConfig config;
    Dataset dataset;
    std::vector<DomainAnchor> anchors;
    DomainPool pools;           // every record assigned
    DomainPool balanced_pools;  // equal-size pools used for style statistics
};

/// Loads and validates the dataset, then classifies every image into a domain.
PipelineContext load_context(const RunConfig& config);

ImageLoader dataset_image_loader(const std::filesystem::path& dataset_root);

struct IngestSummary {
    std::size_t records = 0;
    ClassDistribution distribution;
    std::vector<std::pair<std::string, std::size_t>> pool_sizes;
};

IngestSummary run_ingest(const RunConfig& config, std::ostream& out);

struct PlanOutcome {
    AugmentationPlan plan;
    std::vector<std::string> selected;
    int exit_code = kExitOk;
};

/// Writes <work_dir>/plan.tsv; exit 2 when balance is unreachable.
PlanOutcome run_plan(const RunConfig& config, std::ostream& out);

/// Style targets for every domain from the balanced pools.
std::map<std::string, StyleTarget> build_style_targets(const PipelineContext& context);
Translator make_translator(const PipelineContext& context);

struct GenerateOutcome {
    std::size_t generated = 0;
    std::size_t skipped = 0;  // already in the queue with the same job key
    std::vector<std::string> failures;
    int exit_code = kExitOk;
};

/// Executes <work_dir>/plan.tsv, flags every output and appends it to the review queue.
GenerateOutcome run_generate(const RunConfig& config, std::ostream& out);

struct ExportOutcome {
    ExportManifest manifest;
    BalanceReport report;
    int exit_code = kExitOk;
};

ExportOutcome run_export(const RunConfig& config, std::ostream& out);
BalanceReport run_verify(const RunConfig& config, std::ostream& out, int& exit_code);

/// Blocks serving the review API until the server is stopped.
int run_review_serve(const RunConfig& config, std::ostream& out);

void print_distribution(std::ostream& out, const ClassDistribution& distribution);

}  // namespace stylebalance
