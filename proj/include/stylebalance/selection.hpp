#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stylebalance/dataset.hpp"
#include "stylebalance/rational.hpp"
#include "stylebalance/style_domain.hpp"

namespace stylebalance {

struct MinoritySpec {
    std::vector<std::string> minority;  // vocabulary order
    std::vector<std::string> majority;

    bool is_minority(std::string_view label) const noexcept;
};

/// Classes with count < threshold_fraction * max count. Throws Error when a class
/// has zero instances or when the rule selects nothing or everything; in both
/// cases the caller has to supply an explicit list.
MinoritySpec identify_minority_classes(const ClassDistribution& dist, const Ratio& threshold_fraction);

/// Explicit minority list; must be a non-empty strict subset of the vocabulary.
MinoritySpec make_minority_spec(const Vocabulary& vocabulary, std::span<const std::string> minority);

struct SelectionScore {
    std::string image_id;
    std::int64_t minority_count = 0;
    std::int64_t majority_count = 0;
    double score = 0.0;  // minority_count - lambda * majority_count
};

SelectionScore score_image(const ImageRecord& record, const MinoritySpec& spec, double lambda = 1.0);

/// Ids with score > 0 and at least one minority instance, by descending score then ascending id.
std::vector<std::string> select_images(const Dataset& dataset, const MinoritySpec& spec,
                                       double lambda = 1.0);

struct AugmentationJob {
    std::string image_id;
    std::string source_domain;
    std::string target_domain;
    int copies = 1;

    friend bool operator==(const AugmentationJob&, const AugmentationJob&) = default;
};

struct PlanOptions {
    Ratio tolerance{5, 4};
    int max_copies_per_pair = 3;
    int max_total_jobs = 10000;  // bound on the number of greedy steps (copies)
};

enum class PlanStatus { Balanced, Unreachable };

struct PlanStep {
    std::string image_id;
    std::string target_domain;
};

struct AugmentationPlan {
    std::vector<AugmentationJob> jobs;  // one per (image, target), ordered by first step
    std::vector<PlanStep> steps;        // greedy order, one copy each
    ClassDistribution original;
    ClassDistribution predicted;
    std::vector<Ratio> objective_trace;  // initial J, then J after each step
    PlanStatus status = PlanStatus::Balanced;

    Ratio final_objective() const { return objective_trace.back(); }
    int total_copies() const noexcept { return static_cast<int>(steps.size()); }
};

/// Greedy class-balancing planner. Each step adds one copy of the (image, target
/// domain) pair whose instance counts give the lowest max/min ratio, provided it
/// strictly improves it. Ties: lower image id, then fewer copies already planned
/// for the pair, then domain order in `pools.domains`. Stops at J <= tolerance,
/// when nothing improves, or after max_total_jobs steps.
///
/// Source domains come from ImageRecord::domain, falling back to pools.assignments;
/// a selected image with neither is an Error.
AugmentationPlan plan_augmentation(const Dataset& dataset, std::span<const std::string> selected,
                                   const DomainPool& pools, const PlanOptions& options);

/// Original distribution plus copies x per-record counts for each job.
ClassDistribution predict_distribution(const Dataset& dataset, std::span<const AugmentationJob> jobs);

struct PlanFile {
    std::map<std::string, std::string> header;
    std::vector<AugmentationJob> jobs;
};

// Header block of `# key<TAB>value` lines, then one `id<TAB>source<TAB>target<TAB>copies` per job.
std::string format_plan_file(const AugmentationPlan& plan, const std::map<std::string, std::string>& header);
PlanFile parse_plan_file(std::string_view text);

std::string to_string(PlanStatus status);

}  // namespace stylebalance
