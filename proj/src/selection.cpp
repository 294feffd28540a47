#include "stylebalance/selection.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>

#include "stylebalance/error.hpp"

namespace stylebalance {

bool MinoritySpec::is_minority(std::string_view label) const noexcept {
    return std::find(minority.begin(), minority.end(), label) != minority.end();
}

MinoritySpec identify_minority_classes(const ClassDistribution& dist, const Ratio& threshold_fraction) {
    if (threshold_fraction.is_infinite() || threshold_fraction.num <= 0 || threshold_fraction.num > threshold_fraction.den) {
        throw ConfigError("minority threshold must lie in (0, 1], got " + threshold_fraction.str());
    }
    const auto& classes = dist.classes();
    const auto& counts = dist.counts();
    for (std::size_t i = 0; i < classes.size(); ++i) {
        if (counts[i] == 0) {
            throw Error("class '" + classes[i] +
                        "' has no instances; ratio-based minority detection is undefined, supply an explicit minority list");
        }
    }
    const std::int64_t max_count = counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
    MinoritySpec spec;
    for (std::size_t i = 0; i < classes.size(); ++i) {
        // count < fraction * max  <=>  count * den < num * max
        const bool minority = static_cast<__int128>(counts[i]) * threshold_fraction.den <
                              static_cast<__int128>(threshold_fraction.num) * max_count;
        (minority ? spec.minority : spec.majority).push_back(classes[i]);
    }
    if (spec.minority.empty() || spec.majority.empty()) {
        throw Error("threshold " + threshold_fraction.str() + " marks " +
                    (spec.minority.empty() ? std::string("no class") : std::string("every class")) +
                    " as minority; supply an explicit minority list");
    }
    return spec;
}

MinoritySpec make_minority_spec(const Vocabulary& vocabulary, std::span<const std::string> minority) {
    for (const auto& m : minority) {
        if (!vocabulary.contains(m)) throw VocabularyError(m);
    }
    MinoritySpec spec;
    for (const auto& name : vocabulary.names()) {
        const bool is_min = std::find(minority.begin(), minority.end(), name) != minority.end();
        (is_min ? spec.minority : spec.majority).push_back(name);
    }
    if (spec.minority.empty() || spec.majority.empty()) {
        throw ConfigError("explicit minority list must be a non-empty strict subset of the vocabulary");
    }
    return spec;
}

SelectionScore score_image(const ImageRecord& record, const MinoritySpec& spec, double lambda) {
    SelectionScore s;
    s.image_id = record.id;
    for (const auto& obj : record.objects) {
        if (spec.is_minority(obj.label)) ++s.minority_count;
        else ++s.majority_count;
    }
    s.score = static_cast<double>(s.minority_count) - lambda * static_cast<double>(s.majority_count);
    return s;
}

std::vector<std::string> select_images(const Dataset& dataset, const MinoritySpec& spec, double lambda) {
    std::vector<SelectionScore> scores;
    for (const auto& r : dataset.records) {
        auto s = score_image(r, spec, lambda);
        if (s.minority_count >= 1 && s.score > 0) scores.push_back(std::move(s));
    }
    std::sort(scores.begin(), scores.end(), [](const SelectionScore& a, const SelectionScore& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.image_id < b.image_id;
    });
    std::vector<std::string> ids;
    ids.reserve(scores.size());
    for (auto& s : scores) ids.push_back(std::move(s.image_id));
    return ids;
}

namespace {

struct Candidate {
    std::string image_id;
    std::string source_domain;
    std::size_t domain_index = 0;
    const ImageRecord* record = nullptr;
    ClassDistribution counts;
    int copies = 0;
};

}  // namespace

AugmentationPlan plan_augmentation(const Dataset& dataset, std::span<const std::string> selected,
                                   const DomainPool& pools, const PlanOptions& options) {
    if (options.max_copies_per_pair < 1) throw ConfigError("max_copies_per_pair must be at least 1");
    if (options.max_total_jobs < 0) throw ConfigError("max_total_jobs must be non-negative");

    AugmentationPlan plan;
    plan.original = class_distribution(dataset);
    plan.predicted = plan.original;
    plan.objective_trace.push_back(plan.original.objective());

    std::vector<std::string> ids(selected.begin(), selected.end());
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

    // Candidates in tie-break order: image id, then configured domain order.
    std::vector<Candidate> candidates;
    for (const auto& id : ids) {
        const ImageRecord* record = dataset.find(id);
        if (record == nullptr) throw Error("selected image '" + id + "' is not in the dataset");
        std::string source;
        if (record->domain) {
            source = *record->domain;
        } else if (const auto it = pools.assignments.find(id); it != pools.assignments.end()) {
            source = it->second;
        } else {
            throw Error("selected image '" + id + "' has no style domain assignment");
        }
        const auto counts = record_distribution(*record, dataset.vocabulary);
        for (std::size_t d = 0; d < pools.domains.size(); ++d) {
            if (pools.domains[d] == source) continue;
            candidates.push_back({id, source, d, record, counts, 0});
        }
    }

    std::vector<std::ptrdiff_t> job_of(candidates.size(), -1);

    while (static_cast<int>(plan.steps.size()) < options.max_total_jobs) {
        const Ratio current = plan.objective_trace.back();
        if (current <= options.tolerance) break;

        std::ptrdiff_t best = -1;
        Ratio best_j{1, 0};
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            const auto& c = candidates[i];
            if (c.copies >= options.max_copies_per_pair) continue;
            ClassDistribution next = plan.predicted;
            next.add(c.counts);
            const Ratio j = next.objective();
            if (best < 0 || j < best_j) {
                best = static_cast<std::ptrdiff_t>(i);
                best_j = j;
                continue;
            }
            if (j == best_j) {
                const auto& b = candidates[static_cast<std::size_t>(best)];
                // Same image: round-robin over domains by fewest copies so far.
                if (c.image_id == b.image_id && c.copies < b.copies) {
                    best = static_cast<std::ptrdiff_t>(i);
                }
            }
        }
        if (best < 0 || !(best_j < current)) break;

        auto& chosen = candidates[static_cast<std::size_t>(best)];
        ++chosen.copies;
        plan.predicted.add(chosen.counts);
        plan.objective_trace.push_back(best_j);
        const auto& target = pools.domains[chosen.domain_index];
        plan.steps.push_back({chosen.image_id, target});
        auto& slot = job_of[static_cast<std::size_t>(best)];
        if (slot < 0) {
            slot = static_cast<std::ptrdiff_t>(plan.jobs.size());
            plan.jobs.push_back({chosen.image_id, chosen.source_domain, target, 0});
        }
        ++plan.jobs[static_cast<std::size_t>(slot)].copies;
    }

    plan.status = plan.objective_trace.back() <= options.tolerance ? PlanStatus::Balanced : PlanStatus::Unreachable;
    return plan;
}

ClassDistribution predict_distribution(const Dataset& dataset, std::span<const AugmentationJob> jobs) {
    ClassDistribution dist = class_distribution(dataset);
    for (const auto& job : jobs) {
        const auto* record = dataset.find(job.image_id);
        if (record == nullptr) throw Error("plan references unknown image '" + job.image_id + "'");
        dist.add_record(*record, job.copies);
    }
    return dist;
}

std::string to_string(PlanStatus status) {
    return status == PlanStatus::Balanced ? "balanced" : "unreachable";
}

namespace {

std::string format_counts(const ClassDistribution& dist) {
    std::string out;
    for (std::size_t i = 0; i < dist.classes().size(); ++i) {
        if (i > 0) out += ',';
        out += dist.classes()[i] + ":" + std::to_string(dist.counts()[i]);
    }
    return out;
}

}  // namespace

std::string format_plan_file(const AugmentationPlan& plan, const std::map<std::string, std::string>& header) {
    std::map<std::string, std::string> fields = header;
    fields["format"] = "stylebalance-plan/1";
    fields["status"] = to_string(plan.status);
    fields["original"] = format_counts(plan.original);
    fields["predicted"] = format_counts(plan.predicted);
    fields["total_copies"] = std::to_string(plan.total_copies());
    std::string trace;
    for (std::size_t i = 0; i < plan.objective_trace.size(); ++i) {
        if (i > 0) trace += ' ';
        trace += plan.objective_trace[i].str();
    }
    fields["objective_trace"] = trace;

    std::string out;
    for (const auto& [k, v] : fields) out += "# " + k + "\t" + v + "\n";
    for (const auto& job : plan.jobs) {
        out += job.image_id + "\t" + job.source_domain + "\t" + job.target_domain + "\t" + std::to_string(job.copies) + "\n";
    }
    return out;
}

PlanFile parse_plan_file(std::string_view text) {
    PlanFile plan;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line.rfind("# ", 0) == 0) {
            const auto tab = line.find('\t');
            if (tab == std::string::npos) throw Error("plan line " + std::to_string(line_no) + ": malformed header");
            plan.header[line.substr(2, tab - 2)] = line.substr(tab + 1);
            continue;
        }
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (;;) {
            const auto tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        int copies = 0;
        if (fields.size() != 4 ||
            std::from_chars(fields[3].data(), fields[3].data() + fields[3].size(), copies).ec != std::errc{} ||
            copies < 1 || fields[1] == fields[2]) {
            throw Error("plan line " + std::to_string(line_no) + ": expected 'id<TAB>source<TAB>target<TAB>copies'");
        }
        plan.jobs.push_back({fields[0], fields[1], fields[2], copies});
    }
    if (plan.header.count("format") == 0) throw Error("plan file has no format header");
    return plan;
}

}  // namespace stylebalance
