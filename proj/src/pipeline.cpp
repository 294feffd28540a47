#include "stylebalance/pipeline.hpp"

#include <future>
#include <httplib.h>
#include <iomanip>

#include "stylebalance/error.hpp"
#include "stylebalance/qc_review.hpp"
#include "stylebalance/review_service.hpp"

namespace fs = std::filesystem;

namespace stylebalance {

ImageLoader dataset_image_loader(const fs::path& dataset_root) {
    return [dataset_root](const ImageRecord& record) { return read_image(dataset_root / record.image_path); };
}

namespace {

std::vector<DomainAnchor> configured_anchors(const RunConfig& config) {
    const auto available = config.anchors_file.empty() ? default_anchors()
                                                       : parse_anchor_config(read_file(config.anchors_file));
    std::vector<DomainAnchor> anchors;
    for (const auto& domain : config.domains) {
        const auto it = std::find_if(available.begin(), available.end(),
                                     [&](const DomainAnchor& a) { return a.domain == domain; });
        if (it == available.end()) throw ConfigError("no anchor configured for domain '" + domain + "'");
        anchors.push_back(*it);
    }
    if (anchors.empty()) throw ConfigError("no style domains configured");
    return anchors;
}

fs::path queue_dir(const RunConfig& config) { return config.work_dir / "review"; }

}  // namespace

PipelineContext load_context(const RunConfig& config) {
    PipelineContext ctx;
    ctx.config = config;
    ctx.dataset = load_dataset(config.dataset_root, config.manifest_path(), Vocabulary(config.vocabulary));
    ctx.anchors = configured_anchors(config);
    std::map<std::string, std::string> overrides;
    if (!config.overrides_file.empty()) overrides = parse_domain_overrides(read_file(config.overrides_file));
    ctx.pools = build_domain_pools(ctx.dataset, ctx.anchors, dataset_image_loader(config.dataset_root), overrides);
    ctx.balanced_pools = balance_domain_pool(ctx.pools, config.seed);
    return ctx;
}

void print_distribution(std::ostream& out, const ClassDistribution& distribution) {
    const auto total = distribution.total();
    for (std::size_t i = 0; i < distribution.classes().size(); ++i) {
        const auto n = distribution.counts()[i];
        out << "  " << std::left << std::setw(14) << distribution.classes()[i] << std::right << std::setw(8) << n;
        if (total > 0) {
            out << "  " << std::fixed << std::setprecision(1) << std::setw(5) << 100.0 * static_cast<double>(n) / static_cast<double>(total)
                << "%  " << std::string(static_cast<std::size_t>(40 * n / std::max<std::int64_t>(1, *std::max_element(distribution.counts().begin(), distribution.counts().end()))), '#');
            out.unsetf(std::ios::floatfield);
        }
        out << '\n';
    }
    const auto ratio = distribution.imbalance_ratio();
    out << "  imbalance ratio: " << (ratio ? std::to_string(ratio->value()) + " (" + ratio->str() + ")" : "undefined")
        << '\n';
}

IngestSummary run_ingest(const RunConfig& config, std::ostream& out) {
    const PipelineContext ctx = load_context(config);
    IngestSummary summary;
    summary.records = ctx.dataset.records.size();
    summary.distribution = class_distribution(ctx.dataset);
    for (std::size_t d = 0; d < ctx.pools.domains.size(); ++d) {
        summary.pool_sizes.emplace_back(ctx.pools.domains[d], ctx.pools.pools[d].size());
    }
    out << "config " << config_hash(config) << '\n';
    out << "records: " << summary.records << '\n';
    out << "instances per class:\n";
    print_distribution(out, summary.distribution);
    out << "style domains:\n";
    for (const auto& [domain, n] : summary.pool_sizes) out << "  " << std::left << std::setw(14) << domain << std::right << std::setw(8) << n << '\n';
    out << "  balanced pool size: " << ctx.balanced_pools.min_pool_size() << '\n';
    return summary;
}

PlanOutcome run_plan(const RunConfig& config, std::ostream& out) {
    const PipelineContext ctx = load_context(config);
    const auto dist = class_distribution(ctx.dataset);
    const MinoritySpec spec = config.minority.empty() ? identify_minority_classes(dist, config.minority_threshold)
                                                      : make_minority_spec(ctx.dataset.vocabulary, config.minority);
    PlanOutcome outcome;
    outcome.selected = select_images(ctx.dataset, spec, config.lambda);
    PlanOptions options;
    options.tolerance = config.tolerance;
    options.max_copies_per_pair = config.max_copies_per_pair;
    options.max_total_jobs = config.max_total_jobs;
    outcome.plan = plan_augmentation(ctx.dataset, outcome.selected, ctx.pools, options);

    std::string minority;
    for (const auto& m : spec.minority) minority += (minority.empty() ? "" : ",") + m;
    const std::map<std::string, std::string> header{
        {"config_hash", config_hash(config)},
        {"tolerance", config.tolerance.str()},
        {"lambda", config_snapshot(config).at("lambda")},
        {"seed", std::to_string(config.seed)},
        {"minority", minority},
        {"selected_images", std::to_string(outcome.selected.size())},
    };
    write_file(config.work_dir / kPlanFileName, format_plan_file(outcome.plan, header));

    out << "config " << config_hash(config) << '\n';
    out << "minority classes: " << minority << '\n';
    out << "selected images: " << outcome.selected.size() << '\n';
    out << "objective trace:";
    for (const auto& j : outcome.plan.objective_trace) out << ' ' << j.value();
    out << '\n';
    out << "planned copies: " << outcome.plan.total_copies() << " in " << outcome.plan.jobs.size() << " jobs\n";
    out << "predicted distribution:\n";
    print_distribution(out, outcome.plan.predicted);
    if (outcome.plan.status == PlanStatus::Unreachable) {
        out << "balance unreachable: best ratio " << outcome.plan.final_objective().value() << " exceeds tolerance "
            << config.tolerance.value();
        if (outcome.selected.empty()) out << " (no image has a positive minority score)";
        out << '\n';
        outcome.exit_code = kExitUnbalanced;
    }
    return outcome;
}

std::map<std::string, StyleTarget> build_style_targets(const PipelineContext& ctx) {
    const bool balanced = ctx.balanced_pools.min_pool_size() > 0;
    const DomainPool& source = balanced ? ctx.balanced_pools : ctx.pools;
    if (!balanced) std::cerr << "warning: some style domain is empty; style statistics use unbalanced pools\n";
    const auto loader = dataset_image_loader(ctx.config.dataset_root);
    std::map<std::string, StyleTarget> targets;
    for (std::size_t d = 0; d < source.domains.size(); ++d) {
        const auto& domain = source.domains[d];
        if (source.pools[d].empty()) {
            std::cerr << "warning: domain '" << domain << "' has no images; it cannot be a translation endpoint\n";
            continue;
        }
        std::vector<Image> images;
        for (const auto& id : source.pools[d]) images.push_back(loader(*ctx.dataset.find(id)));
        targets[domain] = compute_style_target(images, domain, ctx.config.haze_for(domain), ctx.config.std_floor);
    }
    return targets;
}

Translator make_translator(const PipelineContext& ctx) {
    switch (ctx.config.translator) {
        case TranslatorKind::Identity: return Translator::identity();
        case TranslatorKind::StatTransfer: return Translator::stat_transfer(build_style_targets(ctx), false);
        case TranslatorKind::StatTransferWithHaze: return Translator::stat_transfer(build_style_targets(ctx), true);
        case TranslatorKind::External:
            return Translator::external(
                {ctx.config.translator_command, std::chrono::seconds(ctx.config.translator_timeout_s)});
    }
    return Translator::identity();
}

namespace {

struct GenerationTask {
    std::string item_id;
    std::string job_key;
    AugmentationJob job;
    int copy_index = 0;
};

struct GenerationResult {
    ReviewItem item;
    std::string error;
};

}  // namespace

GenerateOutcome run_generate(const RunConfig& config, std::ostream& out) {
    const auto plan_path = config.work_dir / kPlanFileName;
    if (!fs::exists(plan_path)) throw Error("no plan at '" + plan_path.string() + "'; run 'plan' first");
    const PlanFile plan = parse_plan_file(read_file(plan_path));
    const PipelineContext ctx = load_context(config);
    const Translator translator = make_translator(ctx);
    ReviewQueue queue(queue_dir(config));
    const auto generated_dir = config.work_dir / kGeneratedDirName;
    fs::create_directories(generated_dir);

    const std::string translator_key = to_string(config.translator) + "|" + config.translator_command + "|" +
                                       config_snapshot(config).at("std_floor") + "|" + std::to_string(config.seed);
    GenerateOutcome outcome;
    std::vector<GenerationTask> tasks;
    for (const auto& job : plan.jobs) {
        if (ctx.dataset.find(job.image_id) == nullptr) throw Error("plan references unknown image '" + job.image_id + "'");
        for (int copy = 0; copy < job.copies; ++copy) {
            GenerationTask task{make_item_id(job.image_id, job.target_domain, copy), {}, job, copy};
            task.job.copies = 1;
            task.job_key = hex64(fnv1a64(translator_key + "|" + job.image_id + "|" + job.source_domain + "|" +
                                         job.target_domain + "|" + std::to_string(copy)));
            if (const auto existing = queue.item(task.item_id)) {
                if (existing->job_key != task.job_key) {
                    out << "note: " << task.item_id << " already queued from different generation inputs; kept\n";
                }
                ++outcome.skipped;
                continue;
            }
            tasks.push_back(std::move(task));
        }
    }

    const auto vocabulary = ctx.dataset.vocabulary;
    const auto loader = dataset_image_loader(config.dataset_root);
    const auto run_task = [&](const GenerationTask& task) {
        GenerationResult result;
        try {
            const ImageRecord& record = *ctx.dataset.find(task.job.image_id);
            const Image source = loader(record);
            TranslationResult translated = translator.translate(source, task.job.source_domain, task.job.target_domain);
            const auto path = generated_dir / (task.item_id + ".png");
            write_image(translated.image, path);
            ReviewItem& item = result.item;
            item.item_id = task.item_id;
            item.job_key = task.job_key;
            item.job = task.job;
            item.copy_index = task.copy_index;
            item.translator = to_string(translator.kind());
            item.source_image_path = fs::absolute(config.dataset_root / record.image_path).lexically_normal();
            item.generated_image_path = fs::absolute(path).lexically_normal();
            item.flags = auto_flag(source, quantize8(translated.image), config.qc, task.item_id);
            item.class_counts = record_distribution(record, vocabulary).counts();
        } catch (const TranslationError& e) {
            result.error = std::string(e.what()) + (e.transcript().empty() ? "" : "\n" + e.transcript());
        } catch (const std::exception& e) {
            result.error = e.what();
        }
        return result;
    };

    const std::size_t width = std::max(1, config.max_concurrent_commands);
    std::string failures_text;
    for (std::size_t start = 0; start < tasks.size(); start += width) {
        const std::size_t end = std::min(tasks.size(), start + width);
        std::vector<std::future<GenerationResult>> batch;
        for (std::size_t i = start; i < end; ++i) {
            batch.push_back(std::async(width > 1 ? std::launch::async : std::launch::deferred, run_task, std::cref(tasks[i])));
        }
        for (std::size_t i = start; i < end; ++i) {
            GenerationResult r = batch[i - start].get();
            if (!r.error.empty()) {
                outcome.failures.push_back(tasks[i].item_id + ": " + r.error);
                std::string oneline = r.error;
                std::replace(oneline.begin(), oneline.end(), '\n', ' ');
                std::replace(oneline.begin(), oneline.end(), '\t', ' ');
                failures_text += tasks[i].item_id + "\t" + oneline + "\n";
                continue;
            }
            queue.enqueue(std::span<const ReviewItem>(&r.item, 1));
            ++outcome.generated;
        }
    }
    write_file(config.work_dir / kFailuresFileName, failures_text);

    const auto summary = queue.summary(class_distribution(ctx.dataset));
    out << "config " << config_hash(config) << '\n';
    out << "generated: " << outcome.generated << ", already present: " << outcome.skipped
        << ", failed: " << outcome.failures.size() << '\n';
    out << "queue: " << summary.pending << " pending, " << summary.accepted << " accepted, " << summary.rejected
        << " rejected\n";
    for (const auto& f : outcome.failures) out << "failure: " << f << '\n';
    outcome.exit_code = outcome.failures.empty() ? kExitOk : kExitError;
    return outcome;
}

ExportOutcome run_export(const RunConfig& config, std::ostream& out) {
    const PipelineContext ctx = load_context(config);
    const ReviewQueue queue(queue_dir(config));
    ExportOptions options;
    options.pending = config.export_pending;
    options.config_snapshot = config_snapshot(config);
    options.config_snapshot["config_hash"] = config_hash(config);
    ExportOutcome outcome;
    const auto items = queue.items();
    outcome.manifest =
        export_balanced_dataset(ctx.dataset, config.dataset_root, items, queue.states(), config.out_dir, options);
    outcome.report = verify_balance(config.out_dir, config.tolerance);
    out << "config " << config_hash(config) << '\n';
    out << "exported " << outcome.manifest.entries.size() << " images to " << config.out_dir.string() << '\n';
    out << "final distribution:\n";
    print_distribution(out, outcome.report.counts);
    out << (outcome.report.balanced ? "balanced" : "NOT balanced") << " at tolerance " << config.tolerance.value() << '\n';
    outcome.exit_code = outcome.report.balanced ? kExitOk : kExitUnbalanced;
    return outcome;
}

BalanceReport run_verify(const RunConfig& config, std::ostream& out, int& exit_code) {
    const BalanceReport report = verify_balance(config.out_dir, config.tolerance);
    print_distribution(out, report.counts);
    out << (report.balanced ? "balanced" : "NOT balanced") << " at tolerance " << config.tolerance.value() << '\n';
    exit_code = report.balanced ? kExitOk : kExitUnbalanced;
    return report;
}

int run_review_serve(const RunConfig& config, std::ostream& out) {
    const Dataset dataset =
        load_dataset(config.dataset_root, config.manifest_path(), Vocabulary(config.vocabulary));
    ReviewQueue queue(queue_dir(config));
    ReviewService service(queue, class_distribution(dataset), config.tolerance);
    httplib::Server server;
    service.mount(server, config.ui_dir);
    out << "review service on http://" << config.bind_address << ":" << config.port << "  (" << queue.size()
        << " items)\n"
        << std::flush;
    if (!server.listen(config.bind_address, config.port)) {
        throw Error("cannot bind " + config.bind_address + ":" + std::to_string(config.port));
    }
    return kExitOk;
}

}  // namespace stylebalance
