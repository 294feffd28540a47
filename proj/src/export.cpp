#include "stylebalance/export.hpp"

#include <unistd.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "stylebalance/error.hpp"
#include "stylebalance/image.hpp"

namespace fs = std::filesystem;

namespace stylebalance {

PendingPolicy parse_pending_policy(std::string_view text) {
    if (text == "block") return PendingPolicy::Block;
    if (text == "accept") return PendingPolicy::Accept;
    if (text == "reject") return PendingPolicy::Reject;
    throw ConfigError("export_pending must be block, accept or reject, got '" + std::string(text) + "'");
}

std::string to_string(PendingPolicy policy) {
    switch (policy) {
        case PendingPolicy::Block: return "block";
        case PendingPolicy::Accept: return "accept";
        case PendingPolicy::Reject: return "reject";
    }
    return "block";
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        out.push_back(s.substr(start, pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string field_or_dash(const std::string& s) { return s.empty() ? "-" : s; }
std::string dash_to_empty(const std::string& s) { return s == "-" ? std::string() : s; }

}  // namespace

std::string format_export_manifest(const ExportManifest& manifest) {
    std::ostringstream out;
    out << "# format\tstylebalance-export/1\n";
    std::string vocab;
    for (std::size_t i = 0; i < manifest.final_distribution.classes().size(); ++i) {
        if (i > 0) vocab += ',';
        vocab += manifest.final_distribution.classes()[i];
    }
    out << "# vocabulary\t" << vocab << '\n';
    for (std::size_t i = 0; i < manifest.final_distribution.classes().size(); ++i) {
        out << "# count." << manifest.final_distribution.classes()[i] << '\t' << manifest.final_distribution.counts()[i]
            << '\n';
    }
    const auto ratio = manifest.final_distribution.imbalance_ratio();
    out << "# ratio\t" << (ratio ? ratio->str() : std::string("undefined")) << '\n';
    out << "# entries\t" << manifest.entries.size() << '\n';
    out << "# skipped_items\t" << manifest.skipped_items << '\n';
    for (const auto& [k, v] : manifest.config_snapshot) out << "# config." << k << '\t' << v << '\n';
    for (const auto& e : manifest.entries) {
        out << e.image.generic_string() << '\t' << e.annotation.generic_string() << '\t'
            << (e.origin == EntryOrigin::Original ? "original" : "augmented") << '\t' << e.record_id << '\t';
        if (e.origin == EntryOrigin::Original) {
            out << "-\t-\t-\t-\t-\n";
        } else {
            out << field_or_dash(e.source_id) << '\t' << field_or_dash(e.source_domain) << '\t'
                << field_or_dash(e.target_domain) << '\t' << field_or_dash(e.translator) << '\t' << e.copy_index << '\n';
        }
    }
    return out.str();
}

ExportManifest parse_export_manifest(std::string_view text) {
    ExportManifest manifest;
    std::map<std::string, std::string> header;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line.rfind("# ", 0) == 0) {
            const auto tab = line.find('\t');
            if (tab == std::string::npos) throw IntegrityError("manifest line " + std::to_string(line_no) + ": bad header");
            header[line.substr(2, tab - 2)] = line.substr(tab + 1);
            continue;
        }
        const auto f = split(line, '\t');
        if (f.size() != 9 || (f[2] != "original" && f[2] != "augmented")) {
            throw IntegrityError("manifest line " + std::to_string(line_no) + ": malformed entry");
        }
        ExportEntry e;
        e.image = f[0];
        e.annotation = f[1];
        e.origin = f[2] == "original" ? EntryOrigin::Original : EntryOrigin::Augmented;
        e.record_id = f[3];
        if (e.origin == EntryOrigin::Augmented) {
            e.source_id = dash_to_empty(f[4]);
            e.source_domain = dash_to_empty(f[5]);
            e.target_domain = dash_to_empty(f[6]);
            e.translator = dash_to_empty(f[7]);
            try {
                e.copy_index = std::stoi(f[8]);
            } catch (const std::exception&) {
                throw IntegrityError("manifest line " + std::to_string(line_no) + ": bad copy index");
            }
        }
        manifest.entries.push_back(std::move(e));
    }
    if (header["format"] != "stylebalance-export/1") throw IntegrityError("not an export manifest");
    Vocabulary vocab(split(header["vocabulary"], ','));
    manifest.final_distribution = ClassDistribution(vocab);
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        const auto it = header.find("count." + vocab.names()[i]);
        if (it == header.end()) throw IntegrityError("manifest lacks a count for '" + vocab.names()[i] + "'");
        manifest.final_distribution.counts()[i] = std::stoll(it->second);
    }
    for (const auto& [k, v] : header) {
        if (k.rfind("config.", 0) == 0) manifest.config_snapshot[k.substr(7)] = v;
    }
    if (const auto it = header.find("skipped_items"); it != header.end()) manifest.skipped_items = std::stoull(it->second);
    return manifest;
}

namespace {

bool is_empty_or_absent(const fs::path& dir) {
    if (!fs::exists(dir)) return true;
    return fs::is_directory(dir) && fs::is_empty(dir);
}

// Parses a written annotation and checks it against the written image.
ImageRecord check_written(const fs::path& root, const ExportEntry& entry, const Vocabulary& vocabulary) {
    auto record = parse_voc_annotation(read_file(root / entry.annotation), vocabulary, entry.record_id);
    const Image image = read_image(root / entry.image);
    if (image.width() != record.width || image.height() != record.height) {
        throw IntegrityError("annotation '" + entry.annotation.generic_string() + "' says " + std::to_string(record.width) +
                             "x" + std::to_string(record.height) + " but image is " + std::to_string(image.width()) + "x" +
                             std::to_string(image.height()));
    }
    return record;
}

}  // namespace

ExportManifest export_balanced_dataset(const Dataset& dataset, const fs::path& dataset_root,
                                       std::span<const ReviewItem> items,
                                       const std::map<std::string, ReviewState>& states, const fs::path& out_dir,
                                       const ExportOptions& options) {
    if (!is_empty_or_absent(out_dir)) throw Error("export directory '" + out_dir.string() + "' is not empty");

    // Resolve which items are exported before touching the filesystem.
    std::vector<const ReviewItem*> accepted;
    std::vector<std::string> pending;
    std::size_t skipped = 0;
    for (const auto& item : items) {
        const auto it = states.find(item.item_id);
        ReviewState s = it == states.end() ? ReviewState::Pending : it->second;
        if (s == ReviewState::Pending) {
            if (options.pending == PendingPolicy::Block) {
                pending.push_back(item.item_id);
                continue;
            }
            s = options.pending == PendingPolicy::Accept ? ReviewState::Accepted : ReviewState::Rejected;
        }
        if (s == ReviewState::Accepted) accepted.push_back(&item);
        else ++skipped;
    }
    if (!pending.empty()) {
        throw Error(std::to_string(pending.size()) + " review item(s) still pending (first: '" + pending.front() +
                    "'); finish the review or set export_pending");
    }

    std::set<std::string> ids;
    for (const auto& r : dataset.records) ids.insert(r.id);
    for (const auto* item : accepted) {
        if (dataset.find(item->job.image_id) == nullptr) {
            throw Error("item '" + item->item_id + "' refers to unknown image '" + item->job.image_id + "'");
        }
        if (!ids.insert(item->item_id).second) throw Error("augmented id '" + item->item_id + "' collides with an existing id");
        if (!fs::exists(item->generated_image_path)) {
            throw Error("generated image for accepted item '" + item->item_id + "' is missing: " +
                        item->generated_image_path.string());
        }
    }

    const fs::path target = fs::absolute(out_dir).lexically_normal();
    const fs::path staging = target.parent_path() / (target.filename().string() + ".staging-" + std::to_string(::getpid()));
    fs::remove_all(staging);
    fs::create_directories(staging / "images");
    fs::create_directories(staging / "annotations");

    try {
        ExportManifest manifest;
        manifest.config_snapshot = options.config_snapshot;
        manifest.skipped_items = skipped;

        for (const auto& r : dataset.records) {
            ExportEntry e;
            e.origin = EntryOrigin::Original;
            e.record_id = r.id;
            e.image = fs::path("images") / (r.id + r.image_path.extension().string());
            e.annotation = fs::path("annotations") / (r.id + ".xml");
            fs::copy_file(dataset_root / r.image_path, staging / e.image);
            ImageRecord out = r;
            out.image_path = e.image.filename();
            write_file(staging / e.annotation, serialize_voc_annotation(out));
            manifest.entries.push_back(std::move(e));
        }
        for (const auto* item : accepted) {
            const ImageRecord& source = *dataset.find(item->job.image_id);
            ExportEntry e;
            e.origin = EntryOrigin::Augmented;
            e.record_id = item->item_id;
            e.image = fs::path("images") / (item->item_id + item->generated_image_path.extension().string());
            e.annotation = fs::path("annotations") / (item->item_id + ".xml");
            e.source_id = source.id;
            e.source_domain = item->job.source_domain;
            e.target_domain = item->job.target_domain;
            e.translator = item->translator;
            e.copy_index = item->copy_index;
            fs::copy_file(item->generated_image_path, staging / e.image);
            ImageRecord out = source;  // boxes and labels unchanged
            out.id = item->item_id;
            out.image_path = e.image.filename();
            out.domain = item->job.target_domain;
            write_file(staging / e.annotation, serialize_voc_annotation(out));
            manifest.entries.push_back(std::move(e));
        }
        std::sort(manifest.entries.begin(), manifest.entries.end(),
                  [](const ExportEntry& a, const ExportEntry& b) { return a.image.generic_string() < b.image.generic_string(); });

        manifest.final_distribution = ClassDistribution(dataset.vocabulary);
        for (const auto& e : manifest.entries) {
            manifest.final_distribution.add_record(check_written(staging, e, dataset.vocabulary));
        }
        write_file(staging / kManifestName, format_export_manifest(manifest));

        if (fs::exists(target)) fs::remove(target);
        fs::rename(staging, target);
        return manifest;
    } catch (...) {
        std::error_code ec;
        fs::remove_all(staging, ec);
        throw;
    }
}

BalanceReport verify_balance(const fs::path& export_root, const Ratio& tolerance) {
    const auto manifest_path = export_root / kManifestName;
    if (!fs::exists(manifest_path)) throw IntegrityError("no manifest at '" + manifest_path.string() + "'");
    const ExportManifest manifest = parse_export_manifest(read_file(manifest_path));
    const Vocabulary vocab(manifest.final_distribution.classes());

    BalanceReport report;
    report.counts = ClassDistribution(vocab);
    std::vector<std::string> offenders;
    for (const auto& e : manifest.entries) {
        if (!fs::exists(export_root / e.image)) {
            offenders.push_back(e.image.generic_string() + ": missing");
            continue;
        }
        if (!fs::exists(export_root / e.annotation)) {
            offenders.push_back(e.annotation.generic_string() + ": missing");
            continue;
        }
        try {
            report.counts.add_record(check_written(export_root, e, vocab));
        } catch (const Error& err) {
            offenders.push_back(e.annotation.generic_string() + ": " + err.what());
        }
    }
    if (offenders.empty() && report.counts != manifest.final_distribution) {
        offenders.push_back("recounted distribution differs from the manifest's counts");
    }
    if (!offenders.empty()) {
        std::string what = "export integrity check failed:";
        for (const auto& o : offenders) what += "\n  " + o;
        throw IntegrityError(what);
    }
    report.ratio = report.counts.imbalance_ratio();
    report.balanced = report.ratio.has_value() && *report.ratio <= tolerance;
    return report;
}

}  // namespace stylebalance
