#include "stylebalance/qc_review.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <json.hpp>

#include "stylebalance/error.hpp"

namespace stylebalance {

using nlohmann::json;

void QcThresholds::validate() const {
    if (clip_warn > clip_block) throw ConfigError("qc: clip warn threshold must not exceed the block threshold");
    if (structure_warn < structure_block) {
        throw ConfigError("qc: structure warn threshold must not be below the block threshold");
    }
}

Severity classify_severity(double clipped_fraction, double structure_score, const QcThresholds& t) {
    if (clipped_fraction > t.clip_block || structure_score < t.structure_block) return Severity::Block;
    if (clipped_fraction > t.clip_warn || structure_score < t.structure_warn) return Severity::Warn;
    return Severity::None;
}

namespace {

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0, va = 0, vb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cov += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    constexpr double kFlat = 1e-12;
    if (va < kFlat && vb < kFlat) return 1.0;  // two flat images carry the same (no) structure
    if (va < kFlat || vb < kFlat) return 0.0;
    return std::clamp(cov / std::sqrt(va * vb), -1.0, 1.0);
}

}  // namespace

QcFlags auto_flag(const Image& source, const Image& generated, const QcThresholds& thresholds, std::string item_id) {
    if (!source.same_shape(generated)) {
        throw Error("qc: source is " + std::to_string(source.width()) + "x" + std::to_string(source.height()) +
                    " but generated is " + std::to_string(generated.width()) + "x" + std::to_string(generated.height()));
    }
    QcFlags flags;
    flags.item_id = std::move(item_id);
    const Image q = quantize8(generated);
    std::size_t saturated = 0;
    for (float v : q.samples()) {
        if (v == 0.0f || v == 1.0f) ++saturated;
    }
    flags.clipped_fraction = q.samples().empty() ? 0.0 : static_cast<double>(saturated) / static_cast<double>(q.samples().size());
    const double r = pearson(luminance_grid(source, 32, 32), luminance_grid(generated, 32, 32));
    flags.structure_score = (r + 1.0) / 2.0;
    flags.severity = classify_severity(flags.clipped_fraction, flags.structure_score, thresholds);
    return flags;
}

std::string to_string(ReviewState state) {
    switch (state) {
        case ReviewState::Pending: return "pending";
        case ReviewState::Accepted: return "accepted";
        case ReviewState::Rejected: return "rejected";
    }
    return "pending";
}

ReviewState parse_review_state(std::string_view text) {
    if (text == "pending") return ReviewState::Pending;
    if (text == "accepted") return ReviewState::Accepted;
    if (text == "rejected") return ReviewState::Rejected;
    throw Error("unknown review state '" + std::string(text) + "'");
}

std::string to_string(Severity severity) {
    switch (severity) {
        case Severity::None: return "none";
        case Severity::Warn: return "warn";
        case Severity::Block: return "block";
    }
    return "none";
}

Severity parse_severity(std::string_view text) {
    if (text == "none") return Severity::None;
    if (text == "warn") return Severity::Warn;
    if (text == "block") return Severity::Block;
    throw Error("unknown severity '" + std::string(text) + "'");
}

std::string make_item_id(std::string_view source_id, std::string_view target_domain, int copy_index) {
    return std::string(source_id) + "__" + std::string(target_domain) + "__" + std::to_string(copy_index);
}

std::string format_decision(const DecisionRecord& r) {
    json j = {{"timestamp", r.timestamp},
              {"item_id", r.item_id},
              {"prior_state", to_string(r.prior_state)},
              {"new_state", to_string(r.new_state)},
              {"reviewer", r.reviewer}};
    return j.dump();
}

DecisionRecord parse_decision(std::string_view line) {
    try {
        const json j = json::parse(line);
        DecisionRecord r;
        r.timestamp = j.at("timestamp").get<std::string>();
        r.item_id = j.at("item_id").get<std::string>();
        r.prior_state = parse_review_state(j.at("prior_state").get<std::string>());
        r.new_state = parse_review_state(j.at("new_state").get<std::string>());
        r.reviewer = j.at("reviewer").get<std::string>();
        return r;
    } catch (const json::exception& e) {
        throw ReviewError(ReviewError::Kind::CorruptLog, std::string("bad decision record: ") + e.what());
    }
}

bool is_legal_transition(ReviewState from, ReviewState to) noexcept {
    if (from == ReviewState::Pending) return to != ReviewState::Pending;
    return to == ReviewState::Pending;
}

std::map<std::string, ReviewState> replay_decisions(std::span<const std::string> item_ids,
                                                    std::span<const DecisionRecord> records) {
    std::map<std::string, ReviewState> states;
    for (const auto& id : item_ids) states[id] = ReviewState::Pending;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const auto it = states.find(r.item_id);
        const std::string where = "decision " + std::to_string(i + 1) + ": ";
        if (it == states.end()) {
            throw ReviewError(ReviewError::Kind::CorruptLog, where + "unknown item '" + r.item_id + "'");
        }
        if (it->second != r.prior_state) {
            throw ReviewError(ReviewError::Kind::CorruptLog, where + "item '" + r.item_id + "' is " +
                                                                 to_string(it->second) + ", record says " +
                                                                 to_string(r.prior_state));
        }
        if (!is_legal_transition(r.prior_state, r.new_state)) {
            throw ReviewError(ReviewError::Kind::CorruptLog, where + "illegal transition " + to_string(r.prior_state) +
                                                                 " -> " + to_string(r.new_state));
        }
        it->second = r.new_state;
    }
    return states;
}

namespace {

// Complete lines only; a final fragment without '\n' is an interrupted append.
std::vector<std::string> complete_lines(const std::filesystem::path& path) {
    std::vector<std::string> lines;
    if (!std::filesystem::exists(path)) return lines;
    const std::string text = read_file(path);
    std::size_t start = 0;
    for (;;) {
        const auto nl = text.find('\n', start);
        if (nl == std::string::npos) break;
        if (nl > start) lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

}  // namespace

std::vector<DecisionRecord> read_decision_log(const std::filesystem::path& path) {
    std::vector<DecisionRecord> records;
    for (const auto& line : complete_lines(path)) records.push_back(parse_decision(line));
    return records;
}

std::string rfc3339_now() {
    const auto now = std::chrono::system_clock::now();
    const auto secs = std::chrono::time_point_cast<std::chrono::seconds>(now);
    const auto millis = std::chrono::duration_cast<std::chrono::milliseconds>(now - secs).count();
    const std::time_t t = std::chrono::system_clock::to_time_t(secs);
    std::tm tm{};
    ::gmtime_r(&t, &tm);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                  tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(millis));
    return buf;
}

ReviewSummary review_summary(std::span<const ReviewItem> items, const std::map<std::string, ReviewState>& states,
                             const ClassDistribution& original) {
    ReviewSummary summary;
    summary.predicted = original;
    for (const auto& item : items) {
        const auto it = states.find(item.item_id);
        const ReviewState s = it == states.end() ? ReviewState::Pending : it->second;
        switch (s) {
            case ReviewState::Pending: ++summary.pending; break;
            case ReviewState::Accepted: ++summary.accepted; break;
            case ReviewState::Rejected: ++summary.rejected; break;
        }
        if (s == ReviewState::Rejected) continue;
        auto& counts = summary.predicted.counts();
        if (item.class_counts.size() != counts.size()) {
            throw Error("item '" + item.item_id + "' carries counts for a different vocabulary");
        }
        for (std::size_t c = 0; c < counts.size(); ++c) counts[c] += item.class_counts[c];
    }
    summary.ratio = summary.predicted.imbalance_ratio();
    return summary;
}

std::string format_review_item(const ReviewItem& item) {
    json j = {{"item_id", item.item_id},
              {"job_key", item.job_key},
              {"image_id", item.job.image_id},
              {"source_domain", item.job.source_domain},
              {"target_domain", item.job.target_domain},
              {"copy_index", item.copy_index},
              {"translator", item.translator},
              {"source_image", item.source_image_path.generic_string()},
              {"generated_image", item.generated_image_path.generic_string()},
              {"clipped_fraction", item.flags.clipped_fraction},
              {"structure_score", item.flags.structure_score},
              {"severity", to_string(item.flags.severity)},
              {"class_counts", item.class_counts}};
    return j.dump();
}

ReviewItem parse_review_item(std::string_view line) {
    try {
        const json j = json::parse(line);
        ReviewItem item;
        item.item_id = j.at("item_id").get<std::string>();
        item.job_key = j.at("job_key").get<std::string>();
        item.job.image_id = j.at("image_id").get<std::string>();
        item.job.source_domain = j.at("source_domain").get<std::string>();
        item.job.target_domain = j.at("target_domain").get<std::string>();
        item.job.copies = 1;
        item.copy_index = j.at("copy_index").get<int>();
        item.translator = j.at("translator").get<std::string>();
        item.source_image_path = j.at("source_image").get<std::string>();
        item.generated_image_path = j.at("generated_image").get<std::string>();
        item.flags.item_id = item.item_id;
        item.flags.clipped_fraction = j.at("clipped_fraction").get<double>();
        item.flags.structure_score = j.at("structure_score").get<double>();
        item.flags.severity = parse_severity(j.at("severity").get<std::string>());
        item.class_counts = j.at("class_counts").get<std::vector<std::int64_t>>();
        return item;
    } catch (const json::exception& e) {
        throw Error(std::string("bad queue record: ") + e.what());
    }
}

namespace {

constexpr const char* kQueueFile = "queue.jsonl";
constexpr const char* kLogFile = "decisions.log";

}  // namespace

ReviewQueue::ReviewQueue() : clock_(rfc3339_now) {}

ReviewQueue::ReviewQueue(std::filesystem::path directory, Clock clock)
    : directory_(std::move(directory)), clock_(std::move(clock)) {
    std::filesystem::create_directories(*directory_);
    // Drop a torn tail so later appends start on a fresh line.
    for (const char* name : {kQueueFile, kLogFile}) {
        const auto path = *directory_ / name;
        if (!std::filesystem::exists(path)) continue;
        const std::string text = read_file(path);
        const auto last_nl = text.rfind('\n');
        const std::size_t keep = last_nl == std::string::npos ? 0 : last_nl + 1;
        if (keep != text.size()) std::filesystem::resize_file(path, keep);
    }
    std::vector<std::string> ids;
    for (const auto& line : complete_lines(*directory_ / kQueueFile)) {
        auto item = parse_review_item(line);
        if (index_.count(item.item_id) != 0) continue;
        index_[item.item_id] = items_.size();
        ids.push_back(item.item_id);
        items_.push_back(std::move(item));
    }
    log_ = read_decision_log(*directory_ / kLogFile);
    states_ = replay_decisions(ids, log_);
}

void ReviewQueue::append_line(const std::filesystem::path& path, const std::string& line) {
    const std::string data = line + "\n";
    const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd < 0) throw IoError("cannot open '" + path.string() + "' for append");
    std::size_t written = 0;
    while (written < data.size()) {
        const ssize_t n = ::write(fd, data.data() + written, data.size() - written);
        if (n < 0) {
            if (errno == EINTR) continue;
            ::close(fd);
            throw IoError("write to '" + path.string() + "' failed");
        }
        written += static_cast<std::size_t>(n);
    }
    ::fsync(fd);
    ::close(fd);
}

std::size_t ReviewQueue::enqueue(std::span<const ReviewItem> items) {
    std::unique_lock lock(mutex_);
    std::size_t added = 0;
    for (const auto& item : items) {
        if (index_.count(item.item_id) != 0) continue;
        if (directory_) append_line(*directory_ / kQueueFile, format_review_item(item));
        index_[item.item_id] = items_.size();
        items_.push_back(item);
        states_[item.item_id] = ReviewState::Pending;
        ++added;
        if (item.flags.severity == Severity::Block) {
            apply_locked(item.item_id, ReviewState::Rejected, "auto", std::nullopt);
        }
    }
    return added;
}

ReviewQueue::DecisionOutcome ReviewQueue::apply_locked(const std::string& item_id, ReviewState new_state,
                                                       std::string_view reviewer,
                                                       std::optional<ReviewState> expected_prior) {
    const auto it = states_.find(item_id);
    if (it == states_.end()) throw ReviewError(ReviewError::Kind::UnknownItem, "unknown item '" + item_id + "'");
    const ReviewState current = it->second;
    if (expected_prior && *expected_prior != current) {
        // Resubmitting a decision that already took effect is not a conflict.
        if (current == new_state) return {current, false};
        throw ReviewError(ReviewError::Kind::Conflict, "item '" + item_id + "' is " + to_string(current) +
                                                           ", request expected " + to_string(*expected_prior));
    }
    if (current == new_state) return {current, false};
    if (!is_legal_transition(current, new_state)) {
        throw ReviewError(ReviewError::Kind::IllegalTransition,
                          "item '" + item_id + "': cannot go from " + to_string(current) + " to " + to_string(new_state));
    }
    DecisionRecord record{clock_(), item_id, current, new_state, std::string(reviewer)};
    if (directory_) append_line(*directory_ / kLogFile, format_decision(record));
    log_.push_back(std::move(record));
    it->second = new_state;
    return {new_state, true};
}

ReviewQueue::DecisionOutcome ReviewQueue::record_decision(std::string_view item_id, ReviewState new_state,
                                                          std::string_view reviewer,
                                                          std::optional<ReviewState> expected_prior) {
    std::unique_lock lock(mutex_);
    return apply_locked(std::string(item_id), new_state, reviewer, expected_prior);
}

ReviewState ReviewQueue::state(std::string_view item_id) const {
    std::shared_lock lock(mutex_);
    const auto it = states_.find(std::string(item_id));
    if (it == states_.end()) {
        throw ReviewError(ReviewError::Kind::UnknownItem, "unknown item '" + std::string(item_id) + "'");
    }
    return it->second;
}

std::optional<ReviewItem> ReviewQueue::item(std::string_view item_id) const {
    std::shared_lock lock(mutex_);
    const auto it = index_.find(std::string(item_id));
    if (it == index_.end()) return std::nullopt;
    return items_[it->second];
}

std::vector<ReviewItem> ReviewQueue::items() const {
    std::shared_lock lock(mutex_);
    return items_;
}

std::vector<ReviewItem> ReviewQueue::items_in_state(ReviewState state) const {
    std::shared_lock lock(mutex_);
    std::vector<ReviewItem> out;
    for (const auto& item : items_) {
        if (states_.at(item.item_id) == state) out.push_back(item);
    }
    return out;
}

std::map<std::string, ReviewState> ReviewQueue::states() const {
    std::shared_lock lock(mutex_);
    return states_;
}

std::vector<DecisionRecord> ReviewQueue::log() const {
    std::shared_lock lock(mutex_);
    return log_;
}

bool ReviewQueue::contains(std::string_view item_id) const {
    std::shared_lock lock(mutex_);
    return index_.count(std::string(item_id)) != 0;
}

std::size_t ReviewQueue::size() const {
    std::shared_lock lock(mutex_);
    return items_.size();
}

ReviewSummary ReviewQueue::summary(const ClassDistribution& original) const {
    std::shared_lock lock(mutex_);
    return review_summary(items_, states_, original);
}

}  // namespace stylebalance
