#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stylebalance/dataset.hpp"
#include "stylebalance/image.hpp"
#include "stylebalance/selection.hpp"

namespace stylebalance {

enum class Severity { None, Warn, Block };

struct QcThresholds {
    double clip_warn = 0.10;
    double clip_block = 0.25;
    double structure_warn = 0.8;
    double structure_block = 0.6;

    void validate() const;  // clip_warn <= clip_block, structure_warn >= structure_block
};

struct QcFlags {
    std::string item_id;
    double clipped_fraction = 0.0;
    double structure_score = 1.0;
    Severity severity = Severity::None;
};

Severity classify_severity(double clipped_fraction, double structure_score, const QcThresholds& thresholds);

/// clipped_fraction: generated samples at exactly 0 or 1 after 8-bit quantization.
/// structure_score: (r + 1) / 2 for the Pearson correlation r of 32x32 luminance grids.
QcFlags auto_flag(const Image& source, const Image& generated, const QcThresholds& thresholds,
                  std::string item_id = {});

enum class ReviewState { Pending, Accepted, Rejected };

std::string to_string(ReviewState state);
ReviewState parse_review_state(std::string_view text);
std::string to_string(Severity severity);
Severity parse_severity(std::string_view text);

struct ReviewItem {
    std::string item_id;  // "{source_id}__{target_domain}__{copy}"
    std::string job_key;  // content address of the generation inputs
    AugmentationJob job;  // copies == 1
    int copy_index = 0;
    std::string translator;
    std::filesystem::path source_image_path;
    std::filesystem::path generated_image_path;
    QcFlags flags;
    std::vector<std::int64_t> class_counts;  // source record counts, vocabulary order
};

std::string make_item_id(std::string_view source_id, std::string_view target_domain, int copy_index);

struct DecisionRecord {
    std::string timestamp;  // RFC 3339
    std::string item_id;
    ReviewState prior_state = ReviewState::Pending;
    ReviewState new_state = ReviewState::Pending;
    std::string reviewer;

    friend bool operator==(const DecisionRecord&, const DecisionRecord&) = default;
};

std::string format_decision(const DecisionRecord& record);  // one line, no newline
DecisionRecord parse_decision(std::string_view line);

bool is_legal_transition(ReviewState from, ReviewState to) noexcept;

/// Folds decision records over items that all start pending. Throws ReviewError
/// (CorruptLog) on an unknown item, a prior_state mismatch or an illegal transition.
std::map<std::string, ReviewState> replay_decisions(std::span<const std::string> item_ids,
                                                    std::span<const DecisionRecord> records);

/// Reads a log file. A trailing line without newline is a torn append and is dropped.
std::vector<DecisionRecord> read_decision_log(const std::filesystem::path& path);

std::string rfc3339_now();

struct ReviewSummary {
    std::size_t pending = 0;
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    ClassDistribution predicted;  // original + accepted-or-pending items
    std::optional<Ratio> ratio;
};

ReviewSummary review_summary(std::span<const ReviewItem> items, const std::map<std::string, ReviewState>& states,
                             const ClassDistribution& original);

// Review queue plus its append-only decision log. All mutations are serialized;
// readers take a shared lock. With a directory attached, items go to queue.jsonl
// and decisions to decisions.log, both appended and fsynced.
class ReviewQueue {
public:
    using Clock = std::function<std::string()>;

    ReviewQueue();
    // Attaches to `directory`, creating it if needed and replaying any existing
    // queue.jsonl and decisions.log.
    explicit ReviewQueue(std::filesystem::path directory, Clock clock = rfc3339_now);

    /// Adds items as pending; severity Block items are immediately rejected by "auto".
    /// Items whose id already exists are skipped. Returns the number added.
    std::size_t enqueue(std::span<const ReviewItem> items);

    struct DecisionOutcome {
        ReviewState state;
        bool appended;
    };

    /// Same-state resubmission is a no-op. `expected_prior`, when given, must
    /// equal the current state or a Conflict error is thrown.
    DecisionOutcome record_decision(std::string_view item_id, ReviewState new_state, std::string_view reviewer,
                                    std::optional<ReviewState> expected_prior = std::nullopt);

    ReviewState state(std::string_view item_id) const;
    std::optional<ReviewItem> item(std::string_view item_id) const;
    std::vector<ReviewItem> items() const;
    std::vector<ReviewItem> items_in_state(ReviewState state) const;
    std::map<std::string, ReviewState> states() const;
    std::vector<DecisionRecord> log() const;
    bool contains(std::string_view item_id) const;
    std::size_t size() const;

    ReviewSummary summary(const ClassDistribution& original) const;

private:
    DecisionOutcome apply_locked(const std::string& item_id, ReviewState new_state, std::string_view reviewer,
                                 std::optional<ReviewState> expected_prior);
    void append_line(const std::filesystem::path& path, const std::string& line);

    mutable std::shared_mutex mutex_;
    std::optional<std::filesystem::path> directory_;
    Clock clock_;
    std::vector<ReviewItem> items_;
    std::map<std::string, std::size_t> index_;
    std::map<std::string, ReviewState> states_;
    std::vector<DecisionRecord> log_;
};

std::string format_review_item(const ReviewItem& item);  // one JSON line
ReviewItem parse_review_item(std::string_view line);

}  // namespace stylebalance
