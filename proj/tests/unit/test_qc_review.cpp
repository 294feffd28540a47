#include <doctest.h>

#include <atomic>
#include <fstream>
#include <random>
#include <thread>

#include "fixtures.hpp"
#include "stylebalance/error.hpp"
#include "stylebalance/qc_review.hpp"

using namespace stylebalance;
namespace fs = std::filesystem;

namespace {

ReviewItem make_item(const std::string& source, const std::string& target, int copy, Severity severity = Severity::None,
                     std::vector<std::int64_t> counts = {0, 0, 2, 0}) {
    ReviewItem item;
    item.item_id = make_item_id(source, target, copy);
    item.job_key = "k" + item.item_id;
    item.job = {source, "green", target, 1};
    item.copy_index = copy;
    item.translator = "stat_transfer";
    item.source_image_path = "images/" + source + ".png";
    item.generated_image_path = "generated/" + item.item_id + ".png";
    item.flags = {item.item_id, severity == Severity::Block ? 0.5 : 0.0, 1.0, severity};
    item.class_counts = std::move(counts);
    return item;
}

ReviewQueue::Clock fixed_clock() {
    return [] { return std::string("2024-01-02T03:04:05Z"); };
}

}  // namespace

TEST_CASE("auto_flag") {
    std::mt19937_64 rng(1);
    const Image source = fixtures::structured_image(64, 48, {0.3, 0.45, 0.5}, 0.15, rng);
    const QcThresholds defaults;

    const auto self = auto_flag(source, source, defaults, "x");
    CHECK(self.structure_score == doctest::Approx(1.0));
    CHECK(self.clipped_fraction == 0.0);
    CHECK(self.severity == Severity::None);
    CHECK(self.item_id == "x");

    const auto white = auto_flag(source, uniform_image(64, 48, {1, 1, 1}), defaults);
    CHECK(white.clipped_fraction == 1.0);
    CHECK(white.severity == Severity::Block);

    // mild affine color shift
    Image shifted = source;
    for (float& v : shifted.samples()) v = 0.9f * v + 0.05f;
    const auto shift = auto_flag(source, shifted, defaults);
    CHECK(shift.structure_score >= 0.99);
    CHECK(shift.severity == Severity::None);

    // inverted luminance correlates negatively
    Image inverted = source;
    for (float& v : inverted.samples()) v = 1.0f - v;
    CHECK(auto_flag(source, inverted, defaults).structure_score < 0.1);

    CHECK_THROWS_AS(auto_flag(source, uniform_image(10, 10, {0, 0, 0}), defaults), Error);
}

TEST_CASE("classify_severity thresholds") {
    const QcThresholds t;
    CHECK(classify_severity(0.10, 0.8, t) == Severity::None);
    CHECK(classify_severity(0.11, 0.9, t) == Severity::Warn);
    CHECK(classify_severity(0.0, 0.79, t) == Severity::Warn);
    CHECK(classify_severity(0.25, 0.6, t) == Severity::Warn);
    CHECK(classify_severity(0.26, 1.0, t) == Severity::Block);
    CHECK(classify_severity(0.0, 0.59, t) == Severity::Block);
    CHECK_THROWS(QcThresholds{0.3, 0.2, 0.8, 0.6}.validate());
    CHECK_THROWS(QcThresholds{0.1, 0.2, 0.5, 0.6}.validate());
}

TEST_CASE("enqueue") {
    SUBCASE("10 results with 2 blocked") {
        ReviewQueue q;
        std::vector<ReviewItem> items;
        for (int i = 0; i < 10; ++i) items.push_back(make_item("img" + std::to_string(i), "blue", 0, i % 5 == 0 ? Severity::Block : Severity::Warn));
        CHECK(q.enqueue(items) == 10);
        CHECK(q.items_in_state(ReviewState::Pending).size() == 8);
        CHECK(q.items_in_state(ReviewState::Rejected).size() == 2);
        REQUIRE(q.log().size() == 2);
        CHECK(q.log()[0].reviewer == "auto");
        // human revert of an auto-rejection
        CHECK(q.record_decision("img0__blue__0", ReviewState::Pending, "ann").appended);
        CHECK(q.state("img0__blue__0") == ReviewState::Pending);
        CHECK(q.enqueue(items) == 0);
    }
    SUBCASE("no results") {
        ReviewQueue q;
        CHECK(q.enqueue({}) == 0);
        CHECK(q.size() == 0);
    }
    SUBCASE("all severity none stay pending") {
        ReviewQueue q;
        std::vector<ReviewItem> items{make_item("a", "blue", 0), make_item("a", "white", 0), make_item("b", "blue", 1)};
        q.enqueue(items);
        CHECK(q.items_in_state(ReviewState::Pending).size() == 3);
        CHECK(q.log().empty());
    }
}

TEST_CASE("record_decision") {
    ReviewQueue q;
    const std::vector<ReviewItem> items{make_item("a", "blue", 0), make_item("b", "blue", 0)};
    q.enqueue(items);
    const auto first = q.record_decision("a__blue__0", ReviewState::Accepted, "ann");
    CHECK(first.appended);
    CHECK(q.state("a__blue__0") == ReviewState::Accepted);
    CHECK(q.log().size() == 1);
    const auto again = q.record_decision("a__blue__0", ReviewState::Accepted, "bob");
    CHECK_FALSE(again.appended);
    CHECK(q.log().size() == 1);

    CHECK(q.log()[0].prior_state == ReviewState::Pending);
    CHECK(q.log()[0].new_state == ReviewState::Accepted);

    try {
        q.record_decision("a__blue__0", ReviewState::Rejected, "bob");
        FAIL("expected illegal transition");
    } catch (const ReviewError& e) {
        CHECK(e.kind() == ReviewError::Kind::IllegalTransition);
    }
    try {
        q.record_decision("zzz", ReviewState::Accepted, "bob");
        FAIL("expected unknown item");
    } catch (const ReviewError& e) {
        CHECK(e.kind() == ReviewError::Kind::UnknownItem);
    }
    try {
        q.record_decision("b__blue__0", ReviewState::Rejected, "bob", ReviewState::Accepted);
        FAIL("expected conflict");
    } catch (const ReviewError& e) {
        CHECK(e.kind() == ReviewError::Kind::Conflict);
    }
    CHECK(q.record_decision("b__blue__0", ReviewState::Rejected, "bob", ReviewState::Pending).appended);
    // a stale prior that already matches the requested state is idempotent
    CHECK_FALSE(q.record_decision("b__blue__0", ReviewState::Rejected, "cy", ReviewState::Pending).appended);
}

TEST_CASE("concurrent decisions on one item append once") {
    ReviewQueue q;
    const std::vector<ReviewItem> items{make_item("a", "blue", 0)};
    q.enqueue(items);
    std::atomic<int> appended{0}, conflicts{0};
    std::vector<std::thread> threads;
    for (int i = 0; i < 8; ++i) {
        threads.emplace_back([&, i] {
            try {
                const auto s = i % 2 == 0 ? ReviewState::Accepted : ReviewState::Rejected;
                appended += q.record_decision("a__blue__0", s, "r" + std::to_string(i), ReviewState::Pending).appended;
            } catch (const ReviewError& e) {
                if (e.kind() == ReviewError::Kind::Conflict) ++conflicts;
            }
        });
    }
    for (auto& t : threads) t.join();
    CHECK(appended == 1);
    CHECK(q.log().size() == 1);
    CHECK(appended + conflicts <= 8);
}

TEST_CASE("replay of a 50-record log equals live state") {
    ReviewQueue q;
    std::vector<ReviewItem> items;
    std::vector<std::string> ids;
    for (int i = 0; i < 12; ++i) {
        items.push_back(make_item("s" + std::to_string(i), "deepblue", i % 3));
        ids.push_back(items.back().item_id);
    }
    q.enqueue(items);
    std::mt19937_64 rng(50);
    while (q.log().size() < 50) {
        const auto& id = ids[rng() % ids.size()];
        const ReviewState cur = q.state(id);
        const ReviewState next = cur != ReviewState::Pending ? ReviewState::Pending : (rng() % 2 ? ReviewState::Accepted : ReviewState::Rejected);
        q.record_decision(id, next, "r");
    }
    const auto log = q.log();
    CHECK(replay_decisions(ids, log) == q.states());

    // independent fold
    std::map<std::string, ReviewState> fold;
    for (const auto& id : ids) fold[id] = ReviewState::Pending;
    for (const auto& r : log) {
        CHECK(fold[r.item_id] == r.prior_state);
        fold[r.item_id] = r.new_state;
    }
    CHECK(fold == q.states());

    auto bad = log;
    bad[10].prior_state = bad[10].new_state;
    CHECK_THROWS_AS(replay_decisions(ids, bad), ReviewError);
}

TEST_CASE("decision records round trip") {
    const DecisionRecord r{"2024-01-02T03:04:05Z", "a__blue__0", ReviewState::Pending, ReviewState::Rejected, "ann \"x\""};
    const auto line = format_decision(r);
    CHECK(line.find('\n') == std::string::npos);
    CHECK(parse_decision(line) == r);
    CHECK_THROWS(parse_decision("{\"item_id\":"));
    const auto now = rfc3339_now();
    CHECK(now.size() >= 20);
    CHECK(now[10] == 'T');
    CHECK(now.back() == 'Z');

    const auto item = make_item("a", "white", 2, Severity::Warn);
    const auto parsed = parse_review_item(format_review_item(item));
    CHECK(parsed.item_id == item.item_id);
    CHECK(parsed.job == item.job);
    CHECK(parsed.flags.severity == Severity::Warn);
    CHECK(parsed.class_counts == item.class_counts);
    CHECK(parsed.generated_image_path == item.generated_image_path);
}

TEST_CASE("persistence and crash recovery") {
    fixtures::TempDir dir("qc");
    const auto qdir = dir / "review";
    std::vector<ReviewItem> items;
    for (int i = 0; i < 6; ++i) items.push_back(make_item("p" + std::to_string(i), "white", 0, i == 5 ? Severity::Block : Severity::None));
    std::map<std::string, ReviewState> live;
    {
        ReviewQueue q(qdir, fixed_clock());
        q.enqueue(items);
        q.record_decision("p0__white__0", ReviewState::Accepted, "ann");
        q.record_decision("p1__white__0", ReviewState::Rejected, "ann");
        q.record_decision("p0__white__0", ReviewState::Pending, "bob");
        q.record_decision("p0__white__0", ReviewState::Accepted, "bob");
        q.record_decision("p5__white__0", ReviewState::Pending, "ann");
        live = q.states();
    }
    {
        ReviewQueue reopened(qdir, fixed_clock());
        CHECK(reopened.states() == live);
        CHECK(reopened.size() == 6);
        CHECK(reopened.log().size() == 6);
        CHECK(reopened.item("p3__white__0")->source_image_path == "images/p3.png");
    }

    const std::string full = read_file(qdir / "decisions.log");
    std::vector<std::string> ids;
    for (const auto& it : items) ids.push_back(it.item_id);
    for (std::size_t cut = 0; cut <= full.size(); ++cut) {
        const auto copy = dir / ("cut" + std::to_string(cut));
        fs::create_directories(copy);
        fs::copy_file(qdir / "queue.jsonl", copy / "queue.jsonl");
        write_file(copy / "decisions.log", full.substr(0, cut));
        ReviewQueue q(copy, fixed_clock());
        // the recovered state is a fold of the complete lines in the prefix
        const auto complete = static_cast<std::size_t>(std::count(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(cut), '\n'));
        CHECK(q.log().size() == complete);
        const auto prefix = q.log();
        CHECK(replay_decisions(ids, prefix) == q.states());
        // a new decision after recovery lands on a clean line
        const auto s = q.state("p2__white__0");
        q.record_decision("p2__white__0", s == ReviewState::Pending ? ReviewState::Accepted : ReviewState::Pending, "z");
        CHECK(ReviewQueue(copy, fixed_clock()).log().size() == complete + 1);
        fs::remove_all(copy);
    }

    // a corrupt middle line is refused
    std::string corrupt = full;
    corrupt.insert(full.find('\n') + 1, "garbage\n");
    write_file(qdir / "decisions.log", corrupt);
    CHECK_THROWS_AS(ReviewQueue(qdir, fixed_clock()), ReviewError);
}

TEST_CASE("review_summary") {
    const auto vocab = Vocabulary::urpc();
    ClassDistribution original(vocab);
    original.counts() = {60, 400, 80, 250};
    std::vector<ReviewItem> items;
    for (int c = 0; c < 3; ++c) items.push_back(make_item("img", default_domains()[static_cast<std::size_t>(c + 1)], 0, Severity::None, {1, 0, 2, 0}));
    items.push_back(make_item("other", "blue", 0, Severity::None, {0, 1, 1, 0}));

    std::map<std::string, ReviewState> states;
    for (const auto& it : items) states[it.item_id] = ReviewState::Accepted;
    const auto all = review_summary(items, states, original);
    CHECK(all.accepted == 4);
    CHECK(all.predicted.counts() == std::vector<std::int64_t>{63, 401, 87, 250});

    for (auto& [id, s] : states) s = ReviewState::Rejected;
    const auto none = review_summary(items, states, original);
    CHECK(none.predicted == original);
    CHECK(none.rejected == 4);

    for (auto& [id, s] : states) s = ReviewState::Pending;
    states[items[0].item_id] = ReviewState::Rejected;
    const auto partial = review_summary(items, states, original);
    CHECK(partial.pending == 3);
    CHECK(partial.predicted.counts() == std::vector<std::int64_t>{62, 401, 85, 250});
    REQUIRE(partial.ratio.has_value());
    CHECK(*partial.ratio == Ratio{401, 62});
}
