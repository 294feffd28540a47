#include "stylebalance/review_service.hpp"

#include <httplib.h>

#include <json.hpp>

#include "stylebalance/error.hpp"

namespace stylebalance {

using nlohmann::json;

namespace {

json item_json(const ReviewItem& item, ReviewState state) {
    return {{"item_id", item.item_id},
            {"image_id", item.job.image_id},
            {"source_domain", item.job.source_domain},
            {"target_domain", item.job.target_domain},
            {"copy_index", item.copy_index},
            {"translator", item.translator},
            {"state", to_string(state)},
            {"flags",
             {{"clipped_fraction", item.flags.clipped_fraction},
              {"structure_score", item.flags.structure_score},
              {"severity", to_string(item.flags.severity)}}}};
}

ReviewService::Response error_response(int status, const std::string& message) {
    return {status, "application/json", json{{"error", message}}.dump()};
}

std::string content_type_for(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (ext == ".png") return "image/png";
    if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
    return "application/octet-stream";
}

}  // namespace

ReviewService::ReviewService(ReviewQueue& queue, ClassDistribution original, Ratio tolerance)
    : queue_(queue), original_(std::move(original)), tolerance_(tolerance) {}

ReviewService::Response ReviewService::queue(std::optional<std::string_view> state) const {
    std::optional<ReviewState> filter = ReviewState::Pending;
    if (state) {
        if (*state == "all") {
            filter.reset();
        } else {
            try {
                filter = parse_review_state(*state);
            } catch (const Error& e) {
                return error_response(400, e.what());
            }
        }
    }
    const auto states = queue_.states();
    json items = json::array();
    for (const auto& item : queue_.items()) {
        const ReviewState s = states.at(item.item_id);
        if (!filter || s == *filter) items.push_back(item_json(item, s));
    }
    return {200, "application/json", json{{"items", items}}.dump()};
}

ReviewService::Response ReviewService::item(std::string_view item_id) const {
    const auto item = queue_.item(item_id);
    if (!item) return error_response(404, "unknown item '" + std::string(item_id) + "'");
    json j = item_json(*item, queue_.state(item_id));
    j["class_counts"] = item->class_counts;
    return {200, "application/json", j.dump()};
}

ReviewService::Response ReviewService::image(std::string_view item_id, std::string_view which) const {
    const auto item = queue_.item(item_id);
    if (!item) return error_response(404, "unknown item '" + std::string(item_id) + "'");
    std::filesystem::path path;
    if (which == "source") path = item->source_image_path;
    else if (which == "generated") path = item->generated_image_path;
    else return error_response(400, "which must be 'source' or 'generated'");
    try {
        return {200, content_type_for(path), read_file(path)};
    } catch (const IoError& e) {
        return error_response(404, e.what());
    }
}

ReviewService::Response ReviewService::decision(std::string_view body) {
    std::string item_id;
    std::string reviewer;
    std::optional<ReviewState> prior;
    ReviewState next = ReviewState::Pending;
    try {
        const json j = json::parse(body);
        item_id = j.at("item_id").get<std::string>();
        next = parse_review_state(j.at("new_state").get<std::string>());
        if (j.contains("prior_state")) prior = parse_review_state(j.at("prior_state").get<std::string>());
        reviewer = j.value("reviewer", std::string("anonymous"));
    } catch (const json::exception& e) {
        return error_response(400, std::string("malformed decision: ") + e.what());
    } catch (const Error& e) {
        return error_response(400, e.what());
    }
    try {
        const auto outcome = queue_.record_decision(item_id, next, reviewer, prior);
        return {200, "application/json",
                json{{"item_id", item_id}, {"state", to_string(outcome.state)}, {"appended", outcome.appended}}.dump()};
    } catch (const ReviewError& e) {
        switch (e.kind()) {
            case ReviewError::Kind::UnknownItem: return error_response(404, e.what());
            case ReviewError::Kind::Conflict: {
                auto r = error_response(409, e.what());
                json j = json::parse(r.body);
                j["current_state"] = to_string(queue_.state(item_id));
                r.body = j.dump();
                return r;
            }
            case ReviewError::Kind::IllegalTransition: return error_response(422, e.what());
            case ReviewError::Kind::CorruptLog: return error_response(500, e.what());
        }
        return error_response(500, e.what());
    } catch (const std::exception& e) {
        return error_response(500, e.what());
    }
}

ReviewService::Response ReviewService::progress() const {
    const ReviewSummary s = queue_.summary(original_);
    json j = {{"pending", s.pending},
              {"accepted", s.accepted},
              {"rejected", s.rejected},
              {"classes", s.predicted.classes()},
              {"counts", s.predicted.counts()},
              {"tolerance", tolerance_.value()}};
    if (s.ratio) {
        j["ratio"] = s.ratio->value();
        j["balanced"] = *s.ratio <= tolerance_;
    } else {
        j["ratio"] = nullptr;
        j["balanced"] = false;
    }
    return {200, "application/json", j.dump()};
}

void ReviewService::mount(httplib::Server& server, const std::filesystem::path& ui_dir) {
    const auto reply = [](httplib::Response& res, const Response& r) {
        res.status = r.status;
        res.set_content(r.body, r.content_type);
    };
    server.Get("/api/queue", [this, reply](const httplib::Request& req, httplib::Response& res) {
        std::optional<std::string> state;
        if (req.has_param("state")) state = req.get_param_value("state");
        reply(res, queue(state ? std::optional<std::string_view>(*state) : std::nullopt));
    });
    server.Get(R"(/api/item/([^/]+))", [this, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, item(req.matches[1].str()));
    });
    server.Get(R"(/api/image/([^/]+))", [this, reply](const httplib::Request& req, httplib::Response& res) {
        const std::string which = req.has_param("which") ? req.get_param_value("which") : "generated";
        reply(res, image(req.matches[1].str(), which));
    });
    server.Post("/api/decision", [this, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, decision(req.body));
    });
    server.Get("/api/progress", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, progress()); });
    if (!ui_dir.empty()) server.set_mount_point("/", ui_dir.string());
}

}  // namespace stylebalance
