#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "stylebalance/dataset.hpp"
#include "stylebalance/qc_review.hpp"

namespace httplib {
class Server;
}

namespace stylebalance {

// HTTP veneer over ReviewQueue. Handlers only translate between JSON and
// queue calls; every mutation goes through ReviewQueue::record_decision.
class ReviewService {
public:
    struct Response {
        int status = 200;
        std::string content_type = "application/json";
        std::string body;
    };

    ReviewService(ReviewQueue& queue, ClassDistribution original, Ratio tolerance);

    Response queue(std::optional<std::string_view> state) const;
    Response item(std::string_view item_id) const;
    Response image(std::string_view item_id, std::string_view which) const;
    Response decision(std::string_view body);
    Response progress() const;

    /// GET /api/queue, /api/item/{id}, /api/image/{id}, /api/progress; POST /api/decision.
    /// Static files under `ui_dir` are served at / when given.
    void mount(httplib::Server& server, const std::filesystem::path& ui_dir = {});

private:
    ReviewQueue& queue_;
    ClassDistribution original_;
    Ratio tolerance_;
};

}  // namespace stylebalance
