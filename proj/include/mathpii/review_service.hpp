#pragma once

#include "mathpii/review_store.hpp"

#include <filesystem>
#include <memory>
#include <string>

namespace mathpii {

struct ReviewServiceOptions {
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    std::filesystem::path static_dir;  // review UI bundle served at "/"; empty serves a stub page
    std::string token;  // when set, /api/* requires header X-Review-Token
};

// HTTP front end over an AnnotationStore. Endpoints:
//   GET  /api/items?status=&iteration=&type=&page=&page_size=
//   GET  /api/items/{id}
//   POST /api/items/{id}/vote        {reviewer_id, direction, note?}
//   POST /api/items/{id}/override    {evaluation, surrogate?, reviewer_id?}
//   POST /api/iterations/{k}/close
//   GET  /api/iterations/{k}/resolution
//   GET  /api/stats
// Item ids contain '/', which clients send percent-encoded or raw.
class ReviewServer {
public:
    ReviewServer(AnnotationStore& store, ReviewServiceOptions options);
    ~ReviewServer();

    // Binds the socket; returns the bound port. Throws IoError on failure.
    int bind();
    // Serves until stop(); call after bind().
    void serve();
    // bind() + serve() on a background thread.
    int start_background();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace mathpii
