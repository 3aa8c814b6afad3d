#pragma once

// Interactive correction service: in-memory image sessions with LRU
// eviction, exposed over HTTP/JSON.
//
//   POST   /api/session                        PNG body or multipart "image" -> {id, width, height}
//   POST   /api/session/{id}/awb               auto correction -> result summary
//   POST   /api/session/{id}/pick  {x, y}      manual correction, appended to picks
//   GET    /api/session/{id}/image/original    PNG
//   GET    /api/session/{id}/image/corrected   PNG of the latest correction
//   GET    /api/session/{id}/picks             picks with gamma, ell, cluster
//   DELETE /api/session/{id}
//   GET    /                                   static UI bundle (when configured)

// Eigen must be parsed before httplib pulls in <resolv.h>, which defines a
// `_res` macro that collides with Eigen parameter names.
#include "wbrf/corrector.hpp"
#include "wbrf/image_io.hpp"
#include "wbrf/random.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

namespace wbrf {

struct ServiceConfig {
  std::size_t capacity = 32;
  std::size_t max_pixels = 24'000'000;
  /// Estimator for /awb; defaults to the one the model was trained with.
  std::optional<EstimatorConfig> estimator{};
  CorrectionOptions correction{};
  std::string static_dir{};
};

struct Pick {
  long long x = 0;
  long long y = 0;
  CastVector gamma;
  CastCorrectionVector ell;
  std::size_t cluster = 0;
};

struct Session {
  std::string id;
  PixelMatrix image;
  std::vector<Pick> picks;
  std::optional<CorrectionResult> last_result;
  std::vector<std::uint8_t> corrected_png;
  std::mutex mutex;
};

struct ApiResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

/// Fixed-capacity session map; the least recently used session is evicted.
class SessionStore {
 public:
  explicit SessionStore(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

  std::shared_ptr<Session> insert(std::shared_ptr<Session> s) {
    std::lock_guard lock(mutex_);
    order_.push_front(s->id);
    map_[s->id] = {s, order_.begin()};
    while (map_.size() > capacity_) {
      map_.erase(order_.back());
      order_.pop_back();
    }
    return s;
  }

  std::shared_ptr<Session> find(const std::string& id) {
    std::lock_guard lock(mutex_);
    const auto it = map_.find(id);
    if (it == map_.end()) return nullptr;
    order_.splice(order_.begin(), order_, it->second.second);
    return it->second.first;
  }

  bool erase(const std::string& id) {
    std::lock_guard lock(mutex_);
    const auto it = map_.find(id);
    if (it == map_.end()) return false;
    order_.erase(it->second.second);
    map_.erase(it);
    return true;
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return map_.size();
  }

 private:
  using Entry = std::pair<std::shared_ptr<Session>, std::list<std::string>::iterator>;
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::list<std::string> order_;
  std::unordered_map<std::string, Entry> map_;
};

namespace detail {

inline ApiResponse json_response(int status, const nlohmann::json& body) {
  return {status, body.dump(), "application/json"};
}

inline ApiResponse error_response(int status, const std::string& message) {
  return json_response(status, {{"error", message}});
}

inline nlohmann::json rgb_json(const Rgb& v) { return nlohmann::json::array({v[0], v[1], v[2]}); }

}  // namespace detail

class CorrectionService {
 public:
  CorrectionService(std::shared_ptr<const RectificationModel> model, ServiceConfig cfg)
      : model_(std::move(model)),
        cfg_(std::move(cfg)),
        store_(cfg_.capacity),
        id_seed_(std::random_device{}() ^ (static_cast<std::uint64_t>(std::random_device{}()) << 32)) {
    model_->validate();
  }

  const ServiceConfig& config() const noexcept { return cfg_; }
  const SessionStore& sessions() const noexcept { return store_; }

  ApiResponse create_session(std::span<const std::uint8_t> image_bytes) {
    if (!looks_like_png(image_bytes)) return detail::error_response(400, "upload is not a PNG image");
    PixelMatrix image;
    try {
      const ImageSize size = png_size(image_bytes);
      if (size.width * size.height > cfg_.max_pixels) {
        return detail::error_response(413, "image exceeds the pixel budget of " +
                                               std::to_string(cfg_.max_pixels));
      }
      image = decode_png(image_bytes);
    } catch (const Error& e) {
      return detail::error_response(400, e.what());
    }
    auto session = std::make_shared<Session>();
    session->id = next_id();
    session->image = std::move(image);
    store_.insert(session);
    return detail::json_response(
        200, {{"id", session->id}, {"width", session->image.width()}, {"height", session->image.height()}});
  }

  ApiResponse awb(const std::string& id) {
    const auto session = store_.find(id);
    if (!session) return detail::error_response(404, "unknown session");
    const EstimatorConfig est = cfg_.estimator.value_or(model_->estimator);
    std::lock_guard lock(session->mutex);
    try {
      CorrectionResult result =
          correct(session->image, {AutoSource{est}, cfg_.correction}, *model_);
      return finish(*session, std::move(result), std::nullopt);
    } catch (const Error& e) {
      return detail::error_response(400, e.what());
    }
  }

  ApiResponse pick(const std::string& id, std::string_view body) {
    const auto session = store_.find(id);
    if (!session) return detail::error_response(404, "unknown session");
    const auto j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("x") || !j.contains("y") ||
        !j["x"].is_number_integer() || !j["y"].is_number_integer()) {
      return detail::error_response(400, "body must be {\"x\": int, \"y\": int}");
    }
    const long long x = j["x"].get<long long>();
    const long long y = j["y"].get<long long>();
    std::lock_guard lock(session->mutex);
    try {
      CorrectionResult result =
          correct(session->image, {ManualPixel{x, y}, cfg_.correction}, *model_);
      session->picks.push_back({x, y, result.gamma_used, result.ell_used, result.cluster_index});
      return finish(*session, std::move(result), session->picks.size() - 1);
    } catch (const Error& e) {
      return detail::error_response(400, e.what());
    }
  }

  ApiResponse image(const std::string& id, std::string_view which) {
    const auto session = store_.find(id);
    if (!session) return detail::error_response(404, "unknown session");
    std::lock_guard lock(session->mutex);
    if (which == "original") return {200, bytes_string(encode_png(session->image)), "image/png"};
    if (which == "corrected") {
      if (session->corrected_png.empty()) return detail::error_response(404, "no correction yet");
      return {200, bytes_string(session->corrected_png), "image/png"};
    }
    return detail::error_response(404, "unknown image kind");
  }

  ApiResponse picks(const std::string& id) {
    const auto session = store_.find(id);
    if (!session) return detail::error_response(404, "unknown session");
    std::lock_guard lock(session->mutex);
    nlohmann::json list = nlohmann::json::array();
    for (const Pick& p : session->picks) {
      list.push_back({{"x", p.x},
                      {"y", p.y},
                      {"gamma", detail::rgb_json(p.gamma.values())},
                      {"ell", detail::rgb_json(p.ell.values())},
                      {"cluster", p.cluster}});
    }
    return detail::json_response(200, {{"picks", list}});
  }

  ApiResponse remove(const std::string& id) {
    if (!store_.erase(id)) return detail::error_response(404, "unknown session");
    return detail::json_response(200, {{"deleted", id}});
  }

  /// Registers every route on `server`.
  void mount(httplib::Server& server) {
    const auto reply = [](httplib::Response& res, const ApiResponse& api) {
      res.status = api.status;
      res.set_content(api.body, api.content_type);
    };
    server.set_payload_max_length(std::size_t{1} << 30);
    server.Post("/api/session", [this, reply](const httplib::Request& req, httplib::Response& res) {
      if (req.is_multipart_form_data()) {
        for (const char* key : {"image", "file"}) {
          if (req.has_file(key)) {
            const std::string& content = req.get_file_value(key).content;
            reply(res, create_session(std::span(
                           reinterpret_cast<const std::uint8_t*>(content.data()), content.size())));
            return;
          }
        }
        reply(res, detail::error_response(400, "multipart upload needs an 'image' field"));
        return;
      }
      reply(res, create_session(std::span(reinterpret_cast<const std::uint8_t*>(req.body.data()),
                                          req.body.size())));
    });
    server.Post(R"(/api/session/([^/]+)/awb)",
                [this, reply](const httplib::Request& req, httplib::Response& res) {
                  reply(res, awb(req.matches[1]));
                });
    server.Post(R"(/api/session/([^/]+)/pick)",
                [this, reply](const httplib::Request& req, httplib::Response& res) {
                  reply(res, pick(req.matches[1], req.body));
                });
    server.Get(R"(/api/session/([^/]+)/image/([a-z]+))",
               [this, reply](const httplib::Request& req, httplib::Response& res) {
                 reply(res, image(req.matches[1], req.matches[2].str()));
               });
    server.Get(R"(/api/session/([^/]+)/picks)",
               [this, reply](const httplib::Request& req, httplib::Response& res) {
                 reply(res, picks(req.matches[1]));
               });
    server.Delete(R"(/api/session/([^/]+))",
                  [this, reply](const httplib::Request& req, httplib::Response& res) {
                    reply(res, remove(req.matches[1]));
                  });
    if (!cfg_.static_dir.empty() && !server.set_mount_point("/", cfg_.static_dir)) {
      throw Error(ErrorCode::IoError, "static directory not found: " + cfg_.static_dir);
    }
  }

 private:
  static std::string bytes_string(const std::vector<std::uint8_t>& bytes) {
    return {reinterpret_cast<const char*>(bytes.data()), bytes.size()};
  }

  std::string next_id() {
    const std::uint64_t v = mix_seed(id_seed_, counter_.fetch_add(1));
    static constexpr char hex[] = "0123456789abcdef";
    std::string id(16, '0');
    for (int i = 0; i < 16; ++i) id[i] = hex[(v >> (60 - 4 * i)) & 0xF];
    return id;
  }

  ApiResponse finish(Session& session, CorrectionResult result, std::optional<std::size_t> pick_index) {
    session.corrected_png = encode_png(result.corrected);
    nlohmann::json body{{"cluster", result.cluster_index},
                        {"gamma", detail::rgb_json(result.gamma_used.values())},
                        {"ell", detail::rgb_json(result.ell_used.values())},
                        {"polymap", std::vector<double>(result.polymap_used.vector().data(),
                                                        result.polymap_used.vector().data() +
                                                            kPolyMapSize)},
                        {"corrected", "/api/session/" + session.id + "/image/corrected"}};
    if (pick_index) body["pick_index"] = *pick_index;
    if (result.warning) body["warning"] = *result.warning;
    session.last_result = std::move(result);
    return detail::json_response(200, body);
  }

  std::shared_ptr<const RectificationModel> model_;
  ServiceConfig cfg_;
  SessionStore store_;
  std::uint64_t id_seed_;
  std::atomic<std::uint64_t> counter_{0};
};

}  // namespace wbrf
