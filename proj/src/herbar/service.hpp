#pragma once

#include "herbar/content.hpp"
#include "herbar/features.hpp"
#include "herbar/matcher.hpp"
#include "herbar/pose.hpp"
#include "herbar/targetdb.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace herbar {

constexpr int kMaxFrameWidth = 1920;
constexpr int kMaxFrameHeight = 1080;

struct ServiceConfig {
  ExtractParams extract;
  RecognizeParams recognize;
  int hysteresis = 3;
  std::optional<CameraIntrinsics> intrinsics;  // default_for(frame) when unset
  std::filesystem::path models_dir;
};

// Displayed target switches only once k consecutive frames agree on a
// different id (or on no detection).
class Hysteresis {
 public:
  explicit Hysteresis(int k) : k_(k < 1 ? 1 : k) {}

  std::optional<std::uint32_t> update(std::optional<std::uint32_t> raw) {
    if (run_length_ > 0 && raw == run_value_) {
      ++run_length_;
    } else {
      run_value_ = raw;
      run_length_ = 1;
    }
    if (run_length_ >= k_) displayed_ = run_value_;
    return displayed_;
  }

  std::optional<std::uint32_t> displayed() const noexcept { return displayed_; }
  int k() const noexcept { return k_; }

 private:
  int k_;
  std::optional<std::uint32_t> displayed_;
  std::optional<std::uint32_t> run_value_;
  int run_length_ = 0;
};

struct FrameMessage {
  std::uint64_t seq = 0;
  int width = 0;
  int height = 0;
  Image pixels;
};

// Throws MalformedFrame.
FrameMessage parse_frame_message(const nlohmann::json& msg);
std::string encode_base64(std::span<const std::uint8_t> bytes);

struct HttpReply {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

// Shared, read-only state behind every session.
class Engine {
 public:
  Engine(std::shared_ptr<const TargetDatabase> db, std::shared_ptr<const Catalog> catalog, ServiceConfig config);

  const TargetDatabase& db() const noexcept { return *db_; }
  const Catalog& catalog() const noexcept { return *catalog_; }
  const ServiceConfig& config() const noexcept { return config_; }

  nlohmann::json list_targets() const;
  // Throws NotFound.
  nlohmann::json get_content(const std::string& content_id) const;
  // GET routes: /healthz, /targets, /content/{id}, /models/{target_id}.
  HttpReply handle_get(std::string_view path) const;

  std::optional<Detection> recognize_frame(const Image& frame) const;
  nlohmann::json detection_json(const Detection& det, int frame_width, int frame_height) const;

 private:
  std::shared_ptr<const TargetDatabase> db_;
  std::shared_ptr<const Catalog> catalog_;
  ServiceConfig config_;
};

// One camera stream. Frames are handled one at a time in arrival order.
class Session {
 public:
  explicit Session(const Engine& engine) : engine_(engine), hysteresis_(engine.config().hysteresis) {}

  nlohmann::json handle_frame(const FrameMessage& msg);
  // Full text-message entry point; malformed input yields an error message
  // and leaves the session state untouched.
  std::string handle_text(std::string_view text);

  std::optional<std::uint32_t> displayed() const noexcept { return hysteresis_.displayed(); }

 private:
  const Engine& engine_;
  Hysteresis hysteresis_;
  std::optional<Detection> last_displayed_;
  std::optional<std::uint64_t> last_seq_;
};

struct ServerOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 8080;
};

// HTTP GET routes plus the /session WebSocket, one thread per connection.
// Binds in the constructor, so port() is valid (also with port 0) before run().
class Server {
 public:
  Server(std::shared_ptr<const Engine> engine, ServerOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  unsigned short port() const noexcept;
  void run();   // blocks until stop()
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace herbar
