#include "herbar/service.hpp"

#include "herbar/error.hpp"

#include <boost/beast/core/detail/base64.hpp>

#include <charconv>
#include <fstream>
#include <sstream>

namespace herbar {

namespace {

using nlohmann::json;
namespace b64 = boost::beast::detail::base64;

std::vector<std::uint8_t> decode_base64(const std::string& text) {
  if (text.size() % 4 != 0) throw Error(ErrorCode::MalformedFrame, "base64 payload length is not a multiple of 4");
  std::size_t padding = 0;
  while (padding < 2 && padding < text.size() && text[text.size() - 1 - padding] == '=') ++padding;
  std::vector<std::uint8_t> out(b64::decoded_size(text.size()));
  const auto [written, read] = b64::decode(out.data(), text.data(), text.size());
  if (read + padding != text.size()) throw Error(ErrorCode::MalformedFrame, "invalid base64 payload");
  out.resize(written);
  return out;
}

std::optional<std::uint32_t> parse_u32(std::string_view s) {
  std::uint32_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

HttpReply not_found(const std::string& what) {
  return {404, "application/json", json{{"error", "NotFound"}, {"message", what}}.dump()};
}

std::string error_message(std::optional<std::uint64_t> seq, const Error& e) {
  json j{{"type", "error"}, {"error", to_string(e.code())}, {"message", e.what()}};
  j["seq"] = seq ? json(*seq) : json(nullptr);
  return j.dump();
}

}  // namespace

std::string encode_base64(std::span<const std::uint8_t> bytes) {
  std::string out(b64::encoded_size(bytes.size()), '\0');
  out.resize(b64::encode(out.data(), bytes.data(), bytes.size()));
  return out;
}

FrameMessage parse_frame_message(const json& msg) {
  auto fail = [](const std::string& why) { return Error(ErrorCode::MalformedFrame, why); };
  if (!msg.is_object()) throw fail("frame message must be a JSON object");
  if (msg.value("type", "") != "frame") throw fail("message type must be \"frame\"");
  const auto seq = msg.find("seq");
  const auto w = msg.find("width");
  const auto h = msg.find("height");
  const auto px = msg.find("pixels");
  if (seq == msg.end() || !seq->is_number_unsigned()) throw fail("seq must be an unsigned integer");
  if (w == msg.end() || !w->is_number_integer() || h == msg.end() || !h->is_number_integer()) {
    throw fail("width and height must be integers");
  }
  if (px == msg.end() || !px->is_string()) throw fail("pixels must be a base64 string");
  FrameMessage f;
  f.seq = seq->get<std::uint64_t>();
  f.width = w->get<int>();
  f.height = h->get<int>();
  if (f.width < 1 || f.height < 1 || f.width > kMaxFrameWidth || f.height > kMaxFrameHeight) {
    throw fail("frame dimensions out of range");
  }
  auto bytes = decode_base64(px->get<std::string>());
  if (bytes.size() != static_cast<std::size_t>(f.width) * f.height) {
    throw fail("pixel payload length " + std::to_string(bytes.size()) + " does not match " +
               std::to_string(f.width) + "x" + std::to_string(f.height));
  }
  f.pixels = Image(f.width, f.height, std::move(bytes));
  return f;
}

Engine::Engine(std::shared_ptr<const TargetDatabase> db, std::shared_ptr<const Catalog> catalog,
               ServiceConfig config)
    : db_(std::move(db)), catalog_(std::move(catalog)), config_(std::move(config)) {
  if (!db_ || !catalog_) throw Error(ErrorCode::InvalidArgument, "engine needs a database and a catalog");
}

json Engine::list_targets() const {
  json arr = json::array();
  for (const Target& t : db_->targets()) {
    arr.push_back({{"id", t.id}, {"name", t.name}, {"stars", rate_target(t).stars}});
  }
  return arr;
}

json Engine::get_content(const std::string& content_id) const { return to_json(catalog_->get(content_id)); }

HttpReply Engine::handle_get(std::string_view path) const {
  if (auto q = path.find('?'); q != std::string_view::npos) path = path.substr(0, q);
  if (path == "/healthz") return {200, "application/json", json{{"status", "ok"}}.dump()};
  if (path == "/targets") return {200, "application/json", list_targets().dump()};

  constexpr std::string_view kContent = "/content/";
  if (path.starts_with(kContent)) {
    const std::string id(path.substr(kContent.size()));
    const HerbEntry* e = catalog_->find(id);
    if (!e) return not_found("no catalog entry for '" + id + "'");
    return {200, "application/json", to_json(*e).dump()};
  }

  constexpr std::string_view kModels = "/models/";
  if (path.starts_with(kModels)) {
    const auto id = parse_u32(path.substr(kModels.size()));
    const Target* t = id ? db_->find(*id) : nullptr;
    if (!t) return not_found("unknown target id");
    if (config_.models_dir.empty()) return not_found("no models directory configured");
    for (const std::string& stem : {t->content_id, t->name, std::string("default")}) {
      if (stem.empty()) continue;
      const auto file = config_.models_dir / (stem + ".json");
      std::ifstream in(file);
      if (!in) continue;
      std::stringstream ss;
      ss << in.rdbuf();
      return {200, "application/json", ss.str()};
    }
    return not_found("no model for target " + std::to_string(t->id));
  }
  return not_found("no route for " + std::string(path));
}

std::optional<Detection> Engine::recognize_frame(const Image& frame) const {
  return recognize(extract(frame, config_.extract), *db_, config_.recognize);
}

json Engine::detection_json(const Detection& det, int frame_width, int frame_height) const {
  const Target* t = db_->find(det.target_id);
  json j{{"target_id", det.target_id},
         {"name", t ? t->name : std::string()},
         {"confidence", det.confidence},
         {"inliers", det.inliers},
         {"matched", det.matched},
         {"homography", det.homography.row_major()}};
  j["pose"] = nullptr;
  if (t) {
    const CameraIntrinsics k = config_.intrinsics.value_or(CameraIntrinsics::default_for(frame_width, frame_height));
    try {
      const Pose p = decompose_homography(to_unit_plane(det.homography, t->image_width), k);
      json r = json::array();
      for (int i = 0; i < 3; ++i)
        for (int c = 0; c < 3; ++c) r.push_back(p.r(i, c));
      j["pose"] = {{"r", r}, {"t", {p.t.x(), p.t.y(), p.t.z()}}};
    } catch (const Error&) {
    }
  }
  const HerbEntry* e = t ? catalog_->find(t->content_id) : nullptr;
  j["content"] = e ? to_json(*e) : json(nullptr);
  return j;
}

json Session::handle_frame(const FrameMessage& msg) {
  const auto raw = engine_.recognize_frame(msg.pixels);
  const auto shown = hysteresis_.update(raw ? std::optional(raw->target_id) : std::nullopt);
  if (raw && shown && raw->target_id == *shown) last_displayed_ = raw;
  if (!shown) last_displayed_.reset();
  last_seq_ = msg.seq;

  if (!shown || !last_displayed_) return json{{"type", "no_detection"}, {"seq", msg.seq}};
  json j = engine_.detection_json(*last_displayed_, msg.width, msg.height);
  j["type"] = "detection";
  j["seq"] = msg.seq;
  j["fresh"] = raw && raw->target_id == *shown;
  return j;
}

std::string Session::handle_text(std::string_view text) {
  std::optional<std::uint64_t> seq;
  try {
    json msg;
    try {
      msg = json::parse(text);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedFrame, std::string("frame is not valid JSON: ") + e.what());
    }
    if (msg.is_object() && msg.contains("seq") && msg["seq"].is_number_unsigned()) seq = msg["seq"].get<std::uint64_t>();
    FrameMessage frame = parse_frame_message(msg);
    if (last_seq_ && frame.seq <= *last_seq_) {
      throw Error(ErrorCode::MalformedFrame, "seq must increase within a session");
    }
    return handle_frame(frame).dump();
  } catch (const Error& e) {
    return error_message(seq, e);
  }
}

}  // namespace herbar
