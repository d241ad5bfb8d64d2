#include "herbar/bench.hpp"
#include "herbar/error.hpp"
#include "herbar/service.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <fstream>
#include <thread>

using namespace herbar;
using nlohmann::json;
using herbar::testing::TempDir;

namespace {

constexpr int kTargets = 3;

std::shared_ptr<const TargetDatabase> shared_db() {
  static const auto db = [] {
    auto out = std::make_shared<TargetDatabase>();
    const auto& names = fixtures::herb_names();
    for (int i = 0; i < kTargets; ++i) {
      const auto seed = static_cast<std::uint64_t>(i + 1);
      const auto [w, h] = fixtures::picture_size(seed);
      out->add(register_target(*out, names[i].id, names[i].id, fixtures::herb_picture(seed, w, h)));
    }
    return out;
  }();
  return db;
}

std::shared_ptr<const Catalog> shared_catalog() {
  static const auto catalog = [] {
    auto out = std::make_shared<Catalog>();
    for (auto& e : fixtures::synthetic_catalog()) out->add(std::move(e));
    return out;
  }();
  return catalog;
}

Engine make_engine(int k = 3, std::filesystem::path models = {}) {
  ServiceConfig cfg;
  cfg.hysteresis = k;
  cfg.models_dir = std::move(models);
  return Engine(shared_db(), shared_catalog(), cfg);
}

Image frame_of(std::uint32_t target_id) {
  const auto [w, h] = fixtures::picture_size(target_id);
  return herbar::testing::textured_image(target_id, w, h);
}

const Image& blank_frame() {
  static const Image img(320, 300, 255);
  return img;
}

std::string frame_text(std::uint64_t seq, const Image& img) {
  return json{{"type", "frame"},
              {"seq", seq},
              {"width", img.width()},
              {"height", img.height()},
              {"pixels", encode_base64(img.data())}}
      .dump();
}

// Independent reading of the stability rule: the value of the most recent window
// of k identical raw results, or none before any such window exists.
std::vector<std::optional<std::uint32_t>> reference_display(const std::vector<std::optional<std::uint32_t>>& raw,
                                                            int k) {
  std::vector<std::optional<std::uint32_t>> out;
  std::optional<std::uint32_t> shown;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (i + 1 >= static_cast<std::size_t>(k)) {
      bool same = true;
      for (std::size_t j = i + 1 - k; j <= i; ++j) same = same && raw[j] == raw[i];
      if (same) shown = raw[i];
    }
    out.push_back(shown);
  }
  return out;
}

}  // namespace

TEST(Hysteresis, MatchesReferenceOnRandomSequences) {
  XorShift64Star rng(300);
  for (int trial = 0; trial < 300; ++trial) {
    const int k = 1 + static_cast<int>(rng.below(5));
    const int alphabet = 1 + static_cast<int>(rng.below(4));
    std::vector<std::optional<std::uint32_t>> raw;
    const auto n = 1 + rng.below(60);
    for (std::uint64_t i = 0; i < n; ++i) {
      const auto v = rng.below(alphabet + 1);
      raw.push_back(v == 0 ? std::nullopt : std::optional<std::uint32_t>(static_cast<std::uint32_t>(v)));
    }
    Hysteresis h(k);
    const auto want = reference_display(raw, k);
    for (std::size_t i = 0; i < raw.size(); ++i) ASSERT_EQ(h.update(raw[i]), want[i]) << trial << " @" << i;
  }
}

TEST(Hysteresis, ThreeFramesOfOneTarget) {
  Hysteresis h(3);
  EXPECT_EQ(h.update(7), std::nullopt);
  EXPECT_EQ(h.update(7), std::nullopt);
  EXPECT_EQ(h.update(7), 7u);
  EXPECT_EQ(h.update(std::nullopt), 7u);
  EXPECT_EQ(h.update(std::nullopt), 7u);
  EXPECT_EQ(h.update(std::nullopt), std::nullopt);
}

TEST(Hysteresis, AlternationNeverSwitches) {
  Hysteresis h(3);
  for (int i = 0; i < 3; ++i) h.update(1);
  for (int i = 0; i < 40; ++i) EXPECT_EQ(h.update(i % 2 ? 1u : 2u), 1u);
  Hysteresis fresh(3);
  for (int i = 0; i < 40; ++i) EXPECT_EQ(fresh.update(i % 2 ? 1u : 2u), std::nullopt);
}

TEST(Frame, ParsesValidMessage) {
  const Image img = frame_of(1);
  const auto f = parse_frame_message(json::parse(frame_text(9, img)));
  EXPECT_EQ(f.seq, 9u);
  EXPECT_EQ(f.width, img.width());
  EXPECT_TRUE(f.pixels == img);
}

TEST(Frame, Base64MatchesKnownVectors) {
  const std::string s = "Man";
  EXPECT_EQ(encode_base64(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size())), "TWFu");
  const std::vector<std::uint8_t> two = {'M', 'a'};
  EXPECT_EQ(encode_base64(two), "TWE=");
  const std::vector<std::uint8_t> one = {'M'};
  EXPECT_EQ(encode_base64(one), "TQ==");
  EXPECT_EQ(encode_base64(std::vector<std::uint8_t>{}), "");
  XorShift64Star rng(301);
  for (int trial = 0; trial < 50; ++trial) {
    const int w = 1 + static_cast<int>(rng.below(40));
    const int h = 1 + static_cast<int>(rng.below(40));
    const Image img = herbar::testing::noise_image(rng, w, h);
    EXPECT_TRUE(parse_frame_message(json::parse(frame_text(1, img))).pixels == img);
  }
}

TEST(Frame, MalformedMessages) {
  const Image img(4, 3, 10);
  const json good = json::parse(frame_text(1, img));
  std::vector<json> bad;
  bad.push_back(json::array());
  for (const char* key : {"type", "seq", "width", "height", "pixels"}) {
    json j = good;
    j.erase(key);
    bad.push_back(j);
  }
  auto with = [&](const char* key, json v) {
    json j = good;
    j[key] = std::move(v);
    bad.push_back(j);
  };
  with("type", "hello");
  with("seq", -1);
  with("seq", "1");
  with("width", 5);       // length mismatch
  with("width", 0);
  with("width", 1921);
  with("height", 1081);
  with("pixels", "abc");  // not a multiple of 4
  with("pixels", "ab!d");
  with("pixels", 12);
  with("pixels", encode_base64(std::vector<std::uint8_t>(13, 1)));
  for (const json& j : bad) {
    try {
      parse_frame_message(j);
      ADD_FAILURE() << j.dump();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::MalformedFrame) << j.dump();
    }
  }
}

TEST(Frame, MaximumSizeAccepted) {
  const Image img(kMaxFrameWidth, kMaxFrameHeight, 3);
  EXPECT_EQ(parse_frame_message(json::parse(frame_text(1, img))).width, kMaxFrameWidth);
}

TEST(Session, StabilizesAfterThreeFrames) {
  const Engine engine = make_engine();
  Session s(engine);
  const std::string a = fixtures::herb_names()[0].id;
  for (std::uint64_t seq = 1; seq <= 3; ++seq) {
    const json r = json::parse(s.handle_text(frame_text(seq, frame_of(1))));
    EXPECT_EQ(r["seq"], seq);
    if (seq < 3) {
      EXPECT_EQ(r["type"], "no_detection");
      continue;
    }
    ASSERT_EQ(r["type"], "detection");
    EXPECT_EQ(r["target_id"], 1);
    EXPECT_EQ(r["name"], a);
    EXPECT_GE(r["confidence"].get<double>(), 0.9);
    EXPECT_LE(r["inliers"].get<int>(), r["matched"].get<int>());
    ASSERT_EQ(r["homography"].size(), 9u);
    EXPECT_DOUBLE_EQ(r["homography"][8].get<double>(), 1.0);
    ASSERT_EQ(r["pose"]["r"].size(), 9u);
    ASSERT_EQ(r["pose"]["t"].size(), 3u);
    EXPECT_GT(r["pose"]["t"][2].get<double>(), 0.0);
    EXPECT_EQ(r["content"]["content_id"], a);
    EXPECT_EQ(entry_from_json(r["content"]), shared_catalog()->get(a));
  }
  EXPECT_EQ(s.displayed(), 1u);
}

TEST(Session, AlternatingTargetsNeverSwitch) {
  const Engine engine = make_engine();
  Session s(engine);
  std::uint64_t seq = 0;
  for (int i = 0; i < 3; ++i) s.handle_text(frame_text(++seq, frame_of(1)));
  ASSERT_EQ(s.displayed(), 1u);
  for (int i = 0; i < 6; ++i) {
    const json r = json::parse(s.handle_text(frame_text(++seq, frame_of(i % 2 ? 1 : 2))));
    EXPECT_EQ(r["type"], "detection");
    EXPECT_EQ(r["target_id"], 1);
  }
  // Three blank frames in a row clear the display.
  for (int i = 0; i < 2; ++i) EXPECT_EQ(json::parse(s.handle_text(frame_text(++seq, blank_frame())))["type"], "detection");
  EXPECT_EQ(json::parse(s.handle_text(frame_text(++seq, blank_frame())))["type"], "no_detection");
}

TEST(Session, MalformedFrameLeavesSessionUsable) {
  const Engine engine = make_engine();
  Session s(engine);
  s.handle_text(frame_text(1, frame_of(2)));
  s.handle_text(frame_text(2, frame_of(2)));
  json bad = json::parse(frame_text(3, frame_of(2)));
  bad["width"] = 100;
  const json err = json::parse(s.handle_text(bad.dump()));
  EXPECT_EQ(err["type"], "error");
  EXPECT_EQ(err["error"], "MalformedFrame");
  EXPECT_EQ(err["seq"], 3);
  const json junk = json::parse(s.handle_text("not json"));
  EXPECT_EQ(junk["type"], "error");
  EXPECT_TRUE(junk["seq"].is_null());
  // The run of two is intact, so the next valid frame completes it.
  const json r = json::parse(s.handle_text(frame_text(3, frame_of(2))));
  EXPECT_EQ(r["type"], "detection");
  EXPECT_EQ(r["target_id"], 2);
}

TEST(Session, SeqMustIncrease) {
  const Engine engine = make_engine();
  Session s(engine);
  EXPECT_EQ(json::parse(s.handle_text(frame_text(5, blank_frame())))["seq"], 5);
  const json dup = json::parse(s.handle_text(frame_text(5, blank_frame())));
  EXPECT_EQ(dup["type"], "error");
  EXPECT_EQ(dup["seq"], 5);
  EXPECT_EQ(json::parse(s.handle_text(frame_text(4, blank_frame())))["type"], "error");
  EXPECT_EQ(json::parse(s.handle_text(frame_text(6, blank_frame())))["type"], "no_detection");
}

TEST(Session, WithoutHysteresisEqualsBareRecognize) {
  const Engine engine = make_engine(1);
  Session s(engine);
  std::vector<Image> frames = {frame_of(1), blank_frame(), frame_of(3), rotate_on_canvas(frame_of(2), 90.0),
                               frame_of(3), occlude(frame_of(1), 0.5, Side::Top)};
  std::uint64_t seq = 0;
  for (const Image& f : frames) {
    const auto det = recognize(extract(f), *shared_db());
    const json r = json::parse(s.handle_text(frame_text(++seq, f)));
    if (!det) {
      EXPECT_EQ(r["type"], "no_detection");
      continue;
    }
    ASSERT_EQ(r["type"], "detection");
    EXPECT_EQ(r["target_id"], det->target_id);
    EXPECT_EQ(r["inliers"], det->inliers);
    EXPECT_EQ(r["matched"], det->matched);
    EXPECT_EQ(r["confidence"], det->confidence);
    EXPECT_EQ(r["homography"], json(det->homography.row_major()));
  }
}

TEST(Session, IndependentSessionsShareEngine) {
  const Engine engine = make_engine();
  Session a(engine);
  Session b(engine);
  for (std::uint64_t seq = 1; seq <= 3; ++seq) {
    a.handle_text(frame_text(seq, frame_of(1)));
    b.handle_text(frame_text(seq, frame_of(3)));
  }
  EXPECT_EQ(a.displayed(), 1u);
  EXPECT_EQ(b.displayed(), 3u);
}

TEST(Routes, HealthTargetsContent) {
  const Engine engine = make_engine();
  auto r = engine.handle_get("/healthz");
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(json::parse(r.body), json({{"status", "ok"}}));
  r = engine.handle_get("/targets");
  const json targets = json::parse(r.body);
  ASSERT_EQ(targets.size(), static_cast<std::size_t>(kTargets));
  for (int i = 0; i < kTargets; ++i) {
    EXPECT_EQ(targets[i]["id"], i + 1);
    EXPECT_EQ(targets[i]["name"], fixtures::herb_names()[i].id);
    EXPECT_EQ(targets[i]["stars"], rate_target(shared_db()->targets()[i]).stars);
  }
  r = engine.handle_get("/content/lingzhi");
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(entry_from_json(json::parse(r.body)), shared_catalog()->get("lingzhi"));
  r = engine.handle_get("/content/nothing");
  EXPECT_EQ(r.status, 404);
  EXPECT_EQ(json::parse(r.body)["error"], "NotFound");
  EXPECT_EQ(engine.handle_get("/nope").status, 404);
  EXPECT_THROW(engine.get_content("nothing"), Error);
}

TEST(Routes, EmptyDatabaseListsNothing) {
  const Engine engine(std::make_shared<TargetDatabase>(), shared_catalog(), ServiceConfig{});
  EXPECT_EQ(json::parse(engine.handle_get("/targets").body), json::array());
}

TEST(Routes, ModelLookupOrder) {
  TempDir dir("models");
  const auto& names = fixtures::herb_names();
  auto write = [&](const std::string& stem, const std::string& name) {
    std::ofstream(dir / (stem + ".json")) << R"({"name":")" << name << R"(","vertices":[[0,0,0],[1,0,0]],"edges":[[0,1]]})";
  };
  EXPECT_EQ(make_engine(3, dir.path()).handle_get("/models/1").status, 404);
  write("default", "fallback");
  const Engine engine = make_engine(3, dir.path());
  EXPECT_EQ(json::parse(engine.handle_get("/models/1").body)["name"], "fallback");
  write(names[1].id, "by-content");
  EXPECT_EQ(json::parse(engine.handle_get("/models/2").body)["name"], "by-content");
  EXPECT_EQ(json::parse(engine.handle_get("/models/1").body)["name"], "fallback");
  EXPECT_EQ(engine.handle_get("/models/99").status, 404);
  EXPECT_EQ(engine.handle_get("/models/x").status, 404);
  EXPECT_EQ(make_engine().handle_get("/models/1").status, 404);
}

TEST(Server, LiveHttpAndSession) {
  namespace beast = boost::beast;
  namespace http = beast::http;
  namespace websocket = beast::websocket;
  namespace net = boost::asio;
  using tcp = net::ip::tcp;

  auto engine = std::make_shared<const Engine>(make_engine());
  Server server(engine, ServerOptions{"127.0.0.1", 0});
  const unsigned short port = server.port();
  ASSERT_NE(port, 0);
  std::thread runner([&] { server.run(); });

  net::io_context ioc;
  auto get = [&](const std::string& target) {
    tcp::socket socket(ioc);
    socket.connect(tcp::endpoint(net::ip::make_address("127.0.0.1"), port));
    http::request<http::empty_body> req{http::verb::get, target, 11};
    req.set(http::field::host, "localhost");
    req.keep_alive(false);
    http::write(socket, req);
    beast::flat_buffer buf;
    http::response<http::string_body> res;
    http::read(socket, buf, res);
    return std::make_pair(res.result_int(), res.body());
  };
  EXPECT_EQ(get("/healthz"), std::make_pair(200u, std::string(R"({"status":"ok"})")));
  const auto [status, body] = get("/targets");
  EXPECT_EQ(status, 200u);
  EXPECT_EQ(json::parse(body).size(), static_cast<std::size_t>(kTargets));
  EXPECT_EQ(get("/content/renshen").first, 200u);
  EXPECT_EQ(get("/content/unknown").first, 404u);

  {
    websocket::stream<tcp::socket> ws(ioc);
    ws.next_layer().connect(tcp::endpoint(net::ip::make_address("127.0.0.1"), port));
    ws.handshake("localhost", "/session");
    ws.text(true);
    auto exchange = [&](const std::string& text) {
      ws.write(net::buffer(text));
      beast::flat_buffer buf;
      ws.read(buf);
      return json::parse(beast::buffers_to_string(buf.data()));
    };
    EXPECT_EQ(exchange(frame_text(1, frame_of(2)))["type"], "no_detection");
    EXPECT_EQ(exchange(R"({"type":"frame","seq":2,"width":2,"height":2,"pixels":"AAA="})")["error"], "MalformedFrame");
    EXPECT_EQ(exchange(frame_text(2, frame_of(2)))["type"], "no_detection");
    const json r = exchange(frame_text(3, frame_of(2)));
    EXPECT_EQ(r["type"], "detection");
    EXPECT_EQ(r["seq"], 3);
    EXPECT_EQ(r["target_id"], 2);
    ws.close(websocket::close_code::normal);
  }

  server.stop();
  runner.join();
}

TEST(Server, BadAddressIsIoError) {
  auto engine = std::make_shared<const Engine>(make_engine());
  try {
    Server server(engine, ServerOptions{"203.0.113.1", 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
  }
}
