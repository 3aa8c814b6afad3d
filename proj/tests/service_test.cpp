#include "test_util.hpp"
#include "wbrf/service.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <thread>

namespace wbrf {
namespace {

std::shared_ptr<const RectificationModel> shared_model(std::uint64_t seed = 1) {
  CorpusSpec spec = default_corpus();
  spec.train.resize(60);
  std::vector<TrainingPair> pairs;
  for (NamedPair& np : generate_pairs(spec, spec.train)) pairs.push_back(std::move(np.pair));
  return std::make_shared<const RectificationModel>(
      train(std::span<const TrainingPair>(pairs), {.k = 4, .seed = seed}));
}

const std::shared_ptr<const RectificationModel>& model() {
  static const auto m = shared_model();
  return m;
}

std::vector<std::uint8_t> cast_png(std::uint64_t seed) {
  const Scene s = synth_scene(seed, 24);
  return encode_png(quantize_8bit(render(s.image, {.cast = {1.5, 1.0, 0.7}}).input));
}

std::span<const std::uint8_t> as_bytes(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

nlohmann::json body_of(const ApiResponse& r) { return nlohmann::json::parse(r.body); }

std::string create(CorrectionService& svc, const std::vector<std::uint8_t>& png) {
  const ApiResponse r = svc.create_session(png);
  EXPECT_EQ(r.status, 200) << r.body;
  return body_of(r)["id"];
}

TEST(SessionStore, EvictsLeastRecentlyUsed) {
  SessionStore store(2);
  for (const char* id : {"a", "b"}) {
    auto s = std::make_shared<Session>();
    s->id = id;
    store.insert(s);
  }
  ASSERT_TRUE(store.find("a"));
  auto c = std::make_shared<Session>();
  c->id = "c";
  store.insert(c);
  EXPECT_EQ(store.size(), 2u);
  EXPECT_TRUE(store.find("a"));
  EXPECT_FALSE(store.find("b"));
  EXPECT_TRUE(store.erase("c"));
  EXPECT_FALSE(store.erase("c"));
}

TEST(Service, UploadPickAndImages) {
  CorrectionService svc(model(), {});
  const Scene scene = synth_scene(42, 24);
  const auto png = cast_png(42);
  const ApiResponse up = svc.create_session(png);
  ASSERT_EQ(up.status, 200);
  const auto info = body_of(up);
  EXPECT_EQ(info["width"], 64);
  EXPECT_EQ(info["height"], 48);
  const std::string id = info["id"];
  EXPECT_EQ(id.size(), 16u);

  EXPECT_EQ(svc.image(id, "corrected").status, 404);
  const ApiResponse pick =
      svc.pick(id, nlohmann::json{{"x", scene.gray_x}, {"y", scene.gray_y}}.dump());
  ASSERT_EQ(pick.status, 200) << pick.body;
  const auto p = body_of(pick);
  EXPECT_EQ(p["pick_index"], 0);
  EXPECT_EQ(p["polymap"].size(), 33u);
  EXPECT_EQ(p["corrected"], "/api/session/" + id + "/image/corrected");

  const PixelMatrix img = decode_png(png);
  const CorrectionResult direct =
      correct(img, {ManualPixel{static_cast<long long>(scene.gray_x), static_cast<long long>(scene.gray_y)}}, *model());
  EXPECT_EQ(p["cluster"], direct.cluster_index);
  const ApiResponse corrected = svc.image(id, "corrected");
  EXPECT_EQ(corrected.content_type, "image/png");
  EXPECT_EQ(std::vector<std::uint8_t>(corrected.body.begin(), corrected.body.end()), encode_png(direct.corrected));
  const ApiResponse original = svc.image(id, "original");
  EXPECT_EQ(decode_png(as_bytes(original.body)), img);
  EXPECT_EQ(svc.image(id, "bogus").status, 404);

  ASSERT_EQ(svc.pick(id, R"({"x": 0, "y": 0})").status, 200);
  const auto picks = body_of(svc.picks(id))["picks"];
  ASSERT_EQ(picks.size(), 2u);
  EXPECT_EQ(picks[0]["x"], scene.gray_x);
  EXPECT_EQ(picks[0]["cluster"], direct.cluster_index);
  EXPECT_EQ(picks[0]["gamma"].size(), 3u);
  EXPECT_EQ(picks[1]["ell"][1], 1.0);
}

TEST(Service, AwbMatchesLibraryAuto) {
  CorrectionService svc(model(), {});
  const auto png = cast_png(7);
  const std::string id = create(svc, png);
  const ApiResponse r = svc.awb(id);
  ASSERT_EQ(r.status, 200);
  EXPECT_FALSE(body_of(r).contains("pick_index"));
  const CorrectionResult direct = correct(decode_png(png), {AutoSource{model()->estimator}}, *model());
  EXPECT_EQ(body_of(r)["cluster"], direct.cluster_index);
  const std::string bytes = svc.image(id, "corrected").body;
  EXPECT_EQ(std::vector<std::uint8_t>(bytes.begin(), bytes.end()), encode_png(direct.corrected));
  EXPECT_TRUE(body_of(svc.picks(id))["picks"].empty());
}

TEST(Service, Errors) {
  CorrectionService svc(model(), {.max_pixels = 64 * 48 - 1});
  EXPECT_EQ(svc.create_session(as_bytes("hello")).status, 400);
  EXPECT_EQ(svc.create_session(cast_png(1)).status, 413);

  CorrectionService ok(model(), {});
  const std::string id = create(ok, cast_png(1));
  EXPECT_EQ(ok.pick(id, R"({"x": -1, "y": 0})").status, 400);
  EXPECT_EQ(ok.pick(id, R"({"x": 64, "y": 0})").status, 400);
  EXPECT_EQ(ok.pick(id, R"({"x": 1.5, "y": 0})").status, 400);
  EXPECT_EQ(ok.pick(id, R"({"x": 1})").status, 400);
  EXPECT_EQ(ok.pick(id, "not json").status, 400);
  EXPECT_TRUE(body_of(ok.picks(id))["picks"].empty());
  for (const ApiResponse& r : {ok.awb("nope"), ok.pick("nope", "{}"), ok.image("nope", "original"),
                               ok.picks("nope"), ok.remove("nope")}) {
    EXPECT_EQ(r.status, 404);
  }
  EXPECT_EQ(ok.remove(id).status, 200);
  EXPECT_EQ(ok.awb(id).status, 404);
}

TEST(Service, CapacityEvictsOldSessions) {
  CorrectionService svc(model(), {.capacity = 2});
  const std::string a = create(svc, cast_png(1));
  const std::string b = create(svc, cast_png(2));
  const std::string c = create(svc, cast_png(3));
  EXPECT_NE(a, b);
  EXPECT_EQ(svc.sessions().size(), 2u);
  EXPECT_EQ(svc.awb(a).status, 404);
  EXPECT_EQ(svc.awb(b).status, 200);
  EXPECT_EQ(svc.awb(c).status, 200);
}

TEST(Service, ReplayOnFreshInstanceIsIdentical) {
  std::vector<std::string> first;
  for (int run = 0; run < 2; ++run) {
    CorrectionService svc(model(), {});
    const std::string id = create(svc, cast_png(9));
    ASSERT_EQ(svc.pick(id, R"({"x": 10, "y": 20})").status, 200);
    ASSERT_EQ(svc.pick(id, R"({"x": 40, "y": 5})").status, 200);
    const std::string bytes = svc.image(id, "corrected").body;
    if (run == 0) {
      first.push_back(bytes);
    } else {
      EXPECT_EQ(bytes, first[0]);
    }
  }
}

TEST(Service, ConcurrentSessionsMatchSequential) {
  CorrectionService svc(model(), {});
  std::vector<std::string> ids;
  std::vector<std::string> expected;
  for (std::uint64_t s = 0; s < 4; ++s) {
    ids.push_back(create(svc, cast_png(100 + s)));
    const CorrectionResult r = correct(decode_png(cast_png(100 + s)), {ManualPixel{5, 5}}, *model());
    const auto png = encode_png(r.corrected);
    expected.emplace_back(png.begin(), png.end());
  }
  std::vector<std::thread> threads;
  std::vector<std::string> got(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    threads.emplace_back([&, i] {
      for (int rep = 0; rep < 5; ++rep) (void)svc.pick(ids[i], R"({"x": 5, "y": 5})");
      got[i] = svc.image(ids[i], "corrected").body;
    });
  }
  for (std::thread& t : threads) t.join();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    EXPECT_EQ(got[i], expected[i]);
    EXPECT_EQ(body_of(svc.picks(ids[i]))["picks"].size(), 5u);
  }
}

class HttpServer : public ::testing::Test {
 protected:
  void SetUp() override {
    std::ofstream(static_dir_ / "index.html") << "<html>picker</html>";
    service_ = std::make_unique<CorrectionService>(model(), ServiceConfig{.static_dir = static_dir_.path().string()});
    service_->mount(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }
  httplib::Client client() { return httplib::Client("127.0.0.1", port_); }

  test::TempDir static_dir_;
  httplib::Server server_;
  std::unique_ptr<CorrectionService> service_;
  int port_ = 0;
  std::thread thread_;
};

TEST_F(HttpServer, RoundTrip) {
  auto cli = client();
  const auto png = cast_png(5);
  const std::string raw(png.begin(), png.end());
  auto up = cli.Post("/api/session", raw, "image/png");
  ASSERT_TRUE(up);
  ASSERT_EQ(up->status, 200);
  const std::string id = nlohmann::json::parse(up->body)["id"];

  auto pick = cli.Post("/api/session/" + id + "/pick", R"({"x": 32, "y": 24})", "application/json");
  ASSERT_TRUE(pick);
  EXPECT_EQ(pick->status, 200);
  auto bad = cli.Post("/api/session/" + id + "/pick", R"({"x": -1, "y": 0})", "application/json");
  EXPECT_EQ(bad->status, 400);
  auto awb = cli.Post("/api/session/" + id + "/awb", "", "application/json");
  EXPECT_EQ(awb->status, 200);

  auto img = cli.Get("/api/session/" + id + "/image/corrected");
  ASSERT_TRUE(img);
  EXPECT_EQ(img->status, 200);
  EXPECT_EQ(img->get_header_value("Content-Type"), "image/png");
  const CorrectionResult direct = correct(decode_png(png), {AutoSource{model()->estimator}}, *model());
  EXPECT_EQ(decode_png(as_bytes(img->body)), quantize_8bit(direct.corrected));

  auto picks = cli.Get("/api/session/" + id + "/picks");
  EXPECT_EQ(nlohmann::json::parse(picks->body)["picks"].size(), 1u);
  EXPECT_EQ(cli.Get("/api/session/" + id + "/image/original")->status, 200);

  auto del = cli.Delete("/api/session/" + id);
  EXPECT_EQ(del->status, 200);
  EXPECT_EQ(cli.Get("/api/session/" + id + "/picks")->status, 404);

  auto index = cli.Get("/");
  ASSERT_TRUE(index);
  EXPECT_EQ(index->status, 200);
  EXPECT_NE(index->body.find("picker"), std::string::npos);
}

TEST_F(HttpServer, MultipartUpload) {
  auto cli = client();
  const auto png = cast_png(6);
  httplib::MultipartFormDataItems items{{"image", std::string(png.begin(), png.end()), "scene.png", "image/png"}};
  auto up = cli.Post("/api/session", items);
  ASSERT_TRUE(up);
  EXPECT_EQ(up->status, 200);
  httplib::MultipartFormDataItems wrong{{"other", "x", "", "text/plain"}};
  EXPECT_EQ(cli.Post("/api/session", wrong)->status, 400);
  EXPECT_EQ(cli.Post("/api/session", "garbage", "image/png")->status, 400);
}

}  // namespace
}  // namespace wbrf
