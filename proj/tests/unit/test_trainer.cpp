#include <gtest/gtest.h>
#include <httplib.h>

#include <thread>

#include "archgen/dedup.hpp"
#include "archgen/error.hpp"
#include "archgen/trainer.hpp"

using namespace archgen;
using namespace archgen::train;
using nlohmann::json;

namespace {

TrainRequest request(const std::string& code = "class Net: pass") {
  return TrainRequest{dedup::digest_of(code), code, "mnist"};
}

// Minimal stand-in for the training worker's HTTP surface.
class FakeWorker {
 public:
  std::function<void(const httplib::Request&, httplib::Response&)> on_train;
  std::atomic<int> trains{0};

  FakeWorker() {
    server_.Get("/health", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"status": "ready"})", "application/json");
    });
    server_.Post("/train", [this](const httplib::Request& req, httplib::Response& res) {
      ++trains;
      on_train(req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeWorker() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST(TrainContract, RequestDefaultsAndValidation) {
  TrainRequest r = request();
  EXPECT_EQ(r.epochs, 1);
  EXPECT_NO_THROW(r.validate());
  r.epochs = 0;
  EXPECT_THROW(r.validate(), ArgumentError);
  r = request();
  r.subset_size = 10;
  r.batch_size = 64;
  EXPECT_THROW(r.validate(), ArgumentError);
}

TEST(TrainContract, RequestRoundTrip) {
  TrainRequest r = request();
  r.batch_size = 128;
  r.device = "cpu";
  const TrainRequest back = request_from_json(to_json(r));
  EXPECT_EQ(back.nn_id, r.nn_id);
  EXPECT_EQ(back.code, r.code);
  EXPECT_EQ(back.batch_size, 128);
  EXPECT_EQ(back.device, "cpu");
  EXPECT_THROW(request_from_json(json{{"code", "x"}}), ArgumentError);
}

TEST(TrainContract, ResultAccuracyPresentIffOk) {
  const std::string id = dedup::digest_of("x").str();
  EXPECT_NO_THROW(result_from_json({{"nn_id", id}, {"status", "ok"}, {"accuracy", 0.83}}));
  EXPECT_NO_THROW(result_from_json({{"nn_id", id}, {"status", "timeout"}, {"accuracy", nullptr}, {"error", "budget"}}));
  EXPECT_THROW(result_from_json({{"nn_id", id}, {"status", "ok"}}), ArgumentError);
  EXPECT_THROW(result_from_json({{"nn_id", id}, {"status", "load-error"}, {"accuracy", 0.5}}), ArgumentError);
  EXPECT_THROW(result_from_json({{"nn_id", id}, {"status", "ok"}, {"accuracy", 1.2}}), ArgumentError);
  EXPECT_THROW(result_from_json({{"nn_id", id}, {"status", "exploded"}}), ArgumentError);
  const TrainResult r{dedup::digest_of("x"), TrainStatus::RuntimeError, std::nullopt, 1.5, "Traceback"};
  const TrainResult back = result_from_json(to_json(r));
  EXPECT_EQ(back.status, TrainStatus::RuntimeError);
  EXPECT_EQ(back.error, "Traceback");
}

TEST(TrainContract, StatusStrings) {
  EXPECT_STREQ(to_string(TrainStatus::LoadError), "load-error");
  EXPECT_EQ(parse_status("runtime-error"), TrainStatus::RuntimeError);
  EXPECT_FALSE(parse_status("OK").has_value());
}

TEST(MockTrainerTest, DeterministicAccuracyInRange) {
  MockTrainer t;
  const auto a = t.train(request("a = 1"));
  const auto b = t.train(request("a = 1"));
  ASSERT_EQ(a.status, TrainStatus::Ok);
  EXPECT_EQ(a.accuracy, b.accuracy);
  EXPECT_GE(*a.accuracy, 0.10);
  EXPECT_LE(*a.accuracy, 0.90);
  EXPECT_EQ(t.dispatched().size(), 2u);
  const auto fail = t.train(request(std::string("x = 1\n") + std::string(MockTrainer::kFailMarker)));
  EXPECT_EQ(fail.status, TrainStatus::RuntimeError);
  EXPECT_FALSE(fail.accuracy.has_value());
}

TEST(WorkerTrainerTest, HealthAndSuccessfulTraining) {
  FakeWorker w;
  w.on_train = [](const httplib::Request& req, httplib::Response& res) {
    const json body = json::parse(req.body);
    res.set_content(json{{"nn_id", body["nn_id"]}, {"status", "ok"}, {"accuracy", 0.91}, {"wall_time", 3.2}}.dump(),
                    "application/json");
  };
  WorkerTrainer t(w.url() + "/");
  EXPECT_TRUE(t.healthy());
  const auto r = t.train(request());
  EXPECT_EQ(r.status, TrainStatus::Ok);
  EXPECT_DOUBLE_EQ(*r.accuracy, 0.91);
  EXPECT_DOUBLE_EQ(r.wall_time_s, 3.2);
}

TEST(WorkerTrainerTest, TraineeFailureIsAResultNotAnException) {
  FakeWorker w;
  w.on_train = [](const httplib::Request& req, httplib::Response& res) {
    const json body = json::parse(req.body);
    res.set_content(json{{"nn_id", body["nn_id"]}, {"status", "runtime-error"}, {"accuracy", nullptr},
                         {"error", "shape mismatch"}}
                        .dump(),
                    "application/json");
  };
  WorkerTrainer t(w.url());
  const auto r = t.train(request());
  EXPECT_EQ(r.status, TrainStatus::RuntimeError);
  EXPECT_EQ(r.error, "shape mismatch");
}

TEST(WorkerTrainerTest, ServerErrorsMeanUnavailable) {
  FakeWorker w;
  w.on_train = [](const httplib::Request&, httplib::Response& res) { res.status = 503; };
  EXPECT_THROW(WorkerTrainer(w.url()).train(request()), TrainerUnavailable);
}

TEST(WorkerTrainerTest, RejectedRequestIsArgumentError) {
  FakeWorker w;
  w.on_train = [](const httplib::Request&, httplib::Response& res) {
    res.status = 400;
    res.set_content(R"({"error": "malformed request"})", "application/json");
  };
  EXPECT_THROW(WorkerTrainer(w.url()).train(request()), ArgumentError);
}

TEST(WorkerTrainerTest, MismatchedIdIsRejected) {
  FakeWorker w;
  w.on_train = [](const httplib::Request&, httplib::Response& res) {
    res.set_content(json{{"nn_id", dedup::digest_of("other").str()}, {"status", "ok"}, {"accuracy", 0.5}}.dump(),
                    "application/json");
  };
  EXPECT_THROW(WorkerTrainer(w.url()).train(request()), TrainerUnavailable);
}

TEST(WorkerTrainerTest, UnreachableWorker) {
  WorkerTrainer t("http://127.0.0.1:1", std::chrono::seconds(2));
  EXPECT_FALSE(t.healthy());
  EXPECT_THROW(t.train(request()), TrainerUnavailable);
}
