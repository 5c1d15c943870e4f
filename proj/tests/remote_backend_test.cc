// Copyright 2026 The provaudit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "provaudit/remote_backend.h"

#include <atomic>
#include <thread>

#include "gtest/gtest.h"
#include "httplib.h"
#include "test_util.h"

namespace provaudit {
namespace {

constexpr RetryPolicy kNoWait{3, std::chrono::milliseconds(0), 2.0};

// Serves a StubBackend over HTTP, optionally misbehaving first.
class FakeEndpoint {
 public:
  enum class Mode { kServe, kThrottleOnce, kRefuse, kGarbage, kWrongCount };

  explicit FakeEndpoint(Mode mode) : mode_(mode) {
    server_.Post("/generate", [this](const httplib::Request& req,
                                     httplib::Response& res) {
      const int call = calls_.fetch_add(1);
      last_auth_ = req.get_header_value("Authorization");
      if (mode_ == Mode::kThrottleOnce && call == 0) {
        res.status = 429;
        return;
      }
      if (mode_ == Mode::kRefuse) {
        res.status = 403;
        res.set_content("blocked by safety filter", "text/plain");
        return;
      }
      if (mode_ == Mode::kGarbage) {
        res.set_content("<html>oops</html>", "text/html");
        return;
      }
      auto request = DecodeGenerationRequest(nlohmann::json::parse(req.body));
      if (!request.ok()) {
        res.status = 400;
        return;
      }
      if (mode_ == Mode::kWrongCount) request->n += 1;
      auto images = StubBackend().Generate(*request);
      res.set_content(EncodeGenerationResponse(*images)->dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }

  std::string url() const {
    return "http://127.0.0.1:" + std::to_string(port_) + "/generate";
  }
  int calls() const { return calls_.load(); }
  const std::string& last_auth() const { return last_auth_; }

 private:
  Mode mode_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> calls_{0};
  std::string last_auth_;
};

GenerationRequest Request() {
  GenerationRequest r;
  r.text = "a red bicycle";
  r.n = 3;
  r.extra_params["guidance"] = "7.5";
  return r;
}

TEST(RemoteBackendTest, MatchesTheBackendItWraps) {
  FakeEndpoint endpoint(FakeEndpoint::Mode::kServe);
  RemoteBackend remote({endpoint.url(), "secret", std::chrono::seconds(5)});
  ASSERT_OK_AND_ASSIGN(GenerationBatch batch, Generate(remote, Request(), kNoWait));
  ASSERT_OK_AND_ASSIGN(std::vector<RgbImage> direct, StubBackend().Generate(Request()));
  EXPECT_EQ(batch.images, direct);
  EXPECT_EQ(batch.backend_id, "remote:" + endpoint.url());
  EXPECT_EQ(endpoint.last_auth(), "Bearer secret");
}

TEST(RemoteBackendTest, ThrottlingIsRetried) {
  FakeEndpoint endpoint(FakeEndpoint::Mode::kThrottleOnce);
  RemoteBackend remote({endpoint.url(), "", std::chrono::seconds(5)});
  ASSERT_OK(Generate(remote, Request(), kNoWait).status());
  EXPECT_EQ(endpoint.calls(), 2);
  EXPECT_EQ(endpoint.last_auth(), "");
}

TEST(RemoteBackendTest, RefusalIsNotRetried) {
  FakeEndpoint endpoint(FakeEndpoint::Mode::kRefuse);
  RemoteBackend remote({endpoint.url(), "", std::chrono::seconds(5)});
  auto batch = Generate(remote, Request(), kNoWait);
  EXPECT_EQ(batch.status().code(), absl::StatusCode::kPermissionDenied);
  EXPECT_EQ(endpoint.calls(), 1);
}

TEST(RemoteBackendTest, MalformedResponses) {
  {
    FakeEndpoint endpoint(FakeEndpoint::Mode::kGarbage);
    RemoteBackend remote({endpoint.url(), "", std::chrono::seconds(5)});
    EXPECT_EQ(Generate(remote, Request(), kNoWait).status().code(),
              absl::StatusCode::kDataLoss);
  }
  {
    FakeEndpoint endpoint(FakeEndpoint::Mode::kWrongCount);
    RemoteBackend remote({endpoint.url(), "", std::chrono::seconds(5)});
    EXPECT_EQ(Generate(remote, Request(), kNoWait).status().code(),
              absl::StatusCode::kDataLoss);
  }
}

TEST(RemoteBackendTest, UnreachableEndpointIsUnavailable) {
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  RemoteBackend remote({"http://127.0.0.1:" + std::to_string(port) + "/generate",
                        "", std::chrono::seconds(1)});
  const RetryPolicy once{1, std::chrono::milliseconds(0), 1.0};
  EXPECT_EQ(Generate(remote, Request(), once).status().code(),
            absl::StatusCode::kUnavailable);
}

TEST(WireFormatTest, RequestRoundTrip) {
  ASSERT_OK_AND_ASSIGN(GenerationRequest back,
                       DecodeGenerationRequest(EncodeGenerationRequest(Request())));
  EXPECT_EQ(back.text, Request().text);
  EXPECT_EQ(back.n, 3);
  EXPECT_EQ(back.inference_steps, 50);
  EXPECT_EQ(back.extra_params, Request().extra_params);
  EXPECT_FALSE(DecodeGenerationRequest(nlohmann::json{{"text", "x"}}).ok());
  EXPECT_FALSE(DecodeGenerationRequest(
                   nlohmann::json{{"text", 1}, {"num_images", 1}, {"steps", 1},
                                  {"seed", 0}})
                   .ok());
}

TEST(WireFormatTest, ResponseRoundTrip) {
  std::vector<RgbImage> images = {RgbImage(3, 2), RgbImage(1, 1)};
  images[0].pixels[4] = 200;
  ASSERT_OK_AND_ASSIGN(nlohmann::json body, EncodeGenerationResponse(images));
  ASSERT_OK_AND_ASSIGN(std::vector<RgbImage> back, DecodeGenerationResponse(body));
  EXPECT_EQ(back, images);
  EXPECT_FALSE(DecodeGenerationResponse(nlohmann::json{{"images", {1}}}).ok());
  EXPECT_FALSE(DecodeGenerationResponse(nlohmann::json::object()).ok());
}

}  // namespace
}  // namespace provaudit
