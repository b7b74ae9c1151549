#include "selrag/embedding.hpp"
#include "selrag/error.hpp"
#include "selrag/generation.hpp"

#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <mutex>
#include <thread>

using selrag::Error;
using selrag::ErrorCode;
using nlohmann::json;

namespace {

/// httplib server on an ephemeral port for the duration of a test.
class LocalServer {
public:
  LocalServer() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }

  httplib::Server& server() { return server_; }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

selrag::embed::EmbedderSpec fast_remote(const std::string& url, std::size_t dim) {
  auto spec = selrag::embed::EmbedderSpec::remote(url, dim);
  spec.initial_backoff = std::chrono::milliseconds(1);
  spec.request_timeout = std::chrono::milliseconds(2000);
  return spec;
}

json fake_vectors(const json& texts, std::size_t dim) {
  json vectors = json::array();
  for (const auto& t : texts) {
    json row = json::array();
    const auto len = t.get<std::string>().size();
    for (std::size_t i = 0; i < dim; ++i) {
      row.push_back(static_cast<double>((len + i) % 7) + 1.0);
    }
    vectors.push_back(row);
  }
  return vectors;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no selrag::Error thrown";
  return ErrorCode::invalid_argument;
}

selrag::gen::GenerationRequest request_for(std::string prompt, std::size_t k) {
  selrag::gen::GenerationRequest req;
  req.prompt.text = std::move(prompt);
  req.num_candidates = k;
  req.max_new_tokens = 64;
  return req;
}

selrag::gen::HttpBackendOptions fast_backend() {
  selrag::gen::HttpBackendOptions o;
  o.initial_backoff = std::chrono::milliseconds(1);
  o.request_timeout = std::chrono::milliseconds(2000);
  return o;
}

} // namespace

TEST(RemoteEmbedder, EmbedsInBatchesOf32) {
  LocalServer srv;
  std::atomic<int> calls{0};
  std::mutex m;
  std::vector<std::size_t> batch_sizes;
  srv.server().Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
    const auto body = json::parse(req.body);
    {
      std::lock_guard lock(m);
      batch_sizes.push_back(body["texts"].size());
    }
    ++calls;
    res.set_content(json{{"vectors", fake_vectors(body["texts"], 4)}, {"dim", 4}}.dump(), "application/json");
  });
  const selrag::embed::RemoteEmbedder e(fast_remote(srv.url(), 4));
  std::vector<std::string> texts;
  for (int i = 0; i < 70; ++i) {
    texts.push_back(std::string(static_cast<std::size_t>(i + 1), 'x'));
  }
  const auto vectors = e.embed_texts(texts);
  ASSERT_EQ(vectors.size(), 70U);
  EXPECT_EQ(calls.load(), 3);
  EXPECT_EQ(batch_sizes, (std::vector<std::size_t>{32, 32, 6}));
  EXPECT_EQ(vectors[0].dim(), 4U);
  EXPECT_DOUBLE_EQ(vectors[0][0], 2.0); // len 1 -> (1+0)%7+1
}

TEST(RemoteEmbedder, BasePathIsKept) {
  LocalServer srv;
  srv.server().Post("/v1/embed", [&](const httplib::Request& req, httplib::Response& res) {
    const auto body = json::parse(req.body);
    res.set_content(json{{"vectors", fake_vectors(body["texts"], 3)}, {"dim", 3}}.dump(), "application/json");
  });
  const selrag::embed::RemoteEmbedder e(fast_remote(srv.url() + "/v1/", 3));
  EXPECT_EQ(e.embed_text("abc").dim(), 3U);
}

TEST(RemoteEmbedder, RetriesThenServiceUnavailable) {
  LocalServer srv;
  std::atomic<int> calls{0};
  srv.server().Post("/embed", [&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 503;
  });
  const selrag::embed::RemoteEmbedder e(fast_remote(srv.url(), 4));
  try {
    e.embed_text("x");
    FAIL() << "expected an error";
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::service_unavailable);
    EXPECT_TRUE(err.retryable());
  }
  EXPECT_EQ(calls.load(), 4); // first try plus three retries
}

TEST(RemoteEmbedder, RecoversAfterTransientFailure) {
  LocalServer srv;
  std::atomic<int> calls{0};
  srv.server().Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
    if (++calls < 3) {
      res.status = 500;
      return;
    }
    const auto body = json::parse(req.body);
    res.set_content(json{{"vectors", fake_vectors(body["texts"], 2)}, {"dim", 2}}.dump(), "application/json");
  });
  const selrag::embed::RemoteEmbedder e(fast_remote(srv.url(), 2));
  EXPECT_EQ(e.embed_text("x").dim(), 2U);
  EXPECT_EQ(calls.load(), 3);
}

TEST(RemoteEmbedder, WrongDimension) {
  LocalServer srv;
  srv.server().Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
    const auto body = json::parse(req.body);
    res.set_content(json{{"vectors", fake_vectors(body["texts"], 5)}, {"dim", 5}}.dump(), "application/json");
  });
  const selrag::embed::RemoteEmbedder e(fast_remote(srv.url(), 4));
  EXPECT_EQ(code_of([&] { e.embed_text("x"); }), ErrorCode::dimension_mismatch);
}

TEST(RemoteEmbedder, MalformedBody) {
  LocalServer srv;
  srv.server().Post("/embed", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content("{not json", "application/json");
  });
  const selrag::embed::RemoteEmbedder e(fast_remote(srv.url(), 4));
  EXPECT_EQ(code_of([&] { e.embed_text("x"); }), ErrorCode::service_unavailable);
}

TEST(RemoteEmbedder, ServiceDown) {
  std::string url;
  {
    LocalServer srv;
    url = srv.url();
  }
  auto spec = fast_remote(url, 4);
  spec.request_timeout = std::chrono::milliseconds(200);
  const selrag::embed::RemoteEmbedder e(spec);
  EXPECT_EQ(code_of([&] { e.embed_text("x"); }), ErrorCode::service_unavailable);
}

TEST(RemoteEmbedder, RejectsNonHttpEndpoints) {
  EXPECT_EQ(code_of([] { selrag::embed::RemoteEmbedder(selrag::embed::EmbedderSpec::remote("https://h", 4)); }),
            ErrorCode::invalid_config);
  EXPECT_EQ(code_of([] { selrag::embed::RemoteEmbedder(selrag::embed::EmbedderSpec::remote("localhost:80", 4)); }),
            ErrorCode::invalid_config);
}

TEST(RemoteEmbedder, BoundsInFlightRequests) {
  LocalServer srv;
  std::atomic<int> active{0};
  std::atomic<int> peak{0};
  srv.server().new_task_queue = [] { return new httplib::ThreadPool(16); };
  srv.server().Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
    const int now = ++active;
    int seen = peak.load();
    while (now > seen && !peak.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(30));
    --active;
    const auto body = json::parse(req.body);
    res.set_content(json{{"vectors", fake_vectors(body["texts"], 2)}, {"dim", 2}}.dump(), "application/json");
  });
  auto spec = fast_remote(srv.url(), 2);
  spec.max_in_flight = 2;
  const selrag::embed::RemoteEmbedder e(spec);
  {
    std::vector<std::jthread> threads;
    for (int i = 0; i < 8; ++i) {
      threads.emplace_back([&] { e.embed_text("x"); });
    }
  }
  EXPECT_LE(peak.load(), 2);
  EXPECT_GE(peak.load(), 1);
}

TEST(HttpBackend, SendsContractAndParsesCandidates) {
  LocalServer srv;
  json seen;
  srv.server().Post("/generate", [&](const httplib::Request& req, httplib::Response& res) {
    seen = json::parse(req.body);
    res.set_content(
        json{{"candidates",
              {{{"text", "return a + b; [BUG] junk"}, {"score", -0.5}}, {{"text", " alt "}, {"score", nullptr}}}}}
            .dump(),
        "application/json");
  });
  const selrag::gen::HttpBackend backend(srv.url(), fast_backend());
  const auto out = selrag::gen::generate(request_for("[BUG] x [FIX]", 2), backend);
  EXPECT_EQ(seen["prompt"], "[BUG] x [FIX]");
  EXPECT_EQ(seen["num_candidates"], 2);
  EXPECT_EQ(seen["max_new_tokens"], 64);
  ASSERT_EQ(out.size(), 2U);
  EXPECT_EQ(out[0].text, "return a + b;");
  EXPECT_EQ(out[0].rank, 1);
  EXPECT_EQ(out[0].backend_score, -0.5);
  EXPECT_EQ(out[1].text, "alt");
  EXPECT_EQ(out[1].rank, 2);
  EXPECT_FALSE(out[1].backend_score.has_value());
}

TEST(HttpBackend, UnavailableAfterRetries) {
  LocalServer srv;
  std::atomic<int> calls{0};
  srv.server().Post("/generate", [&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 502;
  });
  const selrag::gen::HttpBackend backend(srv.url(), fast_backend());
  try {
    selrag::gen::generate(request_for("[BUG] x [FIX]", 1), backend);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::backend_unavailable);
    EXPECT_TRUE(e.retryable());
  }
  EXPECT_EQ(calls.load(), 4);
}

TEST(HttpBackend, MalformedResponsesBreakTheContract) {
  LocalServer srv;
  std::string body;
  srv.server().Post("/generate",
                    [&](const httplib::Request&, httplib::Response& res) { res.set_content(body, "application/json"); });
  const selrag::gen::HttpBackend backend(srv.url(), fast_backend());
  for (const char* b : {"nope", "{}", R"({"candidates": [{"score": 1}]})", R"({"candidates": [{"text": 3}]})",
                        R"({"candidates": [{"text": "x", "score": "high"}]})"}) {
    body = b;
    EXPECT_EQ(code_of([&] { selrag::gen::generate(request_for("[BUG] x [FIX]", 1), backend); }),
              ErrorCode::backend_contract)
        << b;
  }
}

TEST(HttpBackend, ServiceDown) {
  std::string url;
  {
    LocalServer srv;
    url = srv.url();
  }
  auto opts = fast_backend();
  opts.request_timeout = std::chrono::milliseconds(200);
  const selrag::gen::HttpBackend backend(url, opts);
  EXPECT_EQ(code_of([&] { selrag::gen::generate(request_for("[BUG] x [FIX]", 1), backend); }),
            ErrorCode::backend_unavailable);
}
