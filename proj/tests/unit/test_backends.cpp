#include <atomic>
#include <thread>

#include "doctest.h"
#include "htam/backend.hpp"
#include "htam/embedding.hpp"
#include "htam/error.hpp"
#include "htam/http_backend.hpp"
#include "httplib.h"

using namespace htam;

TEST_SUITE("backends") {
  TEST_CASE("scripted rules and default") {
    ScriptedBackend b;
    b.on_contains("ships", "detect_ships");
    b.on_regex("^flood", "monitor_flood_extent");
    b.otherwise("default");
    CHECK(ask(b, "count ships") == "detect_ships");
    CHECK(ask(b, "flood map") == "monitor_flood_extent");
    CHECK(ask(b, "anything") == "default");
    CHECK(b.calls() == 3);
    CHECK(b.usage().calls == 3);
    CHECK(b.prompts()[0] == "count ships");

    auto loaded = ScriptedBackend::from_json({{"rules", {{{"contains", "x"}, {"response", "y"}}}}, {"default", "z"}});
    CHECK(ask(*loaded, "xx") == "y");
    CHECK(ask(*loaded, "q") == "z");
    CHECK_THROWS_AS(ScriptedBackend::from_json({{"rules", {{{"response", "y"}}}}}), Error);
  }

  TEST_CASE("response cache") {
    auto store = std::filesystem::temp_directory_path() / "htam_cache_test.jsonl";
    std::filesystem::remove(store);
    auto inner = std::make_shared<ScriptedBackend>();
    inner->otherwise("answer");
    {
      CachedBackend cache(inner, store);
      CHECK(ask(cache, "p") == "answer");
      CHECK(inner->calls() == 1);
      CHECK(ask(cache, "p") == "answer");
      CHECK(inner->calls() == 1);
      CHECK(cache.hits() == 1);
      ask(cache, "p", DecodingParams{0.7, 2048});
      CHECK(inner->calls() == 2);
    }
    CachedBackend warm(inner, store);
    CHECK(ask(warm, "p") == "answer");
    CHECK(inner->calls() == 2);
    CHECK(request_digest(CompletionRequest::from_prompt("p")) != request_digest(CompletionRequest::from_prompt("q")));
    std::filesystem::remove(store);
  }

  TEST_CASE("http chat retries on 429 then succeeds") {
    httplib::Server server;
    std::atomic<int> hits{0};
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
      if (++hits <= 2) {
        res.status = 429;
        res.set_content("{}", "application/json");
        return;
      }
      auto body = nlohmann::json::parse(req.body);
      CHECK(body["messages"][0]["content"] == "hello");
      res.set_content(
          R"({"choices":[{"message":{"role":"assistant","content":"hi"}}],"usage":{"prompt_tokens":3,"completion_tokens":1}})",
          "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    std::vector<std::chrono::milliseconds> sleeps;
    HttpClientOptions opts;
    opts.api_base = "http://127.0.0.1:" + std::to_string(port) + "/v1";
    opts.model = "test-model";
    opts.timeout = std::chrono::milliseconds(5000);
    opts.sleep = [&](std::chrono::milliseconds d) { sleeps.push_back(d); };
    HttpChatBackend chat(opts);
    CHECK(ask(chat, "hello") == "hi");
    CHECK(chat.retries() == 2);
    CHECK(sleeps.size() == 2);
    CHECK(sleeps[1] == 2 * sleeps[0]);
    CHECK(chat.usage().prompt_tokens == 3);

    hits = -100;
    opts.max_attempts = 2;
    HttpChatBackend limited(opts);
    try {
      ask(limited, "hello");
      FAIL("expected rate limit");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kRateLimited);
    }
    server.stop();
    t.join();
  }

  TEST_CASE("endpoint parsing") {
    auto e = HttpEndpoint::parse("https://api.example.com/v1");
    CHECK(e.scheme == "https");
    CHECK(e.host == "api.example.com");
    CHECK(e.port == 443);
    CHECK(e.path_prefix == "/v1");
    auto local = HttpEndpoint::parse("http://localhost:8080");
    CHECK(local.port == 8080);
    CHECK(local.path_prefix.empty());
  }

  TEST_CASE("lexical embeddings") {
    LexicalEmbedder e;
    std::vector<std::string> texts{"detect ships in the harbour", "detect ships in the harbour", "zebra quokka"};
    auto v = e.embed(texts);
    REQUIRE(v.size() == 3);
    CHECK(cosine_similarity(v[0], v[1]) == doctest::Approx(1.0));
    CHECK(cosine_similarity(v[0], v[2]) == doctest::Approx(0.0));
    auto single = e.embed(std::vector<std::string>{texts[2]});
    CHECK(single[0] == v[2]);
  }
}
