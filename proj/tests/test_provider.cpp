#include <doctest.h>

#include <future>
#include <thread>

#include <json.hpp>

#include "conex/cache.hpp"
#include "conex/errors.hpp"
#include "conex/planted_corpus.hpp"
#include "conex/toy_model.hpp"
#include "conex/wire.hpp"
#include "test_util.hpp"
#include "toy_fixtures.hpp"

using namespace conex;
using testutil::TempDir;

namespace {

// Request/response pairs every provider server must reproduce for tiny_model().
struct Exchange {
  const char* request;
  const char* response;
};
const Exchange kTranscript[] = {
    {R"({"op":"describe"})", R"({"p":2,"classes":["neg","pos"],"nonneg":true,"mask_token":"[MASK]"})"},
    {R"({"op":"embed","texts":["good","bad","good bad","[MASK] good","unknown words"]})",
     R"({"activations":[[1.0,0.0],[0.0,1.0],[0.0,0.0],[0.5,0.0],[0.0,0.0]]})"},
    {R"({"op":"embed","texts":[]})", R"({"activations":[]})"},
    {R"({"op":"classify","activations":[[1.0,0.0],[0.0,2.0]]})", R"({"logits":[[0.0,1.0],[2.0,0.0]]})"},
    {R"({"op":"classify","activations":[[1.0]]})",
     R"({"error":"activations have 1 columns, expected 2","code":"dimension_mismatch"})"},
    {R"({"op":"bogus"})", R"({"error":"unknown op 'bogus'","code":"unknown_op"})"},
    {R"({"op":"shutdown"})", R"({"ok":true})"},
};

void replay(LineChannel& ch) {
  for (const auto& ex : kTranscript) {
    CAPTURE(ex.request);
    ch.send_line(ex.request);
    const auto reply = ch.recv_line();
    REQUIRE(reply.has_value());
    CHECK(nlohmann::json::parse(*reply) == nlohmann::json::parse(ex.response));
  }
}

// Shared contract for every EmbeddingProvider, checked against a reference.
void conformance(EmbeddingProvider& provider, ToyProvider& reference) {
  const auto d = provider.describe();
  const auto r = reference.describe();
  CHECK(d.p == r.p);
  CHECK(d.class_names == r.class_names);
  CHECK(d.nonneg_certified);
  CHECK(d.mask_token == r.mask_token);

  const std::vector<std::string> texts{"wonderful charming pour", "dull boring plot.", "", "[MASK] delightful",
                                       "zzz unseen tokens"};
  const DenseMatrix a = provider.embed(texts);
  REQUIRE(a.rows() == texts.size());
  REQUIRE(a.cols() == d.p);
  CHECK(a.all_nonnegative());
  CHECK(a == reference.embed(texts));

  // Rows do not depend on batch composition.
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const DenseMatrix one = provider.embed({texts[i]});
    for (std::size_t j = 0; j < d.p; ++j) CHECK(one(0, j) == a(i, j));
  }
  CHECK(provider.embed({}).rows() == 0);

  const DenseMatrix z = provider.classify(a);
  CHECK(z.rows() == texts.size());
  CHECK(z.cols() == d.class_names.size());
  CHECK(z == reference.classify(a));
  CHECK(provider.classify(DenseMatrix(0, d.p)).rows() == 0);
  CHECK_THROWS_AS(provider.classify(DenseMatrix(1, d.p + 1)), conex::Error);
  CHECK(provider.embed(texts) == a);
}

ToyModel trained_model() {
  PlantedCorpusConfig pc;
  pc.docs = 120;
  pc.seed = 5;
  ToyTrainConfig tc;
  tc.p = 12;
  tc.epochs = 5;
  tc.seed = 2;
  return train_toy(labeled_texts(make_planted_corpus(pc).docs), tc).model;
}

}  // namespace

TEST_SUITE("provider") {
  TEST_CASE("hand-computed forward pass") {
    ToyProvider p(testutil::tiny_model());
    const DenseMatrix h = p.embed({"good", "Bad!", "good good bad", "[MASK] good", "[MASK]"});
    CHECK(h == DenseMatrix::from_rows({{1, 0}, {0, 1}, {1.0 / 3, 0}, {0.5, 0}, {0, 0}}));
    CHECK(p.classify(h.row_slice(0, 2)) == DenseMatrix::from_rows({{0, 1}, {1, 0}}));
    CHECK(predict(p, {"good", "bad"}) == std::vector<std::size_t>{1, 0});
    const ToyModel& m = p.model();
    CHECK(m.tokenize("Good, [MASK] xyz") == std::vector<std::size_t>{2, ToyModel::kMask, ToyModel::kOov});
  }

  TEST_CASE("training reaches high accuracy on the planted corpus and is deterministic") {
    PlantedCorpusConfig pc;
    pc.docs = 300;
    pc.seed = 1;
    const auto corpus = make_planted_corpus(pc);
    const auto data = labeled_texts(corpus.docs);
    ToyTrainConfig tc;
    tc.seed = 3;
    const auto a = train_toy(data, tc);
    const auto b = train_toy(data, tc);
    CHECK(a.train_accuracy >= 0.95);
    CHECK(a.model.fingerprint() == b.model.fingerprint());
    CHECK(a.model.embed_weights == b.model.embed_weights);

    pc.seed = 99;
    const auto held_out = labeled_texts(make_planted_corpus(pc).docs);
    CHECK(accuracy(a.model, held_out) >= 0.95);

    // unknown words embed like the mask token
    for (double v : a.model.embed_weights.row(ToyModel::kOov)) CHECK(v == 0.0);
    CHECK(a.model.activation("superb qzxv") == a.model.activation("superb [MASK]"));
  }

  TEST_CASE("training input validation") {
    CHECK_THROWS_AS(train_toy({}, {}), ConfigError);
    CHECK_THROWS_AS(train_toy({{"a b", 1}, {"c d", 1}}, {}), ConfigError);
  }

  TEST_CASE("model directory round trip keeps the provider identity") {
    TempDir dir("toy");
    const ToyModel m = trained_model();
    save_toy_model(m, dir / "m");
    const ToyModel back = load_toy_model(dir / "m");
    CHECK(back.vocab == m.vocab);
    CHECK(back.fingerprint() == m.fingerprint());
    CHECK_THROWS_AS(load_toy_model(dir / "missing"), DataError);
  }

  TEST_CASE("negative activations are rejected") {
    class Negative final : public EmbeddingProvider {
     public:
      ProviderDescriptor describe() override { return {1, {"a", "b"}, false, "[MASK]"}; }
      DenseMatrix embed(const std::vector<std::string>& t) override { return DenseMatrix(t.size(), 1, -1.0); }
      DenseMatrix classify(const DenseMatrix& a) override { return DenseMatrix(a.rows(), 2); }
      std::string id() override { return "neg"; }
    } neg;
    CHECK_THROWS_AS(embed_checked(neg, {"x"}), NonNegativityViolation);
  }

  TEST_CASE("golden transcript: in-process handler") {
    ToyProvider p(testutil::tiny_model());
    bool stop = false;
    for (const auto& ex : kTranscript) {
      CAPTURE(ex.request);
      CHECK(nlohmann::json::parse(handle_request(p, ex.request, stop)) == nlohmann::json::parse(ex.response));
    }
    CHECK(stop);
    stop = false;
    const auto bad = nlohmann::json::parse(handle_request(p, "{not json", stop));
    CHECK(bad["code"] == "malformed");
    CHECK(stop);
  }

  TEST_CASE("golden transcript: CLI server over stdio") {
    TempDir dir("serve");
    save_toy_model(testutil::tiny_model(), dir / "m");
    ChildProcessChannel ch(std::string(CONEX_CLI_PATH) + " serve --provider " + (dir / "m").string());
    replay(ch);
  }

  TEST_CASE("golden transcript: TCP server") {
    ToyProvider p(testutil::tiny_model());
    std::promise<int> port_promise;
    std::thread server([&] { serve_tcp(p, "127.0.0.1", 0, [&](int port) { port_promise.set_value(port); }); });
    const int port = port_promise.get_future().get();
    {
      TcpChannel ch("127.0.0.1", port);
      replay(ch);
    }
    server.join();
  }

  TEST_CASE("conformance: builtin provider") {
    ToyProvider ref(trained_model()), p(trained_model());
    conformance(p, ref);
  }

  TEST_CASE("conformance: wire client over stdio") {
    TempDir dir("wire");
    const ToyModel m = trained_model();
    save_toy_model(m, dir / "m");
    ToyProvider ref(load_toy_model(dir / "m"));
    auto p = make_provider("cmd:" + std::string(CONEX_CLI_PATH) + " serve --provider " + (dir / "m").string());
    conformance(*p, ref);
  }

  TEST_CASE("conformance: wire client over TCP, two connections") {
    ToyProvider served(trained_model()), ref(trained_model());
    std::promise<int> port_promise;
    std::thread server([&] { serve_tcp(served, "127.0.0.1", 0, [&](int port) { port_promise.set_value(port); }); });
    const int port = port_promise.get_future().get();
    {
      auto a = make_provider("tcp:127.0.0.1:" + std::to_string(port));
      auto b = make_provider("tcp:127.0.0.1:" + std::to_string(port));
      conformance(*a, ref);
      conformance(*b, ref);
      dynamic_cast<WireProvider&>(*a).shutdown();
    }
    server.join();
  }

  TEST_CASE("conformance: cached provider, and the cache persists") {
    TempDir dir("cache");
    const ToyModel m = trained_model();
    ToyProvider ref(m);
    {
      CachedProvider cached(std::make_unique<ToyProvider>(m), dir.path());
      conformance(cached, ref);
      CHECK(cached.misses() > 0);
      CHECK(cached.hits() > 0);
    }
    CachedProvider again(std::make_unique<ToyProvider>(m), dir.path());
    const auto before = again.misses();
    CHECK(again.embed({"wonderful charming pour"}) == ref.embed({"wonderful charming pour"}));
    CHECK(again.misses() == before);
    CHECK(again.hits() == 1);
  }

  TEST_CASE("unreachable TCP provider is a provider error with retries") {
    try {
      TcpChannel ch("127.0.0.1", 1, 2, 10);
      FAIL("connected to port 1");
    } catch (const ProviderError& e) {
      CHECK(e.retries() == 2);
      CHECK(e.exit_code() == 4);
    }
  }

  TEST_CASE("provider specs") {
    CHECK_THROWS_AS(make_provider("/definitely/not/a/model"), ConfigError);
    CHECK_THROWS_AS(make_provider("tcp:nohostport"), ConfigError);
    CHECK_THROWS_AS(make_provider("cmd:exit 3"), ProviderError);
  }
}
