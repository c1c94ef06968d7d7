#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <thread>

#include "../support/api_harness.hpp"
#include "../support/temp_dir.hpp"
#include "ras/common/base64.hpp"
#include "ras/scoring/top_k.hpp"

namespace ras {
namespace {

using json = nlohmann::json;
using testing::ApiHarness;
using testing::TempDir;

json body_of(const httplib::Result& res) {
  EXPECT_TRUE(res) << "no response";
  return json::parse(res->body);
}

std::vector<std::string> ids_of(const json& response) {
  std::vector<std::string> ids;
  for (const auto& r : response.at("results")) ids.push_back(r.at("doc_id"));
  return ids;
}

TEST(ApiSearch, PlantedDocumentBuiltFromQueryRowsRanksFirst) {
  TempDir dir;
  testing::seed_corpus(dir.path(), 12);
  const std::string query = "hand drawn survey map of the harbor";
  {
    std::vector<store::DocumentEmbedding> planted{
        {"planted", testing::mock_text(query), store::DocumentSource::base_corpus}};
    store::write_shard(planted, dir.path() / "shards" / "base-000001.ras1", {true, false});
  }
  ApiHarness h(dir.path());
  const auto res = h.search(query);
  ASSERT_EQ(res->status, 200) << res->body;
  const auto body = body_of(res);
  ASSERT_FALSE(body["results"].empty());
  EXPECT_EQ(body["results"][0]["doc_id"], "planted");
  const double rows = static_cast<double>(testing::mock_text(query).rows());
  EXPECT_NEAR(body["results"][0]["score"].get<double>(), rows, 1e-4);
}

TEST(ApiSearch, OmittedKReturnsFive) {
  TempDir dir;
  testing::seed_corpus(dir.path(), 9);
  ApiHarness h(dir.path());
  const auto body = body_of(h.search("portrait of a general"));
  EXPECT_EQ(body["results"].size(), 5u);
}

TEST(ApiSearch, KAboveCorpusSizeReturnsEveryDocument) {
  TempDir dir;
  testing::seed_corpus(dir.path(), 2);
  ApiHarness h(dir.path());
  const auto body = body_of(h.search("river", 3));
  EXPECT_EQ(body["results"].size(), 2u);
}

TEST(ApiSearch, RanksContiguousAndScoresNonIncreasing) {
  TempDir dir;
  testing::seed_corpus(dir.path(), 20);
  ApiHarness h(dir.path());
  std::mt19937 rng(7);
  const std::vector<std::string> words{"map", "river", "civil", "war", "harbor", "city", "plan", "coast"};
  for (int trial = 0; trial < 15; ++trial) {
    std::string q;
    const int n = 1 + static_cast<int>(rng() % 6);
    for (int i = 0; i < n; ++i) q += words[rng() % words.size()] + " ";
    const int k = 1 + static_cast<int>(rng() % 25);
    const auto body = body_of(h.search(q, k));
    const auto& results = body["results"];
    ASSERT_EQ(results.size(), static_cast<std::size_t>(std::min(k, 20)));
    for (std::size_t i = 0; i < results.size(); ++i) {
      EXPECT_EQ(results[i]["rank"], static_cast<int>(i) + 1);
      if (i > 0) {
        EXPECT_LE(results[i]["score"].get<double>(), results[i - 1]["score"].get<double>());
      }
    }
  }
}

TEST(ApiSearch, ScoresAreScoringCoreOutputsUntransformed) {
  TempDir dir;
  testing::seed_corpus(dir.path(), 6);
  ApiHarness h(dir.path());
  const std::string q = "bird's eye view";
  const auto body = body_of(h.search(q, 6));
  const auto query = testing::mock_text(q);
  for (const auto& r : body["results"]) {
    const int i = std::stoi(r["doc_id"].get<std::string>().substr(4));
    EXPECT_EQ(r["score"].get<double>(), scoring::maxsim_score(query, testing::mock_image(testing::corpus_image(i))));
  }
}

TEST(ApiSearch, ResultsCarryMetadataFields) {
  TempDir dir;
  testing::seed_corpus(dir.path(), 3);
  ApiHarness h(dir.path());
  const auto body = body_of(h.search("anything", 3));
  for (const auto& r : body["results"]) {
    const std::string id = r["doc_id"];
    EXPECT_EQ(r["resource_url"], "https://www.loc.gov/item/" + id);
    EXPECT_EQ(r["image_url"], "https://example.org/iiif/" + id + "/full/!1000,1000/0/default.jpg");
    EXPECT_FALSE(r["title"].get<std::string>().empty());
    EXPECT_TRUE(r["doc_type"] == "map" || r["doc_type"] == "photograph");
    EXPECT_EQ(r["collection"], "seed");
  }
}

TEST(ApiSearch, InvalidRequestsAre400) {
  TempDir dir;
  testing::seed_corpus(dir.path(), 3);
  ApiHarness h(dir.path());
  EXPECT_EQ(h.search("")->status, 400);
  EXPECT_EQ(h.search(" \t\n")->status, 400);
  EXPECT_EQ(h.search("x", 0)->status, 400);
  EXPECT_EQ(h.search("x", -2)->status, 400);
  EXPECT_EQ(h.search("x", 1001)->status, 400);
  EXPECT_EQ(h.search("x", 1000)->status, 200);
  EXPECT_EQ(h.post_json("/search", {{"query", "x"}, {"k", "5"}})->status, 400);
  EXPECT_EQ(h.post_json("/search", {{"query", "x"}, {"k", 2.5}})->status, 400);
  EXPECT_EQ(h.post_json("/search", json::object())->status, 400);
  EXPECT_EQ(h.client->Post("/search", "not json", "application/json")->status, 400);
  const auto err = body_of(h.search(""));
  EXPECT_EQ(err["error"]["code"], "bad_request");
}

TEST(ApiSearch, EmptyCorpusReturnsNoResults) {
  TempDir dir;
  testing::seed_corpus(dir.path(), 0);
  ApiHarness h(dir.path());
  const auto res = h.search("maps");
  ASSERT_EQ(res->status, 200);
  EXPECT_TRUE(body_of(res)["results"].empty());
}

TEST(ApiImageSearch, CorpusImageRetrievesItselfWithScore768) {
  TempDir dir;
  testing::seed_corpus(dir.path(), 10);
  ApiHarness h(dir.path());
  const auto res = h.search_image(testing::corpus_image(4));
  ASSERT_EQ(res->status, 200) << res->body;
  const auto body = body_of(res);
  EXPECT_EQ(body["results"].size(), 5u);
  EXPECT_EQ(body["results"][0]["doc_id"], testing::corpus_id(4));
  EXPECT_NEAR(body["results"][0]["score"].get<double>(), 768.0, 1e-3);
}

TEST(ApiImageSearch, RawBodyAndKQueryParameter) {
  TempDir dir;
  testing::seed_corpus(dir.path(), 4);
  ApiHarness h(dir.path());
  const auto res = h.client->Post("/search/image?k=2", testing::corpus_image(1), "image/png");
  ASSERT_EQ(res->status, 200) << res->body;
  const auto body = body_of(res);
  EXPECT_EQ(body["results"].size(), 2u);
  EXPECT_EQ(body["results"][0]["doc_id"], testing::corpus_id(1));
}

TEST(ApiImageSearch, EmptyOrUndecodableUploadIs400) {
  TempDir dir;
  testing::seed_corpus(dir.path(), 2);
  ApiHarness h(dir.path());
  EXPECT_EQ(h.search_image("")->status, 400);
  EXPECT_EQ(h.search_image("definitely not an image")->status, 400);
  EXPECT_EQ(h.client->Post("/search/image", "", "image/png")->status, 400);
  httplib::MultipartFormDataItems no_image{{"k", "3", "", ""}};
  EXPECT_EQ(h.client->Post("/search/image", no_image)->status, 400);
  EXPECT_EQ(h.search_image(testing::corpus_image(0), 0)->status, 400);
}

TEST(ApiImageSearch, TextAndImageQueriesShareOneQueryPath) {
  TempDir dir;
  testing::seed_corpus(dir.path(), 7);
  ApiHarness h(dir.path());
  std::vector<api::QueryTrace> traces;
  std::mutex m;
  h.service->set_query_observer([&](const api::QueryTrace& t) {
    std::lock_guard lock(m);
    traces.push_back(t);
  });
  const auto text = body_of(h.search("a b c", 4));
  const auto image = body_of(h.search_image(testing::corpus_image(2), 4));
  ASSERT_EQ(traces.size(), 2u);
  EXPECT_EQ(traces[0].kind, api::QueryKind::text);
  EXPECT_EQ(traces[0].query_rows, 3u);
  EXPECT_EQ(traces[1].kind, api::QueryKind::image);
  EXPECT_EQ(traces[1].query_rows, 768u);
  for (const auto& t : traces) {
    EXPECT_EQ(t.k, 4u);
    EXPECT_EQ(t.documents_scanned, 7u);
  }

  // run_query on the same matrix reproduces the image response exactly.
  const auto direct =
      h.service->run_query(api::QueryKind::text, testing::mock_image(testing::corpus_image(2)), 4, std::nullopt);
  ASSERT_EQ(direct.results.size(), image["results"].size());
  for (std::size_t i = 0; i < direct.results.size(); ++i) {
    EXPECT_EQ(direct.results[i].doc_id, image["results"][i]["doc_id"]);
    EXPECT_EQ(direct.results[i].score, image["results"][i]["score"].get<double>());
  }
}

TEST(ApiDeterminism, RepeatedSearchBodiesAreByteIdentical) {
  TempDir dir;
  testing::seed_corpus(dir.path(), 15);
  ApiHarness h(dir.path());
  std::set<std::string> bodies;
  for (int i = 0; i < 10; ++i) {
    const auto res = h.search("survey of the northern coast", 7);
    ASSERT_EQ(res->status, 200);
    bodies.insert(testing::strip_latency(res->body));
  }
  EXPECT_EQ(bodies.size(), 1u);
}

TEST(ApiCorpus, UploadIsImmediatelySearchable) {
  TempDir dir;
  testing::seed_corpus(dir.path(), 5);
  ApiHarness h(dir.path());
  const auto image = testing::png(77, 7, 7);
  const auto res = h.upload(image, false);
  ASSERT_EQ(res->status, 200) << res->body;
  const auto added = body_of(res);
  ASSERT_EQ(added["added"].size(), 1u);
  EXPECT_EQ(added["added"][0], api::default_upload_id(image));
  EXPECT_EQ(added["corpus_epoch"], 1);

  const auto found = body_of(h.search_image(image));
  EXPECT_EQ(found["corpus_epoch"], 1);
  EXPECT_EQ(found["results"][0]["doc_id"], api::default_upload_id(image));
  EXPECT_NEAR(found["results"][0]["score"].get<double>(), 768.0, 1e-3);
  EXPECT_EQ(body_of(h.client->Get("/corpus/stats"))["documents"], 6);
}

TEST(ApiCorpus, UploadWithExplicitIdAndTitle) {
  TempDir dir;
  testing::seed_corpus(dir.path(), 1);
  ApiHarness h(dir.path());
  httplib::MultipartFormDataItems items{{"image", testing::png(5), "a.png", "image/png"},
                                        {"doc_id", "my-scan", "", ""},
                                        {"title", "Scanned postcard", "", ""}};
  const auto res = h.client->Post("/corpus/documents", items);
  ASSERT_EQ(res->status, 200) << res->body;
  const auto found = body_of(h.search_image(testing::png(5), 1));
  EXPECT_EQ(found["results"][0]["doc_id"], "my-scan");
  EXPECT_EQ(found["results"][0]["title"], "Scanned postcard");
}

TEST(ApiCorpus, UploadErrors) {
  TempDir dir;
  testing::seed_corpus(dir.path(), 2);
  ApiHarness h(dir.path());
  EXPECT_EQ(h.upload("", false)->status, 400);
  EXPECT_EQ(h.upload("garbage bytes", false)->status, 400);
  httplib::MultipartFormDataItems nothing{{"persist", "false", "", ""}};
  EXPECT_EQ(h.client->Post("/corpus/documents", nothing)->status, 400);
  EXPECT_EQ(h.upload(testing::png(3), false, "doc-000")->status, 409);
  EXPECT_EQ(h.upload(testing::png(3), false, "fresh")->status, 200);
  EXPECT_EQ(h.upload(testing::png(4), false, "fresh")->status, 409);
  EXPECT_EQ(h.upload(testing::png(4), false, "", "bad session!")->status, 400);
  httplib::MultipartFormDataItems bad_flag{{"image", testing::png(9), "a.png", "image/png"},
                                           {"persist", "maybe", "", ""}};
  EXPECT_EQ(h.client->Post("/corpus/documents", bad_flag)->status, 400);
}

TEST(ApiCorpus, PersistedUploadSurvivesRestartEphemeralDoesNot) {
  TempDir dir;
  testing::seed_corpus(dir.path(), 4);
  const auto kept = testing::png(11, 5, 5);
  const auto dropped = testing::png(12, 5, 5);
  {
    ApiHarness h(dir.path());
    ASSERT_EQ(h.upload(kept, true, "kept")->status, 200);
    ASSERT_EQ(h.upload(dropped, false, "dropped")->status, 200);
    EXPECT_EQ(body_of(h.search_image(dropped, 1))["results"][0]["doc_id"], "dropped");
  }
  ApiHarness h(dir.path());
  EXPECT_EQ(body_of(h.client->Get("/corpus/stats"))["documents"], 5);
  const auto kept_hit = body_of(h.search_image(kept, 1))["results"][0];
  EXPECT_EQ(kept_hit["doc_id"], "kept");
  EXPECT_NEAR(kept_hit["score"].get<double>(), 768.0, 1e-3);
  for (const auto& id : ids_of(body_of(h.search_image(dropped, 10)))) EXPECT_NE(id, "dropped");
}

TEST(ApiCorpus, PersistWithoutCorpusDirectoryIs400) {
  ApiHarness h(std::nullopt);
  EXPECT_EQ(h.upload(testing::png(1), true)->status, 400);
  EXPECT_EQ(h.upload(testing::png(1), false)->status, 200);
}

TEST(ApiCorpus, SessionUploadsAreVisibleOnlyToTheirSession) {
  TempDir dir;
  testing::seed_corpus(dir.path(), 4);
  ApiHarness h(dir.path());
  const auto image = testing::png(31, 6, 6);
  const auto res = h.upload(image, false, "mine", "alice");
  ASSERT_EQ(res->status, 200) << res->body;
  const auto added = body_of(res);
  EXPECT_EQ(added["corpus_epoch"], 0);
  EXPECT_EQ(added["session_epoch"], 1);

  httplib::MultipartFormDataItems alice{{"image", image, "q.png", "image/png"}, {"session_id", "alice", "", ""}};
  const auto hers = body_of(h.client->Post("/search/image", alice));
  EXPECT_EQ(hers["results"][0]["doc_id"], "mine");
  EXPECT_EQ(hers["session_epoch"], 1);
  EXPECT_EQ(hers["results"].size(), 5u);

  for (const auto& id : ids_of(body_of(h.search_image(image, 10)))) EXPECT_NE(id, "mine");
  httplib::MultipartFormDataItems bob{{"image", image, "q.png", "image/png"}, {"session_id", "bob", "", ""}};
  for (const auto& id : ids_of(body_of(h.client->Post("/search/image", bob)))) EXPECT_NE(id, "mine");

  // A session upload cannot shadow a corpus document.
  EXPECT_EQ(h.upload(testing::png(32), false, "doc-001", "alice")->status, 409);
}

TEST(ApiCorpus, SessionUploadWithPersistGoesToTheCorpus) {
  TempDir dir;
  testing::seed_corpus(dir.path(), 2);
  ApiHarness h(dir.path());
  ASSERT_EQ(h.upload(testing::png(40), true, "shared", "alice")->status, 200);
  EXPECT_EQ(body_of(h.search_image(testing::png(40), 1))["results"][0]["doc_id"], "shared");
}

TEST(ApiCorpus, ConcurrentAdditionsNeverMixEpochs) {
  TempDir dir;
  testing::seed_corpus(dir.path(), 3);
  ApiHarness h(dir.path());
  std::atomic<bool> done{false};
  std::thread writer([&] {
    for (int i = 0; i < 8; ++i) h.service->add_images({{testing::png(500 + i), "", ""}}, {});
    done = true;
  });
  int checked = 0;
  while (!done || checked < 3) {
    const auto r = h.service->search_text({"coast line", 50, std::nullopt});
    // Each addition adds one document and bumps the epoch by one.
    EXPECT_EQ(r.results.size(), 3u + r.corpus_epoch);
    ++checked;
  }
  writer.join();
}

TEST(ApiFederation, ExportedShardImportsWithIdenticalScores) {
  TempDir a_dir, b_dir;
  testing::seed_corpus(a_dir.path(), 8);
  testing::seed_corpus(b_dir.path(), 0);
  ApiHarness a(a_dir.path());
  ApiHarness b(b_dir.path());

  const std::vector<std::string> ids{testing::corpus_id(1), testing::corpus_id(4), testing::corpus_id(6)};
  const auto exported = a.post_json("/corpus/export", {{"doc_ids", ids}});
  ASSERT_EQ(exported->status, 200) << exported->body;
  const auto payload = body_of(exported);
  const auto shard_bytes = base64_decode(payload["shard_base64"].get<std::string>());
  const std::string shard(reinterpret_cast<const char*>(shard_bytes.data()), shard_bytes.size());

  httplib::MultipartFormDataItems items{{"shard", shard, "a.ras1", "application/octet-stream"},
                                        {"metadata", payload["metadata_csv"], "a.metadata.csv", "text/csv"},
                                        {"persist", "true", "", ""}};
  const auto imported = b.client->Post("/corpus/documents", items);
  ASSERT_EQ(imported->status, 200) << imported->body;
  EXPECT_EQ(body_of(imported)["added"], json(ids));

  for (const std::string q : {"city plan", "whaling ship", "1863 battlefield"}) {
    const auto ra = body_of(a.post_json("/search", {{"query", q}, {"k", 8}}));
    const auto rb = body_of(b.post_json("/search", {{"query", q}, {"k", 8}}));
    std::map<std::string, double> a_scores;
    for (const auto& r : ra["results"]) a_scores[r["doc_id"]] = r["score"];
    ASSERT_EQ(rb["results"].size(), 3u);
    for (const auto& r : rb["results"]) {
      ASSERT_TRUE(a_scores.contains(r["doc_id"]));
      EXPECT_NEAR(r["score"].get<double>(), a_scores[r["doc_id"]], 1e-6);
      EXPECT_EQ(r["resource_url"], "https://www.loc.gov/item/" + r["doc_id"].get<std::string>());
    }
  }
  EXPECT_EQ(a.post_json("/corpus/export", {{"doc_ids", {"nope"}}})->status, 404);
  EXPECT_EQ(a.post_json("/corpus/export", {{"doc_ids", json::array()}})->status, 400);

  // Imported shards persist under the import prefix and reload as federated.
  bool found = false;
  for (const auto& e : std::filesystem::directory_iterator(b_dir.path() / "shards"))
    if (e.path().filename().string().rfind("import-", 0) == 0) found = true;
  EXPECT_TRUE(found);
  EXPECT_EQ(b.post_json("/corpus/documents", json::object())->status, 400);
}

TEST(ApiFederation, ImportErrors) {
  TempDir dir;
  testing::seed_corpus(dir.path(), 2);
  ApiHarness h(dir.path());

  std::vector<store::DocumentEmbedding> wrong_dim{
      {"x", scoring::EmbeddingMatrix(2, 4, std::vector<float>(8, 0.5f)), store::DocumentSource::base_corpus}};
  const auto bytes = store::encode_shard(wrong_dim, {});
  const std::string shard(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  httplib::MultipartFormDataItems dim{{"shard", shard, "x.ras1", "application/octet-stream"}};
  EXPECT_EQ(h.client->Post("/corpus/documents", dim)->status, 422);

  std::string corrupt = shard;
  corrupt[corrupt.size() / 2] ^= 0x5a;
  httplib::MultipartFormDataItems bad{{"shard", corrupt, "x.ras1", "application/octet-stream"}};
  EXPECT_EQ(h.client->Post("/corpus/documents", bad)->status, 400);

  std::vector<store::DocumentEmbedding> dup{
      {"doc-000", testing::mock_image("x"), store::DocumentSource::base_corpus}};
  const auto dup_bytes = store::encode_shard(dup, {});
  httplib::MultipartFormDataItems dup_items{
      {"shard", std::string(reinterpret_cast<const char*>(dup_bytes.data()), dup_bytes.size()), "d.ras1", ""}};
  EXPECT_EQ(h.client->Post("/corpus/documents", dup_items)->status, 409);
}

TEST(ApiAnalyze, ReturnsStubReplyForListedDocuments) {
  TempDir dir;
  testing::seed_corpus(dir.path(), 6);
  ApiHarness h(dir.path());
  const std::vector<std::string> ids{"doc-000", "doc-001", "doc-002", "doc-003", "doc-004"};
  const auto res = h.post_json("/analyze", {{"doc_ids", ids}});
  ASSERT_EQ(res->status, 200) << res->body;
  const auto body = body_of(res);
  EXPECT_EQ(body["digest_size"], 5);
  EXPECT_EQ(body["model_id"], "stub-llm");
  ASSERT_EQ(h.llm->requests.size(), 1u);
  EXPECT_EQ(body["text"], testing::stub_reply_for(h.llm->requests[0].user));
  EXPECT_NE(h.llm->requests[0].user.find("Document 3"), std::string::npos);
}

TEST(ApiAnalyze, SessionAnalysesItsLastResults) {
  TempDir dir;
  testing::seed_corpus(dir.path(), 6);
  ApiHarness h(dir.path());
  ASSERT_EQ(h.post_json("/search", {{"query", "maps"}, {"k", 3}, {"session_id", "s1"}})->status, 200);
  const auto res = h.post_json("/analyze", {{"session_id", "s1"}});
  ASSERT_EQ(res->status, 200) << res->body;
  EXPECT_EQ(body_of(res)["digest_size"], 3);
  EXPECT_EQ(h.post_json("/analyze", {{"session_id", "unknown"}})->status, 404);
  EXPECT_EQ(h.post_json("/analyze", json::object())->status, 400);
}

TEST(ApiAnalyze, UnknownIdIs404) {
  TempDir dir;
  testing::seed_corpus(dir.path(), 2);
  ApiHarness h(dir.path());
  EXPECT_EQ(h.post_json("/analyze", {{"doc_ids", {"doc-000", "missing"}}})->status, 404);
  EXPECT_EQ(h.llm->calls, 0);
}

TEST(ApiAnalyze, LlmUnavailableIs503) {
  TempDir dir;
  testing::seed_corpus(dir.path(), 2);
  ApiHarness h(dir.path());
  h.llm->down = true;
  EXPECT_EQ(h.post_json("/analyze", {{"doc_ids", {"doc-000"}}})->status, 503);

  ApiHarness none(dir.path(), {}, true, false);
  EXPECT_EQ(none.post_json("/analyze", {{"doc_ids", {"doc-000"}}})->status, 503);
}

TEST(ApiStats, ReportsCountsDimAndEpoch) {
  ApiHarness h(std::nullopt);
  auto stats = body_of(h.client->Get("/corpus/stats"));
  EXPECT_EQ(stats["documents"], 0);
  EXPECT_EQ(stats["dim"], 128);
  EXPECT_EQ(stats["epoch"], 0);
  ASSERT_EQ(h.upload(testing::png(2), false)->status, 200);
  stats = body_of(h.client->Get("/corpus/stats"));
  EXPECT_EQ(stats["documents"], 1);
  EXPECT_EQ(stats["dim"], 128);
  EXPECT_EQ(stats["epoch"], 1);
  EXPECT_EQ(stats["memory_bytes"].get<std::size_t>(), 768u * 128u * sizeof(float));
}

TEST(ApiHealth, AllUpIsReady) {
  TempDir dir;
  testing::seed_corpus(dir.path(), 2);
  ApiHarness h(dir.path());
  const auto body = body_of(h.client->Get("/health"));
  EXPECT_EQ(body["status"], "ready");
  EXPECT_EQ(body["embedder"]["dim"], 128);
  EXPECT_TRUE(body["search_available"]);
  EXPECT_TRUE(body["analyze_available"]);
  EXPECT_EQ(body["corpus"]["documents"], 2);
}

TEST(ApiHealth, EmbedderDownDegradesSearch) {
  TempDir dir;
  testing::seed_corpus(dir.path(), 2);
  ApiHarness h(dir.path());
  h.backend->down = true;
  const auto body = body_of(h.client->Get("/health"));
  EXPECT_EQ(body["status"], "degraded");
  EXPECT_FALSE(body["search_available"]);
  EXPECT_EQ(h.search("maps")->status, 503);
}

TEST(ApiHealth, LlmDownDegradesAnalyzeOnly) {
  TempDir dir;
  testing::seed_corpus(dir.path(), 2);
  ApiHarness h(dir.path());
  h.llm->down = true;
  const auto body = body_of(h.client->Get("/health"));
  EXPECT_EQ(body["status"], "degraded");
  EXPECT_TRUE(body["search_available"]);
  EXPECT_FALSE(body["analyze_available"]);
  EXPECT_EQ(h.search("maps")->status, 200);
}

TEST(ApiHealth, EndpointsRefuseUntilLoadedButHealthAnswers) {
  TempDir dir;
  testing::seed_corpus(dir.path(), 3);
  ApiHarness h(dir.path(), {}, false);
  const auto health = h.client->Get("/health");
  ASSERT_EQ(health->status, 200);
  EXPECT_EQ(body_of(health)["status"], "loading");
  EXPECT_EQ(h.search("maps")->status, 503);
  EXPECT_EQ(h.client->Get("/corpus/stats")->status, 503);
  EXPECT_EQ(h.upload(testing::png(1), false)->status, 503);
  h.service->load();
  EXPECT_EQ(h.search("maps")->status, 200);
}

TEST(ApiHealth, CorruptShardFailsLoadAndIsReported) {
  TempDir dir;
  testing::seed_corpus(dir.path(), 3);
  const auto shard = dir.path() / "shards" / "base-000000.ras1";
  {
    std::fstream f(shard, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(40);
    f.put('\x7f');
  }
  ApiHarness h(dir.path(), {}, false);
  EXPECT_THROW(h.service->load(), IntegrityError);
  const auto body = body_of(h.client->Get("/health"));
  EXPECT_EQ(body["status"], "degraded");
  EXPECT_NE(body["corpus"]["error"].get<std::string>().find("base-000000"), std::string::npos);
}

TEST(ApiSecurity, BearerTokenGuardsMutations) {
  TempDir dir;
  testing::seed_corpus(dir.path(), 2);
  api::HttpApiOptions options;
  options.bearer_token = "s3cret";
  ApiHarness h(dir.path(), options);
  EXPECT_EQ(h.upload(testing::png(1), false)->status, 401);
  EXPECT_EQ(h.search("maps")->status, 200);
  httplib::MultipartFormDataItems items{{"image", testing::png(1), "a.png", "image/png"}};
  EXPECT_EQ(h.client->Post("/corpus/documents", {{"Authorization", "Bearer wrong"}}, items)->status, 401);
  EXPECT_EQ(h.client->Post("/corpus/documents", {{"Authorization", "Bearer s3cret"}}, items)->status, 200);
}

TEST(ApiSecurity, CorsAllowlist) {
  TempDir dir;
  testing::seed_corpus(dir.path(), 2);
  api::HttpApiOptions options;
  options.cors_origins = {"http://localhost:5173"};
  ApiHarness h(dir.path(), options);
  auto res = h.client->Get("/health", {{"Origin", "http://localhost:5173"}});
  EXPECT_EQ(res->get_header_value("Access-Control-Allow-Origin"), "http://localhost:5173");
  res = h.client->Get("/health", {{"Origin", "http://evil.example"}});
  EXPECT_FALSE(res->has_header("Access-Control-Allow-Origin"));
  res = h.client->Options("/search", {{"Origin", "http://localhost:5173"},
                                      {"Access-Control-Request-Method", "POST"}});
  EXPECT_EQ(res->status, 204);
  EXPECT_NE(res->get_header_value("Access-Control-Allow-Methods").find("POST"), std::string::npos);
}

TEST(ApiSecurity, PerClientRateLimit) {
  TempDir dir;
  testing::seed_corpus(dir.path(), 2);
  api::HttpApiOptions options;
  options.rate_limit_per_s = 0.5;
  options.rate_limit_burst = 3;
  ApiHarness h(dir.path(), options);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(h.client->Get("/corpus/stats")->status, 200);
  EXPECT_EQ(h.client->Get("/corpus/stats")->status, 429);
  EXPECT_EQ(h.client->Get("/health")->status, 200);
}

TEST(ApiErrors, StatusMapping) {
  EXPECT_EQ(api::http_status_for(InvalidArgument("x")), 400);
  EXPECT_EQ(api::http_status_for(InvalidImage("x")), 400);
  EXPECT_EQ(api::http_status_for(IntegrityError("x")), 400);
  EXPECT_EQ(api::http_status_for(NotFound("x")), 404);
  EXPECT_EQ(api::http_status_for(DuplicateDocument("x")), 409);
  EXPECT_EQ(api::http_status_for(DimensionError("x")), 422);
  EXPECT_EQ(api::http_status_for(UpstreamUnavailable("x")), 503);
  EXPECT_EQ(api::http_status_for(Timeout("x")), 503);
  EXPECT_EQ(api::http_status_for(api::NotReady("x")), 503);
  EXPECT_EQ(api::http_status_for(IoError("x")), 500);
}

TEST(ApiUploadId, DefaultIdIsContentHash) {
  EXPECT_EQ(api::default_upload_id(""), "upload-cbf29ce484222325");
  EXPECT_EQ(api::default_upload_id("a"), "upload-af63dc4c8601ec8c");
}

}  // namespace
}  // namespace ras
