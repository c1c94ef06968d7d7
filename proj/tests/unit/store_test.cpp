#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include "../support/oracles.hpp"
#include "../support/temp_dir.hpp"
#include "ras/common/error.hpp"
#include "ras/common/file_io.hpp"
#include "ras/store/corpus.hpp"

namespace ras::store {
namespace {

namespace fs = std::filesystem;
using ras::testing::random_matrix;
using ras::testing::SplitMix64;
using ras::testing::TempDir;

std::vector<DocumentEmbedding> random_docs(std::uint64_t seed, std::size_t n, std::size_t dim,
                                           const std::string& prefix = "doc-") {
  SplitMix64 rng(seed);
  std::vector<DocumentEmbedding> docs;
  for (std::size_t i = 0; i < n; ++i)
    docs.push_back({prefix + std::to_string(i), random_matrix(rng, 1 + rng.below(12), dim, true),
                    DocumentSource::base_corpus});
  return docs;
}

MetadataRecord meta_for(const std::string& id) {
  return {id, "Title of " + id, "https://www.loc.gov/item/" + id, "map", "test", {}};
}

std::vector<MetadataRecord> metas_for(const std::vector<DocumentEmbedding>& docs) {
  std::vector<MetadataRecord> out;
  for (const auto& d : docs) out.push_back(meta_for(d.doc_id));
  return out;
}

// Shard files written in quick succession can share a timestamp; load order
// is by modification time, so make it explicit.
void age(const fs::path& p, int seconds_ago) {
  fs::last_write_time(p, fs::file_time_type::clock::now() - std::chrono::seconds(seconds_ago));
}

TEST(ShardFormat, GoldenBytes) {
  std::vector<DocumentEmbedding> docs{
      {"a", scoring::EmbeddingMatrix(1, 2, {1.0f, -2.0f}), DocumentSource::base_corpus}};
  const auto bytes = encode_shard(docs, {true, false});
  // Independently assembled: header, one record, FNV-1a 64 trailer.
  const std::string golden_hex =
      "52415331010002000100000001000000010061010000000000803f000000c099fae99511190cbe";
  std::ostringstream hex;
  for (std::byte b : bytes) {
    char buf[3];
    std::snprintf(buf, sizeof buf, "%02x", std::to_integer<unsigned>(b));
    hex << buf;
  }
  EXPECT_EQ(hex.str(), golden_hex);
}

TEST(ShardFormat, TwoDocsRoundTripBitExact) {
  TempDir dir;
  SplitMix64 rng(1);
  std::vector<DocumentEmbedding> docs{{"x", random_matrix(rng, 3, 4), DocumentSource::base_corpus},
                                      {"y", random_matrix(rng, 2, 4), DocumentSource::base_corpus}};
  docs[0].matrix.mutable_values()[0] = -0.0f;
  const auto id = write_shard(docs, dir / "two.ras1");
  EXPECT_EQ(id, "two");
  const auto shard = read_shard(dir / "two.ras1");
  ASSERT_EQ(shard.entries.size(), 2u);
  EXPECT_EQ(shard.dim, 4u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(shard.entries[i].doc_id, docs[i].doc_id);
    EXPECT_EQ(shard.entries[i].matrix, docs[i].matrix);
  }
}

TEST(ShardFormat, FiveHundredDocBatchInBothPrecisions) {
  TempDir dir;
  const auto docs = random_docs(5, 500, 16);
  for (bool f16 : {false, true}) {
    const auto path = dir / (f16 ? "h.ras1" : "f.ras1");
    write_shard(docs, path, {true, f16});
    const auto shard = read_shard(path);
    EXPECT_EQ(shard.flags, (ShardFlags{true, f16}));
    ASSERT_EQ(shard.entries.size(), 500u);
    for (std::size_t i = 0; i < docs.size(); ++i) {
      auto want = docs[i].matrix;
      if (f16)
        for (auto& v : want.mutable_values()) v = round_trip_f16(v);
      ASSERT_EQ(shard.entries[i].matrix, want) << i;
    }
  }
}

TEST(ShardFormat, EveryFlippedByteIsDetected) {
  const auto docs = random_docs(6, 3, 4);
  const auto bytes = encode_shard(docs, {});
  for (std::size_t pos = 0; pos < bytes.size(); ++pos) {
    auto corrupt = bytes;
    corrupt[pos] ^= std::byte{0x10};
    EXPECT_THROW(decode_shard(corrupt, "c"), IntegrityError) << "byte " << pos;
  }
  EXPECT_THROW(decode_shard(std::span(bytes).first(bytes.size() - 1), "c"), IntegrityError);
}

TEST(ShardFormat, CorruptedFileFailsToLoad) {
  TempDir dir;
  const auto path = dir / "c.ras1";
  write_shard(random_docs(7, 4, 8), path);
  auto bytes = read_file_bytes(path);
  bytes[bytes.size() / 2] ^= std::byte{1};
  write_file_atomic(path, bytes);
  EXPECT_THROW(read_shard(path), IntegrityError);
}

TEST(ShardFormat, RejectsInvalidInput) {
  TempDir dir;
  EXPECT_THROW(encode_shard({}, {}), InvalidArgument);
  auto docs = random_docs(8, 2, 4);
  docs[1].doc_id = docs[0].doc_id;
  EXPECT_THROW(encode_shard(docs, {}), DuplicateDocument);
  docs = random_docs(8, 2, 4);
  docs[1].matrix = random_matrix(9, 2, 5);
  EXPECT_THROW(encode_shard(docs, {}), DimensionError);
  docs = random_docs(8, 1, 4);
  docs[0].matrix.mutable_values()[0] = 1e6f;
  EXPECT_THROW(encode_shard(docs, {false, true}), InvalidEmbedding);
  try {
    write_shard(random_docs(8, 1, 4), dir / "missing" / "x.ras1");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("missing"), std::string::npos);
  }
}

TEST(ShardFormat, SourceInferredFromName) {
  EXPECT_EQ(source_for_shard("shards/upload-000001-aa.ras1"), DocumentSource::user_upload);
  EXPECT_EQ(source_for_shard("import-x.ras1"), DocumentSource::federated_import);
  EXPECT_EQ(source_for_shard("batch-000000.ras1"), DocumentSource::base_corpus);
}

TEST(Metadata, CsvRoundTripWithQuotingAndExtraColumns) {
  MetadataTable table;
  table["a"] = {"a", "Map of \"Seattle\", WA", "https://loc.gov/a", "map", "gm", {{"image_url", "u"}}};
  table["b"] = {"b", "line1\nline2", "", "atlas", "", {{"note", "x,y"}}};
  std::stringstream ss;
  write_metadata_csv(ss, table);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')),
            "doc_id,title,resource_url,doc_type,collection,image_url,note");
  EXPECT_EQ(read_metadata_csv(ss), table);
}

TEST(Metadata, MissingFixedColumnRejected) {
  std::stringstream ss("doc_id,title\nx,y\n");
  EXPECT_THROW(read_metadata_csv(ss), InvalidArgument);
}

TEST(LoadAll, EmptyDirectory) {
  TempDir dir;
  const auto loaded = load_all(dir.path());
  EXPECT_EQ(loaded.snapshot.size(), 0u);
  EXPECT_EQ(loaded.snapshot.epoch(), 0u);
  EXPECT_EQ(loaded.snapshot.dim(), 0u);
}

TEST(LoadAll, MissingDirectoryIsAnError) {
  TempDir dir;
  EXPECT_THROW(load_all(dir / "nope"), IoError);
}

TEST(LoadAll, UnionOfShards) {
  TempDir dir;
  fs::create_directories(dir / "shards");
  write_shard(random_docs(1, 3, 8, "a-"), dir.path() / "shards" / "batch-000000.ras1");
  write_shard(random_docs(2, 4, 8, "b-"), dir.path() / "shards" / "batch-000001.ras1");
  const auto loaded = load_all(dir.path());
  EXPECT_EQ(loaded.snapshot.size(), 7u);
  EXPECT_EQ(loaded.snapshot.shard_count(), 2u);
  EXPECT_EQ(loaded.snapshot.dim(), 8u);
  EXPECT_EQ(loaded.report.duplicate_warnings, 0u);
}

TEST(LoadAll, DuplicateAcrossShardsNewestWins) {
  TempDir dir;
  const auto shards = dir.path() / "shards";
  fs::create_directories(shards);
  auto old_docs = random_docs(1, 3, 8, "d-");
  auto new_docs = random_docs(2, 2, 8, "e-");
  new_docs[1].doc_id = "d-1";
  write_shard(old_docs, shards / "z-old.ras1");
  write_shard(new_docs, shards / "a-new.ras1");
  age(shards / "z-old.ras1", 60);
  age(shards / "a-new.ras1", 30);
  const auto loaded = load_all(dir.path());
  EXPECT_EQ(loaded.snapshot.size(), 4u);
  EXPECT_EQ(loaded.report.duplicate_warnings, 1u);
  const auto ord = loaded.snapshot.find("d-1");
  ASSERT_TRUE(ord);
  EXPECT_EQ(loaded.snapshot.document(*ord).matrix, new_docs[1].matrix);
}

TEST(LoadAll, CorruptShardAbortsNamingFileUnlessSkipped) {
  TempDir dir;
  const auto shards = dir.path() / "shards";
  fs::create_directories(shards);
  write_shard(random_docs(1, 3, 8, "a-"), shards / "good.ras1");
  const auto bad = shards / "bad.ras1";
  write_shard(random_docs(2, 3, 8, "b-"), bad);
  auto bytes = read_file_bytes(bad);
  bytes[20] ^= std::byte{0xff};
  write_file_atomic(bad, bytes);
  try {
    load_all(dir.path());
    FAIL();
  } catch (const IntegrityError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.ras1"), std::string::npos);
  }
  const auto loaded = load_all(dir.path(), {.skip_corrupt = true});
  EXPECT_EQ(loaded.snapshot.size(), 3u);
  ASSERT_EQ(loaded.report.skipped.size(), 1u);
}

TEST(LoadAll, IdempotentAndRoundTripsMetadata) {
  TempDir dir;
  const auto docs = random_docs(3, 6, 8);
  const auto snap = add_documents(CorpusSnapshot{}, docs, metas_for(docs),
                                  {.persist = true, .corpus_dir = dir.path(), .normalized = true});
  const auto a = load_all(dir.path()).snapshot;
  const auto b = load_all(dir.path()).snapshot;
  ASSERT_EQ(a.size(), docs.size());
  ASSERT_EQ(b.size(), docs.size());
  EXPECT_TRUE(a.normalized());
  for (const auto& d : docs) {
    const auto da = a.document(*a.find(d.doc_id));
    const auto db = b.document(*b.find(d.doc_id));
    EXPECT_EQ(da.matrix, d.matrix);
    EXPECT_EQ(db.matrix, d.matrix);
    EXPECT_EQ(da.source, DocumentSource::user_upload);
    ASSERT_NE(a.metadata(d.doc_id), nullptr);
    EXPECT_EQ(*a.metadata(d.doc_id), meta_for(d.doc_id));
  }
  EXPECT_EQ(a.metadata_table(), b.metadata_table());
}

TEST(AddDocuments, AddsOneToTenAndKeepsOldSnapshot) {
  const auto base_docs = random_docs(4, 10, 8);
  const auto base = add_documents(CorpusSnapshot{}, base_docs, {}, {});
  EXPECT_EQ(base.epoch(), 1u);
  const auto extra = random_docs(5, 1, 8, "new-");
  const auto next = add_documents(base, extra, metas_for(extra), {});
  EXPECT_EQ(next.size(), 11u);
  EXPECT_EQ(next.epoch(), 2u);
  EXPECT_TRUE(next.contains("new-0"));
  EXPECT_EQ(base.size(), 10u);
  EXPECT_FALSE(base.contains("new-0"));
}

TEST(AddDocuments, RejectsDimensionMismatchAndCollisions) {
  const auto base = add_documents(CorpusSnapshot{}, random_docs(4, 3, 8), {}, {});
  EXPECT_THROW(add_documents(base, random_docs(5, 1, 9, "n-"), {}, {}), DimensionError);
  EXPECT_THROW(add_documents(base, random_docs(6, 1, 8), {}, {}), DuplicateDocument);
  auto twice = random_docs(7, 2, 8, "t-");
  twice[1].doc_id = "t-0";
  EXPECT_THROW(add_documents(base, twice, {}, {}), DuplicateDocument);
  EXPECT_THROW(add_documents(base, {}, {}, {}), InvalidArgument);
  EXPECT_THROW(add_documents(base, random_docs(5, 1, 8, "p-"), {}, {.persist = true}),
               InvalidArgument);
}

TEST(AddDocuments, NormalizedCorpusRejectsNonUnitRows) {
  std::vector<DocumentEmbedding> docs{
      {"raw", random_matrix(1, 3, 8, false), DocumentSource::user_upload}};
  EXPECT_THROW(add_documents(CorpusSnapshot{}, docs, {}, {.normalized = true}), InvalidEmbedding);
}

TEST(AddDocuments, PersistSurvivesReloadAndEphemeralDoesNot) {
  TempDir dir;
  CorpusStore store(dir.path());
  const auto kept = random_docs(8, 2, 8, "kept-");
  const auto gone = random_docs(9, 2, 8, "gone-");
  store.add(kept, metas_for(kept), {.persist = true});
  store.add(gone, metas_for(gone), {.persist = false});
  EXPECT_EQ(store.snapshot()->size(), 4u);
  EXPECT_EQ(store.snapshot()->epoch(), 2u);

  CorpusStore reopened(dir.path());
  EXPECT_EQ(reopened.snapshot()->size(), 2u);
  EXPECT_TRUE(reopened.snapshot()->contains("kept-0"));
  EXPECT_FALSE(reopened.snapshot()->contains("gone-0"));
  EXPECT_EQ(reopened.snapshot()->metadata("gone-0"), nullptr);
}

TEST(AddDocuments, PersistedF16DocumentsScoreIdenticallyAfterRestart) {
  TempDir dir;
  CorpusStore store(dir.path());
  const auto docs = random_docs(10, 3, 16);
  store.add(docs, {}, {.persist = true, .f16 = true});
  const auto query = random_matrix(11, 4, 16);
  const auto before = scoring::score_corpus(query, store.snapshot()->documents());
  CorpusStore reopened(dir.path());
  const auto after = scoring::score_corpus(query, reopened.snapshot()->documents());
  EXPECT_EQ(before, after);
}

TEST(CorpusStore, InMemoryStoreRejectsPersist) {
  CorpusStore store;
  EXPECT_THROW(store.add(random_docs(1, 1, 4), {}, {.persist = true}), InvalidArgument);
}

TEST(CorpusStore, ReadersSeeConsistentSnapshotsDuringAdds) {
  CorpusStore store;
  store.add(random_docs(1, 5, 8, "base-"), {}, {});
  std::atomic<bool> stop{false};
  std::atomic<int> violations{0};
  std::thread reader([&] {
    while (!stop) {
      const auto snap = store.snapshot();
      // Epoch e holds 5 base docs plus one per addition since epoch 1.
      const std::size_t expected = 5 + (snap->epoch() - 1);
      if (snap->size() != expected) ++violations;
      for (std::size_t i = 0; i < snap->size(); ++i)
        if (!snap->documents()[i].matrix) ++violations;
    }
  });
  for (int i = 0; i < 200; ++i) store.add(random_docs(100 + i, 1, 8, "add-" + std::to_string(i) + "-"), {}, {});
  stop = true;
  reader.join();
  EXPECT_EQ(violations.load(), 0);
  EXPECT_EQ(store.snapshot()->size(), 205u);
}

TEST(Export, PortableShardImportsIntoEmptyCorpus) {
  TempDir dir;
  const auto docs = random_docs(12, 5, 8);
  const auto source = add_documents(CorpusSnapshot{}, docs, metas_for(docs), {.normalized = true});
  const std::vector<std::string> ids{"doc-0", "doc-2", "doc-4"};
  const auto result = export_shard(source, ids, dir / "export.ras1");
  EXPECT_EQ(result.shard_id, "export");
  EXPECT_TRUE(fs::exists(result.metadata_path));

  const auto portable = read_portable_shard(dir / "export.ras1");
  ASSERT_EQ(portable.shard.entries.size(), 3u);
  EXPECT_EQ(portable.metadata.size(), 3u);
  for (const auto& e : portable.shard.entries) EXPECT_EQ(e.source, DocumentSource::federated_import);

  const auto target = add_documents(CorpusSnapshot{}, portable.shard.entries,
                                    {portable.metadata.begin()->second}, {});
  EXPECT_EQ(target.size(), 3u);
  const auto query = random_matrix(13, 3, 8);
  for (const auto& id : ids) {
    const double a = scoring::maxsim_score(query, source.document(*source.find(id)).matrix);
    const double b = scoring::maxsim_score(query, target.document(*target.find(id)).matrix);
    EXPECT_EQ(a, b);
  }
}

TEST(Export, FileHoldsOnlyIdsAndVectors) {
  TempDir dir;
  const auto docs = random_docs(14, 3, 8);
  const auto snap = add_documents(CorpusSnapshot{}, docs, {}, {});
  const std::vector<std::string> ids{"doc-0", "doc-1", "doc-2"};
  export_shard(snap, ids, dir / "e.ras1");
  std::size_t expected = 16 + 8;
  for (const auto& d : docs) expected += 2 + d.doc_id.size() + 4 + d.matrix.values().size() * 4;
  EXPECT_EQ(fs::file_size(dir / "e.ras1"), expected);
}

TEST(Export, UnknownIdIsNotFound) {
  TempDir dir;
  const auto snap = add_documents(CorpusSnapshot{}, random_docs(15, 2, 8), {}, {});
  const std::vector<std::string> ids{"doc-0", "nope"};
  EXPECT_THROW(export_shard(snap, ids, dir / "x.ras1"), NotFound);
}

TEST(Verify, CleanCorpusHasNoFindings) {
  TempDir dir;
  const auto docs = random_docs(16, 4, 8);
  add_documents(CorpusSnapshot{}, docs, metas_for(docs),
                {.persist = true, .corpus_dir = dir.path()});
  const auto report = verify(dir.path());
  EXPECT_TRUE(report.clean());
  EXPECT_EQ(report.documents, 4u);
  EXPECT_EQ(report.shards_checked, 1u);
}

TEST(Verify, ReportsOrphanDimensionMismatchAndCorruption) {
  TempDir dir;
  const auto docs = random_docs(17, 2, 8);
  auto meta = metas_for(docs);
  add_documents(CorpusSnapshot{}, docs, meta, {.persist = true, .corpus_dir = dir.path()});
  auto table = load_metadata(dir / "metadata.csv");
  table["ghost"] = meta_for("ghost");
  save_metadata(dir / "metadata.csv", table);
  const auto wrong = dir.path() / "shards" / "wrong.ras1";
  write_shard(random_docs(18, 1, 12, "w-"), wrong);
  age(wrong, -5);
  const auto broken = dir.path() / "shards" / "broken.ras1";
  write_file_atomic(broken, std::string("RAS1 not really"));

  const auto report = verify(dir.path());
  auto has = [&](FindingKind kind, const std::string& subject) {
    for (const auto& f : report.findings)
      if (f.kind == kind && f.subject == subject) return true;
    return false;
  };
  EXPECT_TRUE(has(FindingKind::orphaned_metadata, "ghost"));
  EXPECT_TRUE(has(FindingKind::dimension_mismatch, "wrong.ras1"));
  EXPECT_TRUE(has(FindingKind::integrity, "broken.ras1"));
  EXPECT_EQ(report.findings.size(), 3u);
}

TEST(Compact, RemovesTombstonesAndShadowedCopies) {
  TempDir dir;
  const auto shards = dir.path() / "shards";
  fs::create_directories(shards);
  write_shard(random_docs(19, 4, 8, "a-"), shards / "s1.ras1");
  auto second = random_docs(20, 3, 8, "b-");
  second[0].doc_id = "a-0";  // shadows s1's copy
  write_shard(second, shards / "s2.ras1");
  write_shard(random_docs(21, 1, 8, "c-"), shards / "s3.ras1");
  age(shards / "s1.ras1", 30);
  age(shards / "s2.ras1", 20);
  age(shards / "s3.ras1", 10);
  std::vector<MetadataRecord> metas;
  for (const auto* id : {"a-0", "a-1", "c-0"}) metas.push_back(meta_for(id));
  MetadataTable table;
  for (auto& m : metas) table[m.doc_id] = m;
  save_metadata(dir / "metadata.csv", table);

  const auto before = load_all(dir.path()).snapshot;
  const auto a0 = before.document(*before.find("a-0")).matrix;
  EXPECT_EQ(before.size(), 7u);

  const auto report = compact(dir.path(), {"a-1", "c-0", "not-there"});
  EXPECT_EQ(report.documents_before, 7u);
  EXPECT_EQ(report.removed, 2u);
  EXPECT_EQ(report.documents_after, 5u);
  EXPECT_EQ(report.shards_deleted, 1u);

  const auto after = load_all(dir.path());
  EXPECT_EQ(after.snapshot.size(), 5u);
  EXPECT_EQ(after.report.duplicate_warnings, 0u);
  EXPECT_EQ(after.snapshot.document(*after.snapshot.find("a-0")).matrix, a0);
  EXPECT_FALSE(after.snapshot.contains("a-1"));
  EXPECT_EQ(after.snapshot.metadata("c-0"), nullptr);
  EXPECT_NE(after.snapshot.metadata("a-0"), nullptr);

  const auto again = compact(dir.path(), {"a-1", "c-0"});
  EXPECT_EQ(again.removed, 0u);
  EXPECT_EQ(again.shards_rewritten + again.shards_deleted, 0u);
}

}  // namespace
}  // namespace ras::store
