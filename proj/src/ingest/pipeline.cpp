#include "ras/ingest/pipeline.hpp"

#include <cstdio>
#include <fstream>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <spdlog/spdlog.h>

#include "ras/common/error.hpp"
#include "ras/common/file_io.hpp"
#include "ras/ingest/checkpoint.hpp"
#include "ras/store/corpus.hpp"
#include "ras/store/metadata.hpp"
#include "ras/store/shard.hpp"

namespace ras::ingest {

namespace fs = std::filesystem;

std::vector<Batch> plan_batches(std::size_t rows, std::size_t batch_size) {
  if (batch_size == 0) throw InvalidArgument("batch size must be at least 1");
  std::vector<Batch> out;
  for (std::size_t begin = 0, ordinal = 0; begin < rows; begin += batch_size, ++ordinal)
    out.push_back({ordinal, begin, std::min(rows, begin + batch_size)});
  return out;
}

EmbedBatchResult embed_batch(std::span<const FetchedImage> images, embed::ImageEmbedder& embedder,
                             std::size_t sub_batch) {
  if (sub_batch == 0) throw InvalidArgument("sub-batch size must be at least 1");
  EmbedBatchResult out;
  for (std::size_t begin = 0; begin < images.size(); begin += sub_batch) {
    const auto group = images.subspan(begin, std::min(sub_batch, images.size() - begin));
    std::vector<std::string> payloads;
    payloads.reserve(group.size());
    for (const auto& img : group) payloads.push_back(read_file_text(img.path));

    std::string error;
    for (int attempt = 0; attempt < 2; ++attempt) {
      ++out.embedder_calls;
      try {
        auto matrices = embedder.embed_images(payloads);
        if (matrices.size() != group.size())
          throw InvalidEmbedding("embedder returned " + std::to_string(matrices.size()) +
                                 " results for " + std::to_string(group.size()) + " images");
        for (std::size_t i = 0; i < group.size(); ++i)
          out.embeddings.push_back(
              {group[i].doc_id, std::move(matrices[i]), store::DocumentSource::base_corpus});
        error.clear();
        break;
      } catch (const std::exception& e) {
        error = e.what();
        spdlog::warn("embedding sub-batch at {} failed (attempt {}): {}", group.front().doc_id,
                     attempt + 1, error);
      }
    }
    if (!error.empty())
      for (const auto& img : group) out.failed[img.doc_id] = "embedding failed: " + error;
  }
  return out;
}

IngestLock::IngestLock(const fs::path& corpus_dir) {
  const auto path = corpus_dir / ".ingest.lock";
  fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) throw IoError("cannot open lock file " + path.string());
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw IoError("another ingest is running on " + corpus_dir.string());
  }
}

IngestLock::~IngestLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

namespace {

std::string batch_shard_name(std::size_t ordinal) {
  char name[32];
  std::snprintf(name, sizeof name, "batch-%06zu", ordinal);
  return name;
}

// Removes the shards a previous ingest wrote, and their metadata rows.
void discard_previous_ingest(const fs::path& corpus_dir) {
  auto table = store::load_metadata(corpus_dir / store::kMetadataFile);
  std::size_t removed_shards = 0;
  for (const auto& path : store::list_shards(corpus_dir)) {
    if (path.filename().string().rfind("batch-", 0) != 0) continue;
    try {
      for (const auto& e : store::read_shard(path).entries) table.erase(e.doc_id);
    } catch (const IntegrityError&) {
    }
    fs::remove(path);
    ++removed_shards;
  }
  store::save_metadata(corpus_dir / store::kMetadataFile, table);
  fs::remove(checkpoint_path(corpus_dir));
  spdlog::info("reset: removed {} batch shard(s) and the checkpoint", removed_shards);
}

std::string rejected_key(const RejectedRow& r) { return "line " + std::to_string(r.line); }

}  // namespace

IngestReport run_ingest(const fs::path& manifest_path, const fs::path& corpus_dir,
                        embed::ImageEmbedder& embedder, ImageFetcher& fetcher,
                        const IngestOptions& options) {
  if (options.batch_size == 0) throw InvalidArgument("batch size must be at least 1");
  if (options.sub_batch == 0) throw InvalidArgument("sub-batch size must be at least 1");
  fs::create_directories(corpus_dir / store::kShardDir);
  IngestLock lock(corpus_dir);

  const std::string hash = manifest_hash(manifest_path);
  auto cp = load_checkpoint(corpus_dir);
  if (cp && (cp->manifest_hash != hash || cp->batch_size != options.batch_size)) {
    if (!options.reset)
      throw ManifestError("corpus " + corpus_dir.string() +
                          " has a checkpoint for a different manifest or batch size; rerun with --reset");
    cp.reset();
  }
  if (options.reset) discard_previous_ingest(corpus_dir);
  if (!cp) cp = IngestCheckpoint{hash, options.batch_size, {}, {}, 0};

  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest " + manifest_path.string());
  ManifestReader reader(in);
  TokenBucket bucket(options.fetch.rate_per_second, 1.0);
  const fs::path scratch = options.scratch_dir.empty() ? corpus_dir : options.scratch_dir;
  const store::ShardFlags flags{options.normalized, options.f16};

  IngestReport report;
  std::vector<ManifestRow> rows;
  std::size_t ordinal = 0;
  auto process = [&]() {
    const std::size_t this_batch = ordinal++;
    ++report.batches_total;
    report.manifest_rows += rows.size();
    if (cp->completed_batches.contains(this_batch)) {
      ++report.batches_skipped;
      spdlog::info("batch {} already complete, skipping", this_batch);
      rows.clear();
      return;
    }

    ImageStore images(scratch);
    if (options.on_batch_start) options.on_batch_start(this_batch, images.dir());
    const auto outcomes = fetch_batch(rows, images, fetcher, bucket, options.fetch);

    std::map<std::string, std::string> failed;
    std::vector<FetchedImage> fetched;
    for (const auto& o : outcomes) {
      if (o.ok())
        fetched.push_back({o.doc_id, o.path});
      else
        failed[o.doc_id] = o.reason;
    }
    auto embedded = embed_batch(fetched, embedder, options.sub_batch);
    images.release();
    failed.merge(embedded.failed);

    if (!embedded.embeddings.empty()) {
      const auto shard = corpus_dir / store::kShardDir / (batch_shard_name(this_batch) + ".ras1");
      store::write_shard(embedded.embeddings, shard, flags);
      auto table = store::load_metadata(corpus_dir / store::kMetadataFile);
      std::map<std::string, const store::MetadataRecord*> by_id;
      for (const auto& r : rows) by_id[r.doc_id] = &r.metadata;
      for (const auto& e : embedded.embeddings) table[e.doc_id] = *by_id.at(e.doc_id);
      store::save_metadata(corpus_dir / store::kMetadataFile, table);
      ++report.shards_written;
    }

    cp->embedded += embedded.embeddings.size();
    cp->failed_rows.merge(failed);
    cp->completed_batches.insert(this_batch);
    save_checkpoint(corpus_dir, *cp);
    ++report.batches_run;
    spdlog::info("batch {}: {} embedded, {} failed", this_batch, embedded.embeddings.size(),
                 failed.size());
    rows.clear();
    if (options.on_batch_complete) options.on_batch_complete(this_batch);
  };

  while (auto row = reader.next()) {
    rows.push_back(std::move(*row));
    if (rows.size() == options.batch_size) process();
  }
  if (!rows.empty()) process();

  for (const auto& r : reader.rejected()) report.failures[rejected_key(r)] = r.reason;
  report.manifest_rows += reader.rejected().size();
  for (const auto& [id, reason] : cp->failed_rows) report.failures[id] = reason;
  report.embedded = cp->embedded;
  report.failed = report.failures.size();
  report.pending = report.manifest_rows - report.embedded - report.failed;
  return report;
}

}  // namespace ras::ingest
