#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ras/embed/embedder.hpp"
#include "ras/ingest/fetch.hpp"
#include "ras/ingest/manifest.hpp"
#include "ras/store/document.hpp"

namespace ras::ingest {

inline constexpr std::size_t kDefaultBatchSize = 500;
inline constexpr std::size_t kDefaultSubBatch = 8;

/// Half-open range of manifest rows.
struct Batch {
  std::size_t ordinal = 0;
  std::size_t begin = 0;
  std::size_t end = 0;

  [[nodiscard]] std::size_t size() const noexcept { return end - begin; }
  friend bool operator==(const Batch&, const Batch&) = default;
};

/// ceil(rows / batch_size) consecutive batches. Throws InvalidArgument when
/// batch_size is 0.
std::vector<Batch> plan_batches(std::size_t rows, std::size_t batch_size = kDefaultBatchSize);

struct FetchedImage {
  std::string doc_id;
  std::filesystem::path path;
};

struct EmbedBatchResult {
  std::vector<store::DocumentEmbedding> embeddings;
  /// doc_id -> reason
  std::map<std::string, std::string> failed;
  std::size_t embedder_calls = 0;
};

/// Embeds images `sub_batch` at a time, reading each sub-batch from disk just
/// before the call. A failing sub-batch is retried once, then its rows are
/// marked failed. Output order follows input order.
EmbedBatchResult embed_batch(std::span<const FetchedImage> images, embed::ImageEmbedder& embedder,
                             std::size_t sub_batch = kDefaultSubBatch);

struct IngestOptions {
  std::size_t batch_size = kDefaultBatchSize;
  std::size_t sub_batch = kDefaultSubBatch;
  FetchOptions fetch;
  /// Discard an existing checkpoint and the batch shards it produced.
  bool reset = false;
  /// Shard flag: the embedder emits unit-norm rows.
  bool normalized = false;
  bool f16 = false;
  /// Parent of the per-batch temporary image directory; corpus dir if empty.
  std::filesystem::path scratch_dir;
  /// Called with the batch ordinal after its shard and checkpoint are durable.
  std::function<void(std::size_t)> on_batch_complete;
  /// Called with the batch ordinal and its temporary directory before fetching.
  std::function<void(std::size_t, const std::filesystem::path&)> on_batch_start;
};

struct IngestReport {
  std::size_t manifest_rows = 0;
  std::size_t batches_total = 0;
  std::size_t batches_run = 0;
  std::size_t batches_skipped = 0;
  /// Rows embedded and persisted, across this and earlier runs.
  std::size_t embedded = 0;
  std::size_t failed = 0;
  std::size_t pending = 0;
  std::map<std::string, std::string> failures;
  std::size_t shards_written = 0;
};

/// Exclusive advisory lock on `corpus_dir/.ingest.lock`.
class IngestLock {
 public:
  /// Throws IoError when another process holds the lock.
  explicit IngestLock(const std::filesystem::path& corpus_dir);
  ~IngestLock();
  IngestLock(const IngestLock&) = delete;
  IngestLock& operator=(const IngestLock&) = delete;

 private:
  int fd_ = -1;
};

/// Runs (or resumes) an ingest of `manifest_path` into `corpus_dir`. Batches
/// run sequentially; each completed batch writes shards/batch-NNNNNN.ras1,
/// merges metadata.csv and then updates the checkpoint.
/// Errors: ManifestError (missing column, or checkpoint for another manifest
/// without reset), IoError (lock held, filesystem).
IngestReport run_ingest(const std::filesystem::path& manifest_path,
                        const std::filesystem::path& corpus_dir, embed::ImageEmbedder& embedder,
                        ImageFetcher& fetcher, const IngestOptions& options = {});

}  // namespace ras::ingest
