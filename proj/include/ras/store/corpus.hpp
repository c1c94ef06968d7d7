#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ras/scoring/maxsim.hpp"
#include "ras/store/document.hpp"
#include "ras/store/metadata.hpp"
#include "ras/store/shard.hpp"

namespace ras::store {

// Corpus directory layout.
inline constexpr std::string_view kShardDir = "shards";

/// Immutable view of every document at one epoch. Snapshots are shared by
/// pointer; a search holding one is unaffected by later additions.
class CorpusSnapshot {
 public:
  CorpusSnapshot() = default;

  [[nodiscard]] std::uint64_t epoch() const noexcept { return epoch_; }
  /// 0 while the corpus is empty and no dimension has been fixed.
  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] bool normalized() const noexcept { return normalized_; }
  [[nodiscard]] std::size_t size() const noexcept { return docs_.size(); }
  [[nodiscard]] bool empty() const noexcept { return docs_.empty(); }

  [[nodiscard]] std::span<const scoring::CorpusDocument> documents() const noexcept {
    return docs_;
  }
  [[nodiscard]] DocumentSource source(std::size_t ordinal) const { return sources_.at(ordinal); }
  [[nodiscard]] std::optional<std::size_t> find(const std::string& doc_id) const;
  [[nodiscard]] bool contains(const std::string& doc_id) const { return find(doc_id).has_value(); }

  /// Row-major copy of one document.
  [[nodiscard]] DocumentEmbedding document(std::size_t ordinal) const;

  [[nodiscard]] const MetadataRecord* metadata(const std::string& doc_id) const;
  [[nodiscard]] const MetadataTable& metadata_table() const noexcept { return *meta_; }

  [[nodiscard]] std::size_t shard_count() const noexcept { return shard_count_; }
  /// Bytes held by embedding payloads (shared matrices counted once).
  [[nodiscard]] std::size_t memory_bytes() const noexcept { return memory_bytes_; }

  /// Builds a snapshot directly from packed documents; used for synthetic
  /// corpora where many documents share one matrix. Ids must be unique.
  static CorpusSnapshot from_documents(std::vector<scoring::CorpusDocument> docs,
                                       std::uint64_t epoch = 0, bool normalized = false);

 private:
  friend class SnapshotBuilder;

  std::uint64_t epoch_ = 0;
  std::size_t dim_ = 0;
  bool normalized_ = false;
  std::size_t shard_count_ = 0;
  std::size_t memory_bytes_ = 0;
  std::vector<scoring::CorpusDocument> docs_;
  std::vector<DocumentSource> sources_;
  std::unordered_map<std::string, std::size_t> index_;
  std::shared_ptr<const MetadataTable> meta_ = std::make_shared<const MetadataTable>();
};

struct LoadOptions {
  /// Skip unreadable or mismatched shards instead of aborting.
  bool skip_corrupt = false;
};

struct LoadReport {
  std::size_t shards_loaded = 0;
  std::size_t duplicate_warnings = 0;
  std::vector<std::filesystem::path> skipped;
};

struct LoadedCorpus {
  CorpusSnapshot snapshot;
  LoadReport report;
};

/// Shard files under `dir/shards` in load order: oldest modification time
/// first, file name as tie-break.
std::vector<std::filesystem::path> list_shards(const std::filesystem::path& dir);

/// Loads every shard plus metadata.csv into an epoch-0 snapshot. A doc_id
/// present in several shards resolves to the newest shard (warning logged).
/// Throws IntegrityError / DimensionError naming the offending file unless
/// skip_corrupt is set; IoError if `dir` does not exist.
LoadedCorpus load_all(const std::filesystem::path& dir, const LoadOptions& options = {});

struct AddOptions {
  bool persist = false;
  /// Required when persist is set.
  std::optional<std::filesystem::path> corpus_dir;
  /// Embedder declares unit-norm rows; enforced within 1e-3 per row.
  bool normalized = false;
  bool f16 = false;
  /// File name prefix of the persisted shard ("upload", "import", "batch").
  std::string shard_prefix = "upload";
  /// Fixed shard file stem; generated from epoch and ids when empty.
  std::string shard_name;
};

/// Returns a new snapshot at epoch + 1 containing `docs`. With persist, a
/// sealed shard is written and metadata.csv is rewritten before the new
/// snapshot is returned. The input snapshot is left untouched.
/// Throws DimensionError, DuplicateDocument, InvalidEmbedding, IoError.
CorpusSnapshot add_documents(const CorpusSnapshot& snapshot, std::vector<DocumentEmbedding> docs,
                             std::vector<MetadataRecord> meta, const AddOptions& options);

struct ExportResult {
  std::string shard_id;
  std::filesystem::path shard_path;
  std::filesystem::path metadata_path;
};

/// Companion metadata file of a portable shard: same stem, ".metadata.csv".
std::filesystem::path portable_metadata_path(const std::filesystem::path& shard_path);

/// Writes the listed documents to a portable shard plus companion metadata.
/// Embeddings and metadata only; no image data. Throws NotFound for unknown ids.
ExportResult export_shard(const CorpusSnapshot& snapshot, std::span<const std::string> doc_ids,
                          const std::filesystem::path& path);

struct PortableShard {
  Shard shard;
  MetadataTable metadata;
};

/// Reads a shard and, when present, its companion metadata. Entries are
/// tagged federated_import.
PortableShard read_portable_shard(const std::filesystem::path& path);

enum class FindingKind {
  integrity,
  dimension_mismatch,
  orphaned_metadata,
  missing_metadata,
  duplicate_document,
  metadata_unreadable,
};

std::string_view to_string(FindingKind kind) noexcept;

struct Finding {
  FindingKind kind;
  std::string subject;
  std::string detail;
};

struct VerifyReport {
  std::size_t shards_checked = 0;
  std::size_t documents = 0;
  std::vector<Finding> findings;

  [[nodiscard]] bool clean() const noexcept { return findings.empty(); }
};

/// Non-mutating integrity check of a corpus directory.
VerifyReport verify(const std::filesystem::path& dir);

struct CompactReport {
  std::size_t documents_before = 0;
  std::size_t documents_after = 0;
  std::size_t removed = 0;
  std::size_t shards_rewritten = 0;
  std::size_t shards_deleted = 0;
};

/// Offline rewrite: drops tombstoned documents and shadowed duplicate copies,
/// deletes shards left empty, prunes metadata for removed ids.
CompactReport compact(const std::filesystem::path& dir, const std::set<std::string>& tombstones);

/// Single writer, many readers. Readers take the current snapshot pointer and
/// never wait for an addition in progress.
class CorpusStore {
 public:
  /// In-memory corpus; persist requests are rejected.
  CorpusStore();
  explicit CorpusStore(const std::filesystem::path& dir, const LoadOptions& options = {});

  [[nodiscard]] std::shared_ptr<const CorpusSnapshot> snapshot() const;

  /// Serialized with other additions. `options.corpus_dir` is filled in.
  std::shared_ptr<const CorpusSnapshot> add(std::vector<DocumentEmbedding> docs,
                                            std::vector<MetadataRecord> meta, AddOptions options);

  [[nodiscard]] const std::optional<std::filesystem::path>& dir() const noexcept { return dir_; }
  [[nodiscard]] const LoadReport& load_report() const noexcept { return load_report_; }

 private:
  std::optional<std::filesystem::path> dir_;
  LoadReport load_report_;
  std::mutex write_mutex_;
  mutable std::mutex pointer_mutex_;
  std::shared_ptr<const CorpusSnapshot> current_;
};

}  // namespace ras::store
