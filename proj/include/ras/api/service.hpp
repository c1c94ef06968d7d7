#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ras/api/search_result.hpp"
#include "ras/common/error.hpp"
#include "ras/embed/gateway.hpp"
#include "ras/scoring/maxsim.hpp"
#include "ras/scoring/top_k.hpp"
#include "ras/store/corpus.hpp"
#include "ras/summarize/llm_client.hpp"
#include "ras/summarize/summarizer.hpp"

namespace ras::api {

inline constexpr std::size_t kMaxK = 1000;

/// Raised while the corpus is still loading.
class NotReady : public Error {
 public:
  using Error::Error;
};

struct ServiceOptions {
  /// Persistent corpus; an in-memory corpus when unset.
  std::optional<std::filesystem::path> corpus_dir;
  store::LoadOptions load;
  scoring::ScanOptions scan;
  /// Store persisted uploads as f16.
  bool persist_f16 = false;
  std::size_t max_sessions = 256;
};

enum class QueryKind { text, image };

struct SearchRequest {
  std::string query;
  std::size_t k = scoring::kDefaultTopK;
  std::optional<std::string> session_id;
};

struct SearchResponse {
  std::vector<SearchResult> results;
  std::uint64_t corpus_epoch = 0;
  /// Additions made to the session overlay searched alongside the corpus.
  std::optional<std::uint64_t> session_epoch;
  std::int64_t latency_ms = 0;
};

struct UploadedImage {
  std::string bytes;
  /// Generated from the image bytes when empty.
  std::string doc_id;
  std::string title;
};

struct AddRequest {
  bool persist = false;
  std::optional<std::string> session_id;
};

struct AddResponse {
  std::vector<std::string> added;
  std::uint64_t corpus_epoch = 0;
  std::optional<std::uint64_t> session_epoch;
};

struct ExportedShard {
  std::string shard_bytes;
  std::string metadata_csv;
};

struct CorpusStats {
  std::size_t documents = 0;
  std::size_t shards = 0;
  std::size_t dim = 0;
  std::uint64_t epoch = 0;
  std::size_t memory_bytes = 0;
};

struct HealthReport {
  bool corpus_loaded = false;
  std::string corpus_error;
  std::size_t documents = 0;
  std::uint64_t epoch = 0;
  embed::EmbedderHealth embedder;
  bool llm_configured = false;
  bool llm_ready = false;

  [[nodiscard]] bool search_available() const noexcept { return corpus_loaded && embedder.ready; }
  [[nodiscard]] bool analyze_available() const noexcept { return corpus_loaded && llm_ready; }
  /// "loading", "ready" or "degraded".
  [[nodiscard]] std::string status() const;
};

/// Observer hook on the shared query path; sees every scan.
struct QueryTrace {
  QueryKind kind = QueryKind::text;
  std::size_t query_rows = 0;
  std::size_t k = 0;
  std::uint64_t corpus_epoch = 0;
  std::size_t documents_scanned = 0;
};

/// "upload-" followed by the FNV-1a 64 hex digest of the bytes.
std::string default_upload_id(std::string_view bytes);

/// Transport-independent service behind the HTTP API and the CLI.
/// Thread-safe: searches never wait for additions.
class SearchService {
 public:
  /// `llm` may be null (analysis disabled).
  SearchService(std::shared_ptr<embed::EmbedderGateway> embedder,
                std::shared_ptr<summarize::LlmClient> llm, ServiceOptions options);

  /// Loads the corpus. Throws the load error (IntegrityError naming the
  /// shard, DimensionError, IoError) and records it for health().
  void load();
  [[nodiscard]] bool ready() const noexcept { return loaded_; }

  /// Errors: NotReady, InvalidArgument (blank query, k outside [1, 1000]),
  /// UpstreamUnavailable (embedder), DimensionError.
  SearchResponse search_text(const SearchRequest& request);
  /// InvalidImage for undecodable bytes.
  SearchResponse search_image(std::string_view image, std::size_t k,
                              const std::optional<std::string>& session_id);
  /// Scans an already embedded query; text and image searches end here.
  SearchResponse run_query(QueryKind kind, const scoring::EmbeddingMatrix& query, std::size_t k,
                           const std::optional<std::string>& session_id);

  /// Errors: InvalidArgument (nothing to add, persist without a corpus
  /// directory, bad session id), InvalidImage, DuplicateDocument,
  /// DimensionError, UpstreamUnavailable.
  AddResponse add_images(std::vector<UploadedImage> images, const AddRequest& request);
  /// Errors: IntegrityError (unreadable shard), DimensionError, DuplicateDocument.
  AddResponse import_shard(std::string_view shard_bytes, std::string_view metadata_csv,
                           const AddRequest& request);
  /// NotFound for unknown ids.
  ExportedShard export_shard(const std::vector<std::string>& doc_ids);

  /// Analyzes the listed documents in the given order, or the session's last
  /// results when `doc_ids` is empty. Errors: NotFound, InvalidArgument,
  /// UpstreamUnavailable (no LLM configured or unreachable), Timeout.
  summarize::AnalysisResult analyze(const std::vector<std::string>& doc_ids,
                                    const std::optional<std::string>& session_id);

  CorpusStats stats() const;
  HealthReport health();

  void set_query_observer(std::function<void(const QueryTrace&)> observer);
  [[nodiscard]] std::shared_ptr<const store::CorpusSnapshot> snapshot() const;
  [[nodiscard]] embed::EmbedderGateway& embedder() noexcept { return *embedder_; }

 private:
  struct Session {
    std::string id;
    std::shared_ptr<const store::CorpusSnapshot> overlay = std::make_shared<const store::CorpusSnapshot>();
    std::set<std::string> uploaded_doc_ids;
    std::vector<SearchResult> last_results;
    std::chrono::steady_clock::time_point last_used;
  };

  void require_ready() const;
  std::shared_ptr<Session> session(const std::string& id, bool create);
  AddResponse add(std::vector<store::DocumentEmbedding> docs, std::vector<store::MetadataRecord> meta,
                  const AddRequest& request, bool normalized, const std::string& shard_prefix);

  std::shared_ptr<embed::EmbedderGateway> embedder_;
  std::shared_ptr<summarize::LlmClient> llm_;
  ServiceOptions options_;
  std::unique_ptr<store::CorpusStore> store_;
  std::atomic<bool> loaded_{false};
  std::string load_error_;
  mutable std::mutex state_mutex_;

  mutable std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mutex session_write_mutex_;

  std::mutex observer_mutex_;
  std::function<void(const QueryTrace&)> observer_;
};

}  // namespace ras::api
