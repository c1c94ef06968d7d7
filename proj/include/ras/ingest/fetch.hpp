#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ras/common/token_bucket.hpp"
#include "ras/ingest/manifest.hpp"

namespace ras::ingest {

struct RetryPolicy {
  /// Total attempts for retryable failures.
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1'000};
  double multiplier = 2.0;

  [[nodiscard]] std::chrono::milliseconds backoff(int failed_attempts) const;
};

struct FetchOptions {
  RetryPolicy retry;
  int concurrency = 8;
  /// Requests per second across all workers.
  double rate_per_second = 10.0;
  std::chrono::milliseconds timeout{30'000};
  std::string iiif_size = std::string(kDefaultIiifSize);
};

/// Raw result of one GET.
struct HttpGetResult {
  /// 0 when no response was received.
  int status = 0;
  std::string body;
  /// Transport failure description when status == 0.
  std::string error;
  bool timed_out = false;
};

class ImageFetcher {
 public:
  virtual ~ImageFetcher() = default;
  virtual HttpGetResult get(const std::string& url, std::chrono::milliseconds timeout) = 0;
};

/// httplib-backed fetcher following redirects.
class HttpImageFetcher final : public ImageFetcher {
 public:
  HttpGetResult get(const std::string& url, std::chrono::milliseconds timeout) override;
};

enum class FetchStatus { ok, permanent_failure, retries_exhausted };

struct FetchOutcome {
  std::string doc_id;
  FetchStatus status = FetchStatus::ok;
  std::filesystem::path path;
  std::string reason;
  int attempts = 0;
  int http_status = 0;

  [[nodiscard]] bool ok() const noexcept { return status == FetchStatus::ok; }
};

/// Temporary directory holding one batch of images; removed on destruction.
class ImageStore {
 public:
  explicit ImageStore(const std::filesystem::path& parent);
  ~ImageStore();
  ImageStore(const ImageStore&) = delete;
  ImageStore& operator=(const ImageStore&) = delete;

  [[nodiscard]] const std::filesystem::path& dir() const noexcept { return dir_; }
  [[nodiscard]] std::filesystem::path path_for(const std::string& doc_id) const;
  void release();

 private:
  std::filesystem::path dir_;
};

/// Downloads every row into `store`, up to options.concurrency in flight and
/// rate-limited by `bucket`. 4xx (except 408 and 429) and undecodable or
/// unsupported images fail permanently; 5xx, 408, 429 and transport errors
/// are retried with exponential backoff. Outcomes follow row order.
std::vector<FetchOutcome> fetch_batch(std::span<const ManifestRow> rows, ImageStore& store,
                                      ImageFetcher& fetcher, TokenBucket& bucket,
                                      const FetchOptions& options);

}  // namespace ras::ingest
