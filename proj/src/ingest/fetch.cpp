#include "ras/ingest/fetch.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <random>
#include <thread>

#include <spdlog/spdlog.h>

#include "httplib.h"
#include "ras/common/error.hpp"
#include "ras/common/file_io.hpp"
#include "ras/common/fnv1a.hpp"
#include "ras/common/url.hpp"
#include "ras/embed/image_probe.hpp"

namespace ras::ingest {

namespace fs = std::filesystem;

std::chrono::milliseconds RetryPolicy::backoff(int failed_attempts) const {
  const double ms = static_cast<double>(initial_backoff.count()) *
                    std::pow(multiplier, std::max(0, failed_attempts - 1));
  return std::chrono::milliseconds(static_cast<std::int64_t>(ms));
}

HttpGetResult HttpImageFetcher::get(const std::string& url, std::chrono::milliseconds timeout) {
  HttpGetResult out;
  const auto parts = split_url(url);
  if (!parts) {
    out.error = "malformed URL";
    return out;
  }
  httplib::Client client(parts->origin);
  client.set_follow_location(true);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  auto res = client.Get(parts->path);
  if (!res) {
    out.error = httplib::to_string(res.error());
    out.timed_out =
        res.error() == httplib::Error::Read || res.error() == httplib::Error::ConnectionTimeout;
    return out;
  }
  out.status = res->status;
  out.body = std::move(res->body);
  return out;
}

ImageStore::ImageStore(const fs::path& parent) {
  std::random_device rd;
  char name[40];
  std::snprintf(name, sizeof name, ".ingest-tmp-%08x%08x", rd(), rd());
  dir_ = parent / name;
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create " + dir_.string() + ": " + ec.message());
}

ImageStore::~ImageStore() { release(); }

fs::path ImageStore::path_for(const std::string& doc_id) const {
  char name[24];
  std::snprintf(name, sizeof name, "%016llx.img", static_cast<unsigned long long>(fnv1a64(doc_id)));
  return dir_ / name;
}

void ImageStore::release() {
  if (dir_.empty()) return;
  std::error_code ec;
  fs::remove_all(dir_, ec);
  if (ec) spdlog::warn("could not remove {}: {}", dir_.string(), ec.message());
}

namespace {

bool retryable_status(int status) { return status >= 500 || status == 408 || status == 429; }

FetchOutcome fetch_one(const ManifestRow& row, ImageStore& store, ImageFetcher& fetcher,
                       TokenBucket& bucket, const FetchOptions& options) {
  FetchOutcome out;
  out.doc_id = row.doc_id;
  const std::string url = iiif_image_url(row.image_url, options.iiif_size);
  const int max_attempts = std::max(1, options.retry.max_attempts);

  for (int attempt = 1;; ++attempt) {
    bucket.acquire();
    out.attempts = attempt;
    const auto res = fetcher.get(url, options.timeout);
    out.http_status = res.status;

    if (res.status == 200) {
      try {
        embed::probe_image(res.body);
      } catch (const InvalidImage& e) {
        out.status = FetchStatus::permanent_failure;
        out.reason = e.what();
        return out;
      }
      out.path = store.path_for(row.doc_id);
      write_file_atomic(out.path, res.body);
      out.status = FetchStatus::ok;
      return out;
    }

    const bool retry = res.status == 0 || retryable_status(res.status);
    out.reason = res.status == 0 ? (res.timed_out ? "timeout: " : "transport error: ") + res.error
                                 : "HTTP " + std::to_string(res.status);
    if (!retry) {
      out.status = FetchStatus::permanent_failure;
      return out;
    }
    if (attempt >= max_attempts) {
      out.status = FetchStatus::retries_exhausted;
      out.reason += " after " + std::to_string(attempt) + " attempts";
      return out;
    }
    const auto wait = options.retry.backoff(attempt);
    spdlog::debug("{}: {} (attempt {}), retrying in {} ms", row.doc_id, out.reason, attempt, wait.count());
    std::this_thread::sleep_for(wait);
  }
}

}  // namespace

std::vector<FetchOutcome> fetch_batch(std::span<const ManifestRow> rows, ImageStore& store,
                                      ImageFetcher& fetcher, TokenBucket& bucket,
                                      const FetchOptions& options) {
  std::vector<FetchOutcome> outcomes(rows.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < rows.size();) {
      try {
        outcomes[i] = fetch_one(rows[i], store, fetcher, bucket, options);
      } catch (const std::exception& e) {
        outcomes[i] = {rows[i].doc_id, FetchStatus::retries_exhausted, {}, e.what(), 0, 0};
      }
    }
  };
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(1, options.concurrency)), rows.size());
  std::vector<std::thread> threads;
  for (std::size_t w = 1; w < workers; ++w) threads.emplace_back(worker);
  if (workers > 0) worker();
  for (auto& t : threads) t.join();
  return outcomes;
}

}  // namespace ras::ingest
