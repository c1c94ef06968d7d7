#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>

namespace ras::ingest {

inline constexpr std::string_view kCheckpointFile = "ingest-checkpoint.json";

struct IngestCheckpoint {
  std::string manifest_hash;
  std::size_t batch_size = 0;
  std::set<std::size_t> completed_batches;
  /// doc_id (or "line N" for rows without one) -> reason
  std::map<std::string, std::string> failed_rows;
  std::size_t embedded = 0;

  friend bool operator==(const IngestCheckpoint&, const IngestCheckpoint&) = default;
};

std::filesystem::path checkpoint_path(const std::filesystem::path& corpus_dir);

/// nullopt when absent. Throws IntegrityError when unreadable.
std::optional<IngestCheckpoint> load_checkpoint(const std::filesystem::path& corpus_dir);
/// Atomic replace.
void save_checkpoint(const std::filesystem::path& corpus_dir, const IngestCheckpoint& checkpoint);

}  // namespace ras::ingest
