#include "ras/ingest/checkpoint.hpp"

#include "json.hpp"
#include "ras/common/error.hpp"
#include "ras/common/file_io.hpp"

namespace ras::ingest {

using nlohmann::json;
namespace fs = std::filesystem;

fs::path checkpoint_path(const fs::path& corpus_dir) { return corpus_dir / kCheckpointFile; }

std::optional<IngestCheckpoint> load_checkpoint(const fs::path& corpus_dir) {
  const auto path = checkpoint_path(corpus_dir);
  if (!fs::exists(path)) return std::nullopt;
  const json j = json::parse(read_file_text(path), nullptr, false);
  if (j.is_discarded()) throw IntegrityError("unreadable checkpoint " + path.string() + ": not JSON");
  try {
    if (j.at("version").get<int>() != 1)
      throw IntegrityError("checkpoint " + path.string() + " has an unknown version");
    IngestCheckpoint cp;
    cp.manifest_hash = j.at("manifest_hash").get<std::string>();
    cp.batch_size = j.at("batch_size").get<std::size_t>();
    cp.completed_batches = j.at("completed_batches").get<std::set<std::size_t>>();
    cp.failed_rows = j.at("failed_rows").get<std::map<std::string, std::string>>();
    cp.embedded = j.at("embedded").get<std::size_t>();
    return cp;
  } catch (const json::exception& e) {
    throw IntegrityError("unreadable checkpoint " + path.string() + ": " + e.what());
  }
}

void save_checkpoint(const fs::path& corpus_dir, const IngestCheckpoint& cp) {
  const json j{{"version", 1},
               {"manifest_hash", cp.manifest_hash},
               {"batch_size", cp.batch_size},
               {"completed_batches", cp.completed_batches},
               {"failed_rows", cp.failed_rows},
               {"embedded", cp.embedded}};
  write_file_atomic(checkpoint_path(corpus_dir), j.dump(2) + "\n");
}

}  // namespace ras::ingest
