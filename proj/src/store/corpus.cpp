#include "ras/store/corpus.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdio>
#include <unordered_set>

#include "ras/common/error.hpp"
#include "ras/common/fnv1a.hpp"

namespace ras::store {

namespace fs = std::filesystem;

class SnapshotBuilder {
 public:
  explicit SnapshotBuilder(const CorpusSnapshot& base) : snap_(base) {}

  CorpusSnapshot& get() { return snap_; }

  void set_dim(std::size_t dim) { snap_.dim_ = dim; }
  void set_epoch(std::uint64_t epoch) { snap_.epoch_ = epoch; }
  void set_normalized(bool n) { snap_.normalized_ = n; }
  void add_shard() { ++snap_.shard_count_; }

  // Returns true when an existing document with the same id was replaced.
  bool put(scoring::CorpusDocument doc, DocumentSource source) {
    const auto it = snap_.index_.find(doc.doc_id);
    if (it != snap_.index_.end()) {
      snap_.docs_[it->second] = std::move(doc);
      snap_.sources_[it->second] = source;
      return true;
    }
    snap_.index_.emplace(doc.doc_id, snap_.docs_.size());
    snap_.docs_.push_back(std::move(doc));
    snap_.sources_.push_back(source);
    return false;
  }

  void set_metadata(std::shared_ptr<const MetadataTable> meta) { snap_.meta_ = std::move(meta); }

  CorpusSnapshot finish() {
    std::unordered_set<const scoring::PackedMatrix*> seen;
    std::size_t bytes = 0;
    for (const auto& d : snap_.docs_)
      if (seen.insert(d.matrix.get()).second) bytes += d.matrix->memory_bytes();
    snap_.memory_bytes_ = bytes;
    return std::move(snap_);
  }

 private:
  CorpusSnapshot snap_;
};

std::optional<std::size_t> CorpusSnapshot::find(const std::string& doc_id) const {
  const auto it = index_.find(doc_id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

DocumentEmbedding CorpusSnapshot::document(std::size_t ordinal) const {
  const auto& d = docs_.at(ordinal);
  return {d.doc_id, d.matrix->unpack(), sources_[ordinal]};
}

const MetadataRecord* CorpusSnapshot::metadata(const std::string& doc_id) const {
  const auto it = meta_->find(doc_id);
  return it == meta_->end() ? nullptr : &it->second;
}

CorpusSnapshot CorpusSnapshot::from_documents(std::vector<scoring::CorpusDocument> docs,
                                              std::uint64_t epoch, bool normalized) {
  SnapshotBuilder b{CorpusSnapshot{}};
  b.set_epoch(epoch);
  b.set_normalized(normalized);
  for (auto& d : docs) {
    if (d.matrix == nullptr) throw InvalidArgument("document '" + d.doc_id + "' has no matrix");
    if (b.get().dim() == 0) b.set_dim(d.matrix->dim());
    if (d.matrix->dim() != b.get().dim())
      throw DimensionError("document '" + d.doc_id + "' has dim " + std::to_string(d.matrix->dim()));
    std::string id = d.doc_id;
    if (b.put(std::move(d), DocumentSource::base_corpus))
      throw DuplicateDocument("duplicate doc_id '" + id + "'");
  }
  return b.finish();
}

std::vector<fs::path> list_shards(const fs::path& dir) {
  const fs::path shard_dir = dir / kShardDir;
  std::vector<std::pair<fs::file_time_type, fs::path>> found;
  if (fs::is_directory(shard_dir)) {
    for (const auto& entry : fs::directory_iterator(shard_dir)) {
      if (entry.is_regular_file() && entry.path().extension() == kShardExtension)
        found.emplace_back(entry.last_write_time(), entry.path());
    }
  }
  std::sort(found.begin(), found.end());
  std::vector<fs::path> out;
  out.reserve(found.size());
  for (auto& f : found) out.push_back(std::move(f.second));
  return out;
}

LoadedCorpus load_all(const fs::path& dir, const LoadOptions& options) {
  if (!fs::is_directory(dir)) throw IoError("corpus directory " + dir.string() + " does not exist");

  LoadedCorpus result;
  SnapshotBuilder b{CorpusSnapshot{}};
  bool all_normalized = true;
  for (const auto& path : list_shards(dir)) {
    Shard shard;
    try {
      shard = read_shard(path);
      if (b.get().dim() != 0 && shard.dim != b.get().dim())
        throw DimensionError("shard " + path.string() + " has dim " + std::to_string(shard.dim) +
                             ", corpus dim is " + std::to_string(b.get().dim()));
    } catch (const IntegrityError& e) {
      if (!options.skip_corrupt) throw IntegrityError(path.string() + ": " + e.what());
      spdlog::error("skipping corrupt shard {}: {}", path.string(), e.what());
      result.report.skipped.push_back(path);
      continue;
    } catch (const DimensionError& e) {
      if (!options.skip_corrupt) throw;
      spdlog::error("skipping shard {}: {}", path.string(), e.what());
      result.report.skipped.push_back(path);
      continue;
    }
    if (b.get().dim() == 0) b.set_dim(shard.dim);
    all_normalized = all_normalized && shard.flags.normalized;
    b.add_shard();
    ++result.report.shards_loaded;
    for (auto& e : shard.entries) {
      const std::string id = e.doc_id;
      scoring::CorpusDocument doc{e.doc_id, std::make_shared<const scoring::PackedMatrix>(e.matrix)};
      if (b.put(std::move(doc), e.source)) {
        ++result.report.duplicate_warnings;
        spdlog::warn("doc_id '{}' appears in several shards; keeping the copy from {}", id,
                     path.filename().string());
      }
    }
  }
  b.set_normalized(result.report.shards_loaded > 0 && all_normalized);
  b.set_metadata(std::make_shared<const MetadataTable>(load_metadata(dir / kMetadataFile)));
  result.snapshot = b.finish();
  return result;
}

namespace {

std::string generated_shard_name(const AddOptions& options, std::uint64_t epoch,
                                 std::span<const DocumentEmbedding> docs) {
  Fnv1a64 h;
  for (const auto& d : docs) {
    h.update(d.doc_id);
    h.update(std::uint8_t{0});
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "-%06llu-%08llx", static_cast<unsigned long long>(epoch),
                static_cast<unsigned long long>(h.digest() & 0xffffffffULL));
  return options.shard_prefix + buf;
}

}  // namespace

CorpusSnapshot add_documents(const CorpusSnapshot& snapshot, std::vector<DocumentEmbedding> docs,
                             std::vector<MetadataRecord> meta, const AddOptions& options) {
  if (docs.empty()) throw InvalidArgument("no documents to add");
  if (options.persist && !options.corpus_dir)
    throw InvalidArgument("persist requested without a corpus directory");

  const std::size_t dim = snapshot.dim() != 0 ? snapshot.dim() : docs.front().matrix.dim();
  std::unordered_set<std::string> batch_ids;
  for (const auto& d : docs) {
    if (d.doc_id.empty()) throw InvalidArgument("empty doc_id");
    if (d.matrix.dim() != dim)
      throw DimensionError("document '" + d.doc_id + "' has dim " + std::to_string(d.matrix.dim()) +
                           ", corpus dim is " + std::to_string(dim));
    if (snapshot.contains(d.doc_id) || !batch_ids.insert(d.doc_id).second)
      throw DuplicateDocument("doc_id '" + d.doc_id + "' already exists");
    d.matrix.require_finite();
    if (options.normalized && !d.matrix.rows_unit_norm(1e-3))
      throw InvalidEmbedding("document '" + d.doc_id + "' has rows that are not unit norm");
  }
  for (const auto& m : meta)
    if (!batch_ids.contains(m.doc_id))
      throw InvalidArgument("metadata for '" + m.doc_id + "' has no matching document");

  const std::uint64_t epoch = snapshot.epoch() + 1;
  auto table = std::make_shared<MetadataTable>(snapshot.metadata_table());
  for (auto& m : meta) {
    std::string id = m.doc_id;
    table->insert_or_assign(std::move(id), std::move(m));
  }

  if (options.persist) {
    const fs::path shard_dir = *options.corpus_dir / kShardDir;
    std::error_code ec;
    fs::create_directories(shard_dir, ec);
    if (ec) throw IoError("cannot create " + shard_dir.string() + ": " + ec.message());
    const std::string name =
        options.shard_name.empty() ? generated_shard_name(options, epoch, docs) : options.shard_name;
    write_shard(docs, shard_dir / (name + std::string(kShardExtension)),
                {options.normalized, options.f16});
    save_metadata(*options.corpus_dir / kMetadataFile, *table);
  }

  SnapshotBuilder b{snapshot};
  b.set_epoch(epoch);
  b.set_dim(dim);
  b.set_normalized(snapshot.empty() ? options.normalized
                                    : snapshot.normalized() && options.normalized);
  if (options.persist) b.add_shard();
  for (auto& d : docs) {
    std::vector<float> values;
    if (options.f16 && options.persist) {
      // Persisted f16 documents must score the same before and after restart.
      auto v = d.matrix.values();
      values.reserve(v.size());
      for (float x : v) values.push_back(round_trip_f16(x));
      d.matrix = scoring::EmbeddingMatrix(d.matrix.rows(), d.matrix.dim(), std::move(values));
    }
    b.put({d.doc_id, std::make_shared<const scoring::PackedMatrix>(d.matrix)}, d.source);
  }
  b.set_metadata(std::move(table));
  return b.finish();
}

fs::path portable_metadata_path(const fs::path& shard_path) {
  fs::path p = shard_path;
  p.replace_extension(".metadata.csv");
  return p;
}

ExportResult export_shard(const CorpusSnapshot& snapshot, std::span<const std::string> doc_ids,
                          const fs::path& path) {
  if (doc_ids.empty()) throw InvalidArgument("nothing to export");
  std::vector<DocumentEmbedding> entries;
  MetadataTable meta;
  for (const auto& id : doc_ids) {
    const auto ordinal = snapshot.find(id);
    if (!ordinal) throw NotFound("unknown doc_id '" + id + "'");
    entries.push_back(snapshot.document(*ordinal));
    if (const auto* m = snapshot.metadata(id)) meta.emplace(id, *m);
  }
  ExportResult result;
  result.shard_path = path;
  result.shard_id = write_shard(entries, path, {snapshot.normalized(), false});
  result.metadata_path = portable_metadata_path(path);
  save_metadata(result.metadata_path, meta);
  return result;
}

PortableShard read_portable_shard(const fs::path& path) {
  PortableShard out;
  out.shard = read_shard(path);
  for (auto& e : out.shard.entries) e.source = DocumentSource::federated_import;
  out.metadata = load_metadata(portable_metadata_path(path));
  return out;
}

std::string_view to_string(FindingKind kind) noexcept {
  switch (kind) {
    case FindingKind::integrity:
      return "integrity";
    case FindingKind::dimension_mismatch:
      return "dimension_mismatch";
    case FindingKind::orphaned_metadata:
      return "orphaned_metadata";
    case FindingKind::missing_metadata:
      return "missing_metadata";
    case FindingKind::duplicate_document:
      return "duplicate_document";
    case FindingKind::metadata_unreadable:
      return "metadata_unreadable";
  }
  return "integrity";
}

VerifyReport verify(const fs::path& dir) {
  VerifyReport report;
  std::size_t corpus_dim = 0;
  std::unordered_map<std::string, std::string> owner;  // doc_id -> shard file
  for (const auto& path : list_shards(dir)) {
    ++report.shards_checked;
    Shard shard;
    try {
      shard = read_shard(path);
    } catch (const Error& e) {
      report.findings.push_back({FindingKind::integrity, path.filename().string(), e.what()});
      continue;
    }
    if (corpus_dim == 0) corpus_dim = shard.dim;
    if (shard.dim != corpus_dim) {
      report.findings.push_back({FindingKind::dimension_mismatch, path.filename().string(),
                                 "dim " + std::to_string(shard.dim) + ", corpus dim " +
                                     std::to_string(corpus_dim)});
      continue;
    }
    for (const auto& e : shard.entries) {
      auto [it, fresh] = owner.emplace(e.doc_id, path.filename().string());
      if (!fresh) {
        report.findings.push_back({FindingKind::duplicate_document, e.doc_id,
                                   "in " + it->second + " and " + path.filename().string()});
        it->second = path.filename().string();
      }
    }
  }
  report.documents = owner.size();

  MetadataTable meta;
  try {
    meta = load_metadata(dir / kMetadataFile);
  } catch (const Error& e) {
    report.findings.push_back({FindingKind::metadata_unreadable, std::string(kMetadataFile), e.what()});
    return report;
  }
  for (const auto& [id, rec] : meta)
    if (!owner.contains(id))
      report.findings.push_back({FindingKind::orphaned_metadata, id, "metadata without embedding"});
  std::vector<std::string> missing;
  for (const auto& [id, file] : owner)
    if (!meta.contains(id)) missing.push_back(id);
  std::sort(missing.begin(), missing.end());
  for (auto& id : missing)
    report.findings.push_back({FindingKind::missing_metadata, std::move(id), "embedding without metadata"});
  return report;
}

CompactReport compact(const fs::path& dir, const std::set<std::string>& tombstones) {
  const auto shards = list_shards(dir);
  std::vector<Shard> loaded;
  loaded.reserve(shards.size());
  for (const auto& p : shards) {
    try {
      loaded.push_back(read_shard(p));
    } catch (const IntegrityError& e) {
      throw IntegrityError(p.string() + ": " + e.what());
    }
  }

  // Newest copy of each id wins, exactly as load_all resolves it.
  std::unordered_map<std::string, std::size_t> winner;
  for (std::size_t s = 0; s < loaded.size(); ++s)
    for (const auto& e : loaded[s].entries) winner[e.doc_id] = s;

  CompactReport report;
  report.documents_before = winner.size();
  for (const auto& id : tombstones)
    if (winner.contains(id)) ++report.removed;

  for (std::size_t s = 0; s < loaded.size(); ++s) {
    auto& entries = loaded[s].entries;
    const std::size_t before = entries.size();
    std::erase_if(entries, [&](const DocumentEmbedding& e) {
      return tombstones.contains(e.doc_id) || winner.at(e.doc_id) != s;
    });
    if (entries.size() == before) continue;
    if (entries.empty()) {
      fs::remove(shards[s]);
      ++report.shards_deleted;
    } else {
      write_shard(entries, shards[s], loaded[s].flags);
      ++report.shards_rewritten;
    }
  }
  report.documents_after = report.documents_before - report.removed;

  const fs::path meta_path = dir / kMetadataFile;
  if (fs::exists(meta_path)) {
    auto meta = load_metadata(meta_path);
    const auto n = std::erase_if(meta, [&](const auto& kv) { return tombstones.contains(kv.first); });
    if (n > 0) save_metadata(meta_path, meta);
  }
  return report;
}

CorpusStore::CorpusStore() : current_(std::make_shared<const CorpusSnapshot>()) {}

CorpusStore::CorpusStore(const fs::path& dir, const LoadOptions& options) : dir_(dir) {
  auto loaded = load_all(dir, options);
  load_report_ = std::move(loaded.report);
  current_ = std::make_shared<const CorpusSnapshot>(std::move(loaded.snapshot));
}

std::shared_ptr<const CorpusSnapshot> CorpusStore::snapshot() const {
  std::lock_guard lock(pointer_mutex_);
  return current_;
}

std::shared_ptr<const CorpusSnapshot> CorpusStore::add(std::vector<DocumentEmbedding> docs,
                                                       std::vector<MetadataRecord> meta,
                                                       AddOptions options) {
  std::lock_guard writer(write_mutex_);
  if (options.persist && !dir_) throw InvalidArgument("this corpus has no directory to persist to");
  options.corpus_dir = dir_;
  const auto base = snapshot();
  auto next = std::make_shared<const CorpusSnapshot>(
      add_documents(*base, std::move(docs), std::move(meta), options));
  {
    std::lock_guard lock(pointer_mutex_);
    current_ = next;
  }
  return next;
}

}  // namespace ras::store
