#include "ras/api/service.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include <spdlog/spdlog.h>

#include "ras/common/fnv1a.hpp"
#include "ras/scoring/top_k.hpp"
#include "ras/store/shard.hpp"

namespace ras::api {

namespace {

using Clock = std::chrono::steady_clock;

void check_k(std::size_t k) {
  if (k < 1 || k > kMaxK)
    throw InvalidArgument("k must be between 1 and " + std::to_string(kMaxK));
}

void check_session_id(const std::string& id) {
  if (id.empty() || id.size() > 128)
    throw InvalidArgument("session_id must be 1 to 128 characters");
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    if (!ok) throw InvalidArgument("session_id may only contain letters, digits, '-', '_' and '.'");
  }
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return c == ' ' || (c >= '\t' && c <= '\r'); });
}

struct Candidate {
  scoring::RankedHit hit;
  bool overlay = false;
};

}  // namespace

std::string HealthReport::status() const {
  if (!corpus_loaded) return corpus_error.empty() ? "loading" : "degraded";
  if (embedder.ready && (!llm_configured || llm_ready)) return "ready";
  return "degraded";
}

std::string default_upload_id(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return "upload-" + std::string(buf);
}

SearchService::SearchService(std::shared_ptr<embed::EmbedderGateway> embedder,
                             std::shared_ptr<summarize::LlmClient> llm, ServiceOptions options)
    : embedder_(std::move(embedder)), llm_(std::move(llm)), options_(std::move(options)) {
  if (!embedder_) throw ConfigError("search service needs an embedder");
}

void SearchService::load() {
  try {
    auto store = options_.corpus_dir ? std::make_unique<store::CorpusStore>(*options_.corpus_dir, options_.load)
                                     : std::make_unique<store::CorpusStore>();
    const auto snap = store->snapshot();
    {
      std::lock_guard lock(state_mutex_);
      store_ = std::move(store);
      load_error_.clear();
    }
    loaded_ = true;
    spdlog::info("corpus loaded: documents={} dim={} shards={}", snap->size(), snap->dim(),
                 snap->shard_count());
  } catch (const std::exception& e) {
    std::lock_guard lock(state_mutex_);
    load_error_ = e.what();
    throw;
  }
}

void SearchService::require_ready() const {
  if (!loaded_) throw NotReady("corpus is still loading");
}

std::shared_ptr<const store::CorpusSnapshot> SearchService::snapshot() const {
  require_ready();
  return store_->snapshot();
}

void SearchService::set_query_observer(std::function<void(const QueryTrace&)> observer) {
  std::lock_guard lock(observer_mutex_);
  observer_ = std::move(observer);
}

std::shared_ptr<SearchService::Session> SearchService::session(const std::string& id, bool create) {
  check_session_id(id);
  std::lock_guard lock(sessions_mutex_);
  if (auto it = sessions_.find(id); it != sessions_.end()) {
    it->second->last_used = Clock::now();
    return it->second;
  }
  if (!create) throw NotFound("unknown session '" + id + "'");
  while (!sessions_.empty() && sessions_.size() >= options_.max_sessions) {
    auto oldest = std::min_element(sessions_.begin(), sessions_.end(), [](const auto& a, const auto& b) {
      return a.second->last_used < b.second->last_used;
    });
    spdlog::info("evicting session {}", oldest->first);
    sessions_.erase(oldest);
  }
  auto s = std::make_shared<Session>();
  s->id = id;
  s->last_used = Clock::now();
  sessions_.emplace(id, s);
  return s;
}

SearchResponse SearchService::search_text(const SearchRequest& request) {
  require_ready();
  if (blank(request.query)) throw InvalidArgument("query must not be empty");
  check_k(request.k);
  const auto query = embedder_->embed_text(request.query);
  return run_query(QueryKind::text, query, request.k, request.session_id);
}

SearchResponse SearchService::search_image(std::string_view image, std::size_t k,
                                           const std::optional<std::string>& session_id) {
  require_ready();
  if (image.empty()) throw InvalidImage("empty image upload");
  check_k(k);
  const auto query = embedder_->embed_image(image);
  return run_query(QueryKind::image, query, k, session_id);
}

SearchResponse SearchService::run_query(QueryKind kind, const scoring::EmbeddingMatrix& query,
                                        std::size_t k, const std::optional<std::string>& session_id) {
  require_ready();
  check_k(k);
  const auto started = Clock::now();

  const auto base = store_->snapshot();
  std::shared_ptr<Session> sess;
  std::shared_ptr<const store::CorpusSnapshot> overlay;
  if (session_id) {
    sess = session(*session_id, true);
    std::lock_guard lock(sessions_mutex_);
    overlay = sess->overlay;
  }

  const scoring::PreparedQuery prepared(query);
  std::vector<Candidate> candidates;
  auto scan = [&](const store::CorpusSnapshot& snap, bool is_overlay) {
    if (snap.empty()) return;
    if (query.dim() != snap.dim())
      throw DimensionError("query dim " + std::to_string(query.dim()) + " does not match corpus dim " +
                           std::to_string(snap.dim()));
    const auto scores = scoring::score_corpus(prepared, snap.documents(), options_.scan);
    for (auto& hit : scoring::top_k(snap.documents(), scores, k))
      candidates.push_back({std::move(hit), is_overlay});
  };
  scan(*base, false);
  if (overlay) scan(*overlay, true);

  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return scoring::ranks_before(a.hit.score, a.hit.doc_id, b.hit.score, b.hit.doc_id);
  });
  if (candidates.size() > k) candidates.resize(k);

  SearchResponse response;
  response.corpus_epoch = base->epoch();
  if (overlay) response.session_epoch = overlay->epoch();
  response.results.reserve(candidates.size());
  int rank = 0;
  for (const auto& c : candidates) {
    const store::MetadataRecord* meta =
        c.overlay ? overlay->metadata(c.hit.doc_id) : base->metadata(c.hit.doc_id);
    SearchResult r;
    r.doc_id = c.hit.doc_id;
    if (meta) {
      r.title = meta->title;
      r.image_url = meta->image_url();
      r.resource_url = meta->resource_url;
      r.doc_type = meta->doc_type;
      r.collection = meta->collection;
    }
    r.score = c.hit.score;
    r.rank = ++rank;
    response.results.push_back(std::move(r));
  }
  if (sess) {
    std::lock_guard lock(sessions_mutex_);
    sess->last_results = response.results;
  }
  response.latency_ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - started).count();

  std::function<void(const QueryTrace&)> observer;
  {
    std::lock_guard lock(observer_mutex_);
    observer = observer_;
  }
  if (observer)
    observer({kind, query.rows(), k, response.corpus_epoch, base->size() + (overlay ? overlay->size() : 0)});
  return response;
}

AddResponse SearchService::add(std::vector<store::DocumentEmbedding> docs,
                               std::vector<store::MetadataRecord> meta, const AddRequest& request,
                               bool normalized, const std::string& shard_prefix) {
  if (docs.empty()) throw InvalidArgument("no documents to add");
  AddResponse response;
  for (const auto& d : docs) response.added.push_back(d.doc_id);

  std::shared_ptr<Session> sess;
  if (request.session_id) sess = session(*request.session_id, true);

  if (request.persist || !sess) {
    if (request.persist && !store_->dir())
      throw InvalidArgument("persist requested but the corpus has no directory");
    store::AddOptions opts;
    opts.persist = request.persist;
    opts.normalized = normalized;
    opts.f16 = options_.persist_f16;
    opts.shard_prefix = shard_prefix;
    const auto next = store_->add(std::move(docs), std::move(meta), opts);
    response.corpus_epoch = next->epoch();
    if (sess) {
      std::lock_guard lock(sessions_mutex_);
      sess->uploaded_doc_ids.insert(response.added.begin(), response.added.end());
      response.session_epoch = sess->overlay->epoch();
    }
    return response;
  }

  // Session-only additions: visible to this session, never persisted.
  std::lock_guard writer(session_write_mutex_);
  const auto base = store_->snapshot();
  std::shared_ptr<const store::CorpusSnapshot> current;
  {
    std::lock_guard lock(sessions_mutex_);
    current = sess->overlay;
  }
  for (const auto& d : docs) {
    if (base->contains(d.doc_id)) throw DuplicateDocument("doc_id '" + d.doc_id + "' already exists");
    if (base->dim() != 0 && d.matrix.dim() != base->dim())
      throw DimensionError("document '" + d.doc_id + "' has dim " + std::to_string(d.matrix.dim()) +
                           ", corpus dim is " + std::to_string(base->dim()));
  }
  store::AddOptions opts;
  opts.normalized = normalized;
  auto next = std::make_shared<const store::CorpusSnapshot>(
      store::add_documents(*current, std::move(docs), std::move(meta), opts));
  {
    std::lock_guard lock(sessions_mutex_);
    sess->overlay = next;
    sess->uploaded_doc_ids.insert(response.added.begin(), response.added.end());
  }
  response.corpus_epoch = base->epoch();
  response.session_epoch = next->epoch();
  return response;
}

AddResponse SearchService::add_images(std::vector<UploadedImage> images, const AddRequest& request) {
  require_ready();
  if (images.empty()) throw InvalidArgument("no images uploaded");
  if (request.session_id) check_session_id(*request.session_id);
  std::vector<store::DocumentEmbedding> docs;
  std::vector<store::MetadataRecord> meta;
  bool normalized = true;
  for (auto& img : images) {
    if (img.bytes.empty()) throw InvalidImage("empty image upload");
    if (img.doc_id.empty()) img.doc_id = default_upload_id(img.bytes);
    auto response = embedder_->embed_image_response(img.bytes);
    normalized = normalized && response.normalized;
    store::MetadataRecord m;
    m.doc_id = img.doc_id;
    m.title = img.title.empty() ? img.doc_id : img.title;
    m.doc_type = "image";
    m.collection = std::string(store::to_string(store::DocumentSource::user_upload));
    meta.push_back(std::move(m));
    docs.push_back({img.doc_id, std::move(response.matrix), store::DocumentSource::user_upload});
  }
  auto response = add(std::move(docs), std::move(meta), request, normalized, "upload");
  spdlog::info("added {} uploaded document(s) persist={} corpus_epoch={}", response.added.size(),
               request.persist, response.corpus_epoch);
  return response;
}

AddResponse SearchService::import_shard(std::string_view shard_bytes, std::string_view metadata_csv,
                                        const AddRequest& request) {
  require_ready();
  if (shard_bytes.empty()) throw InvalidArgument("empty shard upload");
  if (request.session_id) check_session_id(*request.session_id);
  const auto* data = reinterpret_cast<const std::byte*>(shard_bytes.data());
  auto shard = store::decode_shard({data, shard_bytes.size()}, "import",
                                   store::DocumentSource::federated_import);

  store::MetadataTable table;
  if (!metadata_csv.empty()) {
    std::istringstream in{std::string(metadata_csv)};
    table = store::read_metadata_csv(in);
  }
  std::vector<store::MetadataRecord> meta;
  for (const auto& e : shard.entries)
    if (auto it = table.find(e.doc_id); it != table.end()) meta.push_back(it->second);

  auto response = add(std::move(shard.entries), std::move(meta), request, shard.flags.normalized, "import");
  spdlog::info("imported {} document(s) persist={} corpus_epoch={}", response.added.size(),
               request.persist, response.corpus_epoch);
  return response;
}

ExportedShard SearchService::export_shard(const std::vector<std::string>& doc_ids) {
  require_ready();
  if (doc_ids.empty()) throw InvalidArgument("nothing to export");
  const auto snap = store_->snapshot();
  std::vector<store::DocumentEmbedding> entries;
  store::MetadataTable meta;
  for (const auto& id : doc_ids) {
    const auto ordinal = snap->find(id);
    if (!ordinal) throw NotFound("unknown doc_id '" + id + "'");
    entries.push_back(snap->document(*ordinal));
    if (const auto* m = snap->metadata(id)) meta.emplace(id, *m);
  }
  const auto bytes = store::encode_shard(entries, {snap->normalized(), false});
  ExportedShard out;
  out.shard_bytes.assign(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  std::ostringstream csv;
  store::write_metadata_csv(csv, meta);
  out.metadata_csv = csv.str();
  return out;
}

summarize::AnalysisResult SearchService::analyze(const std::vector<std::string>& doc_ids,
                                                 const std::optional<std::string>& session_id) {
  require_ready();
  if (!llm_) throw UpstreamUnavailable("no LLM configured");

  std::shared_ptr<Session> sess;
  std::vector<SearchResult> last;
  if (session_id) {
    sess = session(*session_id, false);
    std::lock_guard lock(sessions_mutex_);
    last = sess->last_results;
  }

  std::vector<SearchResult> results;
  if (doc_ids.empty()) {
    if (!sess) throw InvalidArgument("analyze needs doc_ids or a session_id");
    if (last.empty()) throw NotFound("session '" + *session_id + "' has no results to analyze");
    results = std::move(last);
  } else {
    const auto base = store_->snapshot();
    std::shared_ptr<const store::CorpusSnapshot> overlay;
    if (sess) {
      std::lock_guard lock(sessions_mutex_);
      overlay = sess->overlay;
    }
    int rank = 0;
    for (const auto& id : doc_ids) {
      ++rank;
      const auto prior = std::find_if(last.begin(), last.end(), [&](const SearchResult& r) { return r.doc_id == id; });
      const store::CorpusSnapshot* owner = base->contains(id) ? base.get()
                                           : (overlay && overlay->contains(id)) ? overlay.get()
                                                                                : nullptr;
      if (!owner) throw NotFound("unknown doc_id '" + id + "'");
      SearchResult r;
      r.doc_id = id;
      if (const auto* m = owner->metadata(id)) {
        r.title = m->title;
        r.image_url = m->image_url();
        r.resource_url = m->resource_url;
        r.doc_type = m->doc_type;
        r.collection = m->collection;
      }
      r.score = prior != last.end() ? prior->score : 0.0;
      r.rank = rank;
      results.push_back(std::move(r));
    }
  }
  return summarize::analyze(results, *llm_);
}

CorpusStats SearchService::stats() const {
  require_ready();
  const auto snap = store_->snapshot();
  CorpusStats s;
  s.documents = snap->size();
  s.shards = snap->shard_count();
  s.dim = snap->dim() != 0 ? snap->dim() : embedder_->expected_dim().value_or(0);
  s.epoch = snap->epoch();
  s.memory_bytes = snap->memory_bytes();
  return s;
}

HealthReport SearchService::health() {
  HealthReport h;
  h.corpus_loaded = loaded_;
  {
    std::lock_guard lock(state_mutex_);
    h.corpus_error = load_error_;
  }
  if (h.corpus_loaded) {
    const auto snap = store_->snapshot();
    h.documents = snap->size();
    h.epoch = snap->epoch();
  }
  h.embedder = embedder_->health();
  h.llm_configured = llm_ != nullptr;
  h.llm_ready = llm_ && llm_->reachable();
  return h;
}

}  // namespace ras::api
