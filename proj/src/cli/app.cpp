#include "ras/cli/app.hpp"

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <thread>

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "ras/api/http_api.hpp"
#include "ras/api/service.hpp"
#include "ras/cli/config.hpp"
#include "ras/common/error.hpp"
#include "ras/embed/embed_server.hpp"
#include "ras/embed/gateway.hpp"
#include "ras/embed/http_embedder.hpp"
#include "ras/embed/mock_embedder.hpp"
#include "ras/ingest/fetch.hpp"
#include "ras/ingest/pipeline.hpp"
#include "ras/store/corpus.hpp"
#include "ras/store/shard.hpp"
#include "ras/summarize/llm_client.hpp"

namespace ras::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::atomic<bool> g_signalled{false};

extern "C" void on_signal(int) { g_signalled = true; }

bool signalled() {
  static const bool installed = [] {
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    return true;
  }();
  (void)installed;
  return g_signalled.load();
}

void wait_for_stop(const std::function<bool()>& stop) {
  while (!stop()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

// Settings a subcommand accepts on its command line.
struct FlagSet {
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  bool mock = false;
  std::string config_path;

  void add(CLI::App* app, const std::string& key, const std::string& name, const std::string& help) {
    options[key] = app->add_option(name, values[key], help);
  }

  ConfigLayer layer() const {
    ConfigLayer out;
    for (const auto& [key, opt] : options)
      if (opt->count() > 0) out[key] = values.at(key);
    if (mock) out["mock"] = "true";
    return out;
  }
};

void add_embedder_flags(CLI::App* app, FlagSet& f) {
  f.add(app, "embedder_url", "--embedder", "Embedder sidecar base URL");
  app->add_flag("--mock", f.mock, "Use the deterministic mock embedder");
}

void add_llm_flags(CLI::App* app, FlagSet& f) {
  f.add(app, "llm_url", "--llm-url", "OpenAI-compatible base URL, e.g. http://localhost:8000/v1");
  f.add(app, "llm_model", "--llm-model", "Model name sent to the LLM endpoint");
  f.add(app, "llm_api_key", "--llm-api-key", "Bearer key for the LLM endpoint");
}

void add_common_flags(CLI::App* app, FlagSet& f) {
  app->add_option("--config", f.config_path, "JSON config file (flags > env > file)");
  f.add(app, "log_level", "--log-level", "trace, debug, info, warn, error, critical or off");
}

std::shared_ptr<embed::EmbedderGateway> make_gateway(const CliConfig& c) {
  std::shared_ptr<embed::EmbedBackend> backend;
  if (c.mock_mode) {
    backend = std::make_shared<embed::MockEmbedder>();
  } else if (!c.embedder_url.empty()) {
    backend = std::make_shared<embed::HttpEmbedder>(embed::HttpEmbedderOptions{c.embedder_url});
  } else {
    throw ConfigError("no embedder configured: pass --embedder URL or --mock");
  }
  return std::make_shared<embed::EmbedderGateway>(backend);
}

std::shared_ptr<summarize::LlmClient> make_llm(const CliConfig& c) {
  if (c.llm_url.empty()) return nullptr;
  summarize::OpenAiClientOptions o;
  o.base_url = c.llm_url;
  o.model = c.llm_model;
  o.api_key = c.llm_api_key;
  return std::make_shared<summarize::OpenAiChatClient>(o);
}

fs::path require_corpus(const CliConfig& c) {
  if (!c.corpus_dir) throw ConfigError("--corpus is required");
  if (!fs::is_directory(*c.corpus_dir))
    throw ConfigError("corpus directory does not exist: " + c.corpus_dir->string());
  return *c.corpus_dir;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

// Restores the previous default logger when a run ends.
class LoggerScope {
 public:
  explicit LoggerScope(std::ostream& err) : previous_(spdlog::default_logger()) {
    auto logger = std::make_shared<spdlog::logger>("ras", std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true));
    logger->set_pattern("[%Y-%m-%d %H:%M:%S.%e] [%l] %v");
    spdlog::set_default_logger(logger);
  }
  ~LoggerScope() { spdlog::set_default_logger(previous_); }

 private:
  std::shared_ptr<spdlog::logger> previous_;
};

int cmd_ingest(const CliConfig& c, const fs::path& manifest, std::size_t batch_size, std::size_t sub_batch,
               bool reset, bool strict, bool f16, int concurrency, double rate, bool as_json,
               std::ostream& out) {
  if (!c.corpus_dir) throw ConfigError("--corpus is required");
  auto gateway = make_gateway(c);
  const auto health = gateway->health();
  if (!health.ready) throw UpstreamUnavailable("embedder not ready: " + health.detail);

  ingest::IngestOptions o;
  o.batch_size = batch_size;
  o.sub_batch = sub_batch;
  o.reset = reset;
  o.f16 = f16;
  o.normalized = health.normalized;
  o.fetch.concurrency = concurrency;
  o.fetch.rate_per_second = rate;
  o.on_batch_complete = [](std::size_t b) { spdlog::info("batch {} complete", b); };

  fs::create_directories(*c.corpus_dir);
  ingest::HttpImageFetcher fetcher;
  const auto r = ingest::run_ingest(manifest, *c.corpus_dir, *gateway, fetcher, o);

  if (as_json) {
    out << json{{"manifest_rows", r.manifest_rows},
                {"batches_total", r.batches_total},
                {"batches_run", r.batches_run},
                {"batches_skipped", r.batches_skipped},
                {"embedded", r.embedded},
                {"failed", r.failed},
                {"pending", r.pending},
                {"shards_written", r.shards_written},
                {"failures", r.failures}}
               .dump(2)
        << "\n";
  } else {
    out << "manifest rows   " << r.manifest_rows << "\n"
        << "batches         " << r.batches_run << " run, " << r.batches_skipped << " skipped of "
        << r.batches_total << "\n"
        << "embedded        " << r.embedded << "\n"
        << "failed          " << r.failed << "\n"
        << "pending         " << r.pending << "\n";
    for (const auto& [id, reason] : r.failures) out << "  " << id << ": " << reason << "\n";
  }
  return strict && r.failed > 0 ? kExitIntegrity : kExitOk;
}

int cmd_serve(const CliConfig& c, bool skip_corrupt, std::ostream& out, const std::function<bool()>& stop) {
  const auto dir = require_corpus(c);
  api::ServiceOptions so;
  so.corpus_dir = dir;
  so.load.skip_corrupt = skip_corrupt;
  auto service = std::make_shared<api::SearchService>(make_gateway(c), make_llm(c), so);

  api::HttpApiOptions ho;
  ho.bearer_token = c.api_token;
  ho.cors_origins = c.cors_origins;
  ho.rate_limit_per_s = c.rate_limit;
  api::HttpApi http(service, ho);
  const int port = http.start(c.host, c.port);
  out << "listening on http://" << c.host << ":" << port << std::endl;

  try {
    service->load();
  } catch (const std::exception& e) {
    spdlog::error("corpus load failed: {}", e.what());
    http.stop();
    throw;
  }
  const auto snap = service->snapshot();
  const auto dim = snap->dim() != 0 ? snap->dim() : service->embedder().expected_dim().value_or(0);
  spdlog::info("serving {} documents, dim {}", snap->size(), dim);
  out << "ready: documents=" << snap->size() << " dim=" << dim << std::endl;
  if (const auto h = service->health(); !h.embedder.ready)
    spdlog::warn("embedder not ready: {}", h.embedder.detail);

  wait_for_stop(stop);
  spdlog::info("shutting down");
  http.stop();
  return kExitOk;
}

int cmd_query(const CliConfig& c, const std::string& text, std::size_t k, bool as_json, std::ostream& out) {
  api::ServiceOptions so;
  so.corpus_dir = require_corpus(c);
  api::SearchService service(make_gateway(c), nullptr, so);
  service.load();
  const auto response = service.search_text({text, k, std::nullopt});
  if (as_json) {
    out << api::encode_search_response(response) << "\n";
    return kExitOk;
  }
  for (const auto& r : response.results)
    out << std::setw(4) << r.rank << "  " << std::fixed << std::setprecision(6) << std::setw(12) << r.score
        << "  " << r.doc_id << (r.title.empty() ? "" : "  " + r.title) << "\n";
  out << "corpus epoch " << response.corpus_epoch << ", " << response.results.size() << " result(s)\n";
  return kExitOk;
}

int cmd_shard_inspect(const fs::path& file, bool list_ids, bool as_json, std::ostream& out) {
  const auto shard = store::read_shard(file);
  if (as_json) {
    json j{{"shard_id", shard.shard_id},
           {"version", shard.version},
           {"dim", shard.dim},
           {"documents", shard.entries.size()},
           {"normalized", shard.flags.normalized},
           {"f16", shard.flags.f16},
           {"checksum", hex64(shard.checksum)}};
    if (list_ids) {
      json docs = json::array();
      for (const auto& e : shard.entries) docs.push_back({{"doc_id", e.doc_id}, {"rows", e.matrix.rows()}});
      j["entries"] = std::move(docs);
    }
    out << j.dump(2) << "\n";
    return kExitOk;
  }
  out << "shard       " << shard.shard_id << "\n"
      << "version     " << shard.version << "\n"
      << "dim         " << shard.dim << "\n"
      << "documents   " << shard.entries.size() << "\n"
      << "flags       " << (shard.flags.normalized ? "normalized" : "unnormalized") << ","
      << (shard.flags.f16 ? "f16" : "f32") << "\n"
      << "checksum    " << hex64(shard.checksum) << "\n";
  if (list_ids)
    for (const auto& e : shard.entries) out << "  " << e.doc_id << "  rows=" << e.matrix.rows() << "\n";
  return kExitOk;
}

int cmd_verify(const fs::path& dir, bool as_json, std::ostream& out) {
  if (!fs::is_directory(dir)) throw ConfigError("corpus directory does not exist: " + dir.string());
  const auto r = store::verify(dir);
  if (as_json) {
    json findings = json::array();
    for (const auto& f : r.findings)
      findings.push_back({{"kind", store::to_string(f.kind)}, {"subject", f.subject}, {"detail", f.detail}});
    out << json{{"shards_checked", r.shards_checked},
                {"documents", r.documents},
                {"clean", r.clean()},
                {"findings", std::move(findings)}}
               .dump(2)
        << "\n";
  } else {
    out << r.shards_checked << " shard(s), " << r.documents << " document(s), " << r.findings.size()
        << " finding(s)\n";
    for (const auto& f : r.findings)
      out << "  " << store::to_string(f.kind) << "  " << f.subject << ": " << f.detail << "\n";
  }
  return r.clean() ? kExitOk : kExitIntegrity;
}

std::set<std::string> read_id_list(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::set<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    line.erase(0, line.find_first_not_of(" \t\r"));
    line.erase(line.find_last_not_of(" \t\r") + 1);
    if (!line.empty() && line[0] != '#') ids.insert(line);
  }
  return ids;
}

int cmd_compact(const fs::path& dir, const fs::path& tombstones, bool as_json, std::ostream& out) {
  if (!fs::is_directory(dir)) throw ConfigError("corpus directory does not exist: " + dir.string());
  const auto ids = tombstones.empty() ? std::set<std::string>{} : read_id_list(tombstones);
  const auto r = store::compact(dir, ids);
  if (as_json) {
    out << json{{"documents_before", r.documents_before},
                {"documents_after", r.documents_after},
                {"removed", r.removed},
                {"shards_rewritten", r.shards_rewritten},
                {"shards_deleted", r.shards_deleted}}
               .dump(2)
        << "\n";
  } else {
    out << "documents " << r.documents_before << " -> " << r.documents_after << " (" << r.removed
        << " removed), " << r.shards_rewritten << " shard(s) rewritten, " << r.shards_deleted
        << " deleted\n";
  }
  return kExitOk;
}

int cmd_export(const fs::path& dir, const std::vector<std::string>& ids, const fs::path& ids_file,
               const fs::path& dest, std::ostream& out) {
  if (!fs::is_directory(dir)) throw ConfigError("corpus directory does not exist: " + dir.string());
  std::vector<std::string> all = ids;
  if (!ids_file.empty())
    for (const auto& id : read_id_list(ids_file)) all.push_back(id);
  if (all.empty()) throw ConfigError("no doc ids given: pass --ids or --ids-file");
  const auto loaded = store::load_all(dir);
  const auto r = store::export_shard(loaded.snapshot, all, dest);
  out << "wrote " << all.size() << " document(s) to " << r.shard_path.string() << "\n"
      << "metadata " << r.metadata_path.string() << "\n";
  return kExitOk;
}

int cmd_mock_embedder(const std::string& host, int port, std::size_t dim, std::ostream& out,
                      const std::function<bool()>& stop) {
  embed::EmbedServer server(std::make_shared<embed::MockEmbedder>(dim));
  server.start(host, port);
  out << "listening on " << server.base_url() << std::endl;
  wait_for_stop(stop);
  server.stop();
  return kExitOk;
}

}  // namespace

int exit_code_for(const std::exception& error) noexcept {
  if (dynamic_cast<const UpstreamUnavailable*>(&error)) return kExitUpstream;
  if (dynamic_cast<const InvalidArgument*>(&error) || dynamic_cast<const ConfigError*>(&error) ||
      dynamic_cast<const NotFound*>(&error))
    return kExitUsage;
  return kExitIntegrity;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, RunContext context) {
  if (!context.getenv) context.getenv = [](const char* name) { return std::getenv(name); };
  if (!context.stop_requested) {
    signalled();
    context.stop_requested = signalled;
  }

  CLI::App app{"Late-interaction search engine over scanned document images", "ras"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "ras 0.1.0");

  // ingest
  FlagSet ingest_flags;
  std::string manifest;
  std::size_t batch_size = ingest::kDefaultBatchSize, sub_batch = ingest::kDefaultSubBatch;
  bool reset = false, strict = false, f16 = false, ingest_json = false;
  int concurrency = 8;
  double rate = 10.0;
  auto* ingest_cmd = app.add_subcommand("ingest", "Fetch, embed and store the images listed in a manifest");
  ingest_cmd->add_option("--manifest", manifest, "CSV manifest")->required();
  ingest_flags.add(ingest_cmd, "corpus_dir", "--corpus", "Corpus directory");
  ingest_cmd->add_option("--batch-size", batch_size, "Rows per batch")->check(CLI::PositiveNumber);
  ingest_cmd->add_option("--sub-batch", sub_batch, "Images per embedder call")->check(CLI::PositiveNumber);
  ingest_cmd->add_option("--concurrency", concurrency, "Parallel downloads")->check(CLI::Range(1, 64));
  ingest_cmd->add_option("--rate", rate, "Download requests per second")->check(CLI::PositiveNumber);
  ingest_cmd->add_flag("--reset", reset, "Discard the checkpoint and earlier batch shards");
  ingest_cmd->add_flag("--strict", strict, "Exit with status 2 when any row failed");
  ingest_cmd->add_flag("--f16", f16, "Store embeddings as f16");
  ingest_cmd->add_flag("--json", ingest_json, "Print the report as JSON");
  add_embedder_flags(ingest_cmd, ingest_flags);
  add_common_flags(ingest_cmd, ingest_flags);

  // serve
  FlagSet serve_flags;
  bool skip_corrupt = false;
  auto* serve_cmd = app.add_subcommand("serve", "Load the corpus and serve the HTTP API");
  serve_flags.add(serve_cmd, "corpus_dir", "--corpus", "Corpus directory");
  serve_flags.add(serve_cmd, "host", "--host", "Bind address");
  serve_flags.add(serve_cmd, "port", "--port", "Port (0 picks a free one)");
  serve_flags.add(serve_cmd, "api_token", "--api-token", "Bearer token required for corpus additions");
  serve_flags.add(serve_cmd, "cors_origins", "--cors", "Comma-separated allowed origins");
  serve_flags.add(serve_cmd, "rate_limit", "--rate-limit", "Requests per second per client (0 = off)");
  serve_cmd->add_flag("--skip-corrupt", skip_corrupt, "Skip unreadable shards instead of aborting");
  add_embedder_flags(serve_cmd, serve_flags);
  add_llm_flags(serve_cmd, serve_flags);
  add_common_flags(serve_cmd, serve_flags);

  // query
  FlagSet query_flags;
  std::string text;
  std::size_t k = scoring::kDefaultTopK;
  bool query_json = false;
  auto* query_cmd = app.add_subcommand("query", "Search a corpus directly, without HTTP");
  query_flags.add(query_cmd, "corpus_dir", "--corpus", "Corpus directory");
  query_cmd->add_option("--text", text, "Query text")->required();
  query_cmd->add_option("-k", k, "Number of results");
  query_cmd->add_flag("--json", query_json, "Print the /search response body");
  add_embedder_flags(query_cmd, query_flags);
  add_common_flags(query_cmd, query_flags);

  // shard inspect
  FlagSet shard_flags;
  std::string shard_file;
  bool shard_json = false, shard_ids = false;
  auto* shard_cmd = app.add_subcommand("shard", "Shard file tools");
  shard_cmd->require_subcommand(1);
  auto* inspect_cmd = shard_cmd->add_subcommand("inspect", "Print a shard's header and checksum");
  inspect_cmd->add_option("file", shard_file, "Shard file")->required();
  inspect_cmd->add_flag("--ids", shard_ids, "List document ids");
  inspect_cmd->add_flag("--json", shard_json, "JSON output");
  add_common_flags(inspect_cmd, shard_flags);

  // corpus verify | compact | export
  FlagSet corpus_flags;
  std::string corpus_dir, tombstones, ids_file, export_out;
  std::vector<std::string> export_ids;
  bool corpus_json = false;
  auto* corpus_cmd = app.add_subcommand("corpus", "Corpus directory tools");
  corpus_cmd->require_subcommand(1);
  auto* verify_cmd = corpus_cmd->add_subcommand("verify", "Check shards and metadata without modifying them");
  verify_cmd->add_option("dir", corpus_dir, "Corpus directory")->required();
  verify_cmd->add_flag("--json", corpus_json, "JSON output");
  add_common_flags(verify_cmd, corpus_flags);
  auto* compact_cmd = corpus_cmd->add_subcommand("compact", "Drop tombstoned and shadowed documents");
  compact_cmd->add_option("dir", corpus_dir, "Corpus directory")->required();
  compact_cmd->add_option("--tombstones", tombstones, "File with one doc id per line");
  compact_cmd->add_flag("--json", corpus_json, "JSON output");
  add_common_flags(compact_cmd, corpus_flags);
  auto* export_cmd = corpus_cmd->add_subcommand("export", "Write documents to a portable shard");
  export_cmd->add_option("dir", corpus_dir, "Corpus directory")->required();
  export_cmd->add_option("--ids", export_ids, "Doc ids")->delimiter(',');
  export_cmd->add_option("--ids-file", ids_file, "File with one doc id per line");
  export_cmd->add_option("--out", export_out, "Destination shard file")->required();
  add_common_flags(export_cmd, corpus_flags);

  // mock-embedder
  FlagSet mock_flags;
  std::string mock_host = "127.0.0.1";
  int mock_port = 8100;
  std::size_t mock_dim = embed::kMockDim;
  auto* mock_cmd = app.add_subcommand("mock-embedder", "Serve the mock embedder over the embed protocol");
  mock_cmd->add_option("--host", mock_host, "Bind address");
  mock_cmd->add_option("--port", mock_port, "Port (0 picks a free one)");
  mock_cmd->add_option("--dim", mock_dim, "Embedding dimension")->check(CLI::PositiveNumber);
  add_common_flags(mock_cmd, mock_flags);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  LoggerScope logging(err);
  try {
    FlagSet* flags = nullptr;
    if (ingest_cmd->parsed()) flags = &ingest_flags;
    else if (serve_cmd->parsed()) flags = &serve_flags;
    else if (query_cmd->parsed()) flags = &query_flags;
    else if (shard_cmd->parsed()) flags = &shard_flags;
    else if (corpus_cmd->parsed()) flags = &corpus_flags;
    else flags = &mock_flags;

    std::string config_path = flags->config_path;
    if (config_path.empty())
      if (const char* p = context.getenv("RAS_CONFIG"); p != nullptr) config_path = p;
    const auto cfg = resolve_config(flags->layer(), env_layer(context.getenv),
                                    config_path.empty() ? ConfigLayer{} : file_layer(config_path));
    spdlog::set_level(spdlog::level::from_str(cfg.log_level));

    if (ingest_cmd->parsed())
      return cmd_ingest(cfg, manifest, batch_size, sub_batch, reset, strict, f16, concurrency, rate, ingest_json,
                        out);
    if (serve_cmd->parsed()) return cmd_serve(cfg, skip_corrupt, out, context.stop_requested);
    if (query_cmd->parsed()) return cmd_query(cfg, text, k, query_json, out);
    if (inspect_cmd->parsed()) return cmd_shard_inspect(shard_file, shard_ids, shard_json, out);
    if (verify_cmd->parsed()) return cmd_verify(corpus_dir, corpus_json, out);
    if (compact_cmd->parsed()) return cmd_compact(corpus_dir, tombstones, corpus_json, out);
    if (export_cmd->parsed()) return cmd_export(corpus_dir, export_ids, ids_file, export_out, out);
    return cmd_mock_embedder(mock_host, mock_port, mock_dim, out, context.stop_requested);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << std::endl;
    return exit_code_for(e);
  }
}

}  // namespace ras::cli
