#include "ras/store/shard.hpp"

#include <Eigen/Core>
#include <cmath>
#include <cstring>
#include <limits>
#include <unordered_set>

#include "ras/common/error.hpp"
#include "ras/common/file_io.hpp"
#include "ras/common/fnv1a.hpp"

namespace ras::store {

namespace {

constexpr std::string_view kMagic = "RAS1";
constexpr std::size_t kHeaderBytes = 4 + 2 + 2 + 4 + 4;
constexpr std::size_t kChecksumBytes = 8;

class Writer {
 public:
  void bytes(std::string_view s) {
    for (char c : s) out_.push_back(static_cast<std::byte>(c));
  }
  void le(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) out_.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xff));
  }
  std::vector<std::byte> take() { return std::move(out_); }
  const std::vector<std::byte>& view() const { return out_; }
  void reserve(std::size_t n) { out_.reserve(n); }

 private:
  std::vector<std::byte> out_;
};

class Reader {
 public:
  Reader(std::span<const std::byte> bytes, const std::string& shard_id)
      : bytes_(bytes), shard_id_(shard_id) {}

  std::uint64_t le(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i)
      v |= std::to_integer<std::uint64_t>(bytes_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }

  std::span<const std::byte> take(std::size_t n) {
    need(n);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  [[nodiscard]] std::size_t remaining() const { return bytes_.size() - pos_; }

  [[noreturn]] void fail(const std::string& what) const {
    throw IntegrityError("shard '" + shard_id_ + "': " + what + " at byte " + std::to_string(pos_));
  }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) fail("truncated");
  }

  std::span<const std::byte> bytes_;
  const std::string& shard_id_;
  std::size_t pos_ = 0;
};

std::uint16_t to_f16_bits(float v) {
  return Eigen::numext::bit_cast<std::uint16_t>(Eigen::half(v));
}

float from_f16_bits(std::uint16_t bits) {
  return static_cast<float>(Eigen::numext::bit_cast<Eigen::half>(bits));
}

}  // namespace

float round_trip_f16(float value) noexcept { return from_f16_bits(to_f16_bits(value)); }

std::vector<std::byte> encode_shard(std::span<const DocumentEmbedding> entries, ShardFlags flags) {
  if (entries.empty()) throw InvalidArgument("a shard needs at least one document");
  const std::size_t dim = entries.front().matrix.dim();
  if (dim > std::numeric_limits<std::uint16_t>::max())
    throw InvalidArgument("dim " + std::to_string(dim) + " does not fit the shard format");
  if (entries.size() > std::numeric_limits<std::uint32_t>::max())
    throw InvalidArgument("too many documents for one shard");

  std::unordered_set<std::string_view> seen;
  std::size_t payload = 0;
  for (const auto& e : entries) {
    if (e.doc_id.empty()) throw InvalidArgument("empty doc_id");
    if (e.doc_id.size() > std::numeric_limits<std::uint16_t>::max())
      throw InvalidArgument("doc_id too long: " + e.doc_id.substr(0, 64));
    if (e.matrix.dim() != dim)
      throw DimensionError("document '" + e.doc_id + "' has dim " + std::to_string(e.matrix.dim()) +
                           ", shard dim is " + std::to_string(dim));
    if (e.matrix.rows() > std::numeric_limits<std::uint32_t>::max())
      throw InvalidArgument("document '" + e.doc_id + "' has too many rows");
    if (!seen.insert(e.doc_id).second) throw DuplicateDocument("duplicate doc_id '" + e.doc_id + "'");
    e.matrix.require_finite();
    payload += 6 + e.doc_id.size() + e.matrix.values().size() * (flags.f16 ? 2 : 4);
  }

  Writer w;
  w.reserve(kHeaderBytes + payload + kChecksumBytes);
  w.bytes(kMagic);
  w.le(kShardVersion, 2);
  w.le(dim, 2);
  w.le(entries.size(), 4);
  w.le(flags.bits(), 4);
  for (const auto& e : entries) {
    w.le(e.doc_id.size(), 2);
    w.bytes(e.doc_id);
    w.le(e.matrix.rows(), 4);
    for (float v : e.matrix.values()) {
      if (flags.f16) {
        const std::uint16_t h = to_f16_bits(v);
        if (!std::isfinite(from_f16_bits(h)))
          throw InvalidEmbedding("document '" + e.doc_id + "' has a value outside the f16 range");
        w.le(h, 2);
      } else {
        std::uint32_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        w.le(bits, 4);
      }
    }
  }
  w.le(fnv1a64(w.view()), 8);
  return w.take();
}

Shard decode_shard(std::span<const std::byte> bytes, std::string shard_id, DocumentSource source) {
  Shard shard;
  shard.shard_id = std::move(shard_id);
  if (bytes.size() < kHeaderBytes + kChecksumBytes)
    throw IntegrityError("shard '" + shard.shard_id + "': file too short");

  // Checksum first: a flipped byte anywhere must surface as IntegrityError.
  const auto body = bytes.first(bytes.size() - kChecksumBytes);
  Reader tail(bytes.last(kChecksumBytes), shard.shard_id);
  shard.checksum = tail.le(8);
  if (fnv1a64(body) != shard.checksum)
    throw IntegrityError("shard '" + shard.shard_id + "': checksum mismatch");

  Reader r(body, shard.shard_id);
  const auto magic = r.take(4);
  if (std::memcmp(magic.data(), kMagic.data(), 4) != 0) r.fail("bad magic");
  shard.version = static_cast<std::uint16_t>(r.le(2));
  if (shard.version != kShardVersion) r.fail("unsupported version " + std::to_string(shard.version));
  shard.dim = static_cast<std::size_t>(r.le(2));
  if (shard.dim == 0) r.fail("zero dim");
  const auto count = static_cast<std::size_t>(r.le(4));
  const auto flag_bits = static_cast<std::uint32_t>(r.le(4));
  if ((flag_bits & ~(kFlagNormalized | kFlagF16)) != 0) r.fail("unknown flag bits");
  shard.flags = {(flag_bits & kFlagNormalized) != 0, (flag_bits & kFlagF16) != 0};
  const std::size_t width = shard.flags.f16 ? 2 : 4;

  std::unordered_set<std::string> seen;
  shard.entries.reserve(std::min<std::size_t>(count, r.remaining() / 6 + 1));
  for (std::size_t i = 0; i < count; ++i) {
    const auto id_len = static_cast<std::size_t>(r.le(2));
    const auto id_bytes = r.take(id_len);
    std::string id(reinterpret_cast<const char*>(id_bytes.data()), id_len);
    if (id.empty()) r.fail("empty doc_id");
    if (!seen.insert(id).second) r.fail("duplicate doc_id '" + id + "'");
    const auto rows = static_cast<std::size_t>(r.le(4));
    if (rows > r.remaining() / (width * shard.dim)) r.fail("row count exceeds payload");
    const auto raw = r.take(rows * shard.dim * width);
    std::vector<float> values(rows * shard.dim);
    for (std::size_t k = 0; k < values.size(); ++k) {
      const std::byte* p = raw.data() + k * width;
      if (width == 2) {
        const auto bits = static_cast<std::uint16_t>(std::to_integer<unsigned>(p[0]) |
                                                     (std::to_integer<unsigned>(p[1]) << 8));
        values[k] = from_f16_bits(bits);
      } else {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= std::to_integer<std::uint32_t>(p[b]) << (8 * b);
        std::memcpy(&values[k], &bits, sizeof bits);
      }
      if (!std::isfinite(values[k])) r.fail("non-finite value in '" + id + "'");
    }
    shard.entries.push_back(
        {std::move(id), scoring::EmbeddingMatrix(rows, shard.dim, std::move(values)), source});
  }
  if (r.remaining() != 0) r.fail("trailing bytes");
  return shard;
}

std::string write_shard(std::span<const DocumentEmbedding> entries,
                        const std::filesystem::path& path, ShardFlags flags) {
  const auto bytes = encode_shard(entries, flags);
  write_file_atomic(path, bytes);
  return path.stem().string();
}

Shard read_shard(const std::filesystem::path& path) {
  return decode_shard(read_file_bytes(path), path.stem().string(), source_for_shard(path));
}

DocumentSource source_for_shard(const std::filesystem::path& path) noexcept {
  const std::string stem = path.stem().string();
  if (stem.starts_with("upload-")) return DocumentSource::user_upload;
  if (stem.starts_with("import-")) return DocumentSource::federated_import;
  return DocumentSource::base_corpus;
}

std::string_view to_string(DocumentSource source) noexcept {
  switch (source) {
    case DocumentSource::base_corpus:
      return "base_corpus";
    case DocumentSource::user_upload:
      return "user_upload";
    case DocumentSource::federated_import:
      return "federated_import";
  }
  return "base_corpus";
}

std::optional<DocumentSource> parse_source(std::string_view text) noexcept {
  if (text == "base_corpus") return DocumentSource::base_corpus;
  if (text == "user_upload") return DocumentSource::user_upload;
  if (text == "federated_import") return DocumentSource::federated_import;
  return std::nullopt;
}

}  // namespace ras::store
