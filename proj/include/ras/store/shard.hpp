#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ras/store/document.hpp"

namespace ras::store {

// Shard file layout, all integers little-endian:
//
//   "RAS1" | version u16 | dim u16 | count u32 | flags u32
//   count x { id_len u16 | id bytes (UTF-8) | rows u32 | rows*dim values }
//   FNV-1a 64 of every preceding byte (u64)
//
// Values are f32, or f16 when flag bit 1 is set. Flag bit 0 records that the
// producing embedder emits unit-norm rows.
inline constexpr std::uint16_t kShardVersion = 1;
inline constexpr std::uint32_t kFlagNormalized = 1u << 0;
inline constexpr std::uint32_t kFlagF16 = 1u << 1;
inline constexpr std::string_view kShardExtension = ".ras1";

struct ShardFlags {
  bool normalized = false;
  bool f16 = false;

  [[nodiscard]] std::uint32_t bits() const noexcept {
    return (normalized ? kFlagNormalized : 0u) | (f16 ? kFlagF16 : 0u);
  }
  friend bool operator==(const ShardFlags&, const ShardFlags&) = default;
};

struct Shard {
  std::string shard_id;
  std::uint16_t version = kShardVersion;
  std::size_t dim = 0;
  ShardFlags flags;
  std::uint64_t checksum = 0;
  std::vector<DocumentEmbedding> entries;
};

/// Serializes a sealed shard. Throws InvalidArgument for empty input or
/// fields that overflow the format, DimensionError for mixed dims,
/// DuplicateDocument for repeated ids, InvalidEmbedding for non-finite values
/// (or values outside the f16 range in f16 mode).
std::vector<std::byte> encode_shard(std::span<const DocumentEmbedding> entries, ShardFlags flags);

/// Parses and verifies a shard image. Throws IntegrityError on any
/// structural problem or checksum mismatch. Entries get `source`.
Shard decode_shard(std::span<const std::byte> bytes, std::string shard_id,
                   DocumentSource source = DocumentSource::base_corpus);

/// Writes atomically (temporary file + rename). Returns the shard id, which
/// is the file stem. Throws IoError naming the path on filesystem failure.
std::string write_shard(std::span<const DocumentEmbedding> entries,
                        const std::filesystem::path& path, ShardFlags flags = {});

/// Reads and verifies a shard file; the source is inferred from the file
/// name prefix (see source_for_shard).
Shard read_shard(const std::filesystem::path& path);

/// "upload-*" -> user_upload, "import-*" -> federated_import, otherwise
/// base_corpus.
DocumentSource source_for_shard(const std::filesystem::path& path) noexcept;

/// f32 -> f16 -> f32 as the f16 payload would store it.
float round_trip_f16(float value) noexcept;

}  // namespace ras::store
