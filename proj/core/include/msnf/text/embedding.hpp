// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace msnf::text {

using EmbeddingVector = std::vector<double>;

/// One advising visit. `result` is a cause index, or empty for "no-result".
struct NoteDocument {
  std::string id;
  std::size_t semester = 1;
  std::string reason;
  std::optional<std::size_t> result;
  std::string text;

  friend bool operator==(const NoteDocument&, const NoteDocument&) = default;
};

/// Lowercase, split on anything that is not a letter or digit; a '.' between
/// two digits stays inside the token ("2.1"). Bytes >= 0x80 count as letters.
std::vector<std::string> tokenize(std::string_view text);

/// Signed feature hashing, L2-normalized when nonzero. Order-free.
EmbeddingVector embed_hashing(std::span<const std::string> tokens, std::size_t dim, std::uint64_t seed);

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::size_t dim() const = 0;
  virtual EmbeddingVector embed(const NoteDocument& note) const = 0;
};

/// Hashes the note's tokens plus a "reason:<reason>" token.
class HashingEmbedder final : public Embedder {
 public:
  explicit HashingEmbedder(std::size_t dim = 64, std::uint64_t seed = 0);
  std::size_t dim() const override { return dim_; }
  EmbeddingVector embed(const NoteDocument& note) const override;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

struct PrecomputedEmbeddings {
  std::size_t dim = 0;
  std::map<std::string, EmbeddingVector> vectors;
};

/// Header `dim=<n>`, then `note_id<TAB>v1 v2 ... vn` per line.
PrecomputedEmbeddings load_precomputed(const std::filesystem::path& path);
void write_precomputed(const std::filesystem::path& path, const PrecomputedEmbeddings& table);

/// Looks notes up by id. Construction with `required_ids` throws
/// ContractError listing every id the table lacks.
class PrecomputedEmbedder final : public Embedder {
 public:
  explicit PrecomputedEmbedder(PrecomputedEmbeddings table, std::span<const std::string> required_ids = {});
  std::size_t dim() const override { return table_.dim; }
  EmbeddingVector embed(const NoteDocument& note) const override;

 private:
  PrecomputedEmbeddings table_;
};

double cosine_similarity(std::span<const double> a, std::span<const double> b);

}  // namespace msnf::text
