// SPDX-License-Identifier: Apache-2.0
#include "msnf/text/embedding.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "msnf/engine/rng.hpp"
#include "msnf/error.hpp"

namespace msnf::text {

namespace {

bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }
bool is_word(unsigned char c) { return is_digit(c) || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80; }

// FNV-1a; std::hash differs between standard libraries.
std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (is_word(c)) {
      cur.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
      continue;
    }
    if (c == '.' && !cur.empty() && is_digit(static_cast<unsigned char>(cur.back())) && i + 1 < text.size() &&
        is_digit(static_cast<unsigned char>(text[i + 1]))) {
      cur.push_back('.');
      continue;
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

EmbeddingVector embed_hashing(std::span<const std::string> tokens, std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw ParameterError("embedding dim must be at least 1");
  EmbeddingVector v(dim, 0.0);
  for (const auto& tok : tokens) {
    const std::uint64_t h = fnv1a(tok);
    const std::uint64_t slot = mix64(h ^ seed);
    const std::uint64_t sign = mix64(h ^ mix64(seed ^ 0x5bd1e9955bd1e995ULL));
    v[slot % dim] += (sign & 1) ? 1.0 : -1.0;
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
  }
  return v;
}

HashingEmbedder::HashingEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim == 0) throw ParameterError("embedding dim must be at least 1");
}

EmbeddingVector HashingEmbedder::embed(const NoteDocument& note) const {
  auto tokens = tokenize(note.text);
  if (!note.reason.empty()) tokens.push_back("reason:" + note.reason);
  return embed_hashing(tokens, dim_, seed_);
}

PrecomputedEmbeddings load_precomputed(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open embedding file " + path.string());
  PrecomputedEmbeddings t;
  std::string line;
  if (!std::getline(in, line) || line.rfind("dim=", 0) != 0) {
    throw FormatError(path.string() + ":1: expected header 'dim=<n>'");
  }
  {
    const char* b = line.data() + 4;
    const char* e = line.data() + line.size();
    auto res = std::from_chars(b, e, t.dim);
    if (res.ec != std::errc() || res.ptr != e || t.dim == 0) {
      throw FormatError(path.string() + ":1: bad dim header '" + line + "'");
    }
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected '<note_id>\\t<values>'");
    }
    std::string id = line.substr(0, tab);
    EmbeddingVector v;
    const char* p = line.data() + tab + 1;
    const char* end = line.data() + line.size();
    while (p < end) {
      while (p < end && *p == ' ') ++p;
      if (p == end) break;
      double x = 0.0;
      auto res = std::from_chars(p, end, x);
      if (res.ec != std::errc()) {
        throw FormatError(path.string() + ":" + std::to_string(lineno) + ": malformed number");
      }
      v.push_back(x);
      p = res.ptr;
    }
    if (v.size() != t.dim) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": note '" + id + "' has " +
                        std::to_string(v.size()) + " values, header declares dim=" + std::to_string(t.dim));
    }
    if (!t.vectors.emplace(std::move(id), std::move(v)).second) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": duplicate note id");
    }
  }
  return t;
}

void write_precomputed(const std::filesystem::path& path, const PrecomputedEmbeddings& table) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write embedding file " + path.string());
  out << "dim=" << table.dim << '\n';
  char buf[64];
  for (const auto& [id, v] : table.vectors) {
    if (v.size() != table.dim) throw DimensionError("embedding for '" + id + "' does not have dim " + std::to_string(table.dim));
    out << id << '\t';
    for (std::size_t i = 0; i < v.size(); ++i) {
      auto res = std::to_chars(buf, buf + sizeof(buf), v[i]);
      if (i) out << ' ';
      out.write(buf, res.ptr - buf);
    }
    out << '\n';
  }
  if (!out) throw FormatError("failed writing " + path.string());
}

PrecomputedEmbedder::PrecomputedEmbedder(PrecomputedEmbeddings table, std::span<const std::string> required_ids)
    : table_(std::move(table)) {
  std::vector<std::string> missing;
  for (const auto& id : required_ids) {
    if (!table_.vectors.count(id)) missing.push_back(id);
  }
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << missing.size() << " note id(s) have no precomputed embedding:";
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) msg << ' ' << missing[i];
    if (missing.size() > 20) msg << " ...";
    throw ContractError(msg.str());
  }
}

EmbeddingVector PrecomputedEmbedder::embed(const NoteDocument& note) const {
  auto it = table_.vectors.find(note.id);
  if (it == table_.vectors.end()) throw ContractError("no precomputed embedding for note '" + note.id + "'");
  return it->second;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("cosine similarity of vectors with different dims");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return ab / std::sqrt(aa * bb);
}

}  // namespace msnf::text
