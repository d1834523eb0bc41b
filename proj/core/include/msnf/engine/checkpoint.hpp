// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "msnf/engine/parameters.hpp"

namespace msnf {

/// Text checkpoint: a header line, `meta <key> <value>` lines, then one
/// `tensor <name> <trainable> <rank> <dims...>` line per entry followed by a
/// line of hexadecimal floats, so values round-trip bit for bit.
struct Checkpoint {
  std::map<std::string, std::string> meta;
  std::vector<Parameter> tensors;

  const Parameter* find(const std::string& name) const;
};

inline constexpr const char* kCheckpointMagic = "msnf-checkpoint";
inline constexpr int kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const std::map<std::string, std::string>& meta,
                      const ParameterStore& store);
void write_checkpoint(const std::filesystem::path& path, const std::map<std::string, std::string>& meta,
                      const ParameterStore& store);

Checkpoint read_checkpoint(std::istream& in);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Copies every entry of `ckpt` into the same-named entry of `store`. Throws
/// DimensionError listing every missing, extra or mis-shaped tensor.
void load_into(const Checkpoint& ckpt, ParameterStore& store);

}  // namespace msnf
