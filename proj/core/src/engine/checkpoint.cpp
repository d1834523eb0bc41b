// SPDX-License-Identifier: Apache-2.0
#include "msnf/engine/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "msnf/error.hpp"

namespace msnf {

namespace {

void append_hex(std::string& line, double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::hex);
  line.append(buf, res.ptr);
}

double parse_hex(std::string_view tok, std::size_t line_no) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v, std::chars_format::hex);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw FormatError("checkpoint line " + std::to_string(line_no) + ": bad value '" + std::string(tok) + "'");
  }
  return v;
}

}  // namespace

const Parameter* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

void write_checkpoint(std::ostream& out, const std::map<std::string, std::string>& meta,
                      const ParameterStore& store) {
  out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  for (const auto& [k, v] : meta) {
    if (k.find_first_of(" \t\n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw ContractError("checkpoint meta key/value must be single-line, key without spaces: '" + k + "'");
    }
    out << "meta " << k << ' ' << v << '\n';
  }
  std::string line;
  for (const auto& p : store.entries()) {
    out << "tensor " << p.name << ' ' << (p.trainable ? 1 : 0) << ' ' << p.value.rank();
    for (auto d : p.value.shape()) out << ' ' << d;
    out << '\n';
    line.clear();
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      if (i) line.push_back(' ');
      append_hex(line, p.value[i]);
    }
    out << line << '\n';
  }
  out << "end\n";
}

void write_checkpoint(const std::filesystem::path& path, const std::map<std::string, std::string>& meta,
                      const ParameterStore& store) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open checkpoint for writing: " + path.string());
  write_checkpoint(out, meta, store);
  if (!out) throw FormatError("failed writing checkpoint: " + path.string());
}

Checkpoint read_checkpoint(std::istream& in) {
  Checkpoint ckpt;
  std::string line;
  std::size_t line_no = 0;
  auto next = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    return true;
  };
  if (!next()) throw FormatError("checkpoint is empty");
  {
    std::istringstream hs(line);
    std::string magic;
    int version = 0;
    hs >> magic >> version;
    if (magic != kCheckpointMagic) throw FormatError("not a checkpoint (bad header)");
    if (version != kCheckpointVersion) {
      throw FormatError("unsupported checkpoint version " + std::to_string(version));
    }
  }
  bool ended = false;
  while (next()) {
    if (line == "end") {
      ended = true;
      break;
    }
    if (line.rfind("meta ", 0) == 0) {
      const auto sp = line.find(' ', 5);
      if (sp == std::string::npos) {
        ckpt.meta[line.substr(5)] = "";
      } else {
        ckpt.meta[line.substr(5, sp - 5)] = line.substr(sp + 1);
      }
      continue;
    }
    if (line.rfind("tensor ", 0) != 0) {
      throw FormatError("checkpoint line " + std::to_string(line_no) + ": unexpected '" + line + "'");
    }
    std::istringstream ts(line.substr(7));
    Parameter p;
    int trainable = 0;
    std::size_t rank = 0;
    if (!(ts >> p.name >> trainable >> rank) || rank == 0) {
      throw FormatError("checkpoint line " + std::to_string(line_no) + ": bad tensor header");
    }
    Shape shape(rank);
    for (auto& d : shape) {
      if (!(ts >> d)) throw FormatError("checkpoint line " + std::to_string(line_no) + ": bad tensor shape");
    }
    if (!next()) throw FormatError("checkpoint truncated in tensor '" + p.name + "'");
    std::vector<double> values;
    values.reserve(shape_size(shape));
    std::string_view rest(line);
    while (!rest.empty()) {
      const auto sp = rest.find(' ');
      values.push_back(parse_hex(rest.substr(0, sp), line_no));
      if (sp == std::string_view::npos) break;
      rest.remove_prefix(sp + 1);
    }
    if (values.size() != shape_size(shape)) {
      throw FormatError("checkpoint tensor '" + p.name + "' declares " + shape_string(shape) + " but has " +
                        std::to_string(values.size()) + " values");
    }
    p.value = Tensor(std::move(shape), std::move(values));
    p.trainable = trainable != 0;
    ckpt.tensors.push_back(std::move(p));
  }
  if (!ended) throw FormatError("checkpoint truncated (missing end marker)");
  return ckpt;
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint: " + path.string());
  return read_checkpoint(in);
}

void load_into(const Checkpoint& ckpt, ParameterStore& store) {
  std::vector<std::string> problems;
  for (const auto& p : store.entries()) {
    const Parameter* c = ckpt.find(p.name);
    if (!c) {
      problems.push_back("missing " + p.name + " (expected " + shape_string(p.value.shape()) + ")");
    } else if (c->value.shape() != p.value.shape()) {
      problems.push_back(p.name + ": expected " + shape_string(p.value.shape()) + ", actual " +
                         shape_string(c->value.shape()));
    }
  }
  for (const auto& c : ckpt.tensors) {
    if (!store.contains(c.name)) problems.push_back("unexpected " + c.name + " " + shape_string(c.value.shape()));
  }
  if (!problems.empty()) {
    std::string msg = "checkpoint does not match model:";
    for (const auto& s : problems) msg += "\n  " + s;
    throw DimensionError(msg);
  }
  for (auto& p : store.entries()) {
    const Parameter* c = ckpt.find(p.name);
    std::copy(c->value.values().begin(), c->value.values().end(), p.value.values().begin());
    p.value.zero_grad();
  }
}

}  // namespace msnf
