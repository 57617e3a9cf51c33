// SPDX-License-Identifier: Apache-2.0

#include "protoscene/training/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "json.hpp"
#include "protoscene/errors.hpp"

namespace protoscene::train {

namespace {

using nlohmann::json;

void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw FormatError("checkpoint: truncated header");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void write_doubles(std::ostream& os, const std::vector<double>& d) {
  static_assert(sizeof(double) == 8);
  std::vector<unsigned char> buf(d.size() * 8);
  for (std::size_t i = 0; i < d.size(); ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, &d[i], 8);
    for (int j = 0; j < 8; ++j) buf[i * 8 + j] = static_cast<unsigned char>(bits >> (8 * j));
  }
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const TrainConfig& config, const TrainState& state,
                     const model::ParamStore& params, const Adam* adam) {
  json header;
  header["format"] = "protoscene-checkpoint";
  header["version"] = 1;
  header["config"] = serialize_config(config);
  header["state"] = {{"stage", state.stage},
                     {"epochs_in_stage", state.epochs_in_stage},
                     {"global_step", state.global_step},
                     {"stage_step", state.stage_step},
                     {"epoch_losses", state.epoch_losses},
                     {"finished", state.finished}};
  json table = json::array();
  std::vector<const std::vector<double>*> payload;
  std::uint64_t offset = 0;
  auto add = [&](const std::string& name, const std::vector<std::size_t>& shape, const std::vector<double>& data) {
    table.push_back({{"name", name}, {"shape", shape}, {"offset", offset}, {"count", data.size()}});
    payload.push_back(&data);
    offset += data.size();
  };
  for (std::size_t i = 0; i < params.count(); ++i) add(params[i].name, params[i].shape, params[i].value);
  json steps = json::object();
  if (adam) {
    for (std::size_t i = 0; i < params.count(); ++i) {
      add("adam.m." + params[i].name, params[i].shape, adam->slots()[i].m);
      add("adam.v." + params[i].name, params[i].shape, adam->slots()[i].v);
      steps[params[i].name] = adam->slots()[i].t;
    }
  }
  header["adam_steps"] = steps;
  header["tensors"] = table;
  const std::string text = header.dump();

  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw UserError("cannot write checkpoint " + tmp.string());
    os.write(kCheckpointMagic, 8);
    write_u64(os, text.size());
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto* d : payload) write_doubles(os, *d);
    if (!os) throw UserError("write failed for checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw UserError("cannot open checkpoint " + path.string());
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw FormatError(path.string() + " is not a checkpoint");
  }
  const std::uint64_t len = read_u64(is);
  if (len > (1ull << 32)) throw FormatError("checkpoint: implausible header length");
  std::string text(len, '\0');
  if (!is.read(text.data(), static_cast<std::streamsize>(len))) throw FormatError("checkpoint: truncated header");
  const auto payload_start = is.tellg();

  Checkpoint c;
  try {
    const json h = json::parse(text);
    if (h.at("version").get<int>() != 1) throw FormatError("checkpoint: unsupported version");
    c.config = parse_config(h.at("config").get<std::string>());
    const json& s = h.at("state");
    c.state.stage = s.at("stage");
    c.state.epochs_in_stage = s.at("epochs_in_stage");
    c.state.global_step = s.at("global_step");
    c.state.stage_step = s.at("stage_step");
    c.state.epoch_losses = s.at("epoch_losses").get<std::vector<double>>();
    c.state.finished = s.at("finished");
    for (const auto& [name, t] : h.at("adam_steps").items()) c.adam_steps[name] = t.get<std::uint64_t>();
    for (const json& t : h.at("tensors")) {
      NamedArray a;
      a.shape = t.at("shape").get<std::vector<std::size_t>>();
      const auto offset = t.at("offset").get<std::uint64_t>();
      const auto count = t.at("count").get<std::uint64_t>();
      a.data.resize(count);
      is.seekg(payload_start + static_cast<std::streamoff>(offset * 8));
      std::vector<unsigned char> buf(count * 8);
      if (!is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
        throw FormatError("checkpoint: truncated payload");
      }
      for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t bits = 0;
        for (int j = 0; j < 8; ++j) bits |= static_cast<std::uint64_t>(buf[i * 8 + j]) << (8 * j);
        std::memcpy(&a.data[i], &bits, 8);
      }
      c.arrays[t.at("name").get<std::string>()] = std::move(a);
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }
  return c;
}

void restore(const Checkpoint& c, model::ParamStore& params, Adam* adam) {
  auto fetch = [&](const std::string& name, const model::Tensor& t) -> const NamedArray& {
    const auto it = c.arrays.find(name);
    if (it == c.arrays.end()) throw FormatError("checkpoint lacks tensor " + name);
    if (it->second.shape != t.shape) throw FormatError("checkpoint tensor " + name + " has the wrong shape");
    return it->second;
  };
  for (std::size_t i = 0; i < params.count(); ++i) {
    params[i].value = fetch(params[i].name, params[i]).data;
  }
  if (!adam) return;
  for (std::size_t i = 0; i < params.count(); ++i) {
    adam->slots()[i].m = fetch("adam.m." + params[i].name, params[i]).data;
    adam->slots()[i].v = fetch("adam.v." + params[i].name, params[i]).data;
    const auto it = c.adam_steps.find(params[i].name);
    adam->slots()[i].t = it == c.adam_steps.end() ? 0 : it->second;
  }
}

}  // namespace protoscene::train
