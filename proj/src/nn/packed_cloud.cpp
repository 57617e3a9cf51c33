// SPDX-License-Identifier: Apache-2.0

#include "protoscene/nn/packed_cloud.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <string>

#include "protoscene/errors.hpp"

namespace protoscene::nn {

static_assert(std::endian::native == std::endian::little,
              "wire format helpers assume a little-endian host");

namespace {

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw FormatError("nn wire: truncated frame");
  return v;
}

void put_header(std::ostream& out) {
  out.write(kMagic, 4);
  put<std::uint8_t>(out, kProtocolVersion);
}

void expect_header(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4)) throw FormatError("nn wire: truncated frame");
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("nn wire: bad magic");
  if (get<std::uint8_t>(in) != kProtocolVersion) throw FormatError("nn wire: unsupported version");
}

Status to_status(std::uint8_t b) {
  if (b > static_cast<std::uint8_t>(Status::kDimMismatch)) {
    throw FormatError("nn wire: unknown status byte " + std::to_string(b));
  }
  return static_cast<Status>(b);
}

}  // namespace

PackedCloud pack(std::span<const double> coords, int dim) {
  PackedCloud c;
  c.dim = static_cast<std::uint8_t>(dim);
  c.count = static_cast<std::uint32_t>(coords.size() / static_cast<std::size_t>(dim));
  c.coords.resize(coords.size());
  std::transform(coords.begin(), coords.end(), c.coords.begin(),
                 [](double v) { return static_cast<float>(v); });
  return c;
}

void write_packed(std::ostream& out, const PackedCloud& c) {
  put<std::uint32_t>(out, c.count);
  put<std::uint8_t>(out, c.dim);
  out.write(reinterpret_cast<const char*>(c.coords.data()),
            static_cast<std::streamsize>(c.coords.size() * sizeof(float)));
}

PackedCloud read_packed(std::istream& in) {
  PackedCloud c;
  c.count = get<std::uint32_t>(in);
  c.dim = get<std::uint8_t>(in);
  c.coords.resize(static_cast<std::size_t>(c.count) * c.dim);
  if (!in.read(reinterpret_cast<char*>(c.coords.data()),
               static_cast<std::streamsize>(c.coords.size() * sizeof(float)))) {
    throw FormatError("nn wire: truncated cloud");
  }
  return c;
}

void write_nearest_request(std::ostream& out, const PackedCloud& query, const PackedCloud& ref) {
  put_header(out);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(Op::kNearest));
  write_packed(out, query);
  write_packed(out, ref);
  out.flush();
}

void write_chamfer_request(std::ostream& out, std::span<const PackedCloud> queries,
                           std::span<const PackedCloud> refs) {
  put_header(out);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(Op::kBatchedChamfer));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(queries.size()));
  for (std::size_t i = 0; i < queries.size(); ++i) {
    write_packed(out, queries[i]);
    write_packed(out, refs[i]);
  }
  out.flush();
}

NNResult read_nearest_response(std::istream& in) {
  expect_header(in);
  NNResult r;
  r.status = to_status(get<std::uint8_t>(in));
  const auto n = get<std::uint32_t>(in);
  r.distances.resize(n);
  r.indices.resize(n);
  if (n > 0) {
    in.read(reinterpret_cast<char*>(r.distances.data()), static_cast<std::streamsize>(n * sizeof(float)));
    in.read(reinterpret_cast<char*>(r.indices.data()),
            static_cast<std::streamsize>(n * sizeof(std::uint32_t)));
    if (!in) throw FormatError("nn wire: truncated result");
  }
  return r;
}

std::vector<ChamferItem> read_chamfer_response(std::istream& in) {
  expect_header(in);
  to_status(get<std::uint8_t>(in));  // overall status; the per-pair statuses are authoritative
  const auto n = get<std::uint32_t>(in);
  std::vector<ChamferItem> items(n);
  for (auto& it : items) {
    it.status = to_status(get<std::uint8_t>(in));
    it.value = get<double>(in);
  }
  return items;
}

bool read_request(std::istream& in, Request& req) {
  char magic[4];
  if (!in.read(magic, 4)) return false;
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("nn wire: bad magic");
  if (get<std::uint8_t>(in) != kProtocolVersion) throw FormatError("nn wire: unsupported version");
  req = Request{};
  const auto op = get<std::uint8_t>(in);
  if (op > static_cast<std::uint8_t>(Op::kBatchedChamfer)) throw FormatError("nn wire: unknown op " + std::to_string(op));
  req.op = static_cast<Op>(op);
  std::uint32_t pairs = 1;
  if (req.op == Op::kBatchedChamfer) pairs = get<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < pairs; ++i) {
    req.queries.push_back(read_packed(in));
    req.refs.push_back(read_packed(in));
  }
  return true;
}

void write_nearest_response(std::ostream& out, const NNResult& r) {
  put_header(out);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(r.status));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(r.distances.size()));
  out.write(reinterpret_cast<const char*>(r.distances.data()),
            static_cast<std::streamsize>(r.distances.size() * sizeof(float)));
  out.write(reinterpret_cast<const char*>(r.indices.data()),
            static_cast<std::streamsize>(r.indices.size() * sizeof(std::uint32_t)));
  out.flush();
}

void write_chamfer_response(std::ostream& out, std::span<const ChamferItem> items) {
  Status overall = Status::kOk;
  for (const auto& it : items) {
    if (it.status != Status::kOk) {
      overall = it.status;
      break;
    }
  }
  put_header(out);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(overall));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(items.size()));
  for (const auto& it : items) {
    put<std::uint8_t>(out, static_cast<std::uint8_t>(it.status));
    put<double>(out, it.value);
  }
  out.flush();
}

}  // namespace protoscene::nn
