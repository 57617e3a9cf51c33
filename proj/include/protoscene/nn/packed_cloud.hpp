// SPDX-License-Identifier: Apache-2.0
//
// Wire format of the nearest-neighbour subprocess protocol. See
// docs/nn_kernel_protocol.md for the byte layout.

#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

namespace protoscene::nn {

inline constexpr char kMagic[4] = {'N', 'N', 'K', '1'};
inline constexpr std::uint8_t kProtocolVersion = 1;

enum class Op : std::uint8_t { kNearest = 0, kBatchedChamfer = 1 };

enum class Status : std::uint8_t { kOk = 0, kEmptyReference = 1, kDimMismatch = 2 };

struct PackedCloud {
  std::uint32_t count = 0;
  std::uint8_t dim = 3;
  std::vector<float> coords;  // count * dim, row-major

  bool well_formed() const {
    return (dim == 3 || dim == 4) && coords.size() == static_cast<std::size_t>(count) * dim;
  }
};

struct NNResult {
  Status status = Status::kOk;
  std::vector<float> distances;
  std::vector<std::uint32_t> indices;
};

struct ChamferItem {
  Status status = Status::kOk;
  double value = 0.0;
};

/// Converts row-major doubles to a packed float32 cloud.
PackedCloud pack(std::span<const double> coords, int dim);

void write_packed(std::ostream& out, const PackedCloud& c);
PackedCloud read_packed(std::istream& in);

void write_nearest_request(std::ostream& out, const PackedCloud& query, const PackedCloud& ref);
void write_chamfer_request(std::ostream& out, std::span<const PackedCloud> queries,
                           std::span<const PackedCloud> refs);

/// Reads a response frame. Throws FormatError on bad magic/version.
NNResult read_nearest_response(std::istream& in);
std::vector<ChamferItem> read_chamfer_response(std::istream& in);

/// Server side helpers, used by the test stand-in kernel.
struct Request {
  Op op = Op::kNearest;
  std::vector<PackedCloud> queries;
  std::vector<PackedCloud> refs;
};
/// Returns false on clean end of stream.
bool read_request(std::istream& in, Request& req);
void write_nearest_response(std::ostream& out, const NNResult& r);
void write_chamfer_response(std::ostream& out, std::span<const ChamferItem> items);

}  // namespace protoscene::nn
