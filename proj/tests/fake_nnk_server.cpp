// SPDX-License-Identifier: Apache-2.0
//
// Brute-force nearest-neighbour server speaking the subprocess protocol on
// stdin/stdout.

#include <iostream>
#include <limits>

#include "protoscene/nn/packed_cloud.hpp"

using namespace protoscene::nn;

namespace {

NNResult nearest(const PackedCloud& q, const PackedCloud& r) {
  NNResult out;
  if (r.count == 0) {
    out.status = Status::kEmptyReference;
    return out;
  }
  if (q.dim != r.dim) {
    out.status = Status::kDimMismatch;
    return out;
  }
  for (std::uint32_t i = 0; i < q.count; ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t arg = 0;
    for (std::uint32_t j = 0; j < r.count; ++j) {
      double d = 0.0;
      for (int c = 0; c < q.dim; ++c) {
        const double diff = static_cast<double>(q.coords[i * q.dim + c]) - r.coords[j * r.dim + c];
        d += diff * diff;
      }
      if (d < best) {
        best = d;
        arg = j;
      }
    }
    out.distances.push_back(static_cast<float>(best));
    out.indices.push_back(arg);
  }
  return out;
}

}  // namespace

int main() {
  std::ios::sync_with_stdio(false);
  Request req;
  while (read_request(std::cin, req)) {
    if (req.op == Op::kNearest) {
      write_nearest_response(std::cout, nearest(req.queries.at(0), req.refs.at(0)));
    } else {
      std::vector<ChamferItem> items;
      for (std::size_t p = 0; p < req.queries.size(); ++p) {
        const NNResult r = nearest(req.queries[p], req.refs[p]);
        ChamferItem it;
        it.status = r.status;
        if (r.status == Status::kOk && !r.distances.empty()) {
          double sum = 0.0;
          for (float d : r.distances) sum += d;
          it.value = sum / static_cast<double>(r.distances.size());
        }
        items.push_back(it);
      }
      write_chamfer_response(std::cout, items);
    }
    std::cout.flush();
  }
  return 0;
}
