// SPDX-License-Identifier: Apache-2.0

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <cstring>
#include <random>
#include <sstream>

#include "doctest.h"
#include "protoscene/errors.hpp"
#include "protoscene/nn/backend.hpp"
#include "protoscene/nn/packed_cloud.hpp"

using namespace protoscene;
using namespace protoscene::nn;

namespace {

// Coordinates on a 1/8 lattice are exact in float32, so every backend sees
// the same values and the same ties.
std::vector<double> lattice(std::mt19937_64& rng, std::size_t n, int dim) {
  std::uniform_int_distribution<int> u(-16, 16);
  std::vector<double> v(n * dim);
  for (auto& x : v) x = u(rng) / 8.0;
  return v;
}

NearestResult loop(const std::vector<double>& q, const std::vector<double>& r, int dim) {
  NearestResult out;
  for (std::size_t i = 0; i < q.size() / dim; ++i) {
    double best = 1e300;
    std::uint32_t arg = 0;
    for (std::size_t j = 0; j < r.size() / dim; ++j) {
      double d = 0;
      for (int c = 0; c < dim; ++c) d += (q[i * dim + c] - r[j * dim + c]) * (q[i * dim + c] - r[j * dim + c]);
      if (d < best) {
        best = d;
        arg = static_cast<std::uint32_t>(j);
      }
    }
    out.dist.push_back(best);
    out.index.push_back(arg);
  }
  return out;
}

std::string bytes_of(const NearestResult& r) {
  std::string s(reinterpret_cast<const char*>(r.dist.data()), r.dist.size() * sizeof(double));
  s.append(reinterpret_cast<const char*>(r.index.data()), r.index.size() * sizeof(std::uint32_t));
  return s;
}

}  // namespace

TEST_CASE("internal backend examples") {
  const std::vector<double> q = {0, 0, 0};
  const std::vector<double> r = {1, 0, 0, 0, 2, 0};
  const auto res = nearest(q, r, 3, internal_backend());
  CHECK(res.dist[0] == 1.0);
  CHECK(res.index[0] == 0);
  std::mt19937_64 rng(1);
  const auto same = lattice(rng, 50, 4);
  const auto self = nearest(same, same, 4, internal_backend());
  for (std::size_t i = 0; i < 50; ++i) CHECK(self.dist[i] == 0.0);
  const std::vector<double> dup(30, 0.25);
  const auto d = nearest(lattice(rng, 7, 3), dup, 3, internal_backend());
  for (auto i : d.index) CHECK(i == 0);
}

TEST_CASE("internal backend matches a scalar loop") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const int dim = 3 + t % 2;
    const auto q = lattice(rng, 100, dim), r = lattice(rng, 200, dim);
    const auto got = nearest(q, r, dim, internal_backend());
    const auto want = loop(q, r, dim);
    CHECK(got.index == want.index);
    CHECK(got.dist == want.dist);
  }
}

TEST_CASE("backend argument errors") {
  CHECK_THROWS_AS(internal_backend().build({}, 3), DomainError);
  const std::vector<double> r = {1, 2, 3};
  CHECK_THROWS_AS(internal_backend().build(r, 5), ParameterError);
  CHECK_THROWS_AS(make_backend("gpu"), UserError);
  CHECK_THROWS_AS(make_backend("shared-lib:/nonexistent/libnnk.so"), UserError);
  CHECK(make_backend("internal")->name() == "internal");
  CHECK(make_backend("")->name() == "internal");
}

TEST_CASE("wire format framing") {
  const PackedCloud q = pack(std::vector<double>{0, 0, 0, 1, 1, 1}, 3);
  const PackedCloud r = pack(std::vector<double>{0.5, 0.5, 0.5, 0.25, 0.5, 1, 0, 0}, 4);
  CHECK(q.well_formed());
  CHECK(r.count == 2);
  std::ostringstream os;
  write_nearest_request(os, q, r);
  const std::string b = os.str();
  REQUIRE(b.size() == 4 + 1 + 1 + (4 + 1 + 24) + (4 + 1 + 32));
  CHECK(b.substr(0, 4) == "NNK1");
  CHECK(static_cast<unsigned char>(b[4]) == kProtocolVersion);
  CHECK(static_cast<unsigned char>(b[5]) == 0);  // op: nearest
  std::uint32_t count;
  std::memcpy(&count, b.data() + 6, 4);
  CHECK(count == 2);
  CHECK(static_cast<unsigned char>(b[10]) == 3);
  std::istringstream is(b);
  Request req;
  REQUIRE(read_request(is, req));
  CHECK(req.op == Op::kNearest);
  CHECK(req.queries[0].coords == q.coords);
  CHECK(req.refs[0].dim == 4);
  CHECK_FALSE(read_request(is, req));

  std::ostringstream bad;
  bad << "NNK2" << char(1) << char(0);
  std::istringstream bi(bad.str());
  CHECK_THROWS_AS(read_request(bi, req), FormatError);
  std::string wrong_version = b;
  wrong_version[4] = 9;
  std::istringstream wi(wrong_version);
  CHECK_THROWS_AS(read_request(wi, req), FormatError);
}

TEST_CASE("wire format responses and status bytes") {
  NNResult r;
  r.distances = {1.0f, 0.5f};
  r.indices = {3, 7};
  std::ostringstream os;
  write_nearest_response(os, r);
  std::istringstream is(os.str());
  const NNResult back = read_nearest_response(is);
  CHECK(back.status == Status::kOk);
  CHECK(back.indices == r.indices);
  CHECK(back.distances == r.distances);

  for (std::uint8_t st : {1, 2}) {
    std::string frame = "NNK1";
    frame += char(1);
    frame += char(st);
    frame.append(4, '\0');
    std::istringstream fs(frame);
    CHECK(static_cast<int>(read_nearest_response(fs).status) == st);
  }
  std::string frame = "NNK1";
  frame += char(1);
  frame += char(7);
  frame.append(4, '\0');
  std::istringstream fs(frame);
  CHECK_THROWS_AS(read_nearest_response(fs), FormatError);

  std::vector<ChamferItem> items(3);
  items[0].value = 0.25;
  items[1].status = Status::kEmptyReference;
  items[2].value = 2.0;
  std::ostringstream co;
  write_chamfer_response(co, items);
  CHECK(static_cast<unsigned char>(co.str()[5]) == 1);  // overall status
  std::istringstream ci(co.str());
  const auto got = read_chamfer_response(ci);
  REQUIRE(got.size() == 3);
  CHECK(got[0].value == 0.25);
  CHECK(got[1].status == Status::kEmptyReference);
  CHECK(got[2].value == 2.0);

  std::vector<PackedCloud> qs = {pack(std::vector<double>{0, 0, 0}, 3)}, rs = {pack(std::vector<double>{1, 0, 0}, 3)};
  std::ostringstream cr;
  write_chamfer_request(cr, qs, rs);
  std::istringstream cri(cr.str());
  Request req;
  REQUIRE(read_request(cri, req));
  CHECK(req.op == Op::kBatchedChamfer);
  CHECK(req.queries.size() == 1);
}

TEST_CASE("shared-library and subprocess backends agree with the internal one") {
  const auto lib = make_backend(std::string("shared-lib:") + FAKE_NNK_LIB);
  const auto sub = make_backend(std::string("subprocess:") + FAKE_NNK_SERVER);
  CHECK(lib->name() == "shared-lib");
  CHECK(sub->name() == "subprocess");
  std::mt19937_64 rng(3);
  for (int t = 0; t < 30; ++t) {
    const int dim = 3 + t % 2;
    const auto q = lattice(rng, 1 + rng() % 60, dim);
    const auto r = lattice(rng, 1 + rng() % 80, dim);
    const auto a = nearest(q, r, dim, internal_backend());
    const auto b = nearest(q, r, dim, *lib);
    const auto c = nearest(q, r, dim, *sub);
    CHECK(a.index == b.index);
    CHECK(a.dist == b.dist);
    CHECK(bytes_of(b) == bytes_of(c));
  }
  CHECK_THROWS_AS(lib->build({}, 3), DomainError);
  CHECK_THROWS_AS(sub->build(std::vector<double>{1, 2}, 2), ParameterError);
  // The foreign kernel only speaks dims 3 and 4.
  CHECK_THROWS_AS(lib->build(std::vector<double>{1, 2}, 2), ParameterError);
}

TEST_CASE("EP_NN_KERNEL selects the default backend") {
  const std::pair<std::string, std::string> cases[] = {
      {"", "internal"},
      {"internal", "internal"},
      {std::string("shared-lib:") + FAKE_NNK_LIB, "shared-lib"},
      {std::string("subprocess:") + FAKE_NNK_SERVER, "subprocess"},
  };
  for (const auto& [env, want] : cases) {
    const pid_t pid = fork();
    REQUIRE(pid >= 0);
    if (pid == 0) {
      if (env.empty()) {
        unsetenv("EP_NN_KERNEL");
      } else {
        setenv("EP_NN_KERNEL", env.c_str(), 1);
      }
      int code = 1;
      try {
        code = default_backend().name() == want ? 0 : 1;
      } catch (...) {
        code = 2;
      }
      _exit(code);
    }
    int status = 0;
    waitpid(pid, &status, 0);
    CHECK_MESSAGE(WIFEXITED(status), env);
    CHECK_MESSAGE(WEXITSTATUS(status) == 0, env);
  }
}
