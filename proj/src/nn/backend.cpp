// SPDX-License-Identifier: Apache-2.0

#include "protoscene/nn/backend.hpp"

#include <dlfcn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <csignal>
#include <cstdlib>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <streambuf>

#include "protoscene/errors.hpp"
#include "protoscene/nn/nnk_abi.h"
#include "protoscene/nn/packed_cloud.hpp"
#include "protoscene/simd/kernels.hpp"

namespace protoscene::nn {

namespace {

void check_build_args(std::span<const double> ref, int dim) {
  if (dim < 1 || dim > 4) throw ParameterError("nearest: dim must be in 1..4");
  if (ref.empty()) throw DomainError("nearest: empty reference cloud");
  if (ref.size() % static_cast<std::size_t>(dim) != 0) {
    throw ParameterError("nearest: reference size is not a multiple of dim");
  }
}

double sq_dist(const double* a, const double* b, int dim) {
  double acc = 0.0;
  for (int d = 0; d < dim; ++d) {
    const double diff = a[d] - b[d];
    acc = acc + diff * diff;
  }
  return acc;
}

class InternalIndex final : public ReferenceIndex {
 public:
  InternalIndex(std::span<const double> ref, int dim)
      : dim_(dim), count_(ref.size() / static_cast<std::size_t>(dim)), soa_(ref.size()) {
    for (std::size_t i = 0; i < count_; ++i) {
      for (int d = 0; d < dim; ++d) soa_[static_cast<std::size_t>(d) * count_ + i] = ref[i * dim + d];
    }
  }
  std::size_t size() const override { return count_; }
  int dim() const override { return dim_; }
  void query(std::span<const double> queries, std::span<double> dist,
             std::span<std::uint32_t> index) const override {
    const std::size_t n = queries.size() / static_cast<std::size_t>(dim_);
    if (n == 0) return;
    simd::kernels().nearest(queries.data(), n, dim_, soa_.data(), count_, count_, dist.data(),
                            index.data());
  }

 private:
  int dim_;
  std::size_t count_;
  std::vector<double> soa_;
};

class InternalBackend final : public Backend {
 public:
  std::string_view name() const override { return "internal"; }
  std::unique_ptr<ReferenceIndex> build(std::span<const double> ref, int dim) const override {
    check_build_args(ref, dim);
    return std::make_unique<InternalIndex>(ref, dim);
  }
};

void throw_status(int status) {
  if (status == NNK_EMPTY_REFERENCE) throw DomainError("nn kernel: empty reference");
  if (status == NNK_DIM_MISMATCH) throw ParameterError("nn kernel: dimension mismatch");
  throw std::runtime_error("nn kernel: status " + std::to_string(status));
}

// Base for out-of-process / foreign backends: keeps a double copy of the
// reference so distances can be re-evaluated exactly from returned indices.
class ExternalIndexBase : public ReferenceIndex {
 public:
  ExternalIndexBase(std::span<const double> ref, int dim)
      : dim_(dim), ref_(ref.begin(), ref.end()) {}
  std::size_t size() const override { return ref_.size() / static_cast<std::size_t>(dim_); }
  int dim() const override { return dim_; }

 protected:
  void finish(std::span<const double> queries, std::span<double> dist,
              std::span<const std::uint32_t> index) const {
    const std::size_t n = queries.size() / static_cast<std::size_t>(dim_);
    for (std::size_t q = 0; q < n; ++q) {
      if (index[q] >= size()) throw std::runtime_error("nn kernel: index out of range");
      dist[q] = sq_dist(queries.data() + q * dim_, ref_.data() + static_cast<std::size_t>(index[q]) * dim_, dim_);
    }
  }
  int dim_;
  std::vector<double> ref_;
};

// ---------------------------------------------------------------- shared lib

struct SharedLibrary {
  void* handle = nullptr;
  nnk_build_tree_fn build = nullptr;
  nnk_query_fn query = nullptr;
  nnk_free_fn free = nullptr;
  nnk_batched_chamfer_fn chamfer = nullptr;

  explicit SharedLibrary(const std::string& path) {
    handle = dlopen(path.c_str(), RTLD_NOW | RTLD_LOCAL);
    if (handle == nullptr) throw UserError("cannot load nn kernel library: " + std::string(dlerror()));
    build = reinterpret_cast<nnk_build_tree_fn>(dlsym(handle, "nnk_build_tree"));
    query = reinterpret_cast<nnk_query_fn>(dlsym(handle, "nnk_query"));
    free = reinterpret_cast<nnk_free_fn>(dlsym(handle, "nnk_free"));
    chamfer = reinterpret_cast<nnk_batched_chamfer_fn>(dlsym(handle, "nnk_batched_chamfer"));
    if (!build || !query || !free || !chamfer) {
      dlclose(handle);
      throw UserError("nn kernel library " + path + " lacks the nnk_* symbols");
    }
  }
  ~SharedLibrary() { dlclose(handle); }
  SharedLibrary(const SharedLibrary&) = delete;
  SharedLibrary& operator=(const SharedLibrary&) = delete;
};

class SharedLibIndex final : public ExternalIndexBase {
 public:
  SharedLibIndex(std::shared_ptr<SharedLibrary> lib, std::span<const double> ref, int dim)
      : ExternalIndexBase(ref, dim), lib_(std::move(lib)) {
    const PackedCloud packed = pack(ref, dim);
    const int st = lib_->build(packed.coords.data(), packed.count, packed.dim, &tree_);
    if (st != NNK_OK) throw_status(st);
  }
  ~SharedLibIndex() override { lib_->free(tree_); }

  void query(std::span<const double> queries, std::span<double> dist,
             std::span<std::uint32_t> index) const override {
    const PackedCloud q = pack(queries, dim_);
    std::vector<float> fdist(q.count);
    const int st = lib_->query(tree_, q.coords.data(), q.count, q.dim, fdist.data(), index.data());
    if (st != NNK_OK) throw_status(st);
    finish(queries, dist, index);
  }

 private:
  std::shared_ptr<SharedLibrary> lib_;
  void* tree_ = nullptr;
};

class SharedLibBackend final : public Backend {
 public:
  explicit SharedLibBackend(const std::string& path) : lib_(std::make_shared<SharedLibrary>(path)) {}
  std::string_view name() const override { return "shared-lib"; }
  std::unique_ptr<ReferenceIndex> build(std::span<const double> ref, int dim) const override {
    check_build_args(ref, dim);
    return std::make_unique<SharedLibIndex>(lib_, ref, dim);
  }

 private:
  std::shared_ptr<SharedLibrary> lib_;
};

// ---------------------------------------------------------------- subprocess

class FdReadBuf final : public std::streambuf {
 public:
  explicit FdReadBuf(int fd) : fd_(fd) {}

 protected:
  int_type underflow() override {
    const ssize_t n = ::read(fd_, buf_, sizeof(buf_));
    if (n <= 0) return traits_type::eof();
    setg(buf_, buf_, buf_ + n);
    return traits_type::to_int_type(buf_[0]);
  }

 private:
  int fd_;
  char buf_[1 << 16];
};

class KernelProcess {
 public:
  explicit KernelProcess(const std::string& path) {
    int to_child[2];
    int from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0) throw std::runtime_error("pipe() failed");
    pid_ = fork();
    if (pid_ < 0) throw std::runtime_error("fork() failed");
    if (pid_ == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      execl(path.c_str(), path.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
    readbuf_ = std::make_unique<FdReadBuf>(read_fd_);
    in_ = std::make_unique<std::istream>(readbuf_.get());
    std::signal(SIGPIPE, SIG_IGN);
  }
  ~KernelProcess() {
    close(write_fd_);
    close(read_fd_);
    int status = 0;
    waitpid(pid_, &status, 0);
  }
  KernelProcess(const KernelProcess&) = delete;
  KernelProcess& operator=(const KernelProcess&) = delete;

  void send(const std::string& bytes) {
    std::size_t off = 0;
    while (off < bytes.size()) {
      const ssize_t n = ::write(write_fd_, bytes.data() + off, bytes.size() - off);
      if (n <= 0) throw std::runtime_error("nn kernel subprocess: write failed");
      off += static_cast<std::size_t>(n);
    }
  }
  std::istream& in() { return *in_; }
  std::mutex& mutex() { return mu_; }

 private:
  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  std::unique_ptr<FdReadBuf> readbuf_;
  std::unique_ptr<std::istream> in_;
  std::mutex mu_;
};

class SubprocessIndex final : public ExternalIndexBase {
 public:
  SubprocessIndex(std::shared_ptr<KernelProcess> proc, std::span<const double> ref, int dim)
      : ExternalIndexBase(ref, dim), proc_(std::move(proc)), packed_(pack(ref, dim)) {}

  void query(std::span<const double> queries, std::span<double> dist,
             std::span<std::uint32_t> index) const override {
    std::ostringstream req;
    write_nearest_request(req, pack(queries, dim_), packed_);
    NNResult r;
    {
      std::lock_guard lock(proc_->mutex());
      proc_->send(req.str());
      r = read_nearest_response(proc_->in());
    }
    if (r.status != Status::kOk) throw_status(static_cast<int>(r.status));
    if (r.indices.size() != index.size()) throw std::runtime_error("nn kernel: result size mismatch");
    std::copy(r.indices.begin(), r.indices.end(), index.begin());
    finish(queries, dist, index);
  }

 private:
  std::shared_ptr<KernelProcess> proc_;
  PackedCloud packed_;
};

class SubprocessBackend final : public Backend {
 public:
  explicit SubprocessBackend(const std::string& path) : proc_(std::make_shared<KernelProcess>(path)) {}
  std::string_view name() const override { return "subprocess"; }
  std::unique_ptr<ReferenceIndex> build(std::span<const double> ref, int dim) const override {
    check_build_args(ref, dim);
    if (dim != 3 && dim != 4) throw ParameterError("subprocess nn kernel supports dim 3 or 4");
    return std::make_unique<SubprocessIndex>(proc_, ref, dim);
  }

 private:
  std::shared_ptr<KernelProcess> proc_;
};

}  // namespace

const Backend& internal_backend() {
  static const InternalBackend backend;
  return backend;
}

std::unique_ptr<Backend> make_backend(std::string_view spec) {
  if (spec.empty() || spec == "internal") return std::make_unique<InternalBackend>();
  constexpr std::string_view kShared = "shared-lib:";
  constexpr std::string_view kSub = "subprocess:";
  if (spec.starts_with(kShared)) {
    return std::make_unique<SharedLibBackend>(std::string(spec.substr(kShared.size())));
  }
  if (spec.starts_with(kSub)) {
    return std::make_unique<SubprocessBackend>(std::string(spec.substr(kSub.size())));
  }
  throw UserError("EP_NN_KERNEL: unrecognised backend '" + std::string(spec) + "'");
}

const Backend& default_backend() {
  static const std::unique_ptr<Backend> backend = [] {
    const char* env = std::getenv("EP_NN_KERNEL");
    return make_backend(env == nullptr ? std::string_view{} : std::string_view{env});
  }();
  return *backend;
}

NearestResult nearest(std::span<const double> queries, std::span<const double> ref, int dim,
                      const Backend& backend) {
  const auto index = backend.build(ref, dim);
  NearestResult r;
  const std::size_t n = queries.size() / static_cast<std::size_t>(dim);
  r.dist.resize(n);
  r.index.resize(n);
  index->query(queries, r.dist, r.index);
  return r;
}

}  // namespace protoscene::nn
