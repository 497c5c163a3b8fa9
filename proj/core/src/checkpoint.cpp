#include <bit>
#include <cstring>
#include <fstream>

#include "ulbench/train.hpp"

namespace ulbench {

namespace {

constexpr char kMagic[8] = {'U', 'L', 'B', 'C', 'K', '0', '0', '1'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload is little-endian");

template <typename T>
void put(std::string& buf, const T& v) {
  const auto* p = reinterpret_cast<const char*>(&v);
  buf.append(p, sizeof(T));
}

void put_bytes(std::string& buf, const void* data, std::size_t n) {
  buf.append(static_cast<const char*>(data), n);
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;

  template <typename T>
  T get() {
    if (pos + sizeof(T) > buf.size())
      throw Error("checkpoint: truncated file");
    T v;
    std::memcpy(&v, buf.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
  }

  std::string get_bytes(std::size_t n) {
    if (pos + n > buf.size()) throw Error("checkpoint: truncated file");
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::string payload;
  const std::string arch_text = ckpt.model.arch.to_text();
  put<std::uint32_t>(payload, static_cast<std::uint32_t>(arch_text.size()));
  put_bytes(payload, arch_text.data(), arch_text.size());
  put<std::uint64_t>(payload, ckpt.model.seed);
  put<std::uint64_t>(payload, ckpt.model.trained_on);
  put<std::int32_t>(payload, ckpt.model.epochs);
  put<std::int32_t>(payload, ckpt.epoch);
  put<std::uint64_t>(payload, ckpt.model.params.size());
  put_bytes(payload, ckpt.model.params.data(),
            ckpt.model.params.size() * sizeof(float));
  put<std::uint64_t>(payload, ckpt.optimizer_state.size());
  put_bytes(payload, ckpt.optimizer_state.data(),
            ckpt.optimizer_state.size() * sizeof(float));
  put<std::uint32_t>(payload, static_cast<std::uint32_t>(ckpt.rng_state.size()));
  put_bytes(payload, ckpt.rng_state.data(), ckpt.rng_state.size());

  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("checkpoint: cannot open " + path.string() + " for write");
  os.write(kMagic, sizeof(kMagic));
  const std::uint64_t checksum = fnv1a64(payload.data(), payload.size());
  os.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  os.write(reinterpret_cast<const char*>(&checksum), sizeof(checksum));
  if (!os) throw Error("checkpoint: write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("checkpoint: cannot open " + path.string());
  std::string buf((std::istreambuf_iterator<char>(is)),
                  std::istreambuf_iterator<char>());
  if (buf.size() < sizeof(kMagic) + sizeof(std::uint64_t))
    throw Error("checkpoint: truncated file");
  if (std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
    throw Error("checkpoint: bad magic or unsupported version");

  const std::string payload =
      buf.substr(sizeof(kMagic), buf.size() - sizeof(kMagic) - sizeof(std::uint64_t));
  std::uint64_t stored;
  std::memcpy(&stored, buf.data() + buf.size() - sizeof(stored), sizeof(stored));
  if (fnv1a64(payload.data(), payload.size()) != stored)
    throw Error("checkpoint: checksum mismatch (corrupt file)");

  Reader r{payload};
  Checkpoint ck;
  const auto arch_len = r.get<std::uint32_t>();
  ck.model.arch = Arch::from_text(r.get_bytes(arch_len));
  ck.model.seed = r.get<std::uint64_t>();
  ck.model.trained_on = r.get<std::uint64_t>();
  ck.model.epochs = r.get<std::int32_t>();
  ck.epoch = r.get<std::int32_t>();
  const auto np = r.get<std::uint64_t>();
  if (np != ck.model.arch.param_count())
    throw Error("checkpoint: parameter count does not match arch");
  const std::string pbytes = r.get_bytes(np * sizeof(float));
  ck.model.params.resize(np);
  std::memcpy(ck.model.params.data(), pbytes.data(), pbytes.size());
  const auto no = r.get<std::uint64_t>();
  const std::string obytes = r.get_bytes(no * sizeof(float));
  ck.optimizer_state.resize(no);
  std::memcpy(ck.optimizer_state.data(), obytes.data(), obytes.size());
  const auto rng_len = r.get<std::uint32_t>();
  ck.rng_state = r.get_bytes(rng_len);
  return ck;
}

}  // namespace ulbench
