#include "ulbench/common.hpp"

#include <algorithm>
#include <cstring>
#include <sstream>
#include <unordered_set>

namespace ulbench {

std::vector<std::uint32_t> Rng::sample_without_replacement(std::uint64_t n,
                                                           std::uint64_t k) {
  if (k > n) throw Error("sample_without_replacement: k > n");
  std::vector<std::uint32_t> out;
  out.reserve(k);
  if (k * 3 >= n) {
    // Dense case: partial Fisher-Yates over the full index range.
    std::vector<std::uint32_t> all(n);
    for (std::uint64_t i = 0; i < n; ++i) all[i] = static_cast<std::uint32_t>(i);
    for (std::uint64_t i = 0; i < k; ++i) {
      std::swap(all[i], all[i + uniform_index(n - i)]);
    }
    out.assign(all.begin(), all.begin() + k);
  } else {
    std::unordered_set<std::uint32_t> seen;
    while (out.size() < k) {
      auto v = static_cast<std::uint32_t>(uniform_index(n));
      if (seen.insert(v).second) out.push_back(v);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string Rng::serialize() const {
  // The spare normal deviate is stored as raw bits; a decimal rendering
  // would not round-trip exactly.
  std::uint64_t bits = 0;
  std::memcpy(&bits, &spare_, sizeof(bits));
  std::ostringstream os;
  os << engine_ << ' ' << (have_spare_ ? 1 : 0) << ' ' << bits;
  return os.str();
}

void Rng::deserialize(const std::string& s) {
  std::istringstream is(s);
  int spare_flag = 0;
  std::uint64_t bits = 0;
  is >> engine_ >> spare_flag >> bits;
  if (!is) throw Error("Rng::deserialize: malformed state");
  std::memcpy(&spare_, &bits, sizeof(bits));
  have_spare_ = spare_flag != 0;
}

void parallel_chunks(std::size_t n,
                     const std::function<void(int, std::size_t, std::size_t)>& fn) {
  if (n == 0) return;
  const int chunks = kParallelChunks;
  const std::size_t per = (n + chunks - 1) / chunks;
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (hw == 1 || n < 64) {
    for (int c = 0; c < chunks; ++c) {
      const std::size_t b = std::min<std::size_t>(c * per, n);
      const std::size_t e = std::min<std::size_t>(b + per, n);
      if (b < e) fn(c, b, e);
    }
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(chunks);
  for (int c = 0; c < chunks; ++c) {
    const std::size_t b = std::min<std::size_t>(c * per, n);
    const std::size_t e = std::min<std::size_t>(b + per, n);
    if (b < e) threads.emplace_back([&fn, c, b, e] { fn(c, b, e); });
  }
  for (auto& t : threads) t.join();
}

std::uint64_t dir_bytes(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::exists(dir, ec)) return 0;
  std::uint64_t total = 0;
  for (auto it = fs::recursive_directory_iterator(dir, ec);
       it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (ec) break;
    if (it->is_regular_file(ec)) total += it->file_size(ec);
  }
  return total;
}

}  // namespace ulbench
