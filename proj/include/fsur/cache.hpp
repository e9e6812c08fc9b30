// Content-addressed MI cache: an in-memory table with optional on-disk
// persistence (one small text file per entry).
#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "fsur/common.hpp"
#include "fsur/mi_types.hpp"

namespace fsur {

struct CacheKey {
  std::uint64_t dataset_hash = 0;
  std::uint64_t config_hash = 0;
  char quantity = 'J';  // J: I(S;Y), F: I(X_i;X_j), H: entropy
  std::vector<std::size_t> indices;  // sorted

  std::string str() const {
    std::string s = to_hex(dataset_hash) + ":" + to_hex(config_hash) + ":" + quantity + ":";
    for (std::size_t i = 0; i < indices.size(); ++i) {
      if (i) s += ',';
      s += std::to_string(indices[i]);
    }
    return s;
  }

  std::uint64_t digest() const { return Hasher().str(str()).digest(); }
};

class MiCache {
 public:
  MiCache() = default;
  explicit MiCache(std::optional<std::filesystem::path> dir) : dir_(std::move(dir)) {
    if (dir_) {
      std::error_code ec;
      std::filesystem::create_directories(*dir_, ec);
      if (ec) disable_disk("cannot create cache directory '" + dir_->string() + "': " + ec.message());
    }
  }

  MiCache(const MiCache&) = delete;
  MiCache& operator=(const MiCache&) = delete;

  std::optional<MIValue> load(const CacheKey& key) {
    const std::string k = key.str();
    {
      std::lock_guard lock(mutex_);
      auto it = memory_.find(k);
      if (it != memory_.end()) return it->second;
    }
    if (!disk_enabled()) return std::nullopt;
    auto v = read_entry(key, k);
    if (v) {
      std::lock_guard lock(mutex_);
      memory_[k] = *v;
    }
    return v;
  }

  void store(const CacheKey& key, const MIValue& value) {
    const std::string k = key.str();
    {
      std::lock_guard lock(mutex_);
      memory_[k] = value;  // last write wins; values are deterministic
    }
    if (disk_enabled()) write_entry(key, k, value);
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return memory_.size();
  }

  bool persistent() const { return disk_enabled(); }
  const std::optional<std::filesystem::path>& directory() const { return dir_; }

  std::filesystem::path entry_path(const CacheKey& key) const {
    const std::string h = to_hex(key.digest());
    return *dir_ / h.substr(0, 2) / (h + ".mi");
  }

 private:
  static constexpr const char* kMagic = "fsur-mi-v1";

  bool disk_enabled() const { return dir_.has_value() && !disk_failed_.load(); }

  void disable_disk(const std::string& why) {
    if (!disk_failed_.exchange(true))
      std::cerr << "warning: " << why << "; continuing without persistent cache\n";
  }

  static std::uint64_t checksum(const std::string& k, std::uint64_t bits, int fam, std::size_t n) {
    return Hasher().str(k).u64(bits).u64(static_cast<std::uint64_t>(fam)).u64(n).digest();
  }

  std::optional<MIValue> read_entry(const CacheKey& key, const std::string& k) const {
    std::ifstream in(entry_path(key));
    if (!in) return std::nullopt;
    std::string magic, stored_key, bits_hex, sum_hex;
    int fam = -1;
    std::size_t n = 0;
    if (!(in >> magic >> stored_key >> bits_hex >> fam >> n >> sum_hex)) return std::nullopt;
    if (magic != kMagic || stored_key != k || fam < 0 || fam > 2) return std::nullopt;
    std::uint64_t bits = 0, sum = 0;
    try {
      bits = std::stoull(bits_hex, nullptr, 16);
      sum = std::stoull(sum_hex, nullptr, 16);
    } catch (...) {
      return std::nullopt;
    }
    if (sum != checksum(k, bits, fam, n)) return std::nullopt;
    return MIValue{std::bit_cast<double>(bits), static_cast<EstimatorFamily>(fam), n};
  }

  void write_entry(const CacheKey& key, const std::string& k, const MIValue& v) {
    const auto path = entry_path(key);
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) {
      disable_disk("cache write failed: " + ec.message());
      return;
    }
    const auto bits = std::bit_cast<std::uint64_t>(v.value);
    const int fam = static_cast<int>(v.estimator);
    std::ostringstream tmp_name;
    tmp_name << path.string() << ".tmp" << std::this_thread::get_id();
    const std::filesystem::path tmp = tmp_name.str();
    {
      std::ofstream out(tmp, std::ios::trunc);
      out << kMagic << ' ' << k << ' ' << to_hex(bits) << ' ' << fam << ' ' << v.n_samples << ' '
          << to_hex(checksum(k, bits, fam, v.n_samples)) << '\n';
      if (!out) {
        disable_disk("cache write failed for '" + tmp.string() + "'");
        return;
      }
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) disable_disk("cache rename failed: " + ec.message());
  }

  std::optional<std::filesystem::path> dir_;
  std::atomic<bool> disk_failed_{false};
  mutable std::mutex mutex_;
  std::unordered_map<std::string, MIValue> memory_;
};

}  // namespace fsur
