#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "neurec/data.hpp"

namespace fixture {

// Users and items fall into `clusters` groups; a user picks items from their
// own group with probability p_in and from the rest with p_out. Item
// popularity is skewed so mostpop has something to find.
inline neurec::data::InteractionMatrix clustered(int users, int items, int clusters, double p_in, double p_out,
                                                 std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<neurec::data::Entry> entries;
  for (int u = 0; u < users; ++u) {
    for (int i = 0; i < items; ++i) {
      const double pop = 0.5 + 1.0 / (1.0 + i % 7);
      const double p = (u % clusters == i % clusters ? p_in : p_out) * pop;
      if (u01(gen) < p) entries.emplace_back(u, i);
    }
    entries.emplace_back(u, (u * 7) % items);  // nobody is empty
  }
  return neurec::data::InteractionMatrix(users, items, std::move(entries));
}

inline neurec::data::InteractionMatrix random_matrix(int users, int items, double density, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::bernoulli_distribution keep(density);
  std::vector<neurec::data::Entry> entries;
  for (int u = 0; u < users; ++u) {
    for (int i = 0; i < items; ++i) {
      if (keep(gen)) entries.emplace_back(u, i);
    }
  }
  return neurec::data::InteractionMatrix(users, items, std::move(entries));
}

// Writes a matrix as "u<idx> i<idx> 1" lines.
inline void write_dataset(const neurec::data::InteractionMatrix& m, const std::string& path) {
  std::ofstream out(path);
  for (const auto& [u, i] : m.entries()) out << 'u' << u << ' ' << 'i' << i << " 1\n";
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("neurec-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace fixture
