#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <type_traits>
#include <vector>

namespace respscreen {

/// Seed mixing. Stable across platforms and runs.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t hash_string(std::string_view s);

/// Combines a global seed with any number of stream labels into one seed.
template <typename... Parts>
std::uint64_t derive_seed(std::uint64_t seed, const Parts&... parts) {
  std::uint64_t h = splitmix64(seed);
  auto mix = [&h](std::uint64_t v) { h = splitmix64(h ^ splitmix64(v)); };
  (mix([&] {
     if constexpr (std::is_convertible_v<const Parts&, std::string_view>) {
       return hash_string(std::string_view(parts));
     } else {
       return static_cast<std::uint64_t>(parts);
     }
   }()),
   ...);
  return h;
}

/// Random source whose outputs are identical on every standard library.
/// std::mt19937_64 is fully specified; the std distributions are not, so the
/// conversions to uniform/normal/index live here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();  // [0, 1)
  double uniform(double lo, double hi);
  double normal();
  std::size_t index(std::size_t n);  // [0, n)

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace respscreen
