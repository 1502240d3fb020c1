#include "pipf/random.hpp"

namespace pipf {

namespace {

std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t combine(std::uint64_t h, std::uint64_t v) {
  return mix(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

}  // namespace

std::uint64_t StreamId::key() const {
  std::uint64_t h = mix(seed + 0x632be59bd9b4e019ULL);
  h = combine(h, trial);
  h = combine(h, static_cast<std::uint64_t>(purpose));
  h = combine(h, window);
  h = combine(h, particle);
  return h;
}

}  // namespace pipf
