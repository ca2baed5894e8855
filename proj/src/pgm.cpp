#include "wavenet/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "wavenet/error.hpp"

namespace wavenet {

std::vector<std::uint8_t> to_gray8(const Plane& plane) {
  std::vector<std::uint8_t> out(plane.size(), 128);
  if (plane.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(plane.values().begin(), plane.values().end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) return out;
  auto v = plane.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(std::lround(255.0 * (v[i] - lo) / (hi - lo)));
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, const Plane& plane) {
  const auto gray = to_gray8(plane);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Data, "cannot write " + path.string());
  out << "P5\n" << plane.width() << ' ' << plane.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(gray.data()), static_cast<std::streamsize>(gray.size()));
}

}  // namespace wavenet
