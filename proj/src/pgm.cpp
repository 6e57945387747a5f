#include "northeast/pgm.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ne {

void write_pgm(std::ostream& out, const Graymap& img) {
  out << "P5\n";
  if (!img.comment.empty()) out << "# " << img.comment << "\n";
  out << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
}

namespace {

// Skips whitespace and comment lines, collecting the first comment seen.
void skip_ws(std::istream& in, std::string* comment) {
  for (;;) {
    int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
      if (comment && comment->empty()) {
        auto pos = line.find_first_not_of("# ");
        *comment = pos == std::string::npos ? std::string{} : line.substr(pos);
      }
    } else if (c == ' ' || c == '\n' || c == '\r' || c == '\t') {
      in.get();
    } else {
      return;
    }
  }
}

}  // namespace

Graymap read_pgm(std::istream& in) {
  Graymap img;
  std::string magic(2, '\0');
  in.read(magic.data(), 2);
  if (magic != "P5") throw std::runtime_error("read_pgm: not a P5 graymap");
  int maxval = 0;
  skip_ws(in, &img.comment);
  in >> img.width;
  skip_ws(in, &img.comment);
  in >> img.height;
  skip_ws(in, &img.comment);
  in >> maxval;
  in.get();
  if (!in || img.width <= 0 || img.height <= 0 || maxval != 255) {
    throw std::runtime_error("read_pgm: malformed header");
  }
  img.pixels.resize(static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height));
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!in) throw std::runtime_error("read_pgm: truncated pixel data");
  return img;
}

Graymap snapshot_graymap(const Configuration& c, double time) {
  const Region& r = c.region();
  Graymap img;
  img.width = r.width();
  img.height = r.height();
  char buf[128];
  std::snprintf(buf, sizeof buf, "origin %d %d time %.17g", r.origin().x, r.origin().y, time);
  img.comment = buf;
  img.pixels.resize(r.size());
  for (int row = 0; row < r.height(); ++row) {
    const int y = r.height() - 1 - row;
    for (int x = 0; x < r.width(); ++x) {
      const std::size_t src = static_cast<std::size_t>(y) * static_cast<std::size_t>(r.width()) +
                              static_cast<std::size_t>(x);
      img.pixels[static_cast<std::size_t>(row) * static_cast<std::size_t>(r.width()) +
                 static_cast<std::size_t>(x)] = c[src] ? 255 : 0;
    }
  }
  return img;
}

void write_snapshot(std::ostream& out, const Configuration& c, double time) {
  write_pgm(out, snapshot_graymap(c, time));
}

Configuration configuration_from_graymap(const Graymap& img, Site origin, BoundaryRule boundary) {
  Configuration c(Region(origin, img.width, img.height), boundary);
  auto spins = c.spins();
  for (int row = 0; row < img.height; ++row) {
    const int y = img.height - 1 - row;
    for (int x = 0; x < img.width; ++x) {
      spins[static_cast<std::size_t>(y) * static_cast<std::size_t>(img.width) + static_cast<std::size_t>(x)] =
          img.pixels[static_cast<std::size_t>(row) * static_cast<std::size_t>(img.width) +
                     static_cast<std::size_t>(x)] >= 128;
    }
  }
  return c;
}

}  // namespace ne
