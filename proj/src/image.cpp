#include "tinyssd/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace tinyssd {

Image resize_bilinear(const Image& src, int out_h, int out_w) {
  if (src.height < 1 || src.width < 1)
    throw std::invalid_argument("resize_bilinear: empty source");
  Image dst(out_h, out_w, src.channels);
  const float sy = float(src.height) / out_h;
  const float sx = float(src.width) / out_w;
  for (int y = 0; y < out_h; ++y) {
    float fy = (y + 0.5f) * sy - 0.5f;
    fy = std::clamp(fy, 0.0f, float(src.height - 1));
    const int y0 = int(fy);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const float wy = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      float fx = (x + 0.5f) * sx - 0.5f;
      fx = std::clamp(fx, 0.0f, float(src.width - 1));
      const int x0 = int(fx);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const float wx = fx - x0;
      for (int c = 0; c < src.channels; ++c) {
        const float top =
            src.at(y0, x0, c) * (1.0f - wx) + src.at(y0, x1, c) * wx;
        const float bot =
            src.at(y1, x0, c) * (1.0f - wx) + src.at(y1, x1, c) * wx;
        dst.at(y, x, c) = top * (1.0f - wy) + bot * wy;
      }
    }
  }
  return dst;
}

void write_image(const Image& img, const std::string& path) {
  if (img.channels != 1 && img.channels != 3)
    throw std::invalid_argument("write_image: only 1 or 3 channels supported");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_image: cannot open " + path);
  f << (img.channels == 1 ? "P5" : "P6") << "\n"
    << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> row(size_t(img.width) * img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        const float v = std::clamp(img.at(y, x, c), 0.0f, 1.0f);
        row[size_t(x) * img.channels + c] =
            (unsigned char)std::lround(v * 255.0f);
      }
    f.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size()));
  }
  if (!f) throw std::runtime_error("write_image: write failed for " + path);
}

namespace {

int next_pnm_int(std::istream& in) {
  // skips whitespace and '#' comments
  while (true) {
    const int ch = in.peek();
    if (ch == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(ch)) {
      in.get();
    } else {
      break;
    }
  }
  int value = 0;
  if (!(in >> value)) throw std::runtime_error("read_image: malformed header");
  return value;
}

}  // namespace

Image read_image(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_image: cannot open " + path);
  std::string magic;
  f >> magic;
  int channels = 0;
  if (magic == "P5")
    channels = 1;
  else if (magic == "P6")
    channels = 3;
  else
    throw std::runtime_error("read_image: unsupported format " + magic);
  const int width = next_pnm_int(f);
  const int height = next_pnm_int(f);
  const int maxval = next_pnm_int(f);
  if (maxval != 255)
    throw std::runtime_error("read_image: only 8-bit images supported");
  f.get();  // single whitespace after header
  Image img(height, width, channels);
  std::vector<unsigned char> raw(size_t(height) * width * channels);
  f.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size()));
  if (size_t(f.gcount()) != raw.size())
    throw std::runtime_error("read_image: truncated pixel data in " + path);
  for (size_t i = 0; i < raw.size(); ++i) img.data[i] = raw[i] / 255.0f;
  return img;
}

void draw_box(Image& img, const BoxCorner& box, std::span<const float> color) {
  const auto px = [&](double v, int n) {
    return std::clamp(int(std::lround(v * n)), 0, n - 1);
  };
  const int x0 = px(box.xmin, img.width), x1 = px(box.xmax, img.width);
  const int y0 = px(box.ymin, img.height), y1 = px(box.ymax, img.height);
  auto paint = [&](int y, int x) {
    for (int c = 0; c < img.channels; ++c)
      img.at(y, x, c) = color[size_t(c) % color.size()];
  };
  for (int x = x0; x <= x1; ++x) {
    paint(y0, x);
    paint(y1, x);
  }
  for (int y = y0; y <= y1; ++y) {
    paint(y, x0);
    paint(y, x1);
  }
}

}  // namespace tinyssd
