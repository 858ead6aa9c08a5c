#include "nlos/export.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

#include <png.h>

namespace nlos {

namespace fs = std::filesystem;

namespace {

// Row-major (row = j, column = i) 16-bit samples.
std::vector<std::uint16_t> normalize16(const Image2 &img) {
  std::vector<std::uint16_t> out(std::size_t(img.nx) * img.ny, 0);
  if (img.data.empty())
    return out;
  const auto [lo_it, hi_it] = std::minmax_element(img.data.begin(), img.data.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo))
    return out;
  for (int j = 0; j < img.ny; ++j)
    for (int i = 0; i < img.nx; ++i) {
      const double t = (img.at(i, j) - lo) / (hi - lo);
      out[std::size_t(j) * img.nx + i] = static_cast<std::uint16_t>(std::lround(t * 65535.0));
    }
  return out;
}

void write_pgm(const std::vector<std::uint16_t> &px, int w, int h, const fs::path &path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot open '" + path.string() + "' for writing");
  out << "P5\n" << w << ' ' << h << "\n65535\n";
  for (auto v : px) {
    const char bytes[2] = {char(v >> 8), char(v & 0xff)};
    out.write(bytes, 2);
  }
  if (!out)
    throw IoError("failed writing '" + path.string() + "'");
}

void write_png(const std::vector<std::uint16_t> &px, int w, int h, const fs::path &path) {
  std::unique_ptr<FILE, int (*)(FILE *)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp)
    throw IoError("cannot open '" + path.string() + "' for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialization failed for '" + path.string() + "'");
  }
  std::vector<png_byte> rows(px.size() * 2);
  for (std::size_t i = 0; i < px.size(); ++i) {
    rows[2 * i] = png_byte(px[i] >> 8);
    rows[2 * i + 1] = png_byte(px[i] & 0xff);
  }
  std::vector<png_bytep> row_ptrs(h);
  for (int r = 0; r < h; ++r)
    row_ptrs[r] = rows.data() + std::size_t(r) * w * 2;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng failed writing '" + path.string() + "'");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, png_uint_32(w), png_uint_32(h), 16, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, row_ptrs.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

} // namespace

void write_image(const Image2 &img, const fs::path &path, ImageFormat format) {
  if (img.nx < 1 || img.ny < 1 || img.data.size() != std::size_t(img.nx) * img.ny)
    throw InvalidArgument("image has an invalid shape");
  const auto px = normalize16(img);
  if (format == ImageFormat::pgm)
    write_pgm(px, img.nx, img.ny, path);
  else
    write_png(px, img.nx, img.ny, path);
}

Image2 depth_to_image(const DepthMap &d) {
  Image2 img{d.nx, d.ny, std::vector<double>(d.values.size(), 0.0)};
  double lo = 0.0;
  bool any = false;
  for (std::size_t p = 0; p < d.values.size(); ++p)
    if (d.valid[p] && (!any || d.values[p] < lo)) {
      lo = d.values[p];
      any = true;
    }
  for (std::size_t p = 0; p < d.values.size(); ++p)
    img.data[p] = d.valid[p] ? d.values[p] : lo;
  return img;
}

void write_ply(std::span<const OrientedPoint> cloud, const fs::path &path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw IoError("cannot open '" + path.string() + "' for writing");
  out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size()
      << "\nproperty float x\nproperty float y\nproperty float z\n"
         "property float nx\nproperty float ny\nproperty float nz\n"
         "property float intensity\nend_header\n";
  char line[256];
  for (const auto &p : cloud) {
    std::snprintf(line, sizeof line, "%.9g %.9g %.9g %.9g %.9g %.9g %.9g\n", p.position.x,
                  p.position.y, p.position.z, p.normal.x, p.normal.y, p.normal.z, p.intensity);
    out << line;
  }
  if (!out)
    throw IoError("failed writing '" + path.string() + "'");
}

void write_csv(std::span<const TraceRecord> trace, const fs::path &path, bool include_timing) {
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw IoError("cannot open '" + path.string() + "' for writing");
  out << "step,loss,active_ratio,iter_seconds\n";
  char line[160];
  for (const auto &r : trace) {
    std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.9f\n", r.step, r.loss, r.active_ratio,
                  include_timing ? r.iter_seconds : 0.0);
    out << line;
  }
  if (!out)
    throw IoError("failed writing '" + path.string() + "'");
}

} // namespace nlos
