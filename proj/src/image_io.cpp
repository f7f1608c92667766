#include "tongue/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstring>

namespace tongue {

// libpng's simplified API reports failures through the png_image struct,
// so no setjmp/longjmp crosses C++ frames here.

ImageTensor load_image(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    std::string message = image.message;
    png_image_free(&image);
    throw IoError("cannot read image " + path.string() + ": " + message);
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int channels = color ? 3 : 1;

  std::vector<unsigned char> raw(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, raw.data(), 0, nullptr)) {
    std::string message = image.message;
    png_image_free(&image);
    throw IoError("corrupt image " + path.string() + ": " + message);
  }
  std::vector<double> data(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) data[i] = raw[i] / 255.0;
  return ImageTensor(static_cast<int>(image.height), static_cast<int>(image.width), channels,
                     std::move(data));
}

void save_image(const ImageTensor& image, const std::filesystem::path& path) {
  if (image.empty()) throw ValidationError("cannot save an empty image");
  std::vector<unsigned char> raw(image.size());
  const auto values = image.data();
  for (std::size_t i = 0; i < raw.size(); ++i)
    raw[i] = static_cast<unsigned char>(std::lround(values[i] * 255.0));

  png_image out;
  std::memset(&out, 0, sizeof out);
  out.version = PNG_IMAGE_VERSION;
  out.width = static_cast<png_uint_32>(image.width());
  out.height = static_cast<png_uint_32>(image.height());
  out.format = image.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  out.flags = PNG_IMAGE_FLAG_FAST;
  if (!png_image_write_to_file(&out, path.c_str(), 0, raw.data(), 0, nullptr)) {
    std::string message = out.message;
    png_image_free(&out);
    throw IoError("cannot write image " + path.string() + ": " + message);
  }
}

}  // namespace tongue
