#pragma once

#include <filesystem>

#include "tongue/core.hpp"

namespace tongue {

/// Reads an 8-bit grayscale or RGB PNG (palette and alpha are converted or
/// stripped); pixel bytes are divided by 255. Throws IoError on unreadable
/// or corrupt files.
ImageTensor load_image(const std::filesystem::path& path);

/// Writes an 8-bit PNG with round(v * 255) quantisation. Output bytes depend
/// only on the pixel values, so identical images give identical files.
void save_image(const ImageTensor& image, const std::filesystem::path& path);

}  // namespace tongue
