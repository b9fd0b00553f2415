#pragma once

#include <filesystem>
#include <string>

#include "octpost/image.hpp"

namespace octpost {

Image read_png_gray8(const std::filesystem::path& path);
void write_png_gray8(const Image& image, const std::filesystem::path& path);

// Multi-page TIFF, read-only: 8-bit grayscale, uncompressed strips.
Stack load_stack_tiff(const std::filesystem::path& path);

// Loads a stack from a directory of grayscale PNGs matching `pattern`,
// ordered by the zero-padded index embedded in each filename. A missing or
// duplicated index is a FrameOrder error. Metadata comes from a stack.json
// sidecar when present. `path` may also name a multi-page TIFF file.
Stack load_stack(const std::filesystem::path& path,
                 const std::string& pattern = "*.png");

// Writes bscan_%04d.png per frame plus the stack.json sidecar.
// load_stack(save_stack(s)) reproduces pixels and metadata bit-exactly.
void save_stack(const Stack& stack, const std::filesystem::path& dir);

}  // namespace octpost
