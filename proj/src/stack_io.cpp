#include "octpost/stack_io.hpp"

#include <fnmatch.h>
#include <png.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <optional>

#include <json.hpp>

namespace fs = std::filesystem;

namespace octpost {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// Index = last run of digits in the stem; defines acquisition order.
std::optional<long> filename_index(const std::string& stem) {
  int end = -1;
  for (int i = static_cast<int>(stem.size()) - 1; i >= 0; --i) {
    if (std::isdigit(static_cast<unsigned char>(stem[i]))) {
      end = i;
      break;
    }
  }
  if (end < 0) return std::nullopt;
  int begin = end;
  while (begin > 0 && std::isdigit(static_cast<unsigned char>(stem[begin - 1])))
    --begin;
  return std::stol(stem.substr(begin, end - begin + 1));
}

}  // namespace

Image read_png_gray8(const fs::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  require(file != nullptr, Err::IoError, "cannot open " + path.string());

  png_byte header[8];
  if (std::fread(header, 1, 8, file.get()) != 8 ||
      png_sig_cmp(header, 0, 8) != 0)
    fail(Err::DecodeError, path.string() + " is not a PNG file");

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  require(png != nullptr, Err::DecodeError, "libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    fail(Err::DecodeError, "libpng init failed");
  }
  Image out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(Err::DecodeError, "failed to decode " + path.string());
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color != PNG_COLOR_TYPE_GRAY || depth != 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(Err::DecodeError,
         path.string() + " is not 8-bit grayscale (color type " +
             std::to_string(color) + ", depth " + std::to_string(depth) + ")");
  }

  out = Image(static_cast<int>(w), static_cast<int>(h));
  std::vector<png_bytep> rows(h);
  for (png_uint_32 y = 0; y < h; ++y)
    rows[y] = out.pixels.data() + static_cast<std::size_t>(y) * w;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void write_png_gray8(const Image& image, const fs::path& path) {
  require(!image.empty(), Err::IoError, "refusing to write empty image");
  FilePtr file(std::fopen(path.c_str(), "wb"));
  require(file != nullptr, Err::IoError, "cannot open " + path.string());

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  require(png != nullptr, Err::IoError, "libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    fail(Err::IoError, "libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(Err::IoError, "failed to write " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(image.height);
  for (int y = 0; y < image.height; ++y)
    rows[y] = const_cast<png_bytep>(image.pixels.data() +
                                    static_cast<std::size_t>(y) * image.width);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

namespace {

// Minimal TIFF parser: enough for multi-page 8-bit grayscale with
// uncompressed strips, both byte orders. Anything else is DecodeError.
class TiffReader {
 public:
  explicit TiffReader(const fs::path& path) : path_(path.string()) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), Err::IoError, "cannot open " + path_);
    bytes_.assign(std::istreambuf_iterator<char>(in),
                  std::istreambuf_iterator<char>());
    require(bytes_.size() >= 8, Err::DecodeError, path_ + ": truncated TIFF");
    if (bytes_[0] == 'I' && bytes_[1] == 'I')
      little_endian_ = true;
    else if (bytes_[0] == 'M' && bytes_[1] == 'M')
      little_endian_ = false;
    else
      fail(Err::DecodeError, path_ + ": not a TIFF file");
    require(u16(2) == 42, Err::DecodeError, path_ + ": bad TIFF magic");
  }

  Stack read_all_pages() {
    Stack stack;
    std::uint32_t ifd = u32(4);
    int page = 0;
    while (ifd != 0) {
      stack.frames.push_back(read_page(ifd, &ifd));
      stack.source_labels.push_back("page_" + std::to_string(page++));
    }
    require(!stack.frames.empty(), Err::NoFrames, path_ + ": no pages");
    validate_uniform(stack);
    return stack;
  }

 private:
  std::uint16_t u16(std::size_t off) const {
    check(off, 2);
    const auto* p = reinterpret_cast<const unsigned char*>(&bytes_[off]);
    return little_endian_ ? static_cast<std::uint16_t>(p[0] | (p[1] << 8))
                          : static_cast<std::uint16_t>((p[0] << 8) | p[1]);
  }
  std::uint32_t u32(std::size_t off) const {
    check(off, 4);
    const auto* p = reinterpret_cast<const unsigned char*>(&bytes_[off]);
    return little_endian_
               ? (std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
                  (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24))
               : ((std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
                  (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]));
  }
  void check(std::size_t off, std::size_t len) const {
    require(off + len <= bytes_.size(), Err::DecodeError,
            path_ + ": truncated TIFF");
  }

  struct Entry {
    std::uint16_t type = 0;
    std::uint32_t count = 0;
    std::size_t value_off = 0;  // offset of the inline value field
  };

  std::uint32_t entry_value(const Entry& e, std::uint32_t index) const {
    // SHORT (3) or LONG (4); values beyond 4 bytes live at the pointed offset
    const std::size_t elem = e.type == 3 ? 2 : 4;
    std::size_t base = e.value_off;
    if (elem * e.count > 4) base = u32(e.value_off);
    const std::size_t off = base + elem * index;
    return e.type == 3 ? u16(off) : u32(off);
  }

  Image read_page(std::uint32_t ifd, std::uint32_t* next_ifd) {
    const std::uint16_t n = u16(ifd);
    std::map<std::uint16_t, Entry> tags;
    for (std::uint16_t i = 0; i < n; ++i) {
      const std::size_t e = ifd + 2 + 12 * static_cast<std::size_t>(i);
      Entry entry;
      const std::uint16_t tag = u16(e);
      entry.type = u16(e + 2);
      entry.count = u32(e + 4);
      entry.value_off = e + 8;
      tags[tag] = entry;
    }
    *next_ifd = u32(ifd + 2 + 12 * static_cast<std::size_t>(n));

    auto scalar = [&](std::uint16_t tag,
                      std::optional<std::uint32_t> fallback =
                          std::nullopt) -> std::uint32_t {
      auto it = tags.find(tag);
      if (it == tags.end()) {
        require(fallback.has_value(), Err::DecodeError,
                path_ + ": missing TIFF tag " + std::to_string(tag));
        return *fallback;
      }
      return entry_value(it->second, 0);
    };

    const std::uint32_t width = scalar(256);
    const std::uint32_t height = scalar(257);
    const std::uint32_t bits = scalar(258, 1);
    const std::uint32_t compression = scalar(259, 1);
    const std::uint32_t photometric = scalar(262, 1);
    const std::uint32_t samples = scalar(277, 1);
    const std::uint32_t rows_per_strip = scalar(278, height);
    require(bits == 8 && samples == 1, Err::DecodeError,
            path_ + ": only 8-bit single-sample TIFF supported");
    require(compression == 1, Err::DecodeError,
            path_ + ": only uncompressed TIFF supported");
    require(photometric <= 1, Err::DecodeError,
            path_ + ": unsupported photometric interpretation");

    auto offsets_it = tags.find(273);
    auto counts_it = tags.find(279);
    require(offsets_it != tags.end() && counts_it != tags.end(),
            Err::DecodeError, path_ + ": missing strip tags");

    Image out(static_cast<int>(width), static_cast<int>(height));
    std::size_t written = 0;
    const std::size_t total = out.pixel_count();
    for (std::uint32_t s = 0; s < offsets_it->second.count; ++s) {
      const std::uint32_t off = entry_value(offsets_it->second, s);
      const std::uint32_t len = entry_value(counts_it->second, s);
      check(off, len);
      const std::size_t take = std::min<std::size_t>(len, total - written);
      std::memcpy(out.pixels.data() + written, &bytes_[off], take);
      written += take;
    }
    require(written == total, Err::DecodeError,
            path_ + ": strip data does not cover the page");
    (void)rows_per_strip;
    if (photometric == 0)  // WhiteIsZero
      for (auto& p : out.pixels) p = static_cast<std::uint8_t>(255 - p);
    return out;
  }

  std::string path_;
  std::vector<char> bytes_;
  bool little_endian_ = true;
};

void apply_sidecar(Stack& stack, const fs::path& dir) {
  const fs::path sidecar = dir / "stack.json";
  if (!fs::exists(sidecar)) return;
  std::ifstream in(sidecar);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(Err::Malformed, sidecar.string() + ": " + e.what());
  }
  if (j.contains("axial_res_um_per_px"))
    stack.axial_res_um_per_px = j["axial_res_um_per_px"].get<double>();
  require(stack.axial_res_um_per_px > 0, Err::Malformed,
          "axial_res_um_per_px must be positive");
  auto check_field = [&](const char* name, std::int64_t expected) {
    if (j.contains(name))
      require(j[name].get<std::int64_t>() == expected, Err::Malformed,
              sidecar.string() + ": field " + name +
                  " disagrees with the frames on disk");
  };
  check_field("width", stack.width());
  check_field("height", stack.height());
  check_field("frames", static_cast<std::int64_t>(stack.frame_count()));
}

}  // namespace

Stack load_stack_tiff(const fs::path& path) {
  return TiffReader(path).read_all_pages();
}

Stack load_stack(const fs::path& path, const std::string& pattern) {
  if (fs::is_regular_file(path)) {
    const std::string ext = path.extension().string();
    if (ext == ".tif" || ext == ".tiff") return load_stack_tiff(path);
    fail(Err::IoError, path.string() + " is not a stack directory");
  }
  require(fs::is_directory(path), Err::IoError,
          path.string() + " does not exist");

  std::vector<std::pair<long, fs::path>> matched;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (fnmatch(pattern.c_str(), name.c_str(), 0) != 0) continue;
    const auto index = filename_index(entry.path().stem().string());
    require(index.has_value(), Err::FrameOrder,
            name + " carries no frame index");
    matched.emplace_back(*index, entry.path());
  }
  require(!matched.empty(), Err::NoFrames,
          "no file in " + path.string() + " matches " + pattern);
  std::sort(matched.begin(), matched.end());
  for (std::size_t i = 1; i < matched.size(); ++i)
    require(matched[i].first != matched[i - 1].first, Err::FrameOrder,
            "duplicate frame index " + std::to_string(matched[i].first));

  Stack stack;
  stack.frames.reserve(matched.size());
  for (const auto& [index, file] : matched) {
    stack.frames.push_back(read_png_gray8(file));
    stack.source_labels.push_back(file.filename().string());
  }
  validate_uniform(stack);
  apply_sidecar(stack, path);
  return stack;
}

void save_stack(const Stack& stack, const fs::path& dir) {
  require(!stack.frames.empty(), Err::NoFrames, "refusing to save empty stack");
  validate_uniform(stack);
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(fs::is_directory(dir), Err::IoError,
          "cannot create " + dir.string());

  char name[32];
  for (std::size_t i = 0; i < stack.frames.size(); ++i) {
    std::snprintf(name, sizeof(name), "bscan_%04zu.png", i);
    write_png_gray8(stack.frames[i], dir / name);
  }

  nlohmann::json j;
  j["width"] = stack.width();
  j["height"] = stack.height();
  j["frames"] = stack.frame_count();
  j["axial_res_um_per_px"] = stack.axial_res_um_per_px;
  std::ofstream out(dir / "stack.json");
  require(out.good(), Err::IoError, "cannot write stack.json");
  out << j.dump(2) << "\n";
}

}  // namespace octpost
