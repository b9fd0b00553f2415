#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "octpost/stack_io.hpp"
#include "testutil.hpp"

using namespace octpost;
namespace fs = std::filesystem;

namespace {

Stack small_stack(int frames, std::uint64_t seed = 5) {
  Rng rng(seed);
  Stack s;
  for (int i = 0; i < frames; ++i)
    s.frames.push_back(testutil::random_image(9, 7, rng));
  return s;
}

// little-endian multi-page TIFF, one uncompressed strip per page
void write_test_tiff(const fs::path& path, const std::vector<Image>& pages) {
  std::ofstream out(path, std::ios::binary);
  auto put16 = [&](std::uint16_t v) { out.write(reinterpret_cast<char*>(&v), 2); };
  auto put32 = [&](std::uint32_t v) { out.write(reinterpret_cast<char*>(&v), 4); };
  out.write("II", 2);
  put16(42);
  std::uint32_t offset = 8;
  std::vector<std::uint32_t> data_offsets;
  for (const Image& page : pages) {
    data_offsets.push_back(offset);
    offset += static_cast<std::uint32_t>(page.pixel_count());
  }
  put32(offset);  // first IFD right after pixel data
  for (const Image& page : pages)
    out.write(reinterpret_cast<const char*>(page.pixels.data()),
              static_cast<std::streamsize>(page.pixel_count()));
  constexpr int kEntries = 8;
  const std::uint32_t ifd_size = 2 + kEntries * 12 + 4;
  for (std::size_t p = 0; p < pages.size(); ++p) {
    const Image& page = pages[p];
    put16(kEntries);
    auto entry = [&](std::uint16_t tag, std::uint16_t type, std::uint32_t value) {
      put16(tag);
      put16(type);
      put32(1);
      put32(value);
    };
    entry(256, 4, static_cast<std::uint32_t>(page.width));
    entry(257, 4, static_cast<std::uint32_t>(page.height));
    entry(258, 3, 8);
    entry(259, 3, 1);
    entry(262, 3, 1);
    entry(273, 4, data_offsets[p]);
    entry(278, 4, static_cast<std::uint32_t>(page.height));
    entry(279, 4, static_cast<std::uint32_t>(page.pixel_count()));
    const bool last = p + 1 == pages.size();
    put32(last ? 0 : offset + static_cast<std::uint32_t>((p + 1) * ifd_size));
  }
}

}  // namespace

TEST_CASE("save then load reproduces the stack bit-exactly") {
  const fs::path dir = testutil::make_temp_dir("roundtrip");
  Stack s = small_stack(3);
  s.axial_res_um_per_px = 0.836;
  save_stack(s, dir);
  const Stack loaded = load_stack(dir);
  REQUIRE(loaded.frame_count() == 3);
  for (int i = 0; i < 3; ++i) CHECK(loaded.frames[i] == s.frames[i]);
  CHECK(loaded.axial_res_um_per_px == doctest::Approx(0.836));
  fs::remove_all(dir);
}

TEST_CASE("sidecar preserves the 0.836 axial resolution") {
  const fs::path dir = testutil::make_temp_dir("sidecar");
  Stack s = small_stack(1);
  s.axial_res_um_per_px = 0.836;
  save_stack(s, dir);
  std::ifstream in(dir / "stack.json");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  CHECK(text.find("0.836") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("frame count equals file count and order follows the index") {
  const fs::path dir = testutil::make_temp_dir("order");
  Rng rng(2);
  // write deliberately out of directory order
  for (int i : {2, 0, 1}) {
    Image f(4, 4, static_cast<std::uint8_t>(i * 10));
    char name[32];
    std::snprintf(name, sizeof(name), "bscan_%04d.png", i);
    write_png_gray8(f, dir / name);
  }
  const Stack s = load_stack(dir);
  REQUIRE(s.frame_count() == 3);
  for (int i = 0; i < 3; ++i) CHECK(s.frames[i].pixels[0] == i * 10);
  CHECK(s.source_labels[0] == "bscan_0000.png");
  fs::remove_all(dir);
}

TEST_CASE("empty directory raises NoFrames") {
  const fs::path dir = testutil::make_temp_dir("empty");
  try {
    load_stack(dir);
    FAIL("expected NoFrames");
  } catch (const Error& e) {
    CHECK(e.code() == Err::NoFrames);
  }
  fs::remove_all(dir);
}

TEST_CASE("mixed frame sizes raise DimensionMismatch") {
  const fs::path dir = testutil::make_temp_dir("dims");
  write_png_gray8(Image(8, 8, 1), dir / "bscan_0000.png");
  write_png_gray8(Image(8, 8, 2), dir / "bscan_0001.png");
  write_png_gray8(Image(4, 4, 3), dir / "bscan_0002.png");
  try {
    load_stack(dir);
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Err::DimensionMismatch);
  }
  fs::remove_all(dir);
}

TEST_CASE("duplicate frame indices raise FrameOrder") {
  const fs::path dir = testutil::make_temp_dir("dup");
  write_png_gray8(Image(4, 4), dir / "a_001.png");
  write_png_gray8(Image(4, 4), dir / "b_1.png");
  try {
    load_stack(dir);
    FAIL("expected FrameOrder");
  } catch (const Error& e) {
    CHECK(e.code() == Err::FrameOrder);
  }
  fs::remove_all(dir);
}

TEST_CASE("save to an unwritable path raises IoError") {
  Stack s = small_stack(1);
  CHECK_THROWS_AS(save_stack(s, "/proc/octpost_cannot_write_here"), Error);
}

TEST_CASE("non-PNG bytes raise DecodeError") {
  const fs::path dir = testutil::make_temp_dir("decode");
  std::ofstream(dir / "bscan_0000.png") << "not a png";
  try {
    load_stack(dir);
    FAIL("expected DecodeError");
  } catch (const Error& e) {
    CHECK(e.code() == Err::DecodeError);
  }
  fs::remove_all(dir);
}

TEST_CASE("multi-page TIFF loads as an ordered stack") {
  const fs::path dir = testutil::make_temp_dir("tiff");
  Rng rng(8);
  std::vector<Image> pages{testutil::random_image(6, 5, rng),
                           testutil::random_image(6, 5, rng),
                           testutil::random_image(6, 5, rng)};
  write_test_tiff(dir / "stack.tif", pages);
  const Stack s = load_stack(dir / "stack.tif");
  REQUIRE(s.frame_count() == 3);
  for (int i = 0; i < 3; ++i) CHECK(s.frames[i] == pages[i]);
  fs::remove_all(dir);
}

TEST_CASE("pattern filters which files load") {
  const fs::path dir = testutil::make_temp_dir("pattern");
  write_png_gray8(Image(4, 4, 1), dir / "bscan_0000.png");
  write_png_gray8(Image(4, 4, 2), dir / "other_0001.png");
  const Stack s = load_stack(dir, "bscan_*.png");
  CHECK(s.frame_count() == 1);
  CHECK(s.frames[0].pixels[0] == 1);
  fs::remove_all(dir);
}
