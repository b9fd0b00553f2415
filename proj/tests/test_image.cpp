#include <doctest.h>

#include "octpost/image.hpp"
#include "testutil.hpp"

using namespace octpost;

namespace {

Stack stack_of(std::vector<Image> frames) {
  Stack s;
  s.frames = std::move(frames);
  return s;
}

}  // namespace

TEST_CASE("group_average: 1080 frames at group 3 give 360") {
  Stack s;
  for (int i = 0; i < 1080; ++i) s.frames.push_back(Image(4, 4, 7));
  const Stack avg = group_average(s, 3);
  CHECK(avg.frame_count() == 360);
  CHECK(avg.width() == 4);
}

TEST_CASE("group_average: constant frames stay constant") {
  const Stack in = stack_of({Image(8, 8, 10), Image(8, 8, 10),
                             Image(8, 8, 10)});
  const Stack out = group_average(in, 3);
  REQUIRE(out.frame_count() == 1);
  for (auto p : out.frames[0].pixels) CHECK(p == 10);
}

TEST_CASE("group_average: rounding of 0,255,255 is 170") {
  Stack s = stack_of({Image(1, 1, 0), Image(1, 1, 255), Image(1, 1, 255)});
  CHECK(group_average(s, 3).frames[0].pixels[0] == 170);
}

TEST_CASE("group_average: non-divisible count errors") {
  Stack s = stack_of({Image(2, 2), Image(2, 2)});
  try {
    group_average(s, 3);
    FAIL("expected GroupMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Err::GroupMismatch);
  }
}

TEST_CASE("group_average commutes with constant offset within rounding") {
  Rng rng(11);
  Stack base;
  for (int i = 0; i < 6; ++i) {
    Image f = testutil::random_image(16, 16, rng);
    for (auto& p : f.pixels) p = static_cast<std::uint8_t>(p / 2);
    base.frames.push_back(std::move(f));
  }
  Stack shifted = base;  // +40 stays clear of the 255 clamp after halving
  for (auto& f : shifted.frames)
    for (auto& p : f.pixels) p = static_cast<std::uint8_t>(p + 40);
  const Stack a = group_average(shifted, 3);
  const Stack b = group_average(base, 3);
  for (std::size_t f = 0; f < a.frames.size(); ++f)
    for (std::size_t i = 0; i < a.frames[f].pixels.size(); ++i) {
      const int diff = static_cast<int>(a.frames[f].pixels[i]) -
                       static_cast<int>(b.frames[f].pixels[i]);
      CHECK(std::abs(diff - 40) <= 1);
    }
}

TEST_CASE("enface: constant frames project to constants") {
  Stack s = stack_of({Image(6, 4, 64), Image(6, 4, 64)});
  const Image e = enface(s);
  CHECK(e.width == 6);
  CHECK(e.height == 2);
  for (auto p : e.pixels) CHECK(p == 64);
}

TEST_CASE("enface: single bright column lights one pixel") {
  Image f(8, 8, 0);
  for (int y = 0; y < 8; ++y) f.at(3, y) = 255;
  const Image e = enface(stack_of({f}));
  for (int x = 0; x < 8; ++x) CHECK(e.at(x, 0) == (x == 3 ? 255 : 0));
}

TEST_CASE("enface: empty stack errors") {
  CHECK_THROWS_AS(enface(Stack{}), Error);
}

TEST_CASE("enface of identical frames equals the per-column means") {
  Rng rng(3);
  const Image f = testutil::random_image(12, 10, rng);
  const Image e = enface(stack_of({f, f, f}));
  for (int x = 0; x < f.width; ++x) {
    double sum = 0;
    for (int y = 0; y < f.height; ++y) sum += f.at(x, y);
    const auto expected = clamp_round_u8(sum / f.height);
    for (int row = 0; row < 3; ++row) CHECK(e.at(x, row) == expected);
  }
}

TEST_CASE("histogram_stats: all-zero image") {
  const HistogramStats s = histogram_stats(Image(5, 4, 0));
  CHECK(s.mean == 0.0);
  CHECK(s.std_dev == 0.0);
  CHECK(s.zero_count == 20);
}

TEST_CASE("histogram_stats: two-point population {0, 255}") {
  Image img(2, 1);
  img.pixels = {0, 255};
  const HistogramStats s = histogram_stats(img);
  CHECK(s.mean == doctest::Approx(127.5));
  CHECK(s.std_dev == doctest::Approx(127.5));
  CHECK(s.zero_count == 1);
}

TEST_CASE("histogram invariants on random images") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const Image img = testutil::random_image(17, 13, rng);
    const HistogramStats s = histogram_stats(img);
    CHECK(s.total() == img.pixel_count());
    CHECK(s.zero_count == s.histogram[0]);
    CHECK(s.mean >= 0.0);
    CHECK(s.mean <= 255.0);
    CHECK(s.std_dev >= 0.0);
  }
}

TEST_CASE("stack histogram pools every frame") {
  Stack s = stack_of({Image(2, 2, 0), Image(2, 2, 255)});
  const HistogramStats st = histogram_stats(s);
  CHECK(st.total() == 8);
  CHECK(st.zero_count == 4);
  CHECK(st.mean == doctest::Approx(127.5));
}

TEST_CASE("roll_vertical shifts content and zero-fills") {
  Image img(2, 4, 0);
  img.at(0, 0) = 9;
  const Image down = roll_vertical(img, 2);
  CHECK(down.at(0, 2) == 9);
  CHECK(down.at(0, 0) == 0);
  const Image up = roll_vertical(down, -2);
  CHECK(up.at(0, 0) == 9);
}

TEST_CASE("validate_uniform rejects mixed sizes") {
  Stack s = stack_of({Image(4, 4), Image(2, 2)});
  CHECK_THROWS_AS(validate_uniform(s), Error);
}
