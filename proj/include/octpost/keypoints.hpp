#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "octpost/homography.hpp"
#include "octpost/image.hpp"

namespace octpost {

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double score = 0.0;
  double orientation = 0.0;  // radians; 0 for orientation-free detectors
};

struct Descriptor {
  enum class Kind { Binary, Real };
  Kind kind = Kind::Binary;
  std::vector<std::uint8_t> bits;  // packed, bits.size() * 8 = bit length
  std::vector<float> values;       // 128 gradient-histogram values

  int bit_length() const { return static_cast<int>(bits.size()) * 8; }
};

enum class KeypointAlgo { Dog, FastBrief, Orb };

struct KeypointParams {
  int fast_threshold = 20;   // FAST intensity threshold t
  int fast_arc = 12;         // required contiguous pixels n on the 16-circle
  int brief_bits = 256;      // descriptor length, one of 128/256/512
  std::uint64_t brief_pair_seed = 7;  // sampling-pair set id (descriptor variant)
  int max_keypoints = 500;
  double dog_sigma = 1.6;
  double dog_contrast = 5.0;  // low-contrast rejection on the DoG response
};

// Raw FAST segment test: every pixel with >= arc_len contiguous circle
// pixels all brighter than I_p + threshold or all darker than I_p -
// threshold. No suppression, no scoring; defined on the 16-pixel Bresenham
// circle of radius 3.
std::vector<Point> fast_corners(const Image& image, int threshold,
                                int arc_len);

std::vector<std::pair<Keypoint, Descriptor>> detect_keypoints(
    const Image& image, KeypointAlgo algo, const KeypointParams& params = {});

struct Match {
  int index_a = 0;
  int index_b = 0;
  double distance = 0.0;
};

int hamming_distance(const Descriptor& a, const Descriptor& b);

// Lowe ratio test against the two nearest neighbors, then mutual-best
// filtering for one-to-one matches.
std::vector<Match> match_descriptors(const std::vector<Descriptor>& a,
                                     const std::vector<Descriptor>& b,
                                     double ratio = 0.75);

}  // namespace octpost
