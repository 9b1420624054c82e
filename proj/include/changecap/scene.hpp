#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "changecap/rng.hpp"
#include "changecap/tensor.hpp"

namespace ccap {

enum class ObjShape : uint8_t { Cube, Sphere, Cylinder };
enum class ObjColor : uint8_t { Red, Green, Blue, Yellow, Gray, Brown };
enum class ObjSize : uint8_t { Small, Large };

inline constexpr int kNumShapes = 3;
inline constexpr int kNumColors = 6;
inline constexpr int kNumSizes = 2;
inline constexpr int kAttributeDims = kNumShapes + kNumColors + kNumSizes;

const char* shape_name(ObjShape s);
const char* color_name(ObjColor c);
const char* size_name(ObjSize z);

struct Object {
  ObjShape shape;
  ObjColor color;
  ObjSize size;
  bool operator==(const Object&) const = default;
};

struct Cell {
  int row = 0;
  int col = 0;
  bool operator==(const Cell&) const = default;
};

struct Scene {
  int grid = 0;
  std::vector<std::optional<Object>> cells;  // grid*grid, row-major

  explicit Scene(int g = 0) : grid(g), cells(static_cast<size_t>(g) * static_cast<size_t>(g)) {}
  std::optional<Object>& at(int r, int c) { return cells[static_cast<size_t>(r * grid + c)]; }
  const std::optional<Object>& at(int r, int c) const {
    return cells[static_cast<size_t>(r * grid + c)];
  }
  int object_count() const;
  std::vector<Cell> occupied() const;
  std::vector<Cell> empty() const;
};

enum class ChangeType : uint8_t { Color, Add, Drop, Move, None };

const char* change_type_name(ChangeType t);
ChangeType parse_change_type(const std::string& s);

struct ChangeRecord {
  ChangeType type = ChangeType::None;
  std::optional<Cell> before_cell;
  std::optional<Cell> after_cell;
  std::optional<Object> before_object;
  std::optional<Object> after_object;

  std::vector<Cell> changed_cells() const;
};

// Concrete per-sample distractor values applied to the after features.
struct DistractorConfig {
  int shift_row = 0;
  int shift_col = 0;
  double gain = 1.0;
  double noise_sigma = 0.0;
};

// Bounds a dataset draws per-sample DistractorConfigs from.
struct DistractorRange {
  int shift_max = 0;
  double gain_lo = 1.0;
  double gain_hi = 1.0;
  double noise_sigma = 0.0;

  DistractorConfig sample(Rng& rng) const;

  // Sweep scale: 0 = clean, 2 = moderate (shift 1, gain 0.8..1.25),
  // 4 = high (shift 2, gain 0.6..1.5). Shift is capped at grid/2 later.
  static DistractorRange magnitude(int m);
  static DistractorRange clean() { return {}; }
  static DistractorRange moderate() { return magnitude(2); }
  static DistractorRange high() { return magnitude(4); }
};

struct FeatureGrid {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> values;  // H*W*C row-major

  FeatureGrid() = default;
  FeatureGrid(int h, int w, int c)
      : height(h), width(w), channels(c),
        values(static_cast<size_t>(h) * static_cast<size_t>(w) * static_cast<size_t>(c)) {}
  float* cell(int r, int c) {
    return values.data() + (static_cast<size_t>(r) * static_cast<size_t>(width) +
                            static_cast<size_t>(c)) * static_cast<size_t>(channels);
  }
  const float* cell(int r, int c) const {
    return values.data() + (static_cast<size_t>(r) * static_cast<size_t>(width) +
                            static_cast<size_t>(c)) * static_cast<size_t>(channels);
  }
  bool operator==(const FeatureGrid&) const = default;
  Tensor as_tensor() const;  // (H*W, C) doubles
};

struct PairSample {
  FeatureGrid before;
  FeatureGrid after;
  std::string caption;  // plain text, no sentinels
  ChangeRecord change;
  DistractorConfig distractor;
  uint64_t seed = 0;
};

// Attribute -> channel-vector map: a fixed seeded random projection of the
// one-hot attribute encoding, shared by every scene of a run. Uniform
// entries keep the whole feature path free of libm so rendered grids are
// bit-stable across platforms.
class FeatureCodebook {
 public:
  FeatureCodebook(uint64_t seed, int channels);
  int channels() const { return channels_; }
  const std::vector<float>& object_vector(const Object& o) const;
  const std::vector<float>& background() const { return background_; }

 private:
  int channels_;
  std::vector<std::vector<float>> object_vectors_;  // indexed by attribute combination
  std::vector<float> background_;
};

Scene random_scene(Rng& rng, int grid, int min_objects = 3, int max_objects = 6);

// Applies one semantic change to a copy of `before`; throws GenerationError
// when the change is impossible (move/add on a full grid, drop/color/move
// on an empty one).
ChangeRecord apply_change(const Scene& before, Scene& after, ChangeType type, Rng& rng);

std::string caption_text(const ChangeRecord& change);

FeatureGrid render_features(const Scene& scene, const FeatureCodebook& codebook);
void apply_distractors(FeatureGrid& grid, const DistractorConfig& cfg, Rng& noise_rng);

PairSample generate_pair(uint64_t seed, int grid, ChangeType type, const DistractorConfig& cfg,
                         const FeatureCodebook& codebook);

}  // namespace ccap
