#include "changecap/scene.hpp"

#include <algorithm>

namespace ccap {

const char* shape_name(ObjShape s) {
  switch (s) {
    case ObjShape::Cube: return "cube";
    case ObjShape::Sphere: return "sphere";
    case ObjShape::Cylinder: return "cylinder";
  }
  return "?";
}

const char* color_name(ObjColor c) {
  switch (c) {
    case ObjColor::Red: return "red";
    case ObjColor::Green: return "green";
    case ObjColor::Blue: return "blue";
    case ObjColor::Yellow: return "yellow";
    case ObjColor::Gray: return "gray";
    case ObjColor::Brown: return "brown";
  }
  return "?";
}

const char* size_name(ObjSize z) {
  switch (z) {
    case ObjSize::Small: return "small";
    case ObjSize::Large: return "large";
  }
  return "?";
}

const char* change_type_name(ChangeType t) {
  switch (t) {
    case ChangeType::Color: return "color";
    case ChangeType::Add: return "add";
    case ChangeType::Drop: return "drop";
    case ChangeType::Move: return "move";
    case ChangeType::None: return "none";
  }
  return "?";
}

ChangeType parse_change_type(const std::string& s) {
  if (s == "color") return ChangeType::Color;
  if (s == "add") return ChangeType::Add;
  if (s == "drop") return ChangeType::Drop;
  if (s == "move") return ChangeType::Move;
  if (s == "none") return ChangeType::None;
  throw ContractError("unknown change type '" + s + "'");
}

int Scene::object_count() const {
  int n = 0;
  for (const auto& c : cells) n += c.has_value();
  return n;
}

std::vector<Cell> Scene::occupied() const {
  std::vector<Cell> out;
  for (int r = 0; r < grid; ++r)
    for (int c = 0; c < grid; ++c)
      if (at(r, c)) out.push_back({r, c});
  return out;
}

std::vector<Cell> Scene::empty() const {
  std::vector<Cell> out;
  for (int r = 0; r < grid; ++r)
    for (int c = 0; c < grid; ++c)
      if (!at(r, c)) out.push_back({r, c});
  return out;
}

std::vector<Cell> ChangeRecord::changed_cells() const {
  std::vector<Cell> out;
  if (before_cell) out.push_back(*before_cell);
  if (after_cell && !(before_cell && *after_cell == *before_cell)) out.push_back(*after_cell);
  return out;
}

DistractorConfig DistractorRange::sample(Rng& rng) const {
  DistractorConfig cfg;
  if (shift_max > 0) {
    cfg.shift_row = static_cast<int>(rng.uniform_int(-shift_max, shift_max));
    cfg.shift_col = static_cast<int>(rng.uniform_int(-shift_max, shift_max));
  }
  cfg.gain = gain_lo == gain_hi ? gain_lo : rng.uniform(gain_lo, gain_hi);
  cfg.noise_sigma = noise_sigma;
  return cfg;
}

DistractorRange DistractorRange::magnitude(int m) {
  DistractorRange r;
  r.shift_max = (m + 1) / 2;
  r.gain_lo = 1.0 - 0.1 * m;
  r.gain_hi = 1.0 + 0.125 * m;
  return r;
}

Tensor FeatureGrid::as_tensor() const {
  Tensor t({static_cast<int64_t>(height) * width, channels});
  for (size_t i = 0; i < values.size(); ++i) t.data[i] = static_cast<double>(values[i]);
  return t;
}

namespace {
int attribute_index(const Object& o) {
  return (static_cast<int>(o.shape) * kNumColors + static_cast<int>(o.color)) * kNumSizes +
         static_cast<int>(o.size);
}
}  // namespace

FeatureCodebook::FeatureCodebook(uint64_t seed, int channels) : channels_(channels) {
  Rng rng(mix_seed(seed, 0x636f6465626f6f6bULL));  // "codebook"
  const double scale = 1.0 / std::sqrt(static_cast<double>(kAttributeDims));
  // projection matrix of the one-hot attribute encoding, one row per attribute
  std::vector<std::vector<float>> rows(kAttributeDims, std::vector<float>(static_cast<size_t>(channels)));
  for (auto& row : rows)
    for (float& v : row) v = static_cast<float>(rng.uniform(-scale, scale) * 3.0);
  background_.resize(static_cast<size_t>(channels));
  for (float& v : background_) v = static_cast<float>(rng.uniform(-scale, scale) * 3.0);

  object_vectors_.resize(kNumShapes * kNumColors * kNumSizes,
                         std::vector<float>(static_cast<size_t>(channels)));
  for (int s = 0; s < kNumShapes; ++s) {
    for (int c = 0; c < kNumColors; ++c) {
      for (int z = 0; z < kNumSizes; ++z) {
        Object o{static_cast<ObjShape>(s), static_cast<ObjColor>(c), static_cast<ObjSize>(z)};
        auto& vec = object_vectors_[static_cast<size_t>(attribute_index(o))];
        for (int k = 0; k < channels; ++k) {
          vec[static_cast<size_t>(k)] = rows[static_cast<size_t>(s)][static_cast<size_t>(k)] +
                                        rows[static_cast<size_t>(kNumShapes + c)][static_cast<size_t>(k)] +
                                        rows[static_cast<size_t>(kNumShapes + kNumColors + z)][static_cast<size_t>(k)];
        }
      }
    }
  }
}

const std::vector<float>& FeatureCodebook::object_vector(const Object& o) const {
  return object_vectors_[static_cast<size_t>(attribute_index(o))];
}

Scene random_scene(Rng& rng, int grid, int min_objects, int max_objects) {
  if (grid < 3) throw ContractError("grid size must be >= 3");
  const int cells = grid * grid;
  max_objects = std::min(max_objects, cells - 2);
  min_objects = std::max(1, std::min(min_objects, max_objects));
  const int count = static_cast<int>(rng.uniform_int(min_objects, max_objects));
  Scene scene(grid);
  // partial Fisher-Yates over cell indices
  std::vector<int> idx(static_cast<size_t>(cells));
  for (int i = 0; i < cells; ++i) idx[static_cast<size_t>(i)] = i;
  for (int i = 0; i < count; ++i) {
    const int j = static_cast<int>(rng.uniform_int(i, cells - 1));
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
    Object o;
    o.shape = static_cast<ObjShape>(rng.uniform_int(0, kNumShapes - 1));
    o.color = static_cast<ObjColor>(rng.uniform_int(0, kNumColors - 1));
    o.size = static_cast<ObjSize>(rng.uniform_int(0, kNumSizes - 1));
    scene.cells[static_cast<size_t>(idx[static_cast<size_t>(i)])] = o;
  }
  return scene;
}

namespace {
Cell pick(const std::vector<Cell>& cells, Rng& rng) {
  return cells[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(cells.size()) - 1))];
}
}  // namespace

ChangeRecord apply_change(const Scene& before, Scene& after, ChangeType type, Rng& rng) {
  after = before;
  ChangeRecord rec;
  rec.type = type;
  switch (type) {
    case ChangeType::None:
      break;
    case ChangeType::Color: {
      const auto occ = before.occupied();
      if (occ.empty()) throw GenerationError("color change requested on an empty grid");
      const Cell cell = pick(occ, rng);
      Object o = *before.at(cell.row, cell.col);
      rec.before_cell = rec.after_cell = cell;
      rec.before_object = o;
      const int delta = static_cast<int>(rng.uniform_int(1, kNumColors - 1));
      o.color = static_cast<ObjColor>((static_cast<int>(o.color) + delta) % kNumColors);
      after.at(cell.row, cell.col) = o;
      rec.after_object = o;
      break;
    }
    case ChangeType::Add: {
      const auto empty = before.empty();
      if (empty.empty()) throw GenerationError("add change requested on a full grid");
      const Cell cell = pick(empty, rng);
      Object o;
      o.shape = static_cast<ObjShape>(rng.uniform_int(0, kNumShapes - 1));
      o.color = static_cast<ObjColor>(rng.uniform_int(0, kNumColors - 1));
      o.size = static_cast<ObjSize>(rng.uniform_int(0, kNumSizes - 1));
      after.at(cell.row, cell.col) = o;
      rec.after_cell = cell;
      rec.after_object = o;
      break;
    }
    case ChangeType::Drop: {
      const auto occ = before.occupied();
      if (occ.empty()) throw GenerationError("drop change requested on an empty grid");
      const Cell cell = pick(occ, rng);
      rec.before_cell = cell;
      rec.before_object = *before.at(cell.row, cell.col);
      after.at(cell.row, cell.col).reset();
      break;
    }
    case ChangeType::Move: {
      const auto occ = before.occupied();
      const auto empty = before.empty();
      if (occ.empty()) throw GenerationError("move change requested on an empty grid");
      if (empty.empty()) throw GenerationError("move change requested on a full grid");
      const Cell src = pick(occ, rng);
      const Cell dst = pick(empty, rng);
      rec.before_cell = src;
      rec.after_cell = dst;
      rec.before_object = rec.after_object = *before.at(src.row, src.col);
      after.at(dst.row, dst.col) = *before.at(src.row, src.col);
      after.at(src.row, src.col).reset();
      break;
    }
  }
  return rec;
}

std::string caption_text(const ChangeRecord& change) {
  switch (change.type) {
    case ChangeType::None:
      return "no change was made";
    case ChangeType::Add: {
      const Object& o = *change.after_object;
      return std::string("the ") + size_name(o.size) + " " + color_name(o.color) + " " +
             shape_name(o.shape) + " was added";
    }
    case ChangeType::Drop: {
      const Object& o = *change.before_object;
      return std::string("the ") + size_name(o.size) + " " + color_name(o.color) + " " +
             shape_name(o.shape) + " was dropped";
    }
    case ChangeType::Move: {
      const Object& o = *change.before_object;
      return std::string("the ") + size_name(o.size) + " " + color_name(o.color) + " " +
             shape_name(o.shape) + " moved";
    }
    case ChangeType::Color: {
      const Object& before = *change.before_object;
      const Object& after = *change.after_object;
      return std::string("the ") + size_name(before.size) + " " + shape_name(before.shape) +
             " changed to " + color_name(after.color);
    }
  }
  throw ContractError("invalid change record");
}

FeatureGrid render_features(const Scene& scene, const FeatureCodebook& codebook) {
  FeatureGrid grid(scene.grid, scene.grid, codebook.channels());
  for (int r = 0; r < scene.grid; ++r) {
    for (int c = 0; c < scene.grid; ++c) {
      const auto& obj = scene.at(r, c);
      const std::vector<float>& vec = obj ? codebook.object_vector(*obj) : codebook.background();
      std::copy(vec.begin(), vec.end(), grid.cell(r, c));
    }
  }
  return grid;
}

void apply_distractors(FeatureGrid& grid, const DistractorConfig& cfg, Rng& noise_rng) {
  if (std::abs(cfg.shift_row) > grid.height / 2 || std::abs(cfg.shift_col) > grid.width / 2)
    throw ContractError("distractor shift exceeds half the grid extent");
  if (!(cfg.gain > 0.0)) throw ContractError("distractor gain must be positive");
  if (cfg.noise_sigma < 0.0) throw ContractError("distractor noise sigma must be >= 0");

  if (cfg.shift_row != 0 || cfg.shift_col != 0) {
    FeatureGrid shifted(grid.height, grid.width, grid.channels);
    for (int r = 0; r < grid.height; ++r) {
      for (int c = 0; c < grid.width; ++c) {
        const int sr = ((r + cfg.shift_row) % grid.height + grid.height) % grid.height;
        const int sc = ((c + cfg.shift_col) % grid.width + grid.width) % grid.width;
        std::copy(grid.cell(r, c), grid.cell(r, c) + grid.channels, shifted.cell(sr, sc));
      }
    }
    grid = std::move(shifted);
  }
  if (cfg.gain != 1.0) {
    for (float& v : grid.values) v = static_cast<float>(static_cast<double>(v) * cfg.gain);
  }
  if (cfg.noise_sigma > 0.0) {
    for (float& v : grid.values)
      v = static_cast<float>(static_cast<double>(v) + noise_rng.gaussian(0.0, cfg.noise_sigma));
  }
}

PairSample generate_pair(uint64_t seed, int grid, ChangeType type, const DistractorConfig& cfg,
                         const FeatureCodebook& codebook) {
  if (grid < 3) throw ContractError("grid size must be >= 3");
  PairSample sample;
  sample.seed = seed;
  sample.distractor = cfg;
  Rng scene_rng(mix_seed(seed, 0x7363656e65ULL));  // "scene"
  const Scene before = random_scene(scene_rng, grid);
  Scene after(grid);
  sample.change = apply_change(before, after, type, scene_rng);
  sample.caption = caption_text(sample.change);
  sample.before = render_features(before, codebook);
  sample.after = render_features(after, codebook);
  Rng noise_rng(mix_seed(seed, 0x6e6f697365ULL));  // "noise"
  apply_distractors(sample.after, cfg, noise_rng);
  return sample;
}

}  // namespace ccap
