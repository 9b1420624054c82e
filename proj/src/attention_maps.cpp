#include "changecap/attention_maps.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

namespace ccap {

namespace fs = std::filesystem;

AttentionMap build_attention_map(const GreedyResult& result, const Vocab& vocab, int height,
                                 int width) {
  AttentionMap map;
  map.height = height;
  map.width = width;
  const int64_t hw = static_cast<int64_t>(height) * width;
  std::vector<size_t> content;
  for (size_t t = 0; t < result.token_attention.size(); ++t) {
    const int32_t id = result.tokens[t + 1];  // tokens[0] is BOS, never generated
    if (result.token_attention[t].numel() != hw)
      throw ShapeError("attention row length does not match the grid");
    Tensor grid = Tensor::from({height, width}, result.token_attention[t].data);
    map.token_maps.push_back(std::move(grid));
    map.token_labels.push_back(vocab.token(id));
    if (id != Vocab::kBos && id != Vocab::kEos && id != Vocab::kPad) content.push_back(t);
  }
  if (map.token_maps.empty()) throw ContractError("cannot build a map from an empty decode");
  if (content.empty()) {
    content.resize(map.token_maps.size());
    for (size_t i = 0; i < content.size(); ++i) content[i] = i;
  }
  map.aggregate = Tensor::zeros({height, width});
  for (size_t t : content)
    for (size_t i = 0; i < map.aggregate.data.size(); ++i)
      map.aggregate.data[i] += map.token_maps[t].data[i];
  const double inv = 1.0 / static_cast<double>(content.size());
  for (double& v : map.aggregate.data) v *= inv;
  return map;
}

namespace {

void write_pgm(const Tensor& map, const std::string& path) {
  double mx = 0.0;
  for (double v : map.data) mx = std::max(mx, v);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  os << "P5\n" << map.cols() << " " << map.rows() << "\n255\n";
  for (double v : map.data) {
    const double norm = mx > 0.0 ? v / mx : 0.0;
    os.put(static_cast<char>(static_cast<uint8_t>(std::lround(norm * 255.0))));
  }
  if (!os) throw FormatError("short write to " + path);
}

}  // namespace

void export_attention(const AttentionMap& attn, const std::string& dir) {
  fs::create_directories(dir);
  for (size_t t = 0; t < attn.token_maps.size(); ++t) {
    const std::string name = std::to_string(t) + "_" + attn.token_labels[t] + ".pgm";
    write_pgm(attn.token_maps[t], (fs::path(dir) / name).string());
  }
  write_pgm(attn.aggregate, (fs::path(dir) / "aggregate.pgm").string());
}

Pgm read_pgm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path);
  std::string magic;
  is >> magic;
  if (magic != "P5") throw FormatError(path + ": not a P5 graymap");
  Pgm pgm;
  int maxval = 0;
  is >> pgm.width >> pgm.height >> maxval;
  if (!is || pgm.width <= 0 || pgm.height <= 0 || maxval != 255)
    throw FormatError(path + ": bad P5 header");
  is.get();  // single whitespace after the header
  pgm.pixels.resize(static_cast<size_t>(pgm.width) * static_cast<size_t>(pgm.height));
  if (!is.read(reinterpret_cast<char*>(pgm.pixels.data()),
               static_cast<std::streamsize>(pgm.pixels.size())))
    throw FormatError(path + ": truncated pixel payload");
  return pgm;
}

}  // namespace ccap
