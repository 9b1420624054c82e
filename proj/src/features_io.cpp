#include "changecap/features_io.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace ccap {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'D', 'I', 'R', 'L', 'F', 'E', 'A', 'T'};
constexpr uint32_t kVersion = 1;
constexpr uint32_t kMaxDim = 1u << 14;

void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& is, const std::string& path, std::streamoff offset,
                 const char* what) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4))
    throw FormatError(path + ": truncated while reading " + what + " at byte offset " +
                      std::to_string(offset));
  return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
         static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
}

}  // namespace

void write_features(const FeatureGrid& grid, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  os.write(kMagic, 8);
  put_u32(os, kVersion);
  put_u32(os, static_cast<uint32_t>(grid.height));
  put_u32(os, static_cast<uint32_t>(grid.width));
  put_u32(os, static_cast<uint32_t>(grid.channels));
  static_assert(sizeof(float) == 4);
  os.write(reinterpret_cast<const char*>(grid.values.data()),
           static_cast<std::streamsize>(grid.values.size() * 4));
  if (!os) throw FormatError("short write to " + path);
}

FeatureGrid read_features(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path);
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw FormatError(path + ": bad magic at byte offset 0");
  const uint32_t version = get_u32(is, path, 8, "version");
  if (version != kVersion)
    throw FormatError(path + ": unsupported format version " + std::to_string(version) +
                      " at byte offset 8");
  const uint32_t h = get_u32(is, path, 12, "height");
  const uint32_t w = get_u32(is, path, 16, "width");
  const uint32_t c = get_u32(is, path, 20, "channels");
  if (h == 0 || w == 0 || c == 0 || h > kMaxDim || w > kMaxDim || c > kMaxDim ||
      static_cast<uint64_t>(h) * w * c > (1ull << 28))
    throw FormatError(path + ": dimension overflow at byte offset 12 (" + std::to_string(h) +
                      "x" + std::to_string(w) + "x" + std::to_string(c) + ")");
  FeatureGrid grid(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c));
  const std::streamsize payload = static_cast<std::streamsize>(grid.values.size() * 4);
  if (!is.read(reinterpret_cast<char*>(grid.values.data()), payload)) {
    const std::streamoff off = 24 + (is.gcount() > 0 ? is.gcount() : 0);
    throw FormatError(path + ": truncated payload at byte offset " + std::to_string(off));
  }
  for (float v : grid.values) {
    if (!std::isfinite(v)) throw FormatError(path + ": non-finite feature value");
  }
  return grid;
}

namespace {

json entry_to_json(const ManifestEntry& e) {
  json cells = json::array();
  for (const Cell& c : e.change_cells) cells.push_back({c.row, c.col});
  return json{{"seed", e.seed},
              {"change_type", change_type_name(e.change_type)},
              {"caption", e.caption},
              {"before_path", e.before_path},
              {"after_path", e.after_path},
              {"change_cells", cells},
              {"distractor",
               {{"shift", {e.distractor.shift_row, e.distractor.shift_col}},
                {"gain", e.distractor.gain},
                {"noise_sigma", e.distractor.noise_sigma}}}};
}

ManifestEntry entry_from_json(const json& j) {
  ManifestEntry e;
  e.seed = j.at("seed").get<uint64_t>();
  e.change_type = parse_change_type(j.at("change_type").get<std::string>());
  e.caption = j.at("caption").get<std::string>();
  e.before_path = j.at("before_path").get<std::string>();
  e.after_path = j.at("after_path").get<std::string>();
  for (const auto& c : j.at("change_cells"))
    e.change_cells.push_back({c.at(0).get<int>(), c.at(1).get<int>()});
  const auto& d = j.at("distractor");
  e.distractor.shift_row = d.at("shift").at(0).get<int>();
  e.distractor.shift_col = d.at("shift").at(1).get<int>();
  e.distractor.gain = d.at("gain").get<double>();
  e.distractor.noise_sigma = d.at("noise_sigma").get<double>();
  return e;
}

}  // namespace

void write_manifest(const std::vector<ManifestEntry>& entries, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  for (const ManifestEntry& e : entries) os << entry_to_json(e).dump() << "\n";
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open " + path);
  std::vector<ManifestEntry> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(entry_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<std::string> Dataset::captions() const {
  std::vector<std::string> out;
  out.reserve(samples.size());
  for (const PairSample& s : samples) out.push_back(s.caption);
  return out;
}

Dataset load_dataset(const std::string& dir) {
  const auto entries = read_manifest((fs::path(dir) / "manifest.jsonl").string());
  Dataset ds;
  ds.samples.reserve(entries.size());
  for (const ManifestEntry& e : entries) {
    PairSample s;
    s.seed = e.seed;
    s.caption = e.caption;
    s.change.type = e.change_type;
    if (!e.change_cells.empty()) s.change.before_cell = e.change_cells.front();
    if (e.change_cells.size() > 1) s.change.after_cell = e.change_cells.back();
    s.distractor = e.distractor;
    s.before = read_features((fs::path(dir) / e.before_path).string());
    s.after = read_features((fs::path(dir) / e.after_path).string());
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

namespace {

PairSample make_sample(const GenerateOptions& opts, const FeatureCodebook& codebook, int index) {
  const ChangeType type = opts.change_mix[static_cast<size_t>(index) % opts.change_mix.size()];
  const uint64_t sample_seed = mix_seed(opts.seed, static_cast<uint64_t>(index));
  Rng distr_rng(mix_seed(sample_seed, 0x6469737472ULL));  // "distr"
  const DistractorConfig cfg = opts.distractors.sample(distr_rng);
  return generate_pair(sample_seed, opts.grid, type, cfg, codebook);
}

}  // namespace

std::vector<ManifestEntry> generate_dataset(const GenerateOptions& opts, const std::string& dir) {
  if (opts.count <= 0) throw ContractError("dataset count must be positive");
  if (opts.change_mix.empty()) throw ContractError("change mix must not be empty");
  fs::create_directories(fs::path(dir) / "features");
  const FeatureCodebook codebook(opts.codebook_seed, opts.channels);
  std::vector<ManifestEntry> entries;
  entries.reserve(static_cast<size_t>(opts.count));
  for (int i = 0; i < opts.count; ++i) {
    PairSample s = make_sample(opts, codebook, i);
    char name[32];
    std::snprintf(name, sizeof(name), "%06d", i);
    ManifestEntry e;
    e.seed = s.seed;
    e.change_type = s.change.type;
    e.caption = s.caption;
    e.before_path = std::string("features/") + name + "_before.feat";
    e.after_path = std::string("features/") + name + "_after.feat";
    e.change_cells = s.change.changed_cells();
    e.distractor = s.distractor;
    write_features(s.before, (fs::path(dir) / e.before_path).string());
    write_features(s.after, (fs::path(dir) / e.after_path).string());
    entries.push_back(std::move(e));
  }
  write_manifest(entries, (fs::path(dir) / "manifest.jsonl").string());
  return entries;
}

Dataset generate_dataset_in_memory(const GenerateOptions& opts) {
  if (opts.count <= 0) throw ContractError("dataset count must be positive");
  if (opts.change_mix.empty()) throw ContractError("change mix must not be empty");
  const FeatureCodebook codebook(opts.codebook_seed, opts.channels);
  Dataset ds;
  ds.samples.reserve(static_cast<size_t>(opts.count));
  for (int i = 0; i < opts.count; ++i) ds.samples.push_back(make_sample(opts, codebook, i));
  return ds;
}

}  // namespace ccap
