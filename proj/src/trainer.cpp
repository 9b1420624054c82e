#include "changecap/trainer.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "changecap/losses.hpp"

namespace ccap {

namespace fs = std::filesystem;

std::string TraceRow::to_json_line() const {
  nlohmann::json j{{"iter", iter},         {"l_cap", l_cap},
                   {"l_dirl", l_dirl},     {"l_ccr", l_ccr},
                   {"total", total},       {"diag_mean", diag_mean},
                   {"offdiag_mean", offdiag_mean}};
  return j.dump();
}

namespace {

constexpr char kCkptMagic[8] = {'D', 'I', 'R', 'L', 'C', 'K', 'P', 'T'};

void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, uint64_t v) {
  put_u32(os, static_cast<uint32_t>(v));
  put_u32(os, static_cast<uint32_t>(v >> 32));
}

uint32_t get_u32(std::istream& is, const std::string& path) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw FormatError(path + ": truncated checkpoint");
  return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
         static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
}

uint64_t get_u64(std::istream& is, const std::string& path) {
  const uint64_t lo = get_u32(is, path);
  const uint64_t hi = get_u32(is, path);
  return lo | hi << 32;
}

void put_string(std::ostream& os, const std::string& s) {
  put_u32(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is, const std::string& path) {
  const uint32_t len = get_u32(is, path);
  std::string s(len, '\0');
  if (len && !is.read(s.data(), len)) throw FormatError(path + ": truncated checkpoint");
  return s;
}

void put_tensor(std::ostream& os, const Tensor& t) {
  put_u32(os, static_cast<uint32_t>(t.rank()));
  for (int64_t d : t.shape) put_u64(os, static_cast<uint64_t>(d));
  static_assert(sizeof(double) == 8);
  os.write(reinterpret_cast<const char*>(t.data.data()),
           static_cast<std::streamsize>(t.data.size() * 8));
}

Tensor get_tensor(std::istream& is, const std::string& path) {
  const uint32_t rank = get_u32(is, path);
  Shape shape(rank);
  for (uint32_t i = 0; i < rank; ++i) shape[i] = static_cast<int64_t>(get_u64(is, path));
  Tensor t = rank == 0 ? Tensor::scalar(0.0) : Tensor::zeros(shape);
  if (!is.read(reinterpret_cast<char*>(t.data.data()),
               static_cast<std::streamsize>(t.data.size() * 8)))
    throw FormatError(path + ": truncated tensor payload");
  return t;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  os.write(kCkptMagic, 8);
  put_u32(os, Checkpoint::kVersion);
  put_u64(os, static_cast<uint64_t>(ckpt.iteration));
  put_string(os, ckpt.config.serialize());
  put_u32(os, static_cast<uint32_t>(ckpt.dims.grid_h));
  put_u32(os, static_cast<uint32_t>(ckpt.dims.grid_w));
  put_u32(os, static_cast<uint32_t>(ckpt.dims.feat_channels));
  put_u32(os, static_cast<uint32_t>(ckpt.vocab.size()));
  for (const std::string& tok : ckpt.vocab.tokens()) put_string(os, tok);
  put_u64(os, static_cast<uint64_t>(ckpt.adam.step));

  auto& params = const_cast<ModelParams&>(ckpt.params);
  put_u32(os, static_cast<uint32_t>(param_names(ckpt.params).size()));
  size_t idx = 0;
  for_each_param(params, [&](const std::string& name, Tensor& t) {
    put_string(os, name);
    put_tensor(os, t);
    put_tensor(os, ckpt.adam.m[idx]);
    put_tensor(os, ckpt.adam.v[idx]);
    ++idx;
  });
  if (!os) throw FormatError("short write to " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path);
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kCkptMagic, 8) != 0)
    throw FormatError(path + ": bad checkpoint magic at byte offset 0");
  const uint32_t version = get_u32(is, path);
  if (version != Checkpoint::kVersion)
    throw FormatError(path + ": unsupported checkpoint version " + std::to_string(version));

  Checkpoint ckpt;
  ckpt.iteration = static_cast<int64_t>(get_u64(is, path));
  ckpt.config = TrainConfig::parse(get_string(is, path));
  const int grid_h = static_cast<int>(get_u32(is, path));
  const int grid_w = static_cast<int>(get_u32(is, path));
  const int channels = static_cast<int>(get_u32(is, path));
  const uint32_t vocab_count = get_u32(is, path);
  std::vector<std::string> tokens;
  tokens.reserve(vocab_count);
  for (uint32_t i = 0; i < vocab_count; ++i) tokens.push_back(get_string(is, path));
  ckpt.vocab = Vocab::from_tokens(std::move(tokens));

  ckpt.dims.d_model = ckpt.config.d_model;
  ckpt.dims.embed_width = ckpt.config.embed_width;
  ckpt.dims.heads = ckpt.config.heads;
  ckpt.dims.layers = ckpt.config.layers;
  ckpt.dims.max_len = ckpt.config.max_len;
  ckpt.dims.grid_h = grid_h;
  ckpt.dims.grid_w = grid_w;
  ckpt.dims.feat_channels = channels;
  ckpt.dims.vocab = ckpt.vocab.size();
  ckpt.dims.mlp = ckpt.config.mlp;
  ckpt.dims.use_dirl = ckpt.config.dirl;
  ckpt.dims.tied_cross_attention = ckpt.config.tied_cross_attention;
  ckpt.dims.subtraction_baseline = ckpt.config.subtraction;

  ckpt.adam.step = static_cast<int64_t>(get_u64(is, path));
  ckpt.params = init_params(ckpt.dims, ckpt.config.seed);
  ckpt.adam.m.clear();
  ckpt.adam.v.clear();
  const uint32_t count = get_u32(is, path);
  const auto expected = param_names(ckpt.params);
  if (count != expected.size())
    throw FormatError(path + ": parameter count " + std::to_string(count) +
                      " does not match the configured model (" +
                      std::to_string(expected.size()) + ")");
  size_t idx = 0;
  for_each_param(ckpt.params, [&](const std::string& name, Tensor& t) {
    const std::string stored = get_string(is, path);
    if (stored != name)
      throw FormatError(path + ": parameter '" + stored + "' where '" + name + "' was expected");
    Tensor loaded = get_tensor(is, path);
    if (loaded.shape != t.shape)
      throw FormatError(path + ": parameter '" + name + "' has shape " +
                        shape_str(loaded.shape) + ", expected " + shape_str(t.shape));
    t = std::move(loaded);
    ckpt.adam.m.push_back(get_tensor(is, path));
    ckpt.adam.v.push_back(get_tensor(is, path));
    ++idx;
  });
  return ckpt;
}

ModelDims dims_from(const TrainConfig& cfg, const Dataset& data, int vocab_size) {
  if (data.samples.empty()) throw ContractError("cannot train on an empty dataset");
  const FeatureGrid& first = data.samples.front().before;
  ModelDims dims;
  dims.d_model = cfg.d_model;
  dims.embed_width = cfg.embed_width;
  dims.heads = cfg.heads;
  dims.layers = cfg.layers;
  dims.max_len = cfg.max_len;
  dims.grid_h = first.height;
  dims.grid_w = first.width;
  dims.feat_channels = first.channels;
  dims.vocab = vocab_size;
  dims.mlp = cfg.mlp;
  dims.use_dirl = cfg.dirl;
  dims.tied_cross_attention = cfg.tied_cross_attention;
  dims.subtraction_baseline = cfg.subtraction;
  for (const PairSample& s : data.samples) {
    for (const FeatureGrid* gptr : {&s.before, &s.after}) {
      if (gptr->height != first.height || gptr->width != first.width ||
          gptr->channels != first.channels)
        throw ContractError("dataset mixes feature grid shapes");
    }
  }
  return dims;
}

namespace {

struct BatchLosses {
  Var total;
  double l_cap = 0, l_dirl = 0, l_ccr = 0;
  double diag_mean = 0, offdiag_mean = 0;
};

// Builds the joint objective for one batch inside g. Also used by
// probe_losses, so it carries no optimizer state.
BatchLosses batch_losses(Graph& g, const ModelVars& vars, const ModelDims& dims,
                         const TrainConfig& cfg, const Dataset& data,
                         const std::vector<int>& indices,
                         const std::vector<TokenSequence>& encoded, const DropoutCtx* dropout,
                         bool* ccr_warned) {
  const int b = static_cast<int>(indices.size());
  std::vector<Var> cap_losses;
  std::vector<Var> dirl_bef, dirl_aft;
  std::vector<Var> pooled_words, pooled_visual;
  cap_losses.reserve(static_cast<size_t>(b));

  for (int idx : indices) {
    const PairSample& s = data.samples[static_cast<size_t>(idx)];
    const TokenSequence& seq = encoded[static_cast<size_t>(idx)];
    std::vector<int32_t> input(seq.ids.begin(), seq.ids.end() - 1);
    std::vector<int32_t> target(seq.ids.begin() + 1, seq.ids.end());
    Var grid_bef = g.leaf(s.before.as_tensor());
    Var grid_aft = g.leaf(s.after.as_tensor());
    ForwardOut out = forward_caption(g, vars, dims, grid_bef, grid_aft, input, dropout);

    std::vector<uint8_t> mask(target.size(), 1);
    cap_losses.push_back(
        caption_loss(g, out.probs, target, mask, cfg.caption_loss_norm == "mean"));

    if (cfg.dirl) {
      Var y_bef = mlp_head(g, out.f_bef, vars, cfg.mlp);
      Var y_aft = mlp_head(g, out.f_aft, vars, cfg.mlp);
      if (cfg.dirl_pool == "pooled") {
        y_bef = g.reshape(mean_pool_visual(g, y_bef), {1, dims.d_model});
        y_aft = g.reshape(mean_pool_visual(g, y_aft), {1, dims.d_model});
      }
      dirl_bef.push_back(y_bef);
      dirl_aft.push_back(y_aft);
    }
    if (cfg.ccr) {
      std::vector<uint8_t> all_real(input.size(), 1);
      pooled_words.push_back(
          g.reshape(mean_pool_words(g, out.e_hat, all_real), {1, dims.d_model}));
      pooled_visual.push_back(g.reshape(mean_pool_visual(g, out.v_hat), {1, dims.d_model}));
    }
  }

  BatchLosses res;
  Var cap = cap_losses[0];
  for (size_t i = 1; i < cap_losses.size(); ++i) cap = g.add(cap, cap_losses[i]);
  cap = g.scalar_mul(cap, 1.0 / static_cast<double>(b));
  res.l_cap = cap.value().item();
  Var total = cap;

  if (cfg.dirl) {
    Var y_bef = dirl_bef.size() == 1 ? dirl_bef[0] : g.concat(dirl_bef, 0);
    Var y_aft = dirl_aft.size() == 1 ? dirl_aft[0] : g.concat(dirl_aft, 0);
    Var corr = correlation_matrix(g, y_bef, y_aft);
    Var l_dirl = dirl_loss(g, corr, cfg.alpha);
    res.l_dirl = l_dirl.value().item();
    const Tensor& c = corr.value();
    const int64_t d = c.rows();
    double diag = 0, off = 0;
    for (int64_t i = 0; i < d; ++i) {
      diag += c.at(i, i);
      for (int64_t j = 0; j < d; ++j)
        if (i != j) off += std::abs(c.at(i, j));
    }
    res.diag_mean = diag / static_cast<double>(d);
    res.offdiag_mean = d > 1 ? off / static_cast<double>(d * (d - 1)) : 0.0;
    total = g.add(total, g.scalar_mul(l_dirl, cfg.lambda_d));
  }

  if (cfg.ccr) {
    if (b < 2) {
      if (ccr_warned && !*ccr_warned) {
        std::cerr << "warning: batch of " << b
                  << " gives a vacuous contrast; the contrastive term contributes 0\n";
        *ccr_warned = true;
      }
    } else {
      Var words = g.concat(pooled_words, 0);
      Var visual = g.concat(pooled_visual, 0);
      Var sim = similarity_matrix(g, words, visual, cfg.ccr_cosine);
      Var l_ccr = infonce(g, sim, cfg.tau);
      res.l_ccr = l_ccr.value().item();
      total = g.add(total, g.scalar_mul(l_ccr, cfg.lambda_c));
    }
  }
  res.total = total;
  return res;
}

std::vector<int> batch_indices(uint64_t seed, int64_t iter, int batch_size, int64_t n) {
  Rng rng(mix_seed(mix_seed(seed, 0x6261746368ULL), static_cast<uint64_t>(iter)));  // "batch"
  std::vector<int> idx(static_cast<size_t>(batch_size));
  for (int& i : idx) i = static_cast<int>(rng.uniform_int(0, n - 1));
  return idx;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const Dataset& data, const std::string& out_dir,
                  const Checkpoint* resume) {
  cfg.validate();
  if (data.samples.empty()) throw ContractError("cannot train on an empty dataset");

  TrainResult result;
  Checkpoint& ckpt = result.checkpoint;
  if (resume) {
    ckpt = *resume;
  } else {
    ckpt.config = cfg;
    ckpt.vocab = Vocab::build(data.captions());
    ckpt.dims = dims_from(cfg, data, ckpt.vocab.size());
    ckpt.params = init_params(ckpt.dims, cfg.seed);
    ckpt.adam = make_adam_state(ckpt.params);
    ckpt.iteration = 0;
  }

  std::vector<TokenSequence> encoded;
  encoded.reserve(data.samples.size());
  for (const PairSample& s : data.samples) {
    TokenSequence seq = ckpt.vocab.encode(s.caption);
    if (seq.length() - 1 > ckpt.dims.max_len)
      throw ContractError("caption '" + s.caption + "' exceeds max_len " +
                          std::to_string(ckpt.dims.max_len));
    encoded.push_back(std::move(seq));
  }

  std::ofstream trace_os;
  std::string ckpt_path;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    const auto mode = resume ? std::ios::app : std::ios::out;
    trace_os.open((fs::path(out_dir) / "trace.jsonl").string(), mode);
    if (!trace_os) throw FormatError("cannot open trace file under " + out_dir);
    ckpt_path = (fs::path(out_dir) / "checkpoint.bin").string();
  }

  bool ccr_warned = false;
  const int64_t n = static_cast<int64_t>(data.samples.size());
  for (int64_t iter = ckpt.iteration; iter < cfg.iters; ++iter) {
    const std::vector<int> indices = batch_indices(cfg.seed, iter, cfg.batch_size, n);
    Graph g;
    ModelVars vars = lift_params(g, ckpt.params, true);
    Rng dropout_rng(mix_seed(mix_seed(cfg.seed, 0x64726f70ULL), static_cast<uint64_t>(iter)));
    DropoutCtx dropout{cfg.dropout, &dropout_rng};
    const DropoutCtx* dctx = cfg.dropout > 0.0 ? &dropout : nullptr;

    BatchLosses losses =
        batch_losses(g, vars, ckpt.dims, cfg, data, indices, encoded, dctx, &ccr_warned);
    g.backward(losses.total);
    const std::vector<Tensor> grads = collect_grads(vars);
    adam_step(ckpt.params, grads, ckpt.adam, cfg.lr, cfg.grad_clip);
    ckpt.iteration = iter + 1;

    TraceRow row;
    row.iter = iter;
    row.l_cap = losses.l_cap;
    row.l_dirl = losses.l_dirl;
    row.l_ccr = losses.l_ccr;
    row.total = losses.total.value().item();
    row.diag_mean = losses.diag_mean;
    row.offdiag_mean = losses.offdiag_mean;
    if (cfg.log_every > 0 && iter % cfg.log_every == 0) {
      result.trace.push_back(row);
      if (trace_os) trace_os << row.to_json_line() << "\n";
    }
    if (!ckpt_path.empty() && cfg.ckpt_every > 0 && (iter + 1) % cfg.ckpt_every == 0)
      save_checkpoint(ckpt, ckpt_path);
  }

  if (!ckpt_path.empty()) save_checkpoint(ckpt, ckpt_path);
  if (trace_os) trace_os.flush();
  return result;
}

TraceRow probe_losses(const TrainConfig& cfg, const Dataset& data, const Checkpoint& ckpt,
                      const std::vector<int>& batch_indices) {
  std::vector<TokenSequence> encoded;
  encoded.reserve(data.samples.size());
  for (const PairSample& s : data.samples) encoded.push_back(ckpt.vocab.encode(s.caption));
  Graph g;
  ModelVars vars = lift_params(g, ckpt.params, false);
  bool warned = true;
  BatchLosses losses =
      batch_losses(g, vars, ckpt.dims, cfg, data, batch_indices, encoded, nullptr, &warned);
  TraceRow row;
  row.l_cap = losses.l_cap;
  row.l_dirl = losses.l_dirl;
  row.l_ccr = losses.l_ccr;
  row.total = losses.total.value().item();
  row.diag_mean = losses.diag_mean;
  row.offdiag_mean = losses.offdiag_mean;
  return row;
}

}  // namespace ccap
