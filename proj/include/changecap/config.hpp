#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ccap {

// Full training configuration. File format: one key=value per line, '#'
// comments; command-line overrides take precedence over file values.
struct TrainConfig {
  std::string preset = "synthetic";

  // model
  int d_model = 512;
  int embed_width = 300;
  int heads = 8;
  int layers = 2;
  int max_len = 12;

  // objective
  double alpha = 0.003;
  double lambda_d = 0.03;
  double lambda_c = 0.05;
  double tau = 0.5;
  std::string caption_loss_norm = "mean";  // or "sum"
  bool ccr_cosine = false;
  std::string dirl_pool = "flat";  // correlation samples: "flat" (B*HW) or "pooled" (B)

  // optimization
  int batch_size = 32;
  double lr = 1e-3;
  int iters = 3000;
  uint64_t seed = 0;
  double dropout = 0.0;
  double grad_clip = 0.0;  // 0 disables; >0 clips the global norm

  // ablations
  bool mlp = true;
  bool dirl = true;
  bool ccr = true;
  bool subtraction = false;
  bool tied_cross_attention = true;

  // bookkeeping
  int log_every = 1;
  int ckpt_every = 500;

  void validate() const;
  std::string serialize() const;  // key=value lines

  // named hyper-parameter bundles; unknown name throws
  static TrainConfig preset_config(const std::string& name);
  static TrainConfig parse(const std::string& text);
  static TrainConfig load_file(const std::string& path);
  void apply_override(const std::string& key_equals_value);
};

}  // namespace ccap
