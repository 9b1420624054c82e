#pragma once

#include <iosfwd>
#include <optional>

#include "changecap/adam.hpp"
#include "changecap/config.hpp"
#include "changecap/features_io.hpp"
#include "changecap/model.hpp"
#include "changecap/vocab.hpp"

namespace ccap {

struct TraceRow {
  int64_t iter = 0;
  double l_cap = 0, l_dirl = 0, l_ccr = 0, total = 0;
  double diag_mean = 0, offdiag_mean = 0;
  std::string to_json_line() const;
};

struct Checkpoint {
  static constexpr uint32_t kVersion = 1;
  TrainConfig config;
  ModelDims dims;
  Vocab vocab;
  ModelParams params;
  AdamState adam;
  int64_t iteration = 0;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<TraceRow> trace;
};

// Joint training of caption + correlation + contrastive losses. Writes
// trace.jsonl and checkpoint.bin under out_dir (skipped when empty);
// resumes bit-exactly from an existing checkpoint when given.
TrainResult train(const TrainConfig& cfg, const Dataset& data, const std::string& out_dir = "",
                  const Checkpoint* resume = nullptr);

// One optimization step's losses on a fixed batch without an update; used
// to probe the objective at a frozen parameter state.
TraceRow probe_losses(const TrainConfig& cfg, const Dataset& data, const Checkpoint& ckpt,
                      const std::vector<int>& batch_indices);

ModelDims dims_from(const TrainConfig& cfg, const Dataset& data, int vocab_size);

}  // namespace ccap
