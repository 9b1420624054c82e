#pragma once

#include <map>
#include <optional>

#include "changecap/attention_maps.hpp"
#include "changecap/trainer.hpp"

namespace ccap {

struct EvalBucket {
  int64_t samples = 0;
  double bleu4 = 0;
  double exact_match = 0;
  double token_accuracy = 0;
  int64_t pointing_evaluated = 0;  // change_type=none pairs are skipped
  double pointing_hit_rate = 0;
};

struct EvalReport {
  EvalBucket overall;
  std::map<std::string, EvalBucket> per_change_type;
  // emitted as JSON lines: one "overall" record plus one per change type;
  // external metrics (meteor/rouge_l/cider/spice) are reserved null fields
  std::string to_jsonl() const;
};

EvalReport evaluate(const Checkpoint& ckpt, const Dataset& data);

void write_report(const EvalReport& report, const std::string& path);

struct SweepPoint {
  int magnitude = 0;
  EvalReport report;
};

struct SweepOptions {
  std::vector<int> magnitudes;
  int count = 200;
  uint64_t seed = 99;  // fixed eval seed: scenes repeat across magnitudes
  std::optional<uint64_t> codebook_seed;  // defaults to the shared codebook
};

// Regenerates an eval set per distractor magnitude and scores the model on
// each; scene content is identical across magnitudes.
std::vector<SweepPoint> distractor_sweep(const Checkpoint& ckpt, const SweepOptions& opts);

void write_sweep_report(const std::vector<SweepPoint>& series, const std::string& path);

}  // namespace ccap
