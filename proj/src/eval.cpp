#include "changecap/eval.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ccap {

using nlohmann::json;

namespace {

json bucket_json(const std::string& kind, const std::string& change_type, const EvalBucket& b) {
  json j{{"kind", kind},
         {"samples", b.samples},
         {"bleu4", b.bleu4},
         {"exact_match", b.exact_match},
         {"token_accuracy", b.token_accuracy},
         {"pointing_evaluated", b.pointing_evaluated},
         {"pointing_hit_rate", b.pointing_hit_rate},
         {"meteor", nullptr},
         {"rouge_l", nullptr},
         {"cider", nullptr},
         {"spice", nullptr}};
  if (!change_type.empty()) j["change_type"] = change_type;
  return j;
}

struct SampleScore {
  TokenList candidate;
  TokenList reference;
  std::string change_type;
  bool pointing_evaluated = false;
  bool pointing_hit = false;
};

EvalBucket reduce_bucket(const std::vector<const SampleScore*>& scores) {
  EvalBucket b;
  b.samples = static_cast<int64_t>(scores.size());
  if (scores.empty()) return b;
  std::vector<TokenList> cands, refs;
  cands.reserve(scores.size());
  for (const SampleScore* s : scores) {
    cands.push_back(s->candidate);
    refs.push_back(s->reference);
    if (s->pointing_evaluated) {
      ++b.pointing_evaluated;
      b.pointing_hit_rate += s->pointing_hit;
    }
  }
  b.bleu4 = bleu4(cands, refs);
  b.exact_match = exact_match(cands, refs);
  b.token_accuracy = token_accuracy(cands, refs);
  if (b.pointing_evaluated > 0)
    b.pointing_hit_rate /= static_cast<double>(b.pointing_evaluated);
  return b;
}

}  // namespace

std::string EvalReport::to_jsonl() const {
  std::ostringstream os;
  os << bucket_json("overall", "", overall).dump() << "\n";
  for (const auto& [type, bucket] : per_change_type)
    os << bucket_json("per_change_type", type, bucket).dump() << "\n";
  return os.str();
}

EvalReport evaluate(const Checkpoint& ckpt, const Dataset& data) {
  if (data.samples.empty()) throw ContractError("cannot evaluate an empty dataset");
  const int64_t n = static_cast<int64_t>(data.samples.size());
  std::vector<SampleScore> scores(static_cast<size_t>(n));

  // samples are independent; each thread builds its own graphs
#pragma omp parallel for schedule(dynamic)
  for (int64_t i = 0; i < n; ++i) {
    const PairSample& s = data.samples[static_cast<size_t>(i)];
    SampleScore& sc = scores[static_cast<size_t>(i)];
    GreedyResult res =
        greedy_decode(ckpt.params, ckpt.dims, s.before, s.after, ckpt.dims.max_len);
    sc.candidate = tokenize(ckpt.vocab.decode(res.tokens));
    sc.reference = tokenize(s.caption);
    sc.change_type = change_type_name(s.change.type);
    const std::vector<Cell> cells = s.change.changed_cells();
    if (!cells.empty()) {
      const AttentionMap map =
          build_attention_map(res, ckpt.vocab, ckpt.dims.grid_h, ckpt.dims.grid_w);
      sc.pointing_evaluated = true;
      sc.pointing_hit = pointing_game(map, cells);
    }
  }

  EvalReport report;
  std::vector<const SampleScore*> all;
  std::map<std::string, std::vector<const SampleScore*>> by_type;
  for (const SampleScore& sc : scores) {
    all.push_back(&sc);
    by_type[sc.change_type].push_back(&sc);
  }
  report.overall = reduce_bucket(all);
  for (const auto& [type, list] : by_type) report.per_change_type[type] = reduce_bucket(list);
  return report;
}

void write_report(const EvalReport& report, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  os << report.to_jsonl();
}

std::vector<SweepPoint> distractor_sweep(const Checkpoint& ckpt, const SweepOptions& opts) {
  if (opts.magnitudes.empty()) throw ContractError("sweep needs at least one magnitude");
  std::vector<SweepPoint> series;
  for (int magnitude : opts.magnitudes) {
    GenerateOptions gen;
    gen.count = opts.count;
    gen.seed = opts.seed;  // same scenes at every magnitude
    gen.grid = ckpt.dims.grid_h;
    gen.channels = ckpt.dims.feat_channels;
    gen.distractors = DistractorRange::magnitude(magnitude);
    if (opts.codebook_seed) gen.codebook_seed = *opts.codebook_seed;
    const Dataset data = generate_dataset_in_memory(gen);
    series.push_back({magnitude, evaluate(ckpt, data)});
  }
  return series;
}

void write_sweep_report(const std::vector<SweepPoint>& series, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  for (const SweepPoint& p : series) {
    json j = bucket_json("sweep_point", "", p.report.overall);
    j["magnitude"] = p.magnitude;
    os << j.dump() << "\n";
  }
}

}  // namespace ccap
