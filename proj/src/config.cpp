#include "changecap/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "changecap/tensor.hpp"

namespace ccap {

namespace {

struct Field {
  std::function<std::string(const TrainConfig&)> get;
  std::function<void(TrainConfig&, const std::string&)> set;
};

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "on" || v == "1") return true;
  if (v == "false" || v == "off" || v == "0") return false;
  throw ContractError("expected a boolean, got '" + v + "'");
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

const std::map<std::string, Field>& fields() {
  auto str_field = [](std::string TrainConfig::* p) {
    return Field{[p](const TrainConfig& c) { return c.*p; },
                 [p](TrainConfig& c, const std::string& v) { c.*p = v; }};
  };
  auto int_field = [](int TrainConfig::* p) {
    return Field{[p](const TrainConfig& c) { return std::to_string(c.*p); },
                 [p](TrainConfig& c, const std::string& v) { c.*p = std::stoi(v); }};
  };
  auto u64_field = [](uint64_t TrainConfig::* p) {
    return Field{[p](const TrainConfig& c) { return std::to_string(c.*p); },
                 [p](TrainConfig& c, const std::string& v) { c.*p = std::stoull(v); }};
  };
  auto dbl_field = [](double TrainConfig::* p) {
    return Field{[p](const TrainConfig& c) { return fmt_double(c.*p); },
                 [p](TrainConfig& c, const std::string& v) { c.*p = std::stod(v); }};
  };
  auto bool_field = [](bool TrainConfig::* p) {
    return Field{[p](const TrainConfig& c) { return c.*p ? "true" : "false"; },
                 [p](TrainConfig& c, const std::string& v) { c.*p = parse_bool(v); }};
  };
  static const std::map<std::string, Field> map = {
      {"preset", str_field(&TrainConfig::preset)},
      {"d_model", int_field(&TrainConfig::d_model)},
      {"embed_width", int_field(&TrainConfig::embed_width)},
      {"heads", int_field(&TrainConfig::heads)},
      {"layers", int_field(&TrainConfig::layers)},
      {"max_len", int_field(&TrainConfig::max_len)},
      {"alpha", dbl_field(&TrainConfig::alpha)},
      {"lambda_d", dbl_field(&TrainConfig::lambda_d)},
      {"lambda_c", dbl_field(&TrainConfig::lambda_c)},
      {"tau", dbl_field(&TrainConfig::tau)},
      {"caption_loss_norm", str_field(&TrainConfig::caption_loss_norm)},
      {"ccr_cosine", bool_field(&TrainConfig::ccr_cosine)},
      {"dirl_pool", str_field(&TrainConfig::dirl_pool)},
      {"batch_size", int_field(&TrainConfig::batch_size)},
      {"lr", dbl_field(&TrainConfig::lr)},
      {"iters", int_field(&TrainConfig::iters)},
      {"seed", u64_field(&TrainConfig::seed)},
      {"dropout", dbl_field(&TrainConfig::dropout)},
      {"grad_clip", dbl_field(&TrainConfig::grad_clip)},
      {"mlp", bool_field(&TrainConfig::mlp)},
      {"dirl", bool_field(&TrainConfig::dirl)},
      {"ccr", bool_field(&TrainConfig::ccr)},
      {"subtraction", bool_field(&TrainConfig::subtraction)},
      {"tied_cross_attention", bool_field(&TrainConfig::tied_cross_attention)},
      {"log_every", int_field(&TrainConfig::log_every)},
      {"ckpt_every", int_field(&TrainConfig::ckpt_every)},
  };
  return map;
}

}  // namespace

void TrainConfig::validate() const {
  if (lr <= 0.0) throw ContractError("lr must be positive");
  if (tau <= 0.0) throw ContractError("tau must be positive");
  if (lambda_d < 0.0 || lambda_c < 0.0) throw ContractError("loss weights must be >= 0");
  if (alpha < 0.0) throw ContractError("alpha must be >= 0");
  if (batch_size < 1 || iters < 0) throw ContractError("batch size and iters must be positive");
  if (d_model % heads != 0) throw ContractError("heads must divide d_model");
  if (layers < 1) throw ContractError("at least one decoder layer is required");
  if (max_len < 2) throw ContractError("max_len must be >= 2");
  if (dropout < 0.0 || dropout >= 1.0) throw ContractError("dropout must lie in [0, 1)");
  if (caption_loss_norm != "mean" && caption_loss_norm != "sum")
    throw ContractError("caption_loss_norm must be 'mean' or 'sum'");
  if (dirl_pool != "flat" && dirl_pool != "pooled")
    throw ContractError("dirl_pool must be 'flat' or 'pooled'");
}

std::string TrainConfig::serialize() const {
  std::ostringstream os;
  for (const auto& [key, field] : fields()) os << key << "=" << field.get(*this) << "\n";
  return os.str();
}

TrainConfig TrainConfig::preset_config(const std::string& name) {
  TrainConfig c;
  c.preset = name;
  if (name == "clevr-change") {
    c.d_model = 512; c.embed_width = 300; c.heads = 8;
    c.batch_size = 128; c.lr = 2e-4; c.lambda_d = 0.5; c.lambda_c = 0.3;
    c.iters = 10000;
  } else if (name == "clevr-dc") {
    c.d_model = 512; c.embed_width = 300; c.heads = 8;
    c.batch_size = 128; c.lr = 2e-4; c.lambda_d = 0.03; c.lambda_c = 0.05;
    c.iters = 10000;
  } else if (name == "spot") {
    c.d_model = 512; c.embed_width = 300; c.heads = 8;
    c.batch_size = 64; c.lr = 1e-4; c.lambda_d = 0.5; c.lambda_c = 0.004;
    c.iters = 10000;
  } else if (name == "ier") {
    c.d_model = 512; c.embed_width = 300; c.heads = 8;
    c.batch_size = 16; c.lr = 1e-4; c.lambda_d = 0.001; c.lambda_c = 0.05;
    c.iters = 10000;
  } else if (name == "synthetic") {
    c.d_model = 32; c.embed_width = 32; c.heads = 4; c.layers = 2;
    c.batch_size = 32; c.lr = 1e-3; c.lambda_d = 0.03; c.lambda_c = 0.05;
    c.iters = 3000;
  } else {
    throw ContractError("unknown preset '" + name + "'");
  }
  return c;
}

TrainConfig TrainConfig::parse(const std::string& text) {
  // a preset line is applied first so later lines can override its values
  std::vector<std::pair<std::string, std::string>> pairs;
  std::istringstream is(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    size_t a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    size_t b = line.find_last_not_of(" \t\r");
    line = line.substr(a, b - a + 1);
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError("config line " + std::to_string(lineno) + ": expected key=value");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    const auto trim = [](std::string& s) {
      const size_t x = s.find_first_not_of(" \t");
      const size_t y = s.find_last_not_of(" \t");
      s = x == std::string::npos ? "" : s.substr(x, y - x + 1);
    };
    trim(key);
    trim(value);
    pairs.emplace_back(std::move(key), std::move(value));
  }
  TrainConfig cfg;
  for (const auto& [k, v] : pairs)
    if (k == "preset") cfg = preset_config(v);
  for (const auto& [k, v] : pairs) cfg.apply_override(k + "=" + v);
  return cfg;
}

TrainConfig TrainConfig::load_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open config file " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse(buf.str());
}

void TrainConfig::apply_override(const std::string& kv) {
  const size_t eq = kv.find('=');
  if (eq == std::string::npos) throw ContractError("override must be key=value, got '" + kv + "'");
  const std::string key = kv.substr(0, eq);
  const std::string value = kv.substr(eq + 1);
  const auto& map = fields();
  const auto it = map.find(key);
  if (it == map.end()) throw ContractError("unknown config key '" + key + "'");
  try {
    it->second.set(*this, value);
  } catch (const std::invalid_argument&) {
    throw ContractError("bad value '" + value + "' for config key '" + key + "'");
  } catch (const std::out_of_range&) {
    throw ContractError("value '" + value + "' out of range for config key '" + key + "'");
  }
}

}  // namespace ccap
