#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace ccap {

struct TokenSequence {
  std::vector<int32_t> ids;  // BOS ... EOS, possibly PAD suffix

  int64_t length() const { return static_cast<int64_t>(ids.size()); }
  // true for positions holding real tokens (non-PAD)
  std::vector<uint8_t> mask() const;
};

class Vocab {
 public:
  static constexpr int32_t kPad = 0;
  static constexpr int32_t kBos = 1;
  static constexpr int32_t kEos = 2;
  static constexpr int32_t kUnk = 3;

  Vocab() = default;

  // sorted unique whitespace tokens after the four reserved ids
  static Vocab build(const std::vector<std::string>& captions);

  int32_t size() const { return static_cast<int32_t>(tokens_.size()); }
  const std::string& token(int32_t id) const;
  int32_t id_of(const std::string& token) const;  // kUnk when absent

  TokenSequence encode(const std::string& caption) const;
  std::string decode(const std::vector<int32_t>& ids) const;  // drops sentinels/PAD

  const std::vector<std::string>& tokens() const { return tokens_; }
  static Vocab from_tokens(std::vector<std::string> tokens);  // checkpoint load

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int32_t> index_;
};

std::vector<std::string> tokenize(const std::string& text);

}  // namespace ccap
