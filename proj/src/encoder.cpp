#include "hyperclass/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "hyperclass/text_util.hpp"

namespace hyperclass {

namespace {

// Byte length of a whitespace code point starting at s[i], or 0.
std::size_t whitespace_len(std::string_view s, std::size_t i) {
  const auto b = [&](std::size_t k) {
    return i + k < s.size() ? static_cast<unsigned char>(s[i + k]) : 0u;
  };
  if (is_ascii_space(s[i])) return 1;
  if (b(0) == 0xC2 && (b(1) == 0x85 || b(1) == 0xA0)) return 2;
  if (b(0) == 0xE1 && b(1) == 0x9A && b(2) == 0x80) return 3;
  if (b(0) == 0xE2 && b(1) == 0x80 &&
      ((b(2) >= 0x80 && b(2) <= 0x8A) || b(2) == 0xA8 || b(2) == 0xA9 || b(2) == 0xAF))
    return 3;
  if (b(0) == 0xE2 && b(1) == 0x81 && b(2) == 0x9F) return 3;
  if (b(0) == 0xE3 && b(1) == 0x80 && b(2) == 0x80) return 3;
  return 0;
}

bool is_ascii_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (u >= 0x21 && u <= 0x2F) || (u >= 0x3A && u <= 0x40) || (u >= 0x5B && u <= 0x60) ||
         (u >= 0x7B && u <= 0x7E);
}

void flush_word(std::string& word, std::vector<std::string>& out) {
  std::string_view w = word;
  while (!w.empty() && is_ascii_punct(w.front())) w.remove_prefix(1);
  while (!w.empty() && is_ascii_punct(w.back())) w.remove_suffix(1);
  if (!w.empty()) out.emplace_back(w);
  word.clear();
}

}  // namespace

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::string word;
  for (std::size_t i = 0; i < text.size();) {
    if (const std::size_t ws = whitespace_len(text, i)) {
      flush_word(word, out);
      i += ws;
      continue;
    }
    char c = text[i];
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    word.push_back(c);
    ++i;
  }
  flush_word(word, out);
  return out;
}

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{std::string(kUnkToken), std::string(kPadToken)}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.size() < 2 || tokens_[kUnk] != kUnkToken || tokens_[kPad] != kPadToken) {
    throw std::invalid_argument("vocabulary must start with <unk>, <pad>");
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
      throw std::invalid_argument("duplicate vocabulary token: " + tokens_[i]);
    }
  }
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  return Vocabulary(std::move(tokens));
}

Vocabulary Vocabulary::build(std::span<const std::string> texts, std::size_t min_freq) {
  std::map<std::string, std::size_t> freq;
  for (const auto& t : texts)
    for (auto& w : split_words(t)) ++freq[w];
  std::vector<std::string> tokens{std::string(kUnkToken), std::string(kPadToken)};
  for (const auto& [w, n] : freq)
    if (n >= min_freq && w != kUnkToken && w != kPadToken) tokens.push_back(w);
  return from_tokens(std::move(tokens));
}

TokenId Vocabulary::lookup(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

std::vector<TokenId> tokenize(const Vocabulary& vocab, std::string_view text) {
  std::vector<TokenId> ids;
  for (const auto& w : split_words(text)) ids.push_back(vocab.lookup(w));
  if (ids.empty()) ids.push_back(Vocabulary::kPad);
  return ids;
}

EncoderModel::EncoderModel(std::size_t vocab_size, std::size_t d_tok, std::size_t d_e)
    : embedding(vocab_size, d_tok), w1(d_e, d_tok), b1(d_e, 0.0) {}

void EncoderModel::init_uniform(std::mt19937_64& rng, double bound) {
  fill_uniform(embedding.data, bound, rng);
  fill_uniform(w1.data, bound, rng);
  fill_uniform(b1, bound, rng);
}

std::vector<double> mean_pool(const EncoderModel& model, std::span<const TokenId> tokens) {
  if (tokens.empty()) throw std::invalid_argument("encode requires at least one token");
  std::vector<double> pooled(model.d_tok(), 0.0);
  for (TokenId t : tokens) {
    const auto row = model.embedding.row(t);
    for (std::size_t i = 0; i < pooled.size(); ++i) pooled[i] += row[i];
  }
  const double inv = 1.0 / static_cast<double>(tokens.size());
  for (double& p : pooled) p *= inv;
  return pooled;
}

std::vector<double> encode(const EncoderModel& model, std::span<const TokenId> tokens) {
  auto h = affine(model.w1, mean_pool(model, tokens), model.b1);
  for (double& x : h) x = std::tanh(x);
  return h;
}

EncoderGrad encode_backward(const EncoderModel& model, std::span<const TokenId> tokens,
                            std::span<const double> upstream) {
  if (upstream.size() != model.d_e()) throw std::invalid_argument("upstream gradient size");
  const auto pooled = mean_pool(model, tokens);
  const auto h = encode(model, tokens);

  EncoderGrad g;
  g.b1.resize(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) g.b1[i] = upstream[i] * (1.0 - h[i] * h[i]);
  g.w1 = Matrix(model.w1.rows, model.w1.cols);
  add_outer(g.w1, g.b1, pooled);

  auto d_pooled = transpose_times(model.w1, g.b1);
  const double inv = 1.0 / static_cast<double>(tokens.size());
  for (double& x : d_pooled) x *= inv;

  std::vector<TokenId> uniq(tokens.begin(), tokens.end());
  std::sort(uniq.begin(), uniq.end());
  for (std::size_t i = 0; i < uniq.size();) {
    std::size_t j = i;
    while (j < uniq.size() && uniq[j] == uniq[i]) ++j;
    std::vector<double> row(d_pooled);
    const double count = static_cast<double>(j - i);
    if (count != 1.0)
      for (double& x : row) x *= count;
    g.rows.emplace_back(uniq[i], std::move(row));
    i = j;
  }
  return g;
}

}  // namespace hyperclass
