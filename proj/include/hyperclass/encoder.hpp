#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hyperclass/matrix.hpp"

namespace hyperclass {

using TokenId = std::uint32_t;

class Vocabulary {
 public:
  static constexpr TokenId kUnk = 0;
  static constexpr TokenId kPad = 1;
  static constexpr std::string_view kUnkToken = "<unk>";
  static constexpr std::string_view kPadToken = "<pad>";

  Vocabulary();
  /// Tokens appearing at least `min_freq` times, in lexicographic order after UNK/PAD.
  static Vocabulary build(std::span<const std::string> texts, std::size_t min_freq = 2);
  /// Reconstructs from an index-ordered token list (first two must be UNK, PAD).
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  [[nodiscard]] std::size_t size() const noexcept { return tokens_.size(); }
  [[nodiscard]] TokenId lookup(std::string_view token) const;
  [[nodiscard]] const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  explicit Vocabulary(std::vector<std::string> tokens);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

/// Lowercases ASCII, splits on Unicode whitespace and strips leading and
/// trailing ASCII punctuation from each word. Words that strip to nothing are
/// dropped.
std::vector<std::string> split_words(std::string_view text);

/// Maps words to vocabulary ids; unknown words become UNK and an input with no
/// words becomes a single PAD.
std::vector<TokenId> tokenize(const Vocabulary& vocab, std::string_view text);

// Mean-pooled token embeddings followed by one tanh layer:
//   h = tanh(W1 * mean(E[tokens]) + b1)
struct EncoderModel {
  Matrix embedding;  // |V| x d_tok
  Matrix w1;         // d_e x d_tok
  std::vector<double> b1;

  EncoderModel() = default;
  EncoderModel(std::size_t vocab_size, std::size_t d_tok, std::size_t d_e);

  [[nodiscard]] std::size_t d_tok() const noexcept { return embedding.cols; }
  [[nodiscard]] std::size_t d_e() const noexcept { return w1.rows; }

  /// Uniform(-bound, bound) on every parameter.
  void init_uniform(std::mt19937_64& rng, double bound = 0.05);

  friend bool operator==(const EncoderModel&, const EncoderModel&) = default;
};

std::vector<double> mean_pool(const EncoderModel& model, std::span<const TokenId> tokens);
std::vector<double> encode(const EncoderModel& model, std::span<const TokenId> tokens);

struct EncoderGrad {
  std::vector<std::pair<TokenId, std::vector<double>>> rows;  // sorted by token id, unique
  Matrix w1;
  std::vector<double> b1;
};

/// Gradients of <upstream, encode(tokens)> with respect to the used embedding
/// rows, W1 and b1.
EncoderGrad encode_backward(const EncoderModel& model, std::span<const TokenId> tokens,
                            std::span<const double> upstream);

}  // namespace hyperclass
