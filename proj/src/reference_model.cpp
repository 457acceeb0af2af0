#include "agser/reference_model.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "agser/error.hpp"

namespace agser {

namespace {

constexpr std::array<char, 8> kMagic = {'A', 'G', 'S', 'R', 'W', '0', '0', '1'};
constexpr int kStopByte = '\n';

double uniform_unit(std::mt19937_64& rng) {
  // 53 random bits -> [0, 1)
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, double bound, std::mt19937_64& rng) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = (2.0 * uniform_unit(rng) - 1.0) * bound;
  return m;
}

template <typename W, typename F>
void for_each_matrix(W& w, F&& f) {
  f(w.token_embedding);
  f(w.position_embedding);
  for (auto& l : w.layers) {
    f(l.query);
    f(l.key);
    f(l.value);
    f(l.output);
    f(l.mlp_in);
    f(l.mlp_out);
  }
  f(w.unembedding);
}

ModelWeights empty_weights(const ModelShape& s) {
  ModelWeights w;
  w.shape = s;
  w.token_embedding = Matrix(s.vocab, s.width);
  w.position_embedding = Matrix(s.context, s.width);
  w.layers.resize(s.layers);
  for (auto& l : w.layers) {
    l.query = Matrix(s.width, s.width);
    l.key = Matrix(s.width, s.width);
    l.value = Matrix(s.width, s.width);
    l.output = Matrix(s.width, s.width);
    l.mlp_in = Matrix(s.width, s.mlp_width);
    l.mlp_out = Matrix(s.mlp_width, s.width);
  }
  w.unembedding = Matrix(s.width, s.vocab);
  return w;
}

void check_shape(const ModelShape& s) {
  if (s.layers == 0 || s.heads == 0 || s.width == 0 || s.vocab == 0 || s.context == 0 ||
      s.mlp_width == 0 || s.heads * s.head_width != s.width)
    throw Error(ErrorKind::Configuration, "invalid reference model shape");
}

// out = x * W for a row vector x.
void row_times(std::span<const double> x, const Matrix& w, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const double xi = x[i];
    auto wr = w.row(i);
    for (std::size_t j = 0; j < w.cols(); ++j) out[j] += xi * wr[j];
  }
}

double gelu(double x) {
  constexpr double kC = 0.7978845608028654;  // sqrt(2/pi)
  return 0.5 * x * (1.0 + std::tanh(kC * (x + 0.044715 * x * x * x)));
}

void softmax_inplace(std::span<double> v) {
  const double mx = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (auto& x : v) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (auto& x : v) x /= sum;
}

/// Incremental causal decoder; tokens are pushed one at a time against cached
/// keys and values, which is the same computation as a masked full prefill.
class DecoderState {
 public:
  explicit DecoderState(const ModelWeights& w) : w_(w) {
    keys_.resize(w.shape.layers);
    values_.resize(w.shape.layers);
  }

  std::size_t length() const noexcept { return length_; }

  /// Returns the vocab logits after `id`. When capture is set, writes row
  /// `length()` of every head's attention and pre-softmax score matrix.
  std::vector<double> push(int id, std::vector<std::vector<Matrix>>* attn,
                           std::vector<std::vector<Matrix>>* logits) {
    const ModelShape& s = w_.shape;
    if (id < 0 || static_cast<std::size_t>(id) >= s.vocab)
      throw Error(ErrorKind::Structural, "token id " + std::to_string(id) + " outside vocab");
    if (length_ >= s.context)
      throw Error(ErrorKind::Capacity, "input exceeds the reference context of " +
                                           std::to_string(s.context) + " tokens");
    const std::size_t pos = length_;
    std::vector<double> x(s.width);
    for (std::size_t d = 0; d < s.width; ++d)
      x[d] = w_.token_embedding(id, d) + w_.position_embedding(pos, d);

    std::vector<double> q(s.width), k(s.width), v(s.width), mixed(s.width), proj(s.width);
    std::vector<double> hidden(s.mlp_width);
    const double scale = 1.0 / std::sqrt(static_cast<double>(s.head_width));
    for (std::size_t l = 0; l < s.layers; ++l) {
      const LayerWeights& lw = w_.layers[l];
      row_times(x, lw.query, q);
      row_times(x, lw.key, k);
      row_times(x, lw.value, v);
      keys_[l].insert(keys_[l].end(), k.begin(), k.end());
      values_[l].insert(values_[l].end(), v.begin(), v.end());

      std::fill(mixed.begin(), mixed.end(), 0.0);
      std::vector<double> scores(pos + 1);
      for (std::size_t h = 0; h < s.heads; ++h) {
        const std::size_t off = h * s.head_width;
        for (std::size_t j = 0; j <= pos; ++j) {
          const double* kj = keys_[l].data() + j * s.width + off;
          double dot = 0.0;
          for (std::size_t d = 0; d < s.head_width; ++d) dot += q[off + d] * kj[d];
          scores[j] = dot * scale;
        }
        if (logits) std::copy(scores.begin(), scores.end(), (*logits)[l][h].row(pos).begin());
        softmax_inplace(scores);
        if (attn) std::copy(scores.begin(), scores.end(), (*attn)[l][h].row(pos).begin());
        for (std::size_t j = 0; j <= pos; ++j) {
          const double* vj = values_[l].data() + j * s.width + off;
          for (std::size_t d = 0; d < s.head_width; ++d) mixed[off + d] += scores[j] * vj[d];
        }
      }
      row_times(mixed, lw.output, proj);
      for (std::size_t d = 0; d < s.width; ++d) x[d] += proj[d];

      row_times(x, lw.mlp_in, hidden);
      for (auto& hv : hidden) hv = gelu(hv);
      row_times(hidden, lw.mlp_out, proj);
      for (std::size_t d = 0; d < s.width; ++d) x[d] += proj[d];
    }
    ++length_;
    std::vector<double> out(s.vocab);
    row_times(x, w_.unembedding, out);
    return out;
  }

 private:
  const ModelWeights& w_;
  std::vector<std::vector<double>> keys_;    // [layer][pos * width + d]
  std::vector<std::vector<double>> values_;
  std::size_t length_ = 0;
};

std::vector<std::vector<Matrix>> zero_capture(const ModelShape& s, std::size_t m) {
  return std::vector<std::vector<Matrix>>(s.layers, std::vector<Matrix>(s.heads, Matrix(m, m)));
}

void write_u64(std::ofstream& out, std::uint64_t v) {
  std::array<unsigned char, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b.data()), 8);
}

std::uint64_t read_u64(std::ifstream& in) {
  std::array<unsigned char, 8> b{};
  in.read(reinterpret_cast<char*>(b.data()), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

ModelWeights ModelWeights::generate(std::uint64_t seed, ModelShape shape) {
  check_shape(shape);
  std::mt19937_64 rng(seed);
  ModelWeights w;
  w.shape = shape;
  const auto bound = [](std::size_t fan_in) { return std::sqrt(3.0 / static_cast<double>(fan_in)); };
  w.token_embedding = random_matrix(shape.vocab, shape.width, std::sqrt(3.0), rng);
  w.position_embedding = random_matrix(shape.context, shape.width, std::sqrt(3.0), rng);
  w.layers.reserve(shape.layers);
  for (std::size_t l = 0; l < shape.layers; ++l) {
    LayerWeights lw;
    lw.query = random_matrix(shape.width, shape.width, bound(shape.width), rng);
    lw.key = random_matrix(shape.width, shape.width, bound(shape.width), rng);
    lw.value = random_matrix(shape.width, shape.width, bound(shape.width), rng);
    lw.output = random_matrix(shape.width, shape.width, bound(shape.width), rng);
    lw.mlp_in = random_matrix(shape.width, shape.mlp_width, bound(shape.width), rng);
    lw.mlp_out = random_matrix(shape.mlp_width, shape.width, bound(shape.mlp_width), rng);
    w.layers.push_back(std::move(lw));
  }
  w.unembedding = random_matrix(shape.width, shape.vocab, bound(shape.width), rng);
  return w;
}

void ModelWeights::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Configuration, "cannot write weights file '" + path + "'");
  out.write(kMagic.data(), kMagic.size());
  for (std::size_t v : {shape.layers, shape.heads, shape.width, shape.head_width, shape.mlp_width,
                        shape.vocab, shape.context})
    write_u64(out, v);
  for_each_matrix(*this, [&](const Matrix& m) {
    for (std::size_t i = 0; i < m.rows(); ++i)
      for (double d : m.row(i)) write_u64(out, std::bit_cast<std::uint64_t>(d));
  });
  if (!out) throw Error(ErrorKind::Configuration, "failed writing weights file '" + path + "'");
}

ModelWeights ModelWeights::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Configuration, "cannot open weights file '" + path + "'");
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic)
    throw Error(ErrorKind::Configuration, "'" + path + "' is not a reference weights file");
  ModelShape s;
  s.layers = read_u64(in);
  s.heads = read_u64(in);
  s.width = read_u64(in);
  s.head_width = read_u64(in);
  s.mlp_width = read_u64(in);
  s.vocab = read_u64(in);
  s.context = read_u64(in);
  if (!in || s.layers > 64 || s.width > 4096 || s.vocab > (1u << 20) || s.context > (1u << 16) ||
      s.mlp_width > 16384)
    throw Error(ErrorKind::Configuration, "corrupt header in weights file '" + path + "'");
  check_shape(s);
  ModelWeights w = empty_weights(s);
  for_each_matrix(w, [&](Matrix& m) {
    for (std::size_t i = 0; i < m.rows(); ++i)
      for (double& d : m.row(i)) d = std::bit_cast<double>(read_u64(in));
  });
  if (!in) throw Error(ErrorKind::Configuration, "truncated weights file '" + path + "'");
  return w;
}

ForwardResult reference_forward(std::span<const int> token_ids, const ModelWeights& weights) {
  if (token_ids.empty()) throw Error(ErrorKind::Structural, "reference_forward needs at least one token");
  if (token_ids.size() > weights.shape.context)
    throw Error(ErrorKind::Capacity, "input of " + std::to_string(token_ids.size()) +
                                         " tokens exceeds the reference context of " +
                                         std::to_string(weights.shape.context));
  const std::size_t m = token_ids.size();
  auto attn = zero_capture(weights.shape, m);
  auto logits = zero_capture(weights.shape, m);
  DecoderState state(weights);
  std::vector<double> last;
  for (int id : token_ids) last = state.push(id, &attn, &logits);
  softmax_inplace(last);
  ForwardResult r;
  r.next_token_probs = std::move(last);
  r.attention = AttentionTensor::full(std::move(attn));
  r.attention_logits = std::move(logits);
  return r;
}

std::vector<int> byte_token_ids(std::string_view text) {
  std::vector<int> ids;
  ids.reserve(text.size());
  for (char c : text) ids.push_back(static_cast<unsigned char>(c));
  return ids;
}

ReferenceBackend::ReferenceBackend(ModelWeights weights, std::uint64_t seed, int max_new_tokens)
    : weights_(std::move(weights)), seed_(seed), max_new_tokens_(max_new_tokens) {
  check_shape(weights_.shape);
  if (weights_.shape.vocab < 128)
    throw Error(ErrorKind::Configuration, "reference backend needs a byte-level vocab");
  if (max_new_tokens_ < 1) throw Error(ErrorKind::Configuration, "max_new_tokens must be positive");
}

GenerationResult ReferenceBackend::generate(const RenderedPrompt& prompt,
                                            const SamplingOptions& options) const {
  if (prompt.text.empty()) throw Error(ErrorKind::Validation, "empty prompt");
  if (prompt.question_end > prompt.text.size() || prompt.question_begin > prompt.question_end)
    throw Error(ErrorKind::Structural, "question range outside the prompt");
  const auto ids = byte_token_ids(prompt.text);
  if (ids.size() > weights_.shape.context)
    throw Error(ErrorKind::Capacity, "prompt of " + std::to_string(ids.size()) +
                                         " bytes exceeds the reference context of " +
                                         std::to_string(weights_.shape.context));
  const std::size_t m = ids.size();
  auto attn = zero_capture(weights_.shape, m);
  DecoderState state(weights_);
  std::vector<double> logits;
  for (int id : ids) logits = state.push(id, &attn, nullptr);

  std::mt19937_64 rng(options.seed.value_or(seed_));
  std::string answer;
  for (int step = 0; step < max_new_tokens_ && state.length() < weights_.shape.context; ++step) {
    // Candidates: printable ASCII plus the newline stop byte.
    int next = kStopByte;
    if (options.sample) {
      std::vector<double> p;
      std::vector<int> ids_allowed;
      for (int c = 0; c < 128; ++c) {
        if (c != kStopByte && (c < 32 || c > 126)) continue;
        ids_allowed.push_back(c);
        p.push_back(logits[c]);
      }
      softmax_inplace(p);
      double u = uniform_unit(rng);
      next = ids_allowed.back();
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (u < p[i]) {
          next = ids_allowed[i];
          break;
        }
        u -= p[i];
      }
    } else {
      double best = logits[kStopByte];
      for (int c = 32; c <= 126; ++c)
        if (logits[c] > best) {
          best = logits[c];
          next = c;
        }
    }
    if (next == kStopByte) break;
    answer.push_back(static_cast<char>(next));
    logits = state.push(next, nullptr, nullptr);
  }

  GenerationResult r;
  r.answer_text = answer;
  std::vector<std::string> answer_bytes, prompt_bytes;
  for (char c : answer) answer_bytes.emplace_back(1, c);
  for (char c : prompt.text) prompt_bytes.emplace_back(1, c);
  r.answer_tokens = TokenSequence::from_tokens(std::move(answer_bytes));
  r.prompt_tokens = TokenSequence::from_tokens(std::move(prompt_bytes));
  r.attention = AttentionTensor::full(std::move(attn));
  r.question_span = {prompt.question_begin + 1, prompt.question_end};
  r.token_separator = "";
  return r;
}

}  // namespace agser
