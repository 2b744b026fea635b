#pragma once

#include <span>
#include <vector>

#include "timrl/inference/context.hpp"
#include "timrl/neural/mlp.hpp"
#include "timrl/neural/transformer.hpp"

namespace timrl::inference {

struct RecognitionOptions {
  neural::TransformerOptions transformer;
  std::size_t preproc_hidden = 64;
  std::size_t head_hidden = 32;
};

struct Recognition {
  std::vector<double> probs;
  int k = 0;  // argmax, lowest index on ties
};

/// Per-transition preprocessing MLP, transformer encoder, classification head.
class RecognitionNetwork {
 public:
  RecognitionNetwork() = default;
  RecognitionNetwork(std::size_t row_width, std::size_t num_classes,
                     const RecognitionOptions& options, Rng& rng);

  /// Softmax class probabilities for one context, [1×K]; differentiable.
  Tensor probabilities(const Tensor& rows) const;
  /// Graph-free classification of one context.
  Recognition recognize(const ContextWindow& ctx) const;

  std::size_t num_classes() const { return head_.out_dim(); }
  neural::Mlp& head() { return head_; }
  void append_params(ParamList& out, const std::string& prefix = "recognition") const;

 private:
  neural::Mlp preproc_;
  neural::TransformerEncoder encoder_;
  neural::Mlp head_;
};

int argmax_lowest(std::span<const double> values);

}  // namespace timrl::inference
