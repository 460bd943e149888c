#ifndef ROLEMASK_RECURRENT_HPP
#define ROLEMASK_RECURRENT_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "rolemask/kernels.hpp"
#include "rolemask/rng.hpp"

namespace rolemask {

struct ParamBlock {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;  // 1 for bias vectors
  std::vector<double> w;
  std::vector<double> g;
  kernels::AdamState adam;
  bool decay = false;  // L2 applies to weight matrices only
};

// Bidirectional LSTM sequence classifier with an explicit backward pass.
// Layout per direction: wx (4H x E), wh (4H x H), b (4H); gate order within
// the 4H axis is input, forget, candidate, output. The final hidden states
// of both directions feed a linear projection to label scores.
//
// All math is double precision; gradients are exact, which the finite
// difference tests rely on.
class BiLstmNet {
 public:
  BiLstmNet(std::size_t vocab_size, std::size_t embed_dim,
            std::size_t hidden_size, std::size_t n_labels);

  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t embed_dim() const { return embed_dim_; }
  std::size_t hidden_size() const { return hidden_size_; }
  std::size_t n_labels() const { return n_labels_; }

  // Kaiming-scheme initialization: N(0, sqrt(2/fan_in)) weights, zero biases.
  // Embedding rows are left zero; set_embedding_row fills them.
  void init_kaiming(Rng& rng);
  void set_embedding_row(std::size_t id, const std::vector<double>& vec);
  const double* embedding_row(std::size_t id) const;

  // Inference: logits for a sequence of embedding vectors (no dropout).
  // Rows may point into this net's embedding block or anywhere else, which
  // is how out-of-vocabulary tokens ride along at prediction time.
  std::vector<double> forward(const std::vector<const double*>& xs) const;

  // Training step for one sequence of embedding ids: accumulates gradients
  // into the blocks and returns the cross-entropy loss. Dropout masks are
  // drawn from rng; rates of zero make the pass deterministic and purely a
  // function of the parameters.
  double forward_backward(const std::vector<std::size_t>& ids, std::size_t gold,
                          double input_dropout, double recurrent_dropout,
                          Rng& rng, bool fine_tune_embeddings);

  void zero_grads();
  // Scales accumulated gradients and adds the L2 term on decay blocks.
  void finish_batch(double scale, double l2);
  void adam_update(double lr);

  std::vector<ParamBlock*> blocks();
  std::vector<const ParamBlock*> blocks() const;

  std::vector<std::vector<double>> snapshot() const;
  void restore(const std::vector<std::vector<double>>& snap);

 private:
  struct Direction {
    ParamBlock wx, wh, b;
  };

  // One direction's forward scan; writes per-step activations into ws.
  struct Workspace;
  void scan(const Direction& dir, const std::vector<const double*>& xs,
            const std::vector<const double*>& input_masks,
            const double* recurrent_mask, Workspace& ws) const;
  void scan_backward(Direction& dir, const std::vector<std::size_t>& ids,
                     bool reversed, const Workspace& ws,
                     const std::vector<double>& dh_final,
                     bool fine_tune_embeddings);

  std::size_t vocab_size_, embed_dim_, hidden_size_, n_labels_;
  ParamBlock embed_;  // vocab x E
  Direction fwd_, bwd_;
  ParamBlock out_w_;  // C x 2H
  ParamBlock out_b_;  // C

  // Per-sequence training scratch, reused across calls.
  struct Workspace {
    std::size_t steps = 0;
    std::vector<double> x_masked;      // T x E
    std::vector<double> input_mask;    // T x E (0 or 1/(1-p))
    std::vector<double> hprev_masked;  // T x H
    std::vector<double> gates;         // T x 4H, post-activation
    std::vector<double> c;             // T x H
    std::vector<double> tanh_c;        // T x H
    std::vector<double> h;             // T x H
    std::vector<double> recurrent_mask;  // H
    void resize(std::size_t t, std::size_t e, std::size_t h);
  };
  mutable Workspace ws_fwd_, ws_bwd_;
};

}  // namespace rolemask

#endif
