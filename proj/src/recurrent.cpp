#include "rolemask/recurrent.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace rolemask {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void fill_kaiming(ParamBlock& block, std::size_t fan_in, Rng& rng) {
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (double& w : block.w) w = stddev * rng.normal();
}

ParamBlock make_block(std::string name, std::size_t rows, std::size_t cols,
                      bool decay) {
  ParamBlock b;
  b.name = std::move(name);
  b.rows = rows;
  b.cols = cols;
  b.w.assign(rows * cols, 0.0);
  b.g.assign(rows * cols, 0.0);
  b.decay = decay;
  return b;
}

}  // namespace

void BiLstmNet::Workspace::resize(std::size_t t, std::size_t e, std::size_t h) {
  steps = t;
  x_masked.assign(t * e, 0.0);
  input_mask.assign(t * e, 0.0);
  hprev_masked.assign(t * h, 0.0);
  gates.assign(t * 4 * h, 0.0);
  c.assign(t * h, 0.0);
  tanh_c.assign(t * h, 0.0);
  this->h.assign(t * h, 0.0);
  recurrent_mask.assign(h, 1.0);
}

BiLstmNet::BiLstmNet(std::size_t vocab_size, std::size_t embed_dim,
                     std::size_t hidden_size, std::size_t n_labels)
    : vocab_size_(vocab_size),
      embed_dim_(embed_dim),
      hidden_size_(hidden_size),
      n_labels_(n_labels) {
  if (embed_dim == 0 || hidden_size == 0 || n_labels == 0)
    throw std::invalid_argument("BiLstmNet: zero-sized layer");
  embed_ = make_block("embed", vocab_size, embed_dim, false);
  const std::size_t h4 = 4 * hidden_size;
  for (auto [dir, tag] : {std::pair{&fwd_, "fwd"}, std::pair{&bwd_, "bwd"}}) {
    dir->wx = make_block(std::string(tag) + ".wx", h4, embed_dim, true);
    dir->wh = make_block(std::string(tag) + ".wh", h4, hidden_size, true);
    dir->b = make_block(std::string(tag) + ".b", h4, 1, false);
  }
  out_w_ = make_block("out.w", n_labels, 2 * hidden_size, true);
  out_b_ = make_block("out.b", n_labels, 1, false);
}

void BiLstmNet::init_kaiming(Rng& rng) {
  for (Direction* dir : {&fwd_, &bwd_}) {
    fill_kaiming(dir->wx, embed_dim_, rng);
    fill_kaiming(dir->wh, hidden_size_, rng);
  }
  fill_kaiming(out_w_, 2 * hidden_size_, rng);
}

void BiLstmNet::set_embedding_row(std::size_t id, const std::vector<double>& vec) {
  if (id >= vocab_size_ || vec.size() != embed_dim_)
    throw std::invalid_argument("set_embedding_row: bad id or dimension");
  std::memcpy(embed_.w.data() + id * embed_dim_, vec.data(),
              embed_dim_ * sizeof(double));
}

const double* BiLstmNet::embedding_row(std::size_t id) const {
  return embed_.w.data() + id * embed_dim_;
}

void BiLstmNet::scan(const Direction& dir, const std::vector<const double*>& xs,
                     const std::vector<const double*>& input_masks,
                     const double* recurrent_mask, Workspace& ws) const {
  const std::size_t T = xs.size(), E = embed_dim_, H = hidden_size_;
  const std::size_t h4 = 4 * H;
  ws.resize(T, E, H);
  if (recurrent_mask != nullptr)
    std::memcpy(ws.recurrent_mask.data(), recurrent_mask, H * sizeof(double));

  std::vector<double> z(h4), z2(h4);
  for (std::size_t t = 0; t < T; ++t) {
    double* xm = ws.x_masked.data() + t * E;
    double* im = ws.input_mask.data() + t * E;
    if (t < input_masks.size() && input_masks[t] != nullptr) {
      for (std::size_t j = 0; j < E; ++j) {
        im[j] = input_masks[t][j];
        xm[j] = im[j] * xs[t][j];
      }
    } else {
      for (std::size_t j = 0; j < E; ++j) {
        im[j] = 1.0;
        xm[j] = xs[t][j];
      }
    }
    double* hm = ws.hprev_masked.data() + t * H;
    if (t > 0) {
      const double* hprev = ws.h.data() + (t - 1) * H;
      for (std::size_t j = 0; j < H; ++j)
        hm[j] = ws.recurrent_mask[j] * hprev[j];
    }  // else stays zero: h_{-1} = 0

    kernels::matvec(dir.wx.w, h4, E, std::span(xm, E), dir.b.w, z);
    kernels::matvec(dir.wh.w, h4, H, std::span(hm, H), {}, z2);
    for (std::size_t j = 0; j < h4; ++j) z[j] += z2[j];

    double* gates = ws.gates.data() + t * h4;
    double* c = ws.c.data() + t * H;
    double* tc = ws.tanh_c.data() + t * H;
    double* h = ws.h.data() + t * H;
    const double* cprev = t > 0 ? ws.c.data() + (t - 1) * H : nullptr;
    for (std::size_t j = 0; j < H; ++j) {
      const double gi = sigmoid(z[j]);
      const double gf = sigmoid(z[H + j]);
      const double gg = std::tanh(z[2 * H + j]);
      const double go = sigmoid(z[3 * H + j]);
      gates[j] = gi;
      gates[H + j] = gf;
      gates[2 * H + j] = gg;
      gates[3 * H + j] = go;
      c[j] = (cprev ? gf * cprev[j] : 0.0) + gi * gg;
      tc[j] = std::tanh(c[j]);
      h[j] = go * tc[j];
    }
  }
}

std::vector<double> BiLstmNet::forward(
    const std::vector<const double*>& xs) const {
  if (xs.empty()) throw std::invalid_argument("BiLstmNet: empty sequence");
  scan(fwd_, xs, {}, nullptr, ws_fwd_);
  std::vector<const double*> rev(xs.rbegin(), xs.rend());
  scan(bwd_, rev, {}, nullptr, ws_bwd_);

  const std::size_t H = hidden_size_, T = xs.size();
  std::vector<double> u(2 * H);
  std::memcpy(u.data(), ws_fwd_.h.data() + (T - 1) * H, H * sizeof(double));
  std::memcpy(u.data() + H, ws_bwd_.h.data() + (T - 1) * H, H * sizeof(double));

  std::vector<double> logits(n_labels_);
  kernels::matvec(out_w_.w, n_labels_, 2 * H, u, out_b_.w, logits);
  return logits;
}

void BiLstmNet::scan_backward(Direction& dir, const std::vector<std::size_t>& ids,
                              bool reversed, const Workspace& ws,
                              const std::vector<double>& dh_final,
                              bool fine_tune_embeddings) {
  const std::size_t T = ws.steps, E = embed_dim_, H = hidden_size_;
  const std::size_t h4 = 4 * H;
  std::vector<double> dh = dh_final;  // dL/dh at the step being processed
  std::vector<double> dc(H, 0.0);
  std::vector<double> dz(h4), dx(E), dhprev(H);

  for (std::size_t t = T; t-- > 0;) {
    const double* gates = ws.gates.data() + t * h4;
    const double* tc = ws.tanh_c.data() + t * H;
    const double* cprev = t > 0 ? ws.c.data() + (t - 1) * H : nullptr;
    for (std::size_t j = 0; j < H; ++j) {
      const double gi = gates[j], gf = gates[H + j], gg = gates[2 * H + j],
                   go = gates[3 * H + j];
      const double dout = dh[j] * tc[j];
      dc[j] += dh[j] * go * (1.0 - tc[j] * tc[j]);
      dz[j] = dc[j] * gg * gi * (1.0 - gi);
      dz[H + j] = dc[j] * (cprev ? cprev[j] : 0.0) * gf * (1.0 - gf);
      dz[2 * H + j] = dc[j] * gi * (1.0 - gg * gg);
      dz[3 * H + j] = dout * go * (1.0 - go);
    }

    const double* xm = ws.x_masked.data() + t * E;
    const double* hm = ws.hprev_masked.data() + t * H;
    kernels::outer_acc(dir.wx.g, dz, std::span(xm, E));
    kernels::outer_acc(dir.wh.g, dz, std::span(hm, H));
    for (std::size_t j = 0; j < h4; ++j) dir.b.g[j] += dz[j];

    if (fine_tune_embeddings) {
      std::fill(dx.begin(), dx.end(), 0.0);
      kernels::matvec_t_acc(dir.wx.w, h4, E, dz, dx);
      const std::size_t src = reversed ? ids.size() - 1 - t : t;
      double* de = embed_.g.data() + ids[src] * E;
      const double* im = ws.input_mask.data() + t * E;
      for (std::size_t j = 0; j < E; ++j) de[j] += im[j] * dx[j];
    }

    std::fill(dhprev.begin(), dhprev.end(), 0.0);
    kernels::matvec_t_acc(dir.wh.w, h4, H, dz, dhprev);
    for (std::size_t j = 0; j < H; ++j) {
      dh[j] = ws.recurrent_mask[j] * dhprev[j];
      dc[j] *= gates[H + j];  // forget gate carries cell-state gradient
    }
  }
}

double BiLstmNet::forward_backward(const std::vector<std::size_t>& ids,
                                   std::size_t gold, double input_dropout,
                                   double recurrent_dropout, Rng& rng,
                                   bool fine_tune_embeddings) {
  if (ids.empty()) throw std::invalid_argument("BiLstmNet: empty sequence");
  if (gold >= n_labels_) throw std::invalid_argument("BiLstmNet: bad label");
  const std::size_t T = ids.size(), E = embed_dim_, H = hidden_size_;

  std::vector<const double*> xs(T);
  for (std::size_t t = 0; t < T; ++t) xs[t] = embedding_row(ids[t]);
  std::vector<const double*> rev(xs.rbegin(), xs.rend());

  // Draw dropout masks up front. Inverted scaling keeps inference mask-free;
  // the recurrent mask is fixed per sequence and direction, the input masks
  // per time step. Rates of zero draw nothing, so a gradient check sees a
  // deterministic function of the parameters.
  std::vector<double> imask_store;
  std::vector<const double*> imask_fwd, imask_bwd;
  std::vector<double> rmask_fwd, rmask_bwd;
  if (input_dropout > 0.0) {
    const double keep = 1.0 - input_dropout;
    imask_store.resize(2 * T * E);
    for (double& m : imask_store) m = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
    imask_fwd.resize(T);
    imask_bwd.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
      imask_fwd[t] = imask_store.data() + t * E;
      imask_bwd[t] = imask_store.data() + (T + t) * E;
    }
  }
  if (recurrent_dropout > 0.0) {
    const double keep = 1.0 - recurrent_dropout;
    rmask_fwd.resize(H);
    rmask_bwd.resize(H);
    for (double& m : rmask_fwd) m = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
    for (double& m : rmask_bwd) m = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
  }

  scan(fwd_, xs, imask_fwd, rmask_fwd.empty() ? nullptr : rmask_fwd.data(),
       ws_fwd_);
  scan(bwd_, rev, imask_bwd, rmask_bwd.empty() ? nullptr : rmask_bwd.data(),
       ws_bwd_);

  std::vector<double> u(2 * H);
  std::memcpy(u.data(), ws_fwd_.h.data() + (T - 1) * H, H * sizeof(double));
  std::memcpy(u.data() + H, ws_bwd_.h.data() + (T - 1) * H, H * sizeof(double));

  std::vector<double> logits(n_labels_);
  kernels::matvec(out_w_.w, n_labels_, 2 * H, u, out_b_.w, logits);
  const double gold_logit = logits[gold];
  const double lse = kernels::softmax_inplace(logits);  // logits now probs
  const double loss = lse - gold_logit;

  std::vector<double>& dlogits = logits;
  dlogits[gold] -= 1.0;
  kernels::outer_acc(out_w_.g, dlogits, u);
  for (std::size_t j = 0; j < n_labels_; ++j) out_b_.g[j] += dlogits[j];

  std::vector<double> du(2 * H, 0.0);
  kernels::matvec_t_acc(out_w_.w, n_labels_, 2 * H, dlogits, du);
  std::vector<double> dh_fwd(du.begin(), du.begin() + H);
  std::vector<double> dh_bwd(du.begin() + H, du.end());

  scan_backward(fwd_, ids, false, ws_fwd_, dh_fwd, fine_tune_embeddings);
  scan_backward(bwd_, ids, true, ws_bwd_, dh_bwd, fine_tune_embeddings);
  return loss;
}

void BiLstmNet::zero_grads() {
  for (ParamBlock* b : blocks()) std::fill(b->g.begin(), b->g.end(), 0.0);
}

void BiLstmNet::finish_batch(double scale, double l2) {
  for (ParamBlock* b : blocks()) {
    if (b->decay && l2 > 0.0) {
      for (std::size_t i = 0; i < b->g.size(); ++i)
        b->g[i] = b->g[i] * scale + l2 * b->w[i];
    } else {
      for (double& g : b->g) g *= scale;
    }
  }
}

void BiLstmNet::adam_update(double lr) {
  for (ParamBlock* b : blocks())
    kernels::adam_step(b->w, b->g, b->adam, lr, 0.9, 0.999, 1e-8);
}

std::vector<ParamBlock*> BiLstmNet::blocks() {
  return {&embed_,   &fwd_.wx, &fwd_.wh, &fwd_.b,  &bwd_.wx,
          &bwd_.wh,  &bwd_.b,  &out_w_,  &out_b_};
}

std::vector<const ParamBlock*> BiLstmNet::blocks() const {
  auto mutable_blocks = const_cast<BiLstmNet*>(this)->blocks();
  return {mutable_blocks.begin(), mutable_blocks.end()};
}

std::vector<std::vector<double>> BiLstmNet::snapshot() const {
  std::vector<std::vector<double>> snap;
  for (const ParamBlock* b : blocks()) snap.push_back(b->w);
  return snap;
}

void BiLstmNet::restore(const std::vector<std::vector<double>>& snap) {
  auto bs = blocks();
  if (snap.size() != bs.size())
    throw std::invalid_argument("BiLstmNet::restore: block count mismatch");
  for (std::size_t i = 0; i < bs.size(); ++i) {
    if (snap[i].size() != bs[i]->w.size())
      throw std::invalid_argument("BiLstmNet::restore: block size mismatch");
    bs[i]->w = snap[i];
  }
}

}  // namespace rolemask
