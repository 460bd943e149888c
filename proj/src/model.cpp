#include "rolemask/model.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "rolemask/kernels.hpp"
#include "rolemask/metrics.hpp"
#include "rolemask/recurrent.hpp"
#include "rolemask/rng.hpp"

namespace fs = std::filesystem;

namespace rolemask {

void validate(const TrainConfig& config) {
  if (config.dropout < 0.0 || config.dropout >= 1.0)
    throw ConfigError("dropout must lie in [0, 1)");
  if (config.recurrent_dropout < 0.0 || config.recurrent_dropout >= 1.0)
    throw ConfigError("recurrent_dropout must lie in [0, 1)");
  if (!(config.learning_rate > 0.0))
    throw ConfigError("learning_rate must be positive");
  if (config.l2 < 0.0) throw ConfigError("l2 must be non-negative");
  if (config.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (config.patience == 0) throw ConfigError("patience must be positive");
  if (config.max_epochs == 0) throw ConfigError("max_epochs must be positive");
  if (config.hidden_size == 0) throw ConfigError("hidden_size must be positive");
}

namespace {

std::vector<std::string> derive_labels(
    const std::vector<TransformedInstance>& train_set,
    const std::vector<std::string>& label_order) {
  std::set<std::string> seen;
  for (const auto& inst : train_set) seen.insert(inst.label);
  if (label_order.empty()) return {seen.begin(), seen.end()};
  std::set<std::string> ordered(label_order.begin(), label_order.end());
  if (ordered.size() != label_order.size())
    throw ConfigError("label_order contains duplicates");
  for (const auto& label : seen)
    if (!ordered.count(label))
      throw ConfigError("label_order is missing training label '" + label + "'");
  return label_order;
}

std::unordered_map<std::string, std::size_t> index_labels(
    const std::vector<std::string>& labels) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < labels.size(); ++i) index[labels[i]] = i;
  return index;
}

// Dev macro-F1 for early stopping and reporting. Dev-only labels cannot be
// predicted but still count in the macro mean, after a one-time warning.
double dev_macro_f1(const std::vector<std::string>& gold,
                    const std::vector<std::string>& pred,
                    const std::vector<std::string>& train_labels) {
  std::set<std::string> all(train_labels.begin(), train_labels.end());
  bool extra = false;
  for (const auto& label : gold) extra |= all.insert(label).second;
  if (extra)
    std::cerr << "warning: dev split contains labels outside the training "
                 "label set\n";
  std::vector<std::string> label_set(all.begin(), all.end());
  return macro_prf(confusion(gold, pred, label_set)).f1;
}

std::vector<std::string> gold_of(const std::vector<TransformedInstance>& set) {
  std::vector<std::string> gold;
  gold.reserve(set.size());
  for (const auto& inst : set) gold.push_back(inst.label);
  return gold;
}

void write_doubles(std::ofstream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_doubles(std::ifstream& in, std::vector<double>& v,
                  const std::string& path) {
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (static_cast<std::size_t>(in.gcount()) != v.size() * sizeof(double))
    throw ConfigError(path + ": truncated parameter file");
}

nlohmann::json load_metadata(const std::string& dir) {
  const std::string path = dir + "/metadata.json";
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open checkpoint metadata");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return j;
}

TrainMeta meta_from_json(const nlohmann::json& j) {
  TrainMeta meta;
  meta.epochs_run = j.at("epochs_run").get<std::size_t>();
  meta.best_dev_f1 = j.at("best_dev_f1").get<double>();
  meta.seed = j.at("seed").get<std::uint64_t>();
  return meta;
}

nlohmann::ordered_json meta_to_json(const TrainMeta& meta) {
  return {{"epochs_run", meta.epochs_run},
          {"best_dev_f1", meta.best_dev_f1},
          {"seed", meta.seed}};
}

// ---------------------------------------------------------------------------
// Linear backend: mean-pooled word vectors into multinomial logistic
// regression. The problem is convex and the optimizer is full-batch from a
// zero start, so training is deterministic with a unique optimum -- the
// backend the reproducibility and ablation tests lean on.

class LinearModel final : public ClassifierModel {
 public:
  LinearModel(std::vector<std::string> labels, const EmbeddingTable* table,
              std::vector<double> wt, std::vector<double> b, TrainMeta meta)
      : labels_(std::move(labels)),
        table_(table),
        wt_(std::move(wt)),
        b_(std::move(b)),
        meta_(meta) {}

  const std::string& backend() const override {
    static const std::string name = "linear";
    return name;
  }
  const std::vector<std::string>& label_set() const override { return labels_; }
  const TrainMeta& meta() const override { return meta_; }

  std::vector<double> features(const TransformedInstance& inst) const {
    const std::size_t d = table_->dimension();
    std::vector<double> x(d, 0.0);
    for (const auto& token : inst.tokens) {
      const std::vector<double>& vec = table_->lookup(token);
      for (std::size_t j = 0; j < d; ++j) x[j] += vec[j];
    }
    const double inv = 1.0 / static_cast<double>(std::max<std::size_t>(
                                 1, inst.tokens.size()));
    for (double& v : x) v *= inv;
    return x;
  }

  std::vector<std::string> predict(
      const std::vector<TransformedInstance>& instances) const override {
    const std::size_t c = labels_.size(), d = table_->dimension();
    std::vector<std::string> out;
    out.reserve(instances.size());
    std::vector<double> scores(c);
    for (const auto& inst : instances) {
      const std::vector<double> x = features(inst);
      for (std::size_t k = 0; k < c; ++k) {
        double s = b_[k];
        for (std::size_t j = 0; j < d; ++j) s += x[j] * wt_[j * c + k];
        scores[k] = s;
      }
      const auto best = std::max_element(scores.begin(), scores.end());
      out.push_back(labels_[static_cast<std::size_t>(best - scores.begin())]);
    }
    return out;
  }

  void save(const std::string& dir) const override {
    fs::create_directories(dir);
    nlohmann::ordered_json j{{"backend", "linear"},
                             {"label_set", labels_},
                             {"dimension", table_->dimension()},
                             {"meta", meta_to_json(meta_)}};
    std::ofstream meta_out(dir + "/metadata.json");
    meta_out << j.dump(2) << "\n";
    std::ofstream params(dir + "/params.bin", std::ios::binary);
    write_doubles(params, wt_);
    write_doubles(params, b_);
  }

 private:
  std::vector<std::string> labels_;
  const EmbeddingTable* table_;
  std::vector<double> wt_;  // dimension x labels, row-major
  std::vector<double> b_;   // labels
  TrainMeta meta_;
};

std::unique_ptr<ClassifierModel> train_linear(
    const std::vector<TransformedInstance>& train_set,
    const std::vector<TransformedInstance>& dev_set,
    const EmbeddingTable& table, const TrainConfig& config,
    const std::vector<std::string>& label_order) {
  const std::vector<std::string> labels = derive_labels(train_set, label_order);
  const auto label_index = index_labels(labels);
  const std::size_t n = train_set.size(), d = table.dimension(),
                    c = labels.size();

  std::vector<double> wt(d * c, 0.0), b(c, 0.0);
  TrainMeta meta{0, 0.0, config.seed};
  LinearModel stage(labels, &table, wt, b, meta);  // borrow features()

  std::vector<double> x(n * d), xt(d * n);
  std::vector<std::size_t> gold(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double> xi = stage.features(train_set[i]);
    std::copy(xi.begin(), xi.end(), x.begin() + static_cast<long>(i * d));
    for (std::size_t j = 0; j < d; ++j) xt[j * n + i] = xi[j];
    gold[i] = label_index.at(train_set[i].label);
  }

  // Full-batch Adam with a fixed internal rate; stops on a tiny gradient.
  constexpr double kRate = 0.1;
  constexpr double kTol = 1e-8;
  constexpr std::size_t kMaxIters = 2000;
  kernels::AdamState state_w, state_b;
  std::vector<double> logits(n * c), dwt(d * c), db(c);
  std::size_t iters = 0;
  const double inv_n = 1.0 / static_cast<double>(n);
  while (iters < kMaxIters) {
    kernels::matmul(x, n, d, wt, c, logits);
    for (std::size_t i = 0; i < n; ++i) {
      double* row = logits.data() + i * c;
      for (std::size_t k = 0; k < c; ++k) row[k] += b[k];
      kernels::softmax_inplace(std::span(row, c));
      row[gold[i]] -= 1.0;
      for (std::size_t k = 0; k < c; ++k) row[k] *= inv_n;
    }
    kernels::matmul(xt, d, n, logits, c, dwt);
    for (std::size_t j = 0; j < dwt.size(); ++j) dwt[j] += config.l2 * wt[j];
    std::fill(db.begin(), db.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < c; ++k) db[k] += logits[i * c + k];

    double inf_norm = 0.0;
    for (double g : dwt) inf_norm = std::max(inf_norm, std::fabs(g));
    for (double g : db) inf_norm = std::max(inf_norm, std::fabs(g));
    if (inf_norm < kTol) break;

    kernels::adam_step(wt, dwt, state_w, kRate, 0.9, 0.999, 1e-8);
    kernels::adam_step(b, db, state_b, kRate, 0.9, 0.999, 1e-8);
    ++iters;
  }

  meta.epochs_run = iters;
  if (!dev_set.empty()) {
    const LinearModel probe(labels, &table, wt, b, meta);
    meta.best_dev_f1 =
        dev_macro_f1(gold_of(dev_set), probe.predict(dev_set), labels);
  }
  return std::make_unique<LinearModel>(labels, &table, std::move(wt),
                                       std::move(b), meta);
}

// ---------------------------------------------------------------------------
// Recurrent backend: the bidirectional LSTM classifier.

class RecurrentModel final : public ClassifierModel {
 public:
  RecurrentModel(std::vector<std::string> labels,
                 std::vector<std::string> vocab_words,
                 std::unique_ptr<BiLstmNet> net, const EmbeddingTable* table,
                 TrainMeta meta)
      : labels_(std::move(labels)),
        vocab_words_(std::move(vocab_words)),
        net_(std::move(net)),
        table_(table),
        meta_(meta) {
    for (std::size_t i = 0; i < vocab_words_.size(); ++i)
      vocab_[vocab_words_[i]] = i;
  }

  const std::string& backend() const override {
    static const std::string name = "recurrent";
    return name;
  }
  const std::vector<std::string>& label_set() const override { return labels_; }
  const TrainMeta& meta() const override { return meta_; }
  BiLstmNet& net() { return *net_; }

  std::vector<std::string> predict(
      const std::vector<TransformedInstance>& instances) const override {
    std::vector<std::string> out;
    out.reserve(instances.size());
    std::vector<const double*> xs;
    for (const auto& inst : instances) {
      xs.clear();
      for (const auto& token : inst.tokens) {
        auto it = vocab_.find(token);
        xs.push_back(it != vocab_.end() ? net_->embedding_row(it->second)
                                        : table_->lookup(token).data());
      }
      const std::vector<double> logits = net_->forward(xs);
      const auto best = std::max_element(logits.begin(), logits.end());
      out.push_back(labels_[static_cast<std::size_t>(best - logits.begin())]);
    }
    return out;
  }

  void save(const std::string& dir) const override {
    fs::create_directories(dir);
    nlohmann::ordered_json j{{"backend", "recurrent"},
                             {"label_set", labels_},
                             {"vocab", vocab_words_},
                             {"embed_dim", net_->embed_dim()},
                             {"hidden_size", net_->hidden_size()},
                             {"meta", meta_to_json(meta_)}};
    std::ofstream meta_out(dir + "/metadata.json");
    meta_out << j.dump(2) << "\n";
    std::ofstream params(dir + "/params.bin", std::ios::binary);
    for (const ParamBlock* block : net_->blocks()) write_doubles(params, block->w);
  }

 private:
  std::vector<std::string> labels_;
  std::vector<std::string> vocab_words_;
  std::unordered_map<std::string, std::size_t> vocab_;
  std::unique_ptr<BiLstmNet> net_;
  const EmbeddingTable* table_;
  TrainMeta meta_;
};

std::unique_ptr<ClassifierModel> train_recurrent(
    const std::vector<TransformedInstance>& train_set,
    const std::vector<TransformedInstance>& dev_set,
    const EmbeddingTable& table, const TrainConfig& config,
    const std::vector<std::string>& label_order) {
  const std::vector<std::string> labels = derive_labels(train_set, label_order);
  const auto label_index = index_labels(labels);

  std::set<std::string> vocab_set;
  for (const auto& inst : train_set)
    vocab_set.insert(inst.tokens.begin(), inst.tokens.end());
  std::vector<std::string> vocab_words(vocab_set.begin(), vocab_set.end());

  auto net = std::make_unique<BiLstmNet>(vocab_words.size(), table.dimension(),
                                         config.hidden_size, labels.size());
  Rng rng(config.seed);
  net->init_kaiming(rng);
  for (std::size_t i = 0; i < vocab_words.size(); ++i)
    net->set_embedding_row(i, table.lookup(vocab_words[i]));

  std::unordered_map<std::string, std::size_t> vocab;
  for (std::size_t i = 0; i < vocab_words.size(); ++i) vocab[vocab_words[i]] = i;
  std::vector<std::vector<std::size_t>> ids(train_set.size());
  std::vector<std::size_t> gold(train_set.size());
  for (std::size_t i = 0; i < train_set.size(); ++i) {
    for (const auto& token : train_set[i].tokens)
      ids[i].push_back(vocab.at(token));
    gold[i] = label_index.at(train_set[i].label);
  }
  const std::vector<std::string> dev_gold = gold_of(dev_set);

  auto predict_dev = [&]() {
    std::vector<std::string> out;
    out.reserve(dev_set.size());
    std::vector<const double*> xs;
    for (const auto& inst : dev_set) {
      xs.clear();
      for (const auto& token : inst.tokens) {
        auto it = vocab.find(token);
        xs.push_back(it != vocab.end() ? net->embedding_row(it->second)
                                       : table.lookup(token).data());
      }
      const std::vector<double> logits = net->forward(xs);
      const auto best = std::max_element(logits.begin(), logits.end());
      out.push_back(labels[static_cast<std::size_t>(best - logits.begin())]);
    }
    return out;
  };

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  double best_f1 = -1.0;
  std::size_t since_best = 0, epochs_run = 0;
  std::vector<std::vector<double>> best_params;
  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += config.batch_size) {
      const std::size_t end =
          std::min(order.size(), start + config.batch_size);
      net->zero_grads();
      for (std::size_t k = start; k < end; ++k)
        net->forward_backward(ids[order[k]], gold[order[k]], config.dropout,
                              config.recurrent_dropout, rng,
                              config.fine_tune_embeddings);
      net->finish_batch(1.0 / static_cast<double>(end - start), config.l2);
      net->adam_update(config.learning_rate);
    }
    ++epochs_run;
    if (dev_set.empty()) continue;
    const double f1 = dev_macro_f1(dev_gold, predict_dev(), labels);
    if (f1 > best_f1) {
      best_f1 = f1;
      best_params = net->snapshot();
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  if (!best_params.empty()) net->restore(best_params);

  TrainMeta meta{epochs_run, std::max(best_f1, 0.0), config.seed};
  return std::make_unique<RecurrentModel>(labels, std::move(vocab_words),
                                          std::move(net), &table, meta);
}

std::map<std::string, ExternalTrainFn>& external_backends() {
  static std::map<std::string, ExternalTrainFn> registry;
  return registry;
}

}  // namespace

void register_external_backend(const std::string& name, ExternalTrainFn fn) {
  if (name == "linear" || name == "recurrent")
    throw ConfigError("backend name '" + name + "' is built in");
  external_backends()[name] = std::move(fn);
}

bool has_backend(const std::string& name) {
  return name == "linear" || name == "recurrent" ||
         external_backends().count(name) > 0;
}

std::unique_ptr<ClassifierModel> train(
    const std::string& backend,
    const std::vector<TransformedInstance>& train_set,
    const std::vector<TransformedInstance>& dev_set,
    const EmbeddingTable& embeddings, const TrainConfig& config,
    const std::vector<std::string>& label_order) {
  validate(config);
  if (train_set.empty()) throw ConfigError("training split is empty");
  if (backend == "linear")
    return train_linear(train_set, dev_set, embeddings, config, label_order);
  if (backend == "recurrent")
    return train_recurrent(train_set, dev_set, embeddings, config, label_order);
  auto it = external_backends().find(backend);
  if (it == external_backends().end())
    throw ConfigError("unknown backend '" + backend + "'");
  return it->second(train_set, dev_set, embeddings, config, label_order);
}

std::vector<std::string> predict(
    const ClassifierModel& model,
    const std::vector<TransformedInstance>& instances) {
  return model.predict(instances);
}

std::unique_ptr<ClassifierModel> load_model(const std::string& dir,
                                            const EmbeddingTable& embeddings) {
  const nlohmann::json j = load_metadata(dir);
  const std::string params_path = dir + "/params.bin";
  std::ifstream params(params_path, std::ios::binary);
  if (!params) throw ConfigError(params_path + ": cannot open parameter file");

  try {
    const std::string backend = j.at("backend").get<std::string>();
    const auto labels = j.at("label_set").get<std::vector<std::string>>();
    const TrainMeta meta = meta_from_json(j.at("meta"));
    if (backend == "linear") {
      const auto dim = j.at("dimension").get<std::size_t>();
      if (dim != embeddings.dimension())
        throw ConfigError(dir + ": checkpoint dimension " + std::to_string(dim) +
                          " does not match the embedding table");
      std::vector<double> wt(dim * labels.size()), b(labels.size());
      read_doubles(params, wt, params_path);
      read_doubles(params, b, params_path);
      return std::make_unique<LinearModel>(labels, &embeddings, std::move(wt),
                                           std::move(b), meta);
    }
    if (backend == "recurrent") {
      const auto vocab = j.at("vocab").get<std::vector<std::string>>();
      const auto embed_dim = j.at("embed_dim").get<std::size_t>();
      const auto hidden = j.at("hidden_size").get<std::size_t>();
      if (embed_dim != embeddings.dimension())
        throw ConfigError(dir + ": checkpoint dimension " +
                          std::to_string(embed_dim) +
                          " does not match the embedding table");
      auto net = std::make_unique<BiLstmNet>(vocab.size(), embed_dim, hidden,
                                             labels.size());
      for (ParamBlock* block : net->blocks())
        read_doubles(params, block->w, params_path);
      return std::make_unique<RecurrentModel>(labels, vocab, std::move(net),
                                              &embeddings, meta);
    }
    throw ConfigError(dir + ": unknown checkpoint backend '" + backend + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(dir + "/metadata.json: " + e.what());
  }
}

}  // namespace rolemask
