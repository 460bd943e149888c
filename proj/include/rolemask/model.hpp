#ifndef ROLEMASK_MODEL_HPP
#define ROLEMASK_MODEL_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "rolemask/embeddings.hpp"
#include "rolemask/transform.hpp"

namespace rolemask {

struct TrainConfig {
  double dropout = 0.3;
  double recurrent_dropout = 0.3;
  double learning_rate = 0.0003;
  double l2 = 1e-4;
  std::size_t batch_size = 32;
  std::size_t patience = 3;
  std::size_t max_epochs = 100;
  std::uint64_t seed = 0;
  std::size_t hidden_size = 128;
  bool fine_tune_embeddings = true;
};

void validate(const TrainConfig& config);

struct TrainMeta {
  std::size_t epochs_run = 0;
  double best_dev_f1 = 0.0;
  std::uint64_t seed = 0;
};

// A trained classifier. Implementations keep a pointer to the embedding
// table they were trained with; the caller keeps the table alive for the
// model's lifetime.
class ClassifierModel {
 public:
  virtual ~ClassifierModel() = default;

  virtual const std::string& backend() const = 0;
  virtual const std::vector<std::string>& label_set() const = 0;
  virtual const TrainMeta& meta() const = 0;

  // One label per instance, deterministic; argmax ties resolve to the
  // lowest label index.
  virtual std::vector<std::string> predict(
      const std::vector<TransformedInstance>& instances) const = 0;

  // Writes metadata.json and params.bin into dir (created if needed).
  virtual void save(const std::string& dir) const = 0;
};

// Backend ids: "linear", "recurrent", or a name registered through
// register_external_backend.
std::unique_ptr<ClassifierModel> train(
    const std::string& backend,
    const std::vector<TransformedInstance>& train_set,
    const std::vector<TransformedInstance>& dev_set,
    const EmbeddingTable& embeddings, const TrainConfig& config,
    const std::vector<std::string>& label_order = {});

std::vector<std::string> predict(
    const ClassifierModel& model,
    const std::vector<TransformedInstance>& instances);

// Reloads a checkpoint written by ClassifierModel::save. Predictions after
// reload are identical to the saved model's.
std::unique_ptr<ClassifierModel> load_model(const std::string& dir,
                                            const EmbeddingTable& embeddings);

// Adapter slot for external classifier backends (e.g. a contextual
// transformer service). The function must honor the train() contract.
using ExternalTrainFn = std::function<std::unique_ptr<ClassifierModel>(
    const std::vector<TransformedInstance>& train_set,
    const std::vector<TransformedInstance>& dev_set,
    const EmbeddingTable& embeddings, const TrainConfig& config,
    const std::vector<std::string>& label_order)>;
void register_external_backend(const std::string& name, ExternalTrainFn fn);
bool has_backend(const std::string& name);

}  // namespace rolemask

#endif
