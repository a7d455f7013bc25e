#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "edi/dataio.hpp"
#include "edi/genome.hpp"

namespace edi {

/// An owned minibatch: `count` images of `shape`, plus labels.
struct Batch {
  Shape shape{1, 28, 28};
  std::vector<double> images;
  std::vector<std::uint8_t> labels;

  std::size_t size() const { return labels.size(); }
};

Batch make_batch(const Dataset& dataset, std::span<const std::size_t> indices);

/// Logits, row-major (batch size x output width). Effective weights are
/// weight * mask. Throws ShapeError naming the first incompatible layer.
std::vector<double> forward(const NetworkGenome& genome, const Batch& batch);

struct LossAndGrad {
  double loss = 0.0;  ///< mean softmax cross-entropy over the batch
  WeightStore gradients;
};

/// Gradients at masked-out positions are exactly 0.
LossAndGrad loss_and_grad(const NetworkGenome& genome, const Batch& batch);

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// w <- w - lr * g, then the mask is re-applied. Throws NonFiniteError naming
/// the layer and index of the first non-finite gradient; genome is untouched then.
void sgd_step(NetworkGenome& genome, const WeightStore& gradients, double learning_rate);

struct TrainBudget {
  int epochs = 10;
  int batch_size = 32;
  double learning_rate = 0.05;
  double lr_decay = 0.5;   ///< multiplier applied every `decay_every` epochs
  int decay_every = 4;

  double learning_rate_at(int epoch) const;
  void validate() const;
};

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(int epoch, const std::string& what);
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

struct TrainResult {
  NetworkGenome genome;
  std::vector<double> loss_history;  ///< mean loss per epoch
  std::uint64_t work = 0;            ///< multiply-accumulates on live synapses, fwd + bwd
  double seconds = 0.0;
};

/// Minibatch SGD with per-epoch shuffling from `seed`. Masks never change.
TrainResult train(NetworkGenome genome, const Dataset& dataset, const TrainBudget& budget,
                  std::uint64_t seed);

/// Fraction of items whose argmax logit (lowest index on ties) equals the label.
double evaluate(const NetworkGenome& genome, const Dataset& dataset);

/// Predicted class per item, same tie rule as evaluate.
std::vector<int> predict(const NetworkGenome& genome, const Dataset& dataset);

/// Forward multiply-accumulates per sample over live synapses.
std::uint64_t forward_macs(const NetworkGenome& genome);

}  // namespace edi
