#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "stgin/data.hpp"
#include "stgin/graph.hpp"
#include "stgin/stgin.hpp"

namespace stgin {

struct TrainConfig {
  std::size_t batch_size = 32;
  std::size_t iterations = 500;  // parameter updates
  std::size_t epochs = 0;        // nonzero: run whole passes over the data instead
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 1;
  bool parallel = true;

  void validate() const;
};

/// Mean per-sample MSE of a batch and its gradient, flattened in parameter
/// visit order. Samples run independently (in parallel if asked) and are
/// reduced in index order, so the result does not depend on thread count.
struct BatchGradient {
  double loss = 0.0;
  std::vector<double> grad;
};

BatchGradient batch_gradient(const StginModel& model, const RoadGraph& graph,
                             const std::vector<const SampleWindow*>& batch, bool parallel);

/// Called after each update with its 1-based index and the batch loss
/// measured before the step.
using TrainCallback = std::function<void(std::size_t update, double loss)>;

/// Adam on minibatch MSE. Batches come from a seeded shuffle per epoch; a
/// trailing partial batch is dropped. Returns the per-update loss trace.
/// A non-finite loss or step throws TrainingError with the model left at its
/// last finite parameters.
std::vector<double> train(StginModel& model, const std::vector<SampleWindow>& windows,
                          const RoadGraph& graph, const TrainConfig& config,
                          const TrainCallback& on_update = {});

/// Number of updates `train` will run for this many windows.
std::size_t planned_updates(const TrainConfig& config, std::size_t windows);

}  // namespace stgin
