#include "stgin/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "stgin/errors.hpp"
#include "stgin/kernels.hpp"
#include "stgin/ops.hpp"
#include "stgin/params.hpp"
#include "stgin/random.hpp"

namespace stgin {

void TrainConfig::validate() const {
  if (batch_size == 0) throw ValidationError("batch_size must be positive");
  if (iterations == 0 && epochs == 0) throw ValidationError("iterations must be positive");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("learning_rate must be finite and non-negative");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ValidationError("Adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ValidationError("epsilon must be positive");
}

std::size_t planned_updates(const TrainConfig& config, std::size_t windows) {
  if (config.epochs == 0) return config.iterations;
  const std::size_t batch = std::min(config.batch_size, windows);
  return batch == 0 ? 0 : config.epochs * (windows / batch);
}

BatchGradient batch_gradient(const StginModel& model, const RoadGraph& graph,
                             const std::vector<const SampleWindow*>& batch, bool parallel) {
  if (batch.empty()) throw ContractError("batch_gradient on an empty batch");
  const std::size_t total = params::scalar_count(model.params);
  std::vector<std::vector<double>> grads(batch.size());
  std::vector<double> losses(batch.size());

  auto sample = [&](std::size_t i) {
    const SampleWindow& w = *batch[i];
    Tape tape;
    const auto bound = params::bind(tape, model.params);
    const Var out = stgin_forward(model.dims, bound, tape.constant(node_major_input(w.input)), graph);
    const Var loss = ops::mse(out, tape.constant(w.target));
    tape.backward(loss);
    losses[i] = loss.value().item();
    std::vector<double>& g = grads[i];
    g.reserve(total);
    params::visit(bound, [&](const std::string&, const Var& v) {
      const std::vector<double> leaf = tape.grad(v);
      g.insert(g.end(), leaf.begin(), leaf.end());
    });
  };
  if (parallel) {
    kernels::parallel::for_each_index(batch.size(), sample);
  } else {
    kernels::serial::for_each_index(batch.size(), sample);
  }

  BatchGradient out;
  out.grad.assign(total, 0.0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out.loss += losses[i];
    for (std::size_t j = 0; j < total; ++j) out.grad[j] += grads[i][j];
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  out.loss *= inv;
  for (double& g : out.grad) g *= inv;
  return out;
}

std::vector<double> train(StginModel& model, const std::vector<SampleWindow>& windows,
                          const RoadGraph& graph, const TrainConfig& config,
                          const TrainCallback& on_update) {
  config.validate();
  if (windows.empty()) throw DataError("training set is empty");
  if (model.dims.externals != 0) {
    throw ContractError("training windows carry speeds only; model expects " +
                        std::to_string(model.dims.externals) + " external channels");
  }

  const std::size_t updates = planned_updates(config, windows.size());
  const std::size_t batch = std::min(config.batch_size, windows.size());
  const std::size_t per_epoch = windows.size() / batch;

  std::vector<double*> slots;
  params::visit(model.params, [&](const std::string&, Tensor& t) {
    for (double& x : t.storage()) slots.push_back(&x);
  });
  std::vector<double> m(slots.size(), 0.0), v(slots.size(), 0.0), previous(slots.size());

  random::Engine rng(config.seed);
  std::vector<std::size_t> order(windows.size());
  std::vector<const SampleWindow*> members(batch);
  std::vector<double> trace;
  trace.reserve(updates);

  double b1_power = 1.0, b2_power = 1.0;
  for (std::size_t step = 0; step < updates; ++step) {
    const std::size_t slot = step % per_epoch;
    if (slot == 0) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[random::below(rng, i)]);
      }
    }
    for (std::size_t i = 0; i < batch; ++i) members[i] = &windows[order[slot * batch + i]];

    const BatchGradient bg = batch_gradient(model, graph, members, config.parallel);
    if (!std::isfinite(bg.loss)) {
      throw TrainingError("loss became non-finite at update " + std::to_string(step + 1));
    }

    b1_power *= config.beta1;
    b2_power *= config.beta2;
    const double c1 = 1.0 - b1_power, c2 = 1.0 - b2_power;
    bool finite = true;
    for (std::size_t j = 0; j < slots.size(); ++j) {
      const double g = bg.grad[j];
      previous[j] = *slots[j];
      m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g;
      v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g * g;
      *slots[j] -= config.learning_rate * (m[j] / c1) / (std::sqrt(v[j] / c2) + config.epsilon);
      finite = finite && std::isfinite(*slots[j]);
    }
    if (!finite) {
      for (std::size_t j = 0; j < slots.size(); ++j) *slots[j] = previous[j];
      throw TrainingError("parameter update " + std::to_string(step + 1) +
                          " produced non-finite weights");
    }
    trace.push_back(bg.loss);
    if (on_update) on_update(step + 1, bg.loss);
  }
  return trace;
}

}  // namespace stgin
