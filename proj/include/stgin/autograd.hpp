#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "stgin/tensor.hpp"

namespace stgin {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape
/// lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  bool valid() const { return tape != nullptr; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

/// Records one forward pass. Each recorded op stores its output value and a
/// closure that pushes the output gradient back to its inputs. A tape is
/// single-use: run forward, call backward once, read leaf gradients, drop it.
/// With recording disabled it only holds values (inference mode).
class Tape {
 public:
  using Backward =
      std::function<void(Tape&, const Tensor& out_value, std::span<const double> out_grad)>;

  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  Var constant(Tensor value);
  /// Leaf whose gradient is accumulated by backward().
  Var variable(Tensor value);

  /// Adds an op output. `inputs` decide whether the node needs a gradient;
  /// the closure is dropped when none of them do or recording is off.
  Var record(Tensor value, std::initializer_list<Var> inputs, Backward backward);
  Var record(Tensor value, const std::vector<Var>& inputs, Backward backward);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }

  /// Gradient buffer of v, allocated on first use. Only meaningful for nodes
  /// with needs_grad.
  std::span<double> grad_buffer(Var v);
  /// Gradient accumulated into v by backward(); zeros if none reached it.
  std::vector<double> grad(Var v) const;

  /// Seeds d(root)/d(root) = 1 for a single-element root and sweeps the
  /// recorded ops in reverse order.
  void backward(Var root);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    std::vector<double> grad;
    bool needs_grad = false;
    Backward backward;
  };

  bool record_;
  std::vector<Node> nodes_;
};

}  // namespace stgin
