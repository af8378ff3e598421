#pragma once

#include <cstddef>
#include <string>
#include <type_traits>
#include <vector>

#include "stgin/autograd.hpp"
#include "stgin/tensor.hpp"

// Parameter structs are templates over their leaf type: Tensor for stored
// weights, Var for weights bound to a tape. Each one lists its members once:
//
//   template <class A, class B, class F>
//   static void fields(A& a, B& b, F&& f) { f("w", a.w, b.w); ... }
//
// and the helpers below walk any nesting of such structs and vectors.
namespace stgin::params {

template <class X>
constexpr bool is_leaf = std::is_same_v<std::remove_const_t<X>, Tensor> ||
                         std::is_same_v<std::remove_const_t<X>, Var>;

template <class X>
struct is_vector : std::false_type {};
template <class X>
struct is_vector<std::vector<X>> : std::true_type {};
template <class X>
struct is_vector<const std::vector<X>> : std::true_type {};

/// Visits a and b in lockstep; b's vectors are resized to match a's.
template <class A, class B, class F>
void walk(const std::string& name, A& a, B& b, F& f) {
  if constexpr (is_leaf<A>) {
    f(name, a, b);
  } else if constexpr (is_vector<A>::value) {
    if constexpr (!std::is_const_v<B>) {
      if (static_cast<const void*>(&a) != static_cast<const void*>(&b)) b.resize(a.size());
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
      walk(name + "." + std::to_string(i), a[i], b[i], f);
    }
  } else {
    std::remove_const_t<A>::fields(a, b, [&](const char* field, auto& ma, auto& mb) {
      walk(name.empty() ? std::string(field) : name + "." + field, ma, mb, f);
    });
  }
}

/// f(name, leaf) for every leaf in declaration order.
template <class P, class F>
void visit(P& p, F&& f) {
  auto g = [&](const std::string& name, auto& leaf, auto&) { f(name, leaf); };
  walk(std::string(), p, p, g);
}

template <template <class> class P>
std::vector<Tensor> flatten(const P<Tensor>& p) {
  std::vector<Tensor> out;
  visit(p, [&](const std::string&, const Tensor& t) { out.push_back(t); });
  return out;
}

template <template <class> class P>
std::vector<std::string> names(const P<Tensor>& p) {
  std::vector<std::string> out;
  visit(p, [&](const std::string& name, const Tensor&) { out.push_back(name); });
  return out;
}

template <template <class> class P>
std::size_t scalar_count(const P<Tensor>& p) {
  std::size_t n = 0;
  visit(p, [&](const std::string&, const Tensor& t) { n += t.size(); });
  return n;
}

/// Same structure as `shape`, leaves taken from `vars` in visit order.
template <template <class> class P>
P<Var> from_vars(const P<Tensor>& shape, const std::vector<Var>& vars) {
  P<Var> out;
  std::size_t i = 0;
  auto g = [&](const std::string&, const Tensor&, Var& v) { v = vars.at(i++); };
  walk(std::string(), shape, out, g);
  return out;
}

/// Tape leaves for every parameter (trainable if the tape records).
template <template <class> class P>
P<Var> bind(Tape& tape, const P<Tensor>& p) {
  P<Var> out;
  auto g = [&](const std::string&, const Tensor& t, Var& v) { v = tape.variable(t); };
  walk(std::string(), p, out, g);
  return out;
}

/// Replaces leaves with `tensors` in visit order; shapes must match.
template <template <class> class P>
void assign(P<Tensor>& p, const std::vector<Tensor>& tensors);

}  // namespace stgin::params

#include "stgin/errors.hpp"

namespace stgin::params {

template <template <class> class P>
void assign(P<Tensor>& p, const std::vector<Tensor>& tensors) {
  std::size_t i = 0;
  visit(p, [&](const std::string& name, Tensor& t) {
    if (i >= tensors.size()) throw DimensionError("too few tensors for parameter " + name);
    if (tensors[i].shape() != t.shape()) {
      throw DimensionError("parameter " + name + " expects " + shape_string(t.shape()) +
                           ", got " + shape_string(tensors[i].shape()));
    }
    t = tensors[i++];
  });
  if (i != tensors.size()) throw DimensionError("too many tensors for parameter set");
}

}  // namespace stgin::params
