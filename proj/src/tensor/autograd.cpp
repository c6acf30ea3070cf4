#include "vmr/tensor.hpp"

namespace vmr {

namespace {
thread_local Tape* g_active_tape = nullptr;
}

void Tape::record(std::string_view op, std::vector<Tensor> inputs, Tensor& output, BackwardFn fn) {
  output.node_->requires_grad = true;
  output.node_->is_leaf = false;
  entries_.push_back(Entry{op, std::move(inputs), output, std::move(fn)});
}

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = previous_; }

NoGradScope::NoGradScope() : previous_(g_active_tape) { g_active_tape = nullptr; }
NoGradScope::~NoGradScope() { g_active_tape = previous_; }

Tape* active_tape() { return g_active_tape; }

void record_op(std::string_view op, std::vector<Tensor> inputs, Tensor& output, BackwardFn fn) {
  Tape* tape = g_active_tape;
  if (!tape) return;
  bool any = false;
  for (const auto& t : inputs) any = any || t.requires_grad();
  if (!any) return;
  tape->record(op, std::move(inputs), output, std::move(fn));
}

std::vector<double> Gradients::get(const Tensor& leaf) const {
  auto it = grads_.find(leaf.id());
  if (it == grads_.end()) return std::vector<double>(leaf.numel(), 0.0);
  return it->second.grad;
}

bool Gradients::contains(const Tensor& leaf) const { return grads_.count(leaf.id()) > 0; }

void Gradients::accumulate_into_leaves() const {
  for (const auto& [_, slot] : grads_) {
    auto leaf = slot.leaf;
    auto& buf = leaf.grad_buffer();
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] += slot.grad[i];
  }
}

Gradients backward(const Tensor& loss, const Tape& tape) {
  if (loss.numel() != 1) {
    throw ShapeError("backward needs a scalar loss, got " + shape_str(loss.shape()));
  }
  std::unordered_map<const detail::Node*, std::vector<double>> grads;
  grads[loss.id()] = {1.0};

  const auto& entries = tape.entries();
  std::vector<std::vector<double>*> slots;
  for (auto it = entries.rbegin(); it != entries.rend(); ++it) {
    auto found = grads.find(it->output.id());
    if (found == grads.end()) continue;
    std::vector<double> grad_out = std::move(found->second);
    grads.erase(found);

    slots.assign(it->inputs.size(), nullptr);
    for (std::size_t i = 0; i < it->inputs.size(); ++i) {
      const auto& in = it->inputs[i];
      if (!in.requires_grad()) continue;
      auto& buf = grads[in.id()];
      if (buf.empty()) buf.assign(in.numel(), 0.0);
      slots[i] = &buf;
    }
    // unordered_map keeps element addresses stable across rehashing.
    it->backward(grad_out, slots);
  }

  Gradients out;
  for (const auto& entry : entries) {
    for (const auto& in : entry.inputs) {
      if (!in.is_leaf() || !in.requires_grad()) continue;
      auto g = grads.find(in.id());
      if (g == grads.end() || out.grads_.count(in.id())) continue;
      out.grads_.emplace(in.id(), Gradients::Slot{in, std::move(g->second)});
    }
  }
  return out;
}

}  // namespace vmr
