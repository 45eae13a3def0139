#pragma once
// A TreeView is a model plus an optional cost ceiling: children whose cost
// exceeds the ceiling are treated as absent. The unbounded view is the model
// itself; bounded views are the threshold subtrees T_c used by selection and
// branch-and-bound. A bounded view need not be a full binary tree.

#include <optional>

#include "spacebound/tree.hpp"

namespace spacebound {

class TreeView {
 public:
  explicit TreeView(const TreeModel& model) : model_(&model), bounded_(false) {}
  TreeView(const TreeModel& model, const NodeHandle& ceiling)
      : model_(&model), bounded_(true), ceiling_(ceiling) {}

  const TreeModel& model() const { return *model_; }
  bool bounded() const { return bounded_; }
  const NodeHandle& ceiling() const { return ceiling_; }

  bool contains(const NodeHandle& u) const {
    return !bounded_ || cost_compare(u, ceiling_) <= 0;
  }

  NodeHandle root() const { return model_->root(); }

  std::optional<NodeHandle> child(const NodeHandle& u, Side side) const {
    auto c = model_->child(u, side);
    if (c && contains(*c)) return c;
    return std::nullopt;
  }

  bool has_child(const NodeHandle& u, Side side) const {
    auto c = model_->child(u, side);
    return c && contains(*c);
  }

  std::optional<NodeHandle> parent(const NodeHandle& u) const { return model_->parent(u); }

  // Leaf of the view: no in-view children. Coincides with a model leaf on
  // unbounded views.
  bool is_leaf(const NodeHandle& u) const {
    if (!bounded_) return model_->is_leaf(u);
    return !has_child(u, Side::Left) && !has_child(u, Side::Right);
  }

 private:
  const TreeModel* model_;
  bool bounded_;
  NodeHandle ceiling_;
};

}  // namespace spacebound
