#pragma once

#include "changecap/params.hpp"

namespace ccap {

// Per-position linear projection of a raw feature grid plus the learned
// position table, shared by both images of a pair.
Var project_embed(Graph& g, Var grid, const ModelVars& params);

// Two-layer relu MLP head feeding the correlation loss; identity when the
// head is ablated away.
Var mlp_head(Graph& g, Var f, const ModelVars& params, bool enabled);

// Channel correlation between two (N, D) batches, normalized by the raw
// per-column L2 norms (no mean centering).
Var correlation_matrix(Graph& g, Var y_bef, Var y_aft);

// sum_i (1 - C_ii)^2 + alpha * sum_{i != j} C_ij^2
Var dirl_loss(Graph& g, Var corr, double alpha);

}  // namespace ccap
