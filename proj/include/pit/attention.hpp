#pragma once

#include <optional>
#include <vector>

#include "pit/geometry.hpp"
#include "pit/tape.hpp"

namespace pit {

// How the non-negativity of the attention decay rate is enforced during
// training: effective = raw^2, or effective = tan(raw) with raw kept in
// [0, pi/2 - 1e-4] by projection after each optimizer step.
enum class LambdaMode { square, tan_constrained };

constexpr double kTanClampMax = 1.5706963267948966;  // pi/2 - 1e-4

struct LambdaParam {
    Param raw;  // 1x1 scalar
    LambdaMode mode = LambdaMode::square;

    LambdaParam() = default;
    LambdaParam(double effective_init, LambdaMode m, std::string name);

    // Effective lambda as a differentiable tape node.
    Tape::NodeId effective(Tape& t);
    double effective_value() const;

    // Projection step for tan mode; no-op in square mode.
    void clamp();
};

enum class AttentionVariant { posatt, cro_posatt, loc_posatt, selfatt, selfposatt };

// One attention head. Position-based variants use lambda + w_v; the
// self-attention ablation uses w_q/w_k/w_v without lambda; the combined
// variant uses all four. Value/query/key projections carry no bias.
struct AttentionHead {
    std::optional<LambdaParam> lambda;
    Param w_v;  // d_in x d_head
    std::optional<Param> w_q, w_k;
};

// Row-stochastic position-attention weights Softmax(-lambda * D), optionally
// restricted to a receptive field via additive -inf masking before the
// Softmax. The weights depend only on mesh geometry, never on features, so a
// weight node can be shared by every sample in a batch.
Tape::NodeId position_weights(Tape& t, AttentionHead& head, const PairwiseDistances& d,
                              const ReceptiveField* field = nullptr);

// Applies attention weights: weights * (u * W^V).
Tape::NodeId apply_attention(Tape& t, Tape::NodeId weights, Tape::NodeId u, AttentionHead& head);

// Softmax(-lambda D) U W^V on one mesh (D square).
Tape::NodeId pos_att(Tape& t, Tape::NodeId u, const PairwiseDistances& d, AttentionHead& head);

// Cross-mesh variant: rows of d index the target mesh, columns the source
// mesh carrying u; output has one row per target point.
Tape::NodeId cro_pos_att(Tape& t, Tape::NodeId u, const PairwiseDistances& d_cross, AttentionHead& head);

// Local variant: weights renormalized over the receptive field.
Tape::NodeId loc_pos_att(Tape& t, Tape::NodeId u, const ReceptiveField& field, const PairwiseDistances& d,
                         AttentionHead& head);

// Vanilla self-attention Softmax(U W^Q (U W^K)^T / sqrt(d_head)) U W^V.
Tape::NodeId self_att(Tape& t, Tape::NodeId u, AttentionHead& head);

// Combined scores: Softmax(-lambda D + U W^Q (U W^K)^T / sqrt(d_head)) U W^V.
Tape::NodeId self_pos_att(Tape& t, Tape::NodeId u, const PairwiseDistances& d, AttentionHead& head);

struct AttentionLayer {
    AttentionVariant variant = AttentionVariant::posatt;
    std::vector<AttentionHead> heads;
};

// Geometry inputs for one multi-head application; unused members may stay null.
struct AttentionContext {
    const PairwiseDistances* distances = nullptr;
    const ReceptiveField* field = nullptr;
};

// Per-head outputs (each N x d_head) concatenated along features.
Tape::NodeId multi_head(Tape& t, Tape::NodeId u, const AttentionContext& ctx, AttentionLayer& layer);

// 1 / sqrt(lambda_eff); +inf when lambda_eff == 0 (flat kernel, unbounded
// receptive radius).
double interpretable_radius(const AttentionHead& head);

// -inf mask with zeros at receptive-field members, used additively on scores.
Tensor2 field_mask(const ReceptiveField& field, int cols);

}  // namespace pit
